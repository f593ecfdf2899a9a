"""Two-state vectors, the ABL rule, weak values and multiple-time states."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qcore import (
    ATOL,
    ContradictorySelectionError,
    DimensionError,
    Operator,
    StateVector,
    as_operator,
    as_state,
    basis_state,
    frozen,
    matexp_hermitian,
)

DENOM_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class TwoStateVector:
    """Pre-selected ``pre`` at ``t1`` and post-selected ``post`` at ``t2``.

    ``post`` is stored as a ket and used as a bra.
    """

    pre: StateVector
    post: StateVector
    H: Operator
    t1: float = 0.0
    t2: float = 1.0

    def __post_init__(self):
        pre, post, h = as_state(self.pre), as_state(self.post), as_operator(self.H)
        if not self.t1 < self.t2:
            raise ValueError(f"need t1 < t2, got t1={self.t1}, t2={self.t2}")
        if pre.shape != post.shape or h.shape != (pre.shape[0],) * 2:
            raise DimensionError("pre, post and H must share one dimension")
        for name, v in (("pre", pre), ("post", post)):
            if abs(np.linalg.norm(v) - 1) > ATOL:
                raise ValueError(f"{name} state must have unit norm")
        object.__setattr__(self, "pre", frozen(pre))
        object.__setattr__(self, "post", frozen(post))
        object.__setattr__(self, "H", frozen(h))

    def _check_time(self, t: float) -> None:
        if not self.t1 <= t <= self.t2:
            raise ValueError(f"intermediate time {t} outside [{self.t1}, {self.t2}]")


def abl_amplitudes(
    pre: StateVector, t_pre: float, post: StateVector, t_post: float, H: Operator, basis, t: float
) -> np.ndarray:
    """<post|U(t_post, t)|n><n|U(t, t_pre)|pre> for each basis vector n.

    No ordering of ``t_pre`` and ``t_post`` is assumed, which is what makes
    the time-symmetry swap testable.
    """
    fwd = matexp_hermitian(H, t - t_pre) @ as_state(pre)
    back = matexp_hermitian(H, t - t_post) @ as_state(post)  # U(t_post, t)^dag |post>
    return np.array([np.vdot(back, n) * np.vdot(n, fwd) for n in map(as_state, basis)])


def abl_distribution(pre, t_pre, post, t_post, H, basis, t) -> np.ndarray:
    """Normalized ABL probabilities; raises on a vanishing denominator."""
    w = np.abs(abl_amplitudes(pre, t_pre, post, t_post, H, basis, t)) ** 2
    z = w.sum()
    if z <= DENOM_TOL:
        raise ContradictorySelectionError(
            f"ABL denominator {z:.3e} vanishes: pre/post selection admits no outcome in this basis"
        )
    return w / z


def abl_probability(tsv: TwoStateVector, basis: Sequence[StateVector], t: float) -> np.ndarray:
    tsv._check_time(t)
    return abl_distribution(tsv.pre, tsv.t1, tsv.post, tsv.t2, tsv.H, basis, t)


def weak_value(tsv: TwoStateVector, O: Operator, t: float) -> complex:
    """<post|U(t2,t) O U(t,t1)|pre> / <post|U(t2,t1)|pre>, unprojected."""
    tsv._check_time(t)
    o = as_operator(O)
    fwd = matexp_hermitian(tsv.H, t - tsv.t1) @ tsv.pre
    back = matexp_hermitian(tsv.H, t - tsv.t2) @ tsv.post
    den = np.vdot(back, fwd)
    if abs(den) <= DENOM_TOL:
        raise ContradictorySelectionError("pre and post states are orthogonal; weak value undefined")
    return complex(np.vdot(back, o @ fwd) / den)


KET = "ket"
BRA = "bra"


@dataclass(frozen=True)
class Slot:
    time: float
    orientation: str
    dim: int

    def __post_init__(self):
        if self.orientation not in (KET, BRA):
            raise ValueError(f"orientation must be 'ket' or 'bra', got {self.orientation!r}")
        if int(self.dim) < 1:
            raise ValueError("slot dimension must be positive")


@dataclass(frozen=True, eq=False)
class MultiTimeState:
    """Sum of products over time slots; bra slots hold kets to be conjugated."""

    slots: tuple[Slot, ...]
    terms: tuple[tuple[complex, tuple[StateVector, ...]], ...]

    def __post_init__(self):
        slots = tuple(s if isinstance(s, Slot) else Slot(*s) for s in self.slots)
        terms = []
        for coef, vecs in self.terms:
            vecs = tuple(frozen(as_state(v)) for v in vecs)
            if len(vecs) != len(slots):
                raise DimensionError(f"term has {len(vecs)} factors for {len(slots)} slots")
            for s, v in zip(slots, vecs):
                if v.shape[0] != s.dim:
                    raise DimensionError(f"factor of dim {v.shape[0]} in slot of dim {s.dim}")
            terms.append((complex(coef), vecs))
        object.__setattr__(self, "slots", slots)
        object.__setattr__(self, "terms", tuple(terms))

    def pairs(self) -> list[tuple[int, int]]:
        """(ket slot, bra slot) index pairs in time order; raises if the pattern is inconsistent."""
        order = sorted(range(len(self.slots)), key=lambda i: self.slots[i].time)
        times = [self.slots[i].time for i in order]
        if len(set(times)) != len(times):
            raise ValueError("slot times must be distinct")
        if len(order) % 2:
            raise ValueError("an odd number of slots cannot be fully contracted")
        out = []
        for a, b in zip(order[0::2], order[1::2]):
            if self.slots[a].orientation != KET or self.slots[b].orientation != BRA:
                raise ValueError("slots must alternate ket (earlier), bra (later) in time order")
            if self.slots[a].dim != self.slots[b].dim:
                raise DimensionError("paired ket and bra slots differ in dimension")
            out.append((a, b))
        return out

    def dense(self) -> np.ndarray:
        """Full coefficient tensor, bra slots conjugated, axes in slot order."""
        out = np.zeros(tuple(s.dim for s in self.slots), dtype=complex)
        for coef, vecs in self.terms:
            factors = [np.conj(v) if s.orientation == BRA else v for s, v in zip(self.slots, vecs)]
            t = np.array(coef)
            for f in factors:
                t = np.multiply.outer(t, f)
            out += t
        return out


def mts_contract(mts: MultiTimeState, processes: Sequence[Operator]) -> complex:
    """Contract every (ket, later bra) pair through its process.

    ``processes[i]`` bridges the i-th pair in time order, giving
    sum_terms c * prod_i <bra_i| U_i |ket_i>. Processes are always explicit;
    nothing is inferred from the slot times.
    """
    pairs = mts.pairs()
    if len(processes) != len(pairs):
        raise ValueError(f"need {len(pairs)} processes, got {len(processes)}")
    ops = [as_operator(u) for u in processes]
    for (a, _), u in zip(pairs, ops):
        if u.shape != (mts.slots[a].dim,) * 2:
            raise DimensionError(f"process shape {u.shape} does not match slot dim {mts.slots[a].dim}")
    total = 0j
    for coef, vecs in mts.terms:
        amp = coef
        for (a, b), u in zip(pairs, ops):
            amp *= np.vdot(vecs[b], u @ vecs[a])
        total += amp
    return complex(total)


def two_time_state(post: StateVector, t2: float, pre: StateVector, t1: float) -> MultiTimeState:
    """<post(t2)| x |pre(t1)> as a single-term multiple-time state."""
    post, pre = as_state(post), as_state(pre)
    return MultiTimeState(
        (Slot(t1, KET, pre.shape[0]), Slot(t2, BRA, post.shape[0])), ((1.0, (pre, post)),)
    )


def identity_loop_state(d: int, t1: float = 0.0, t2: float = 1.0) -> MultiTimeState:
    """sum_i <i(t2)| x |i(t1)>, the closed time loop."""
    if d < 1:
        raise ValueError("d must be at least 1")
    terms = tuple((1.0, (basis_state(d, i), basis_state(d, i))) for i in range(d))
    return MultiTimeState((Slot(t1, KET, d), Slot(t2, BRA, d)), terms)


def entangled_four_time_state(d: int, times=(0.0, 1.0, 2.0, 3.0)) -> MultiTimeState:
    """sum_i <i(t4)| x |i(t3)> x <i(t2)| x |i(t1)>."""
    t1, t2, t3, t4 = times
    slots = (Slot(t1, KET, d), Slot(t2, BRA, d), Slot(t3, KET, d), Slot(t4, BRA, d))
    terms = tuple((1.0, (basis_state(d, i),) * 4) for i in range(d))
    return MultiTimeState(slots, terms)


def transaction_echo(Psi: StateVector, basis: Sequence[StateVector]) -> np.ndarray:
    """Offer times confirmation, <psi_n|Psi><Psi|psi_n>, per basis vector."""
    Psi = as_state(Psi)
    if abs(np.linalg.norm(Psi) - 1) > ATOL:
        raise ValueError("Psi must have unit norm")
    offer = np.array([np.vdot(as_state(n), Psi) for n in basis])
    return (offer * np.conj(offer)).real
