"""Decoherent histories with rank-1 outcome projectors.

A family fixes an initial pure state at t_1 and, at every later time, an
orthonormal basis whose elements are the possible outcomes. Projectors are
taken in the Heisenberg picture relative to t_1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .qcore import (
    ATOL,
    Operator,
    StateVector,
    as_operator,
    as_state,
    completeness_defect,
    dagger,
    frozen,
    matexp_hermitian,
    orthonormality_defect,
)

DEFAULT_LABEL_CAP = 10**6


@dataclass(frozen=True, eq=False)
class ProjectorFamily:
    times: tuple[float, ...]
    bases: tuple[tuple[StateVector, ...], ...]
    H: Operator
    psi1: StateVector
    tol: float = ATOL
    _props: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if len(times) < 2:
            raise ValueError("a family needs at least two times")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"times must be strictly increasing, got {times}")
        if len(self.bases) != len(times) - 1:
            raise ValueError(f"need {len(times) - 1} bases (one per time after the first), got {len(self.bases)}")
        h = as_operator(self.H)
        d = h.shape[0]
        psi1 = as_state(self.psi1)
        if psi1.shape[0] != d:
            raise ValueError(f"initial state has dim {psi1.shape[0]}, Hamiltonian has dim {d}")
        if abs(np.linalg.norm(psi1) - 1) > self.tol:
            raise ValueError("initial state must have unit norm")
        bases = []
        for i, basis in enumerate(self.bases):
            vecs = tuple(frozen(as_state(v)) for v in basis)
            if len(vecs) != d or any(v.shape[0] != d for v in vecs):
                raise ValueError(f"basis at time index {i + 1} must hold {d} vectors of dim {d}")
            if orthonormality_defect(vecs) > self.tol or completeness_defect(vecs) > self.tol:
                raise ValueError(f"basis at time index {i + 1} is not orthonormal and complete")
            bases.append(vecs)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "bases", tuple(bases))
        object.__setattr__(self, "H", frozen(h))
        object.__setattr__(self, "psi1", frozen(psi1))
        # U(t_k, t_1) for every time, index 0 being the identity
        props = tuple(frozen(matexp_hermitian(h, t - times[0])) for t in times)
        object.__setattr__(self, "_props", props)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def n_times(self) -> int:
        return len(self.times)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.bases)

    @property
    def n_labels(self) -> int:
        return int(np.prod(self.shape))

    def labels(self) -> Iterator["HistoryLabel"]:
        for idx in itertools.product(*(range(n) for n in self.shape)):
            yield HistoryLabel(idx)

    def heisenberg_vector(self, k: int, alpha: int) -> StateVector:
        """U(t_k, t_1)^dag |alpha>, the Heisenberg-rotated outcome vector at time index k."""
        if not 1 <= k < self.n_times:
            raise IndexError(f"time index {k} outside 1..{self.n_times - 1}")
        return dagger(self._props[k]) @ self.bases[k - 1][alpha]


@dataclass(frozen=True)
class HistoryLabel:
    outcomes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(int(a) for a in self.outcomes))

    def validate(self, family: ProjectorFamily) -> None:
        if len(self.outcomes) != len(family.shape):
            raise ValueError(f"label has {len(self.outcomes)} outcomes, family has {len(family.shape)} times")
        for i, (a, n) in enumerate(zip(self.outcomes, family.shape)):
            if not 0 <= a < n:
                raise IndexError(f"outcome {a} at time index {i + 1} outside 0..{n - 1}")


def _label(label) -> HistoryLabel:
    return label if isinstance(label, HistoryLabel) else HistoryLabel(tuple(label))


def heisenberg_projector(family: ProjectorFamily, k: int, alpha: int) -> Operator:
    v = family.heisenberg_vector(k, alpha)
    return np.outer(v, np.conj(v))


def class_operator(family: ProjectorFamily, label) -> Operator:
    """C = P_{a_N}(t_N) ... P_{a_2}(t_2), latest time leftmost."""
    label = _label(label)
    label.validate(family)
    c = np.eye(family.dim, dtype=complex)
    for k, a in enumerate(label.outcomes, start=1):
        c = heisenberg_projector(family, k, a) @ c
    return c


def record_state(family: ProjectorFamily, label) -> StateVector:
    """C_alpha |psi_1>, unnormalized; built right to left without forming C."""
    label = _label(label)
    label.validate(family)
    v = family.psi1.copy()
    for k, a in enumerate(label.outcomes, start=1):
        h = family.heisenberg_vector(k, a)
        v = h * np.vdot(h, v)
    return v


def overlap_chain(family: ProjectorFamily, label) -> complex:
    """<a_N|a_{N-1}> ... <a_2|psi_1> with Heisenberg-rotated outcome vectors."""
    label = _label(label)
    label.validate(family)
    amp = complex(1.0)
    prev = family.psi1
    for k, a in enumerate(label.outcomes, start=1):
        h = family.heisenberg_vector(k, a)
        amp *= np.vdot(h, prev)
        prev = h
    return amp


def history_probability(family: ProjectorFamily, label, check_tol: float = ATOL) -> float:
    """||C_alpha psi_1||^2, cross-checked against the squared overlap chain."""
    p = float(np.linalg.norm(record_state(family, label)) ** 2)
    q = abs(overlap_chain(family, label)) ** 2
    if abs(p - q) > check_tol:
        raise AssertionError(f"class-operator and overlap-chain probabilities disagree: {p} vs {q}")
    return p


def transition_matrices(family: ProjectorFamily) -> list[np.ndarray]:
    """Schroedinger-picture transition probabilities between consecutive times.

    Entry [b, a] of the i-th matrix is |<b|U(t_{i+1}, t_i)|a>|^2. The first
    matrix has a single column for the initial state.
    """
    mats = []
    prev = [family.psi1]
    for k in range(1, family.n_times):
        u = matexp_hermitian(family.H, family.times[k] - family.times[k - 1])
        cur = family.bases[k - 1]
        m = np.array([[abs(np.vdot(b, u @ a)) ** 2 for a in prev] for b in cur])
        mats.append(m)
        prev = cur
    return mats


def markov_probabilities(family: ProjectorFamily) -> np.ndarray:
    """Joint outcome probabilities as a product of one-step transitions.

    The returned array is indexed by the outcomes at times 2..N. This is the
    chain-rule evaluation of the squared overlap product and needs no class
    operators.
    """
    mats = transition_matrices(family)
    joint = mats[0][:, 0]
    for m in mats[1:]:
        # joint[..., a] * m[b, a] -> new trailing axis b
        joint = joint[..., None] * np.moveaxis(m, 0, 1)
    return joint


def decoherence_functional(family: ProjectorFamily, alpha, beta) -> complex:
    """D(alpha, beta) = <psi_1| C_alpha^dag C_beta |psi_1>."""
    return complex(np.vdot(record_state(family, alpha), record_state(family, beta)))


def _check_cap(family: ProjectorFamily, cap: int) -> None:
    if family.n_labels > cap:
        raise ValueError(
            f"family has {family.n_labels} histories, above the cap of {cap}; coarse-grain the family"
        )


def decoherence_matrix(family: ProjectorFamily, cap: int = DEFAULT_LABEL_CAP) -> np.ndarray:
    """All D(alpha, beta) with labels in lexicographic order.

    The matrix is the Gram matrix of the record states, so it is formed in
    one product; memory grows as the square of the label count.
    """
    _check_cap(family, cap)
    recs = np.array([record_state(family, lab) for lab in family.labels()])
    return np.conj(recs) @ recs.T


def check_decoherence(
    family: ProjectorFamily, tol: float = 1e-12, cap: int = DEFAULT_LABEL_CAP
) -> tuple[bool, float]:
    """(decoherent, max |D(alpha, beta)|) over alpha != beta."""
    _check_cap(family, cap)
    d = decoherence_matrix(family, cap)
    off = d - np.diag(np.diag(d))
    worst = float(np.max(np.abs(off), initial=0.0))
    return worst <= tol, worst


def coarse_grained_probability(family: ProjectorFamily, k: int, merged: Sequence[int], label) -> float:
    """Probability of the history in which outcomes ``merged`` at time index k are fused.

    ``label`` supplies the outcomes at all other times (its entry at k is
    ignored). The fused projector is the sum of the rank-1 ones, so the value
    is ||C_coarse psi_1||^2, not a sum of fine-grained probabilities; the two
    agree exactly when the family decoheres.
    """
    label = _label(label)
    label.validate(family)
    if not 1 <= k < family.n_times:
        raise IndexError(f"time index {k} outside 1..{family.n_times - 1}")
    v = family.psi1.copy()
    for i, a in enumerate(label.outcomes, start=1):
        if i == k:
            hs = [family.heisenberg_vector(i, m) for m in merged]
            v = sum(h * np.vdot(h, v) for h in hs)
        else:
            h = family.heisenberg_vector(i, a)
            v = h * np.vdot(h, v)
    return float(np.linalg.norm(v) ** 2)
