"""Fixed points on a discrete two-branch contour.

A fixed point at time t is |psi>_b x |psi>_f, the same state on the backward
and forward branches. A contour history strings fixed points together with
unitary channels, and its weight is the product over segments of the forward
amplitude times the backward (conjugate) amplitude. Normalizing weights over
a family gives the measure of existence, which reproduces the Born rule for
two-point families and the ABL rule for three-point ones.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import bauer
from .qcore import (
    ATOL,
    ContradictorySelectionError,
    DimensionError,
    Operator,
    StateVector,
    as_operator,
    as_state,
    completeness_defect,
    frozen,
    matexp_hermitian,
    orthonormality_defect,
    tensor,
)

WEIGHT_TOL = 1e-14


@dataclass(frozen=True)
class ContourGrid:
    times: tuple[float, ...]
    # branch regularization; it has no role on a finite grid and stays 0
    eta: float = 0.0

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if len(times) < 2:
            raise ValueError("a contour grid needs at least two times")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"times must be strictly increasing, got {times}")
        if self.eta != 0.0:
            raise ValueError("eta is fixed to 0 on a finite contour")
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True, eq=False)
class FixedPoint:
    """One state, structurally duplicated onto both branches."""

    t: float
    state: StateVector

    def __post_init__(self):
        v = as_state(self.state)
        if abs(np.linalg.norm(v) - 1) > ATOL:
            raise ValueError("fixed-point state must have unit norm")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "state", frozen(v))

    @property
    def b(self) -> StateVector:
        return self.state

    @property
    def f(self) -> StateVector:
        return self.state

    def doubled(self) -> StateVector:
        """|psi>_b x |psi>_f on the doubled space (b factor outermost)."""
        return tensor(self.state, self.state)


@dataclass(frozen=True, eq=False)
class ContourHistory:
    grid: ContourGrid
    points: tuple[FixedPoint, ...]
    H: Operator

    def __post_init__(self):
        pts = tuple(self.points)
        if len(pts) != len(self.grid):
            raise ValueError(f"need {len(self.grid)} fixed points, got {len(pts)}")
        for p, t in zip(pts, self.grid.times):
            if p.t != t:
                raise ValueError(f"fixed point at t={p.t} does not sit on grid time {t}")
        h = as_operator(self.H)
        if any(p.state.shape[0] != h.shape[0] for p in pts):
            raise DimensionError("fixed-point states and H differ in dimension")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "H", frozen(h))

    @classmethod
    def from_states(cls, grid: ContourGrid, states: Sequence[StateVector], H: Operator) -> "ContourHistory":
        return cls(grid, tuple(FixedPoint(t, s) for t, s in zip(grid.times, states)), H)


@dataclass(frozen=True, eq=False)
class FamilySpec:
    """Per-time orthonormal sets; a singleton set pins a boundary fixed point.

    Interior sets must be complete bases. The first and last sets may be
    either singletons (pre/post-selection) or complete bases.
    """

    grid: ContourGrid
    bases: tuple[tuple[StateVector, ...], ...]
    H: Operator

    def __post_init__(self):
        h = as_operator(self.H)
        d = h.shape[0]
        if len(self.bases) != len(self.grid):
            raise ValueError(f"need {len(self.grid)} basis sets, got {len(self.bases)}")
        bases = []
        last = len(self.bases) - 1
        for i, basis in enumerate(self.bases):
            vecs = tuple(frozen(as_state(v)) for v in basis)
            if not vecs or any(v.shape[0] != d for v in vecs):
                raise DimensionError(f"basis set {i} must hold vectors of dim {d}")
            if orthonormality_defect(vecs) > ATOL:
                raise ValueError(f"basis set {i} is not orthonormal")
            boundary_singleton = len(vecs) == 1 and i in (0, last)
            if not boundary_singleton and (len(vecs) != d or completeness_defect(vecs) > ATOL):
                raise ValueError(f"basis set {i} must be a complete basis")
            bases.append(vecs)
        object.__setattr__(self, "bases", tuple(bases))
        object.__setattr__(self, "H", frozen(h))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.bases)

    def labels(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(n) for n in self.shape))

    def history(self, label: Sequence[int]) -> ContourHistory:
        label = tuple(label)
        if len(label) != len(self.bases) or any(not 0 <= k < n for k, n in zip(label, self.shape)):
            raise IndexError(f"label {label} does not fit family shape {self.shape}")
        return ContourHistory.from_states(self.grid, [b[k] for b, k in zip(self.bases, label)], self.H)


def segment_amplitude(fp_i: FixedPoint, fp_j: FixedPoint, H: Operator) -> tuple[complex, complex]:
    """(forward, backward) channel amplitudes between consecutive fixed points."""
    if not fp_i.t < fp_j.t:
        raise ValueError("segment needs fp_i.t < fp_j.t")
    a_f = complex(np.vdot(fp_j.f, matexp_hermitian(H, fp_j.t - fp_i.t) @ fp_i.f))
    return a_f, a_f.conjugate()


def history_weight(h: ContourHistory) -> float:
    w = 1.0
    for p, q in zip(h.points, h.points[1:]):
        a_f, a_b = segment_amplitude(p, q, h.H)
        w *= (a_f * a_b).real
    return float(w)


def weight_table(family: FamilySpec) -> np.ndarray:
    """History weights for every label, shaped like the family.

    Segment overlaps are computed once per time step and combined by outer
    products, which is the same product of squared amplitudes as
    ``history_weight`` but without re-evolving each history.
    """
    times = family.grid.times
    w = np.ones(family.shape[:1])
    for i in range(len(times) - 1):
        u = matexp_hermitian(family.H, times[i + 1] - times[i])
        m = np.array([[abs(np.vdot(b, u @ a)) ** 2 for b in family.bases[i + 1]] for a in family.bases[i]])
        w = w[..., :, None] * m.reshape((1,) * i + m.shape)
    return w


def measure_distribution(family: FamilySpec) -> np.ndarray:
    """Measures of existence for all labels; sums to one."""
    w = weight_table(family)
    z = w.sum()
    if z <= WEIGHT_TOL:
        raise ContradictorySelectionError(
            f"total family weight {z:.3e} vanishes: boundary fixed points admit no history"
        )
    return w / z


def measure_of_existence(family: FamilySpec, label: Sequence[int]) -> float:
    return float(measure_distribution(family)[tuple(label)])


def history_overlap(h1: ContourHistory, h2: ContourHistory) -> complex:
    """Product over times of <b|b'><f|f'>, i.e. of |<psi|psi'>|^2 per fixed point."""
    if h1.grid.times != h2.grid.times:
        raise ValueError("histories live on different contour grids")
    out = complex(1.0)
    for p, q in zip(h1.points, h2.points):
        out *= np.vdot(p.b, q.b) * np.vdot(p.f, q.f)
    return out


def _doubled_projector(basis: Sequence[StateVector]) -> Operator:
    d = basis[0].shape[0]
    p = np.zeros((d * d, d * d), dtype=complex)
    for k in basis:
        kk = tensor(k, k)
        p += np.outer(kk, np.conj(kk))
    return p


def family_projector(family: FamilySpec) -> tuple[Operator, list[tuple[int, ...]]]:
    """Tensor product over times of sum_k |kk><kk|, plus the label enumeration.

    The operator acts on (b x f)^{N_t}; its dimension is d^(2 N_t), so this
    is for small families only.
    """
    op = tensor(*[_doubled_projector(b) for b in family.bases])
    return op, list(family.labels())


def universal_state(family: FamilySpec, cb: Sequence[Sequence[complex]], cf: Sequence[Sequence[complex]]) -> StateVector:
    """Product over times of (sum_k cb_k |k>) x (sum_k cf_k |k>) in the family bases."""
    factors = []
    for basis, b, f in zip(family.bases, cb, cf):
        if len(b) != len(basis) or len(f) != len(basis):
            raise DimensionError("coefficient lists must match the basis sizes")
        vb = sum(c * k for c, k in zip(b, basis))
        vf = sum(c * k for c, k in zip(f, basis))
        factors.append(tensor(vb, vf))
    return tensor(*factors)


def history_coefficients(family: FamilySpec, vec: StateVector) -> np.ndarray:
    """<[[k_1]] ... [[k_N]] | vec> for every label, shaped like the family."""
    vec = as_state(vec)
    out = np.empty(family.shape, dtype=complex)
    for label in family.labels():
        h = tensor(*[tensor(b[k], b[k]) for b, k in zip(family.bases, label)])
        out[label] = np.vdot(h, vec)
    return out


def fp_time_operator(lattice: bauer.EnergyLattice) -> Operator:
    """(t_b x I + I x t_f) / 2 on the b x f doubled lattice space."""
    t = bauer.time_operator(lattice)
    eye = np.eye(lattice.size)
    return (np.kron(t, eye) + np.kron(eye, t)) / 2


def lattice_fixed_point(lattice: bauer.EnergyLattice, n: int) -> StateVector:
    """[[tau_n]] = |tau_n>_b x |tau_n>_f for the time eigenvalue index n."""
    tau = bauer.time_eigenbasis(lattice)[:, lattice.position(n)]
    return tensor(tau, tau)


def fp_time_expectation(lattice: bauer.EnergyLattice, b_vec: StateVector, f_vec: StateVector) -> float:
    """<t_FP> on the product b_vec x f_vec (each normalized first)."""
    t = bauer.time_operator(lattice)
    b_vec, f_vec = as_state(b_vec), as_state(f_vec)
    tb = np.vdot(b_vec, t @ b_vec).real / np.vdot(b_vec, b_vec).real
    tf = np.vdot(f_vec, t @ f_vec).real / np.vdot(f_vec, f_vec).real
    return float((tb + tf) / 2)
