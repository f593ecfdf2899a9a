"""Dense complex linear algebra shared by every formalism module.

States are 1-D complex ``numpy`` arrays and operators are 2-D complex arrays.
Nothing here is sparse; every routine is meant for spaces of a few thousand
dimensions at most.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

ATOL = 1e-10

StateVector = np.ndarray
Operator = np.ndarray


class DimensionError(ValueError):
    """Operand shapes do not fit together."""


class HermiticityError(ValueError):
    """A routine that needs a Hermitian matrix was handed something else."""


class ContradictorySelectionError(ValueError):
    """Pre- and post-selection (or boundary fixed points) admit no history."""


def as_state(v) -> StateVector:
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1:
        raise DimensionError(f"expected a 1-D state, got shape {v.shape}")
    return v


def as_operator(a) -> Operator:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D operator, got shape {a.shape}")
    return a


def frozen(a: np.ndarray) -> np.ndarray:
    """Return ``a`` with its write flag cleared (a copy if ``a`` is a view)."""
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


def basis_state(d: int, k: int) -> StateVector:
    v = np.zeros(d, dtype=complex)
    v[k] = 1.0
    return v


def normalized(v: StateVector) -> StateVector:
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 between the rays through ``a`` and ``b``."""
    a = normalized(as_state(a))
    b = normalized(as_state(b))
    return float(abs(np.vdot(a, b)) ** 2)


def tensor(*factors):
    """Kronecker product of states or operators, left factor outermost."""
    if not factors:
        raise ValueError("tensor() needs at least one factor")
    arrs = [np.asarray(f, dtype=complex) for f in factors]
    if len({a.ndim for a in arrs}) != 1:
        raise DimensionError("cannot tensor a state with an operator")
    return reduce(np.kron, arrs)


def dagger(a: Operator) -> Operator:
    return np.conj(np.asarray(a)).T


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def is_hermitian(a: Operator, tol: float = ATOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return bool(np.max(np.abs(a - dagger(a)), initial=0.0) <= tol)


def is_unitary(u: Operator, tol: float = ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))) <= tol)


def _require_hermitian(h: Operator, tol: float) -> Operator:
    h = as_operator(h)
    if h.shape[0] != h.shape[1]:
        raise DimensionError(f"operator is not square: {h.shape}")
    dev = np.max(np.abs(h - dagger(h)), initial=0.0)
    if dev > tol:
        raise HermiticityError(f"operator deviates from Hermitian by {dev:.3e} > {tol:.1e}")
    return h


def eig_hermitian(h: Operator, tol: float = ATOL):
    """Eigenvalues (ascending) and orthonormal eigenvector columns of ``h``.

    Degenerate eigenspaces come back in whatever orthonormal basis LAPACK
    picks; callers must not depend on that choice.
    """
    h = _require_hermitian(h, tol)
    # symmetrize so that sub-tolerance anti-Hermitian noise does not leak in
    w, v = np.linalg.eigh((h + dagger(h)) / 2)
    return w, v


def matexp_hermitian(h: Operator, s: float, tol: float = ATOL) -> Operator:
    """``exp(-i s H)`` for Hermitian ``H`` via its eigendecomposition."""
    w, v = eig_hermitian(h, tol)
    return (v * np.exp(-1j * s * w)) @ dagger(v)


def propagator(h: Operator, t_to: float, t_from: float, tol: float = ATOL) -> Operator:
    """U(t_to, t_from) for a time-independent Hamiltonian."""
    return matexp_hermitian(h, t_to - t_from, tol)


def null_space(a: Operator, tol: float = ATOL) -> list[StateVector]:
    """Orthonormal basis of the ``tol``-kernel of ``a``.

    An eigenvector ``v`` is kept when ``||A v|| <= tol * ||A||``. For Hermitian
    ``A`` the eigenvectors of ``A^dag A = A^2`` are those of ``A`` itself, so
    ``A`` is diagonalized directly; squaring would throw away half the digits
    of every exact zero. Other inputs go through ``A^dag A``.
    """
    a = as_operator(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"null_space needs a square operator, got {a.shape}")
    if is_hermitian(a, tol=1e-14 * max(1.0, np.abs(a).max(initial=0.0))):
        w, v = eig_hermitian(a, tol=np.inf)
        sing = np.abs(w)
    else:
        w, v = eig_hermitian(dagger(a) @ a, tol=np.inf)
        sing = np.sqrt(np.clip(w, 0.0, None))
    scale = float(sing.max(initial=0.0))
    keep = sing <= tol * scale
    return [v[:, j].copy() for j in np.flatnonzero(keep)]


def dft_matrix(d: int) -> Operator:
    """Unitary DFT, ``F[k, n] = exp(-2 pi i k n / d) / sqrt(d)``."""
    if d < 1:
        raise ValueError("dft_matrix needs d >= 1")
    k = np.arange(d)
    return np.exp(-2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)


@dataclass(frozen=True)
class ProductSpace:
    """Ordered tensor-product space; ``factors`` is a tuple of (label, dim)."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        labels = [lab for lab, _ in self.factors]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate factor labels in {labels}")
        for lab, d in self.factors:
            if int(d) < 1:
                raise ValueError(f"factor {lab!r} has non-positive dimension {d}")
        object.__setattr__(self, "factors", tuple((str(l), int(d)) for l, d in self.factors))

    @classmethod
    def of(cls, **dims: int) -> "ProductSpace":
        return cls(tuple(dims.items()))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no factor labelled {label!r} in {self.labels}") from None

    def without(self, label: str) -> "ProductSpace":
        return ProductSpace(tuple(f for f in self.factors if f[0] != label))


def partial_project(bra: StateVector, slot: str, psi: StateVector, space: ProductSpace) -> StateVector:
    """Contract factor ``slot`` of ``psi`` with ``<bra|``.

    The result lives in the product of the remaining factors, in their
    original order.
    """
    bra = as_state(bra)
    psi = as_state(psi)
    axis = space.index(slot)
    if bra.shape[0] != space.dims[axis]:
        raise DimensionError(
            f"bra has dim {bra.shape[0]} but factor {slot!r} has dim {space.dims[axis]}"
        )
    if psi.shape[0] != space.dim:
        raise DimensionError(f"state has dim {psi.shape[0]}, space has dim {space.dim}")
    t = psi.reshape(space.dims)
    out = np.tensordot(np.conj(bra), t, axes=([0], [axis]))
    return out.reshape(-1)


def embed(op: Operator, slot: str, space: ProductSpace) -> Operator:
    """Lift a single-factor operator to the full product space."""
    op = as_operator(op)
    axis = space.index(slot)
    if op.shape != (space.dims[axis],) * 2:
        raise DimensionError(f"operator shape {op.shape} does not fit factor {slot!r}")
    mats = [op if i == axis else np.eye(d) for i, d in enumerate(space.dims)]
    return tensor(*mats)


def orthonormality_defect(vectors: Sequence[StateVector]) -> float:
    """max |<v_i|v_j> - delta_ij| over the list."""
    if len(vectors) == 0:
        return 0.0
    m = np.array([as_state(v) for v in vectors])
    g = np.conj(m) @ m.T
    return float(np.max(np.abs(g - np.eye(len(vectors)))))


def completeness_defect(vectors: Sequence[StateVector]) -> float:
    """max |sum_i |v_i><v_i| - I| for a candidate basis."""
    m = np.array([as_state(v) for v in vectors])
    return float(np.max(np.abs(m.T @ np.conj(m) - np.eye(m.shape[1]))))


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> Operator:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + dagger(a)) / 2


def random_unitary(d: int, rng: np.random.Generator) -> Operator:
    """Haar-random unitary (QR of a Ginibre matrix with phase fix)."""
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_state(d: int, rng: np.random.Generator) -> StateVector:
    return normalized(rng.normal(size=d) + 1j * rng.normal(size=d))


def random_basis(d: int, rng: np.random.Generator) -> list[StateVector]:
    u = random_unitary(d, rng)
    return [u[:, k].copy() for k in range(d)]
