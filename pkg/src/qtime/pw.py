"""Relational (Page-Wootters) dynamics with a finite ideal clock.

The clock is a ``d_C``-level system with an equally spaced energy ladder and
time states given by a discrete Fourier transform of the energy basis, so that
``exp(-i H_C dt)`` steps cyclically through the time grid. The kinematical
space is ordered clock-first: ``C (x) R`` (or ``Cf (x) Cb (x) R`` for the
two-clock construction).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qcore
from .qcore import (
    ATOL,
    DimensionError,
    Operator,
    ProductSpace,
    StateVector,
    dagger,
    frozen,
    null_space,
    partial_project,
    tensor,
)


@dataclass(frozen=True, eq=False)
class ClockModel:
    """Ideal finite clock.

    ``energies[n] = omega * m_n`` with ``m_n`` running over the centred ladder
    ``-floor(d/2) .. ceil(d/2) - 1`` (or ``0 .. d - 1`` when not centred).
    ``time_states[:, k]`` is ``|t_k>`` written in the energy basis.
    """

    d_C: int
    omega: float
    centered: bool = True
    energies: np.ndarray = field(init=False, repr=False)
    H_C: np.ndarray = field(init=False, repr=False)
    time_grid: np.ndarray = field(init=False, repr=False)
    time_states: np.ndarray = field(init=False, repr=False)
    T_C: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d, w = self.d_C, self.omega
        start = -(d // 2) if self.centered else 0
        levels = np.arange(start, start + d)
        energies = w * levels
        times = 2 * np.pi * np.arange(d) / (d * w)
        states = np.exp(-1j * np.outer(energies, times)) / np.sqrt(d)
        set_ = object.__setattr__
        set_(self, "energies", frozen(energies))
        set_(self, "H_C", frozen(np.diag(energies).astype(complex)))
        set_(self, "time_grid", frozen(times))
        set_(self, "time_states", frozen(states))
        set_(self, "T_C", frozen((states * times) @ dagger(states)))

    @property
    def levels(self) -> np.ndarray:
        return np.rint(self.energies / self.omega).astype(int)

    @property
    def dt(self) -> float:
        return 2 * np.pi / (self.d_C * self.omega)

    def time_state(self, k: int) -> StateVector:
        return self.time_states[:, k % self.d_C].copy()

    def energy_state(self, n: int) -> StateVector:
        return qcore.basis_state(self.d_C, n)


def build_ideal_clock(d_C: int, omega: float, centered: bool = True) -> ClockModel:
    if int(d_C) != d_C or d_C < 2:
        raise ValueError(f"clock dimension must be an integer >= 2, got {d_C}")
    if not omega > 0:
        raise ValueError(f"clock spacing omega must be positive, got {omega}")
    return ClockModel(int(d_C), float(omega), bool(centered))


@dataclass(frozen=True, eq=False)
class KinematicalState:
    space: ProductSpace
    psi: np.ndarray

    def __post_init__(self):
        psi = qcore.as_state(self.psi)
        if psi.shape[0] != self.space.dim:
            raise DimensionError(f"state dim {psi.shape[0]} != space dim {self.space.dim}")
        object.__setattr__(self, "psi", frozen(psi))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.psi))

    def normalized(self) -> "KinematicalState":
        return KinematicalState(self.space, qcore.normalized(self.psi))


@dataclass(frozen=True, eq=False)
class InteractionSpec:
    """Clock-system coupling on the full ``C (x) R`` space.

    ``time_diagonal`` asserts ``H_int = sum_k |t_k><t_k| (x) V_k``; use
    :func:`time_diagonal_interaction` to build one.
    """

    H_int: np.ndarray
    time_diagonal: bool = False

    def __post_init__(self):
        h = qcore.as_operator(self.H_int)
        if not qcore.is_hermitian(h, ATOL):
            raise qcore.HermiticityError("interaction Hamiltonian is not Hermitian")
        object.__setattr__(self, "H_int", frozen(h))


def time_diagonal_interaction(clock: ClockModel, potentials) -> InteractionSpec:
    """``sum_k |t_k><t_k| (x) V_k`` from one Hermitian ``V_k`` per clock tick."""
    if len(potentials) != clock.d_C:
        raise DimensionError(f"need {clock.d_C} potentials, got {len(potentials)}")
    h = sum(
        tensor(np.outer(clock.time_state(k), np.conj(clock.time_state(k))), qcore.as_operator(v))
        for k, v in enumerate(potentials)
    )
    return InteractionSpec(h, time_diagonal=True)


def kinematical_space(clock: ClockModel, d_R: int) -> ProductSpace:
    return ProductSpace((("C", clock.d_C), ("R", int(d_R))))


def total_hamiltonian(clock: ClockModel, H_R: Operator, inter: InteractionSpec | None = None) -> Operator:
    """``H_C (x) I + I (x) H_R + H_int``."""
    H_R = qcore.as_operator(H_R)
    d_R = H_R.shape[0]
    H = tensor(clock.H_C, np.eye(d_R)) + tensor(np.eye(clock.d_C), H_R)
    if inter is not None:
        if inter.H_int.shape != H.shape:
            raise DimensionError(f"H_int has shape {inter.H_int.shape}, expected {H.shape}")
        H = H + inter.H_int
    return H


def history_state(clock: ClockModel, H_R: Operator, psi0: StateVector) -> KinematicalState:
    """Normalized ``d_C^{-1/2} sum_k |t_k> (x) U(t_k)|psi0>``."""
    H_R = qcore.as_operator(H_R)
    psi0 = qcore.as_state(psi0)
    if psi0.shape[0] != H_R.shape[0]:
        raise DimensionError("initial state and H_R dimensions differ")
    if abs(np.linalg.norm(psi0) - 1) > ATOL:
        raise ValueError("initial state must be normalized")
    w, v = qcore.eig_hermitian(H_R)
    coeff = dagger(v) @ psi0
    psi = np.zeros(clock.d_C * H_R.shape[0], dtype=complex)
    for k, t in enumerate(clock.time_grid):
        psi += tensor(clock.time_state(k), v @ (np.exp(-1j * w * t) * coeff))
    psi /= np.sqrt(clock.d_C)
    return KinematicalState(kinematical_space(clock, H_R.shape[0]), psi).normalized()


def constraint_residual(H_T: Operator, Psi: KinematicalState | StateVector) -> float:
    """``||H_T psi|| / ||psi||``."""
    psi = Psi.psi if isinstance(Psi, KinematicalState) else qcore.as_state(Psi)
    n = np.linalg.norm(psi)
    if n == 0:
        raise ValueError("constraint residual of the zero vector is undefined")
    if H_T.shape[1] != psi.shape[0]:
        raise DimensionError("H_T and state dimensions differ")
    return float(np.linalg.norm(H_T @ psi) / n)


def physical_states(H_T: Operator, tol: float = ATOL, space: ProductSpace | None = None) -> list[KinematicalState]:
    """Orthonormal basis of the solutions of ``H_T |Psi>> = 0`` (to ``tol``)."""
    if not qcore.is_hermitian(H_T, ATOL):
        raise qcore.HermiticityError("total Hamiltonian is not Hermitian")
    space = space or ProductSpace((("U", H_T.shape[0]),))
    return [KinematicalState(space, v) for v in null_space(H_T, tol)]


def condition_on_clock(Psi: KinematicalState, clock: ClockModel, k: int, slot: str = "C") -> StateVector:
    """Unnormalized ``(<t_k| (x) I) |Psi>>``."""
    if not 0 <= k < clock.d_C:
        raise IndexError(f"clock index {k} outside 0..{clock.d_C - 1}")
    return partial_project(clock.time_state(k), slot, Psi.psi, Psi.space)


def conditioned_trajectory(Psi: KinematicalState, clock: ClockModel, slot: str = "C") -> np.ndarray:
    """All conditioned states stacked as rows, index ``k`` first."""
    return np.array([condition_on_clock(Psi, clock, k, slot) for k in range(clock.d_C)])


def interaction_kernel(clock: ClockModel, inter: InteractionSpec) -> np.ndarray:
    """``K[k, l] = (<t_k| (x) I) H_int (|t_l> (x) I)`` as a ``(d_C, d_C, d_R, d_R)`` array."""
    d = clock.d_C
    n = inter.H_int.shape[0]
    if n % d:
        raise DimensionError(f"H_int dim {n} is not a multiple of d_C={d}")
    d_R = n // d
    h4 = inter.H_int.reshape(d, d_R, d, d_R)
    ts = clock.time_states
    return np.einsum("ak,arbs,bl->klrs", np.conj(ts), h4, ts)


def _central_derivative(traj: np.ndarray, dt: float) -> np.ndarray:
    return (np.roll(traj, -1, axis=0) - np.roll(traj, 1, axis=0)) / (2 * dt)


def verify_nonlocal_eom(
    Psi: KinematicalState, clock: ClockModel, H_R: Operator, inter: InteractionSpec | None = None
) -> np.ndarray:
    """Residual of the time-nonlocal conditioned equation at every clock tick.

    ``r_k = || i D psi_k - H_R psi_k - sum_l dt * Kc[k, l] psi_l ||`` where ``D`` is
    the periodic central difference and ``Kc = K / dt`` is the kernel in
    continuum normalization (clock states scaled by ``dt**-1/2``), so the
    quadrature reduces to ``sum_l K[k, l] psi_l``.
    """
    H_R = qcore.as_operator(H_R)
    traj = conditioned_trajectory(Psi, clock)
    lhs = 1j * _central_derivative(traj, clock.dt) - traj @ H_R.T
    if inter is not None:
        kernel_c = interaction_kernel(clock, inter) / clock.dt
        lhs = lhs - clock.dt * np.einsum("klrs,ls->kr", kernel_c, traj)
    return np.linalg.norm(lhs, axis=1)


def verify_local_eom(
    Psi: KinematicalState, clock: ClockModel, H_R: Operator, inter: InteractionSpec | None = None
) -> np.ndarray:
    """Residual of ``i D psi_k = (H_R + V_k) psi_k`` with ``V_k = K[k, k]``."""
    H_R = qcore.as_operator(H_R)
    traj = conditioned_trajectory(Psi, clock)
    lhs = 1j * _central_derivative(traj, clock.dt) - traj @ H_R.T
    if inter is not None:
        kernel = interaction_kernel(clock, inter)
        diag = kernel[np.arange(clock.d_C), np.arange(clock.d_C)]
        lhs = lhs - np.einsum("krs,ks->kr", diag, traj)
    return np.linalg.norm(lhs, axis=1)


def dual_constraint_hamiltonians(clock_f: ClockModel, clock_b: ClockModel, H_R: Operator):
    """Forward and backward constraints on ``Cf (x) Cb (x) R``.

    ``H^f = H_Cf (x) I (x) I + I (x) I (x) H_R`` and
    ``H^b = I (x) H_Cb (x) I - I (x) I (x) H_R``.
    """
    H_R = qcore.as_operator(H_R)
    i_f, i_b, i_r = np.eye(clock_f.d_C), np.eye(clock_b.d_C), np.eye(H_R.shape[0])
    h_f = tensor(clock_f.H_C, i_b, i_r) + tensor(i_f, i_b, H_R)
    h_b = tensor(i_f, clock_b.H_C, i_r) - tensor(i_f, i_b, H_R)
    return h_f, h_b


def dual_space(clock_f: ClockModel, clock_b: ClockModel, d_R: int) -> ProductSpace:
    return ProductSpace((("Cf", clock_f.d_C), ("Cb", clock_b.d_C), ("R", int(d_R))))


def dual_constraint_states(
    clock_f: ClockModel, clock_b: ClockModel, H_R: Operator, tol: float = ATOL
) -> list[KinematicalState]:
    """Joint null space of the forward and backward constraints.

    Raises ``ValueError`` if the two constraints fail to commute.
    """
    h_f, h_b = dual_constraint_hamiltonians(clock_f, clock_b, H_R)
    comm = float(np.linalg.norm(qcore.commutator(h_f, h_b)))
    if comm > ATOL:
        raise ValueError(f"forward and backward constraints do not commute: ||[Hf, Hb]|| = {comm:.3e}")
    gram = dagger(h_f) @ h_f + dagger(h_b) @ h_b
    space = dual_space(clock_f, clock_b, qcore.as_operator(H_R).shape[0])
    return [KinematicalState(space, v) for v in null_space(gram, tol)]


def condition_on_clocks(
    Psi: KinematicalState, clock_f: ClockModel, clock_b: ClockModel, k: int, l: int
) -> StateVector:
    """``(<t_k|_f (x) <t_l|_b (x) I) |Psi>>``, unnormalized."""
    rest = partial_project(clock_f.time_state(k), "Cf", Psi.psi, Psi.space)
    return partial_project(clock_b.time_state(l), "Cb", rest, Psi.space.without("Cf"))


def is_commensurate(clock: ClockModel, H_R: Operator, tol: float = 1e-9) -> bool:
    """True when every eigenvalue of ``H_R`` is ``omega * m`` with ``-m`` on the clock ladder."""
    w, _ = qcore.eig_hermitian(H_R)
    m = w / clock.omega
    if np.max(np.abs(m - np.rint(m)), initial=0.0) > tol:
        return False
    ladder = set(clock.levels.tolist())
    return all(-int(v) in ladder for v in np.rint(m))
