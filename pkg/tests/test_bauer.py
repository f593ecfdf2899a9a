import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtime import bauer, qcore

L64 = bauer.EnergyLattice(32, 0.25)


def test_lattice_grid():
    lat = bauer.EnergyLattice(4, 0.5)
    assert np.allclose(lat.grid, 0.5 * np.arange(-4, 4))
    assert lat.size == 8
    assert np.all(np.diff(lat.grid) > 0)


@pytest.mark.parametrize("M,delta", [(0, 1.0), (2.5, 1.0), (4, 0.0)])
def test_lattice_rejects_bad_parameters(M, delta):
    with pytest.raises(ValueError):
        bauer.EnergyLattice(M, delta)


def test_extended_hamiltonian_signs():
    lat = bauer.EnergyLattice(4, 1.0)
    h = bauer.extended_hamiltonian(lat)
    f = qcore.basis_state(8, lat.position(2))
    b = qcore.basis_state(8, lat.position(-2))
    assert np.allclose(h @ f, 2 * f)
    assert np.allclose(h @ b, -2 * b)


def test_spectrum_symmetric_except_unpaired_endpoint():
    lat = bauer.EnergyLattice(5, 1.0)
    w = np.sort(np.diag(bauer.extended_hamiltonian(lat)).real)
    inner = w[1:]  # drop -M delta, whose partner +M delta is not on the lattice
    assert np.allclose(np.sort(-inner[inner != 0]), inner[inner != 0])


def test_q_algebra():
    lat = bauer.EnergyLattice(6, 1.0)
    q = bauer.q_operator(lat)
    p, pbar = bauer.fb_projectors(lat)
    h = bauer.extended_hamiltonian(lat)
    eye = np.eye(lat.size)
    assert np.allclose(q @ q, eye)
    assert np.allclose(p @ pbar, 0)
    assert np.allclose(p + pbar, eye)
    assert np.allclose(q, p - pbar)
    assert np.allclose(p @ q, p)
    assert np.allclose(pbar @ q, -pbar)
    assert np.allclose(qcore.commutator(h, q), 0)
    assert np.allclose(bauer.pseudospin_hamiltonian(lat), h @ q)


def test_pseudospin_degeneracy_away_from_endpoints():
    lat = bauer.EnergyLattice(6, 1.0)
    e = np.diag(bauer.pseudospin_hamiltonian(lat)).real
    values, counts = np.unique(np.round(e, 12), return_counts=True)
    assert set(counts[(values > 0) & (values < lat.M)]) == {2}


def test_shift_requires_lattice_multiple():
    with pytest.raises(ValueError):
        bauer.shift_operator(L64, 0.1)


def test_shift_direction():
    lat = bauer.EnergyLattice(4, 1.0)
    d = bauer.shift_operator(lat, 1.0)
    e = qcore.basis_state(8, lat.position(2))
    assert np.allclose(d @ e, qcore.basis_state(8, lat.position(1)))


@given(st.integers(-200, 200), st.integers(-200, 200))
def test_shift_group_law(m1, m2):
    d = L64.delta
    a, b = bauer.shift_operator(L64, m1 * d), bauer.shift_operator(L64, m2 * d)
    assert np.abs(a @ b - bauer.shift_operator(L64, (m1 + m2) * d)).max() <= 1e-12
    assert np.abs(a.conj().T - bauer.shift_operator(L64, -m1 * d)).max() <= 1e-12


def test_time_operator_spectrum_and_completeness():
    t = bauer.time_operator(L64)
    assert qcore.is_hermitian(t, 1e-12)
    w = np.linalg.eigvalsh(t)
    assert np.allclose(w, np.sort(L64.times), atol=1e-10)
    b = bauer.time_eigenbasis(L64)
    assert np.abs(b @ b.conj().T - np.eye(L64.size)).max() < 1e-12
    assert np.allclose(np.abs(b), 1 / np.sqrt(L64.size))


def test_stone_relation_single_step():
    t = bauer.time_operator(L64)
    assert np.abs(qcore.matexp_hermitian(t, L64.delta) - bauer.shift_operator(L64, L64.delta)).max() < 1e-10


def test_derivative_form_approximates_time_operator_on_smooth_packets():
    lat = bauer.EnergyLattice(64, 1.0)
    g = bauer.gaussian_packet(lat, 0.0, 8.0).psi
    exact = bauer.time_operator(lat) @ g
    approx = bauer.derivative_time_operator(lat) @ g
    # sin(t)/t error on a packet of time width ~ 1/(2 sigma)
    assert np.linalg.norm(approx - exact) < 1e-3
    assert np.linalg.norm(approx - exact) > 1e-8


def test_commutator_residual_small_on_packet_large_on_edge():
    lat = bauer.EnergyLattice(64, 1.0)
    assert bauer.commutator_residual(lat, bauer.gaussian_packet(lat, 0.0, 8.0)) < 1e-4
    edge = bauer.ExtendedState(lat, qcore.basis_state(lat.size, 0))
    assert bauer.commutator_residual(lat, edge) > 1.0


def test_commutator_cannot_hold_as_operator_identity():
    t = bauer.time_operator(L64)
    c = qcore.commutator(t, bauer.extended_hamiltonian(L64))
    assert abs(np.trace(c)) < 1e-9  # trace of i*I would be i*2M


def test_high_precision_residual_agrees_with_double_precision():
    lat = bauer.EnergyLattice(32, 1.0)
    fast = bauer.commutator_residual(lat, bauer.gaussian_packet(lat, 0.0, 4.0))
    slow = float(bauer.gaussian_commutator_residual_mp(lat, 0.0, 4.0, dps=40))
    assert abs(fast - slow) < 1e-12 + 1e-9 * slow


def test_pseudospin_commutator_weak_on_branch_packets():
    lat = bauer.EnergyLattice(128, 1.0)
    for centre, branch in ((64.0, "f"), (-64.0, "b")):
        g = bauer.gaussian_packet(lat, centre, 8.0, branch)
        assert bauer.pseudospin_commutator_residual(lat, g) < 1e-5


def test_extended_state_components():
    lat = bauer.EnergyLattice(3, 1.0)
    psi = np.arange(1, 7, dtype=complex)
    s = bauer.ExtendedState(lat, psi)
    assert np.allclose(s.f_component + s.b_component, psi)
    assert np.allclose(s.b_component[3:], 0)
    assert np.isclose(s.norm**2, np.linalg.norm(s.f_component) ** 2 + np.linalg.norm(s.b_component) ** 2)
    with pytest.raises(ValueError):
        bauer.ExtendedState.from_components(lat, psi, np.zeros(6))


def test_drift_reports_missing_component():
    lat = bauer.EnergyLattice(64, 1.0)
    df, db = bauer.drift_check(lat, bauer.gaussian_packet(lat, 32.0, 6.0, "f"), lat.time_spacing / 2)
    assert db is None
    assert abs(df - lat.time_spacing / 2) < 1e-6


def test_extended_generator_moves_both_branches_forward():
    lat = bauer.EnergyLattice(64, 1.0)
    dt = lat.time_spacing
    _, db = bauer.drift_check(lat, bauer.gaussian_packet(lat, -32.0, 6.0, "b"), dt, generator="extended")
    assert abs(db - dt) < 1e-6 * dt
