"""Acceptance suite: one test and one printed PASS/FAIL line per criterion."""

from pathlib import Path

import numpy as np

from qtime import bauer, dhist, fpf, pw, qcore, tsvf
from qtime.cli import main
from qtime.cli.records import strip_wall_time

SPECS = Path(__file__).resolve().parents[1] / "specs"


def commensurate_qubit(rng):
    """Random rotation of diag(0, 1): eigenvalues sit on the omega = 1 ladder."""
    v = qcore.random_unitary(2, rng)
    return v @ np.diag([0.0, 1.0]) @ v.conj().T


def test_ac01_pw_recovery(rng, report):
    clock = pw.build_ideal_clock(32, 1.0)
    H = commensurate_qubit(rng)
    psi0 = qcore.random_state(2, rng)
    Psi = pw.history_state(clock, H, psi0)
    worst = min(
        qcore.fidelity(pw.condition_on_clock(Psi, clock, k), qcore.matexp_hermitian(H, t) @ psi0)
        for k, t in enumerate(clock.time_grid)
    )
    res = pw.constraint_residual(pw.total_hamiltonian(clock, H), Psi)
    ok = 1 - worst <= 1e-10 and res <= 1e-10
    report(1, "PW recovery", ok, f"max infidelity {1 - worst:.2e} (<=1e-10), constraint residual {res:.2e} (<=1e-10)")
    assert ok


def test_ac02_nonlocal_eom_convergence(rng, report):
    H = commensurate_qubit(rng)
    psi0 = qcore.random_state(2, rng)
    res = []
    for d in (16, 32, 64):
        clock = pw.build_ideal_clock(d, 1.0)
        res.append(pw.verify_nonlocal_eom(pw.history_state(clock, H, psi0), clock, H).max())
    ratios = [a / b for a, b in zip(res, res[1:])]

    clock = pw.build_ideal_clock(16, 1.0)
    inter = pw.time_diagonal_interaction(clock, [qcore.random_hermitian(2, rng, 0.1) for _ in range(16)])
    Psi = pw.history_state(clock, H, psi0)
    gap = np.abs(pw.verify_nonlocal_eom(Psi, clock, H, inter) - pw.verify_local_eom(Psi, clock, H, inter)).max()
    ok = all(r >= 3.5 for r in ratios) and gap <= 1e-10
    report(2, "nonlocal EOM convergence", ok,
           f"doubling ratios {ratios[0]:.2f}, {ratios[1]:.2f} (>=3.5), local vs nonlocal {gap:.2e} (<=1e-10)")
    assert ok


def test_ac03_dual_constraint(rng, report):
    clock = pw.build_ideal_clock(8, 1.0)
    H = commensurate_qubit(rng)
    h_f, h_b = pw.dual_constraint_hamiltonians(clock, clock, H)
    comm = np.linalg.norm(qcore.commutator(h_f, h_b))
    states = pw.dual_constraint_states(clock, clock, H)
    coef = rng.normal(size=len(states)) + 1j * rng.normal(size=len(states))
    Psi = pw.KinematicalState(states[0].space, sum(c * s.psi for c, s in zip(coef, states))).normalized()
    p0 = pw.condition_on_clocks(Psi, clock, clock, 0, 0)
    worst = worst_diag = 0.0
    for k, tk in enumerate(clock.time_grid):
        for l, tl in enumerate(clock.time_grid):
            got = pw.condition_on_clocks(Psi, clock, clock, k, l)
            ref = qcore.matexp_hermitian(H, tk) @ qcore.matexp_hermitian(H, -tl) @ p0
            worst = max(worst, 1 - qcore.fidelity(got, ref))
            if k == l:
                worst_diag = max(worst_diag, 1 - qcore.fidelity(got, p0))
    ok = len(states) > 0 and worst <= 1e-8 and worst_diag <= 1e-8 and comm <= 1e-10
    report(3, "dual-constraint two-branch structure", ok,
           f"null dim {len(states)}, max infidelity {worst:.2e}, diagonal {worst_diag:.2e} (<=1e-8), "
           f"||[Hf,Hb]|| {comm:.2e} (<=1e-10)")
    assert ok


def test_ac04_shift_group_and_stone(rng, report):
    lat = bauer.EnergyLattice(32, 0.5)
    n, dl = lat.size, lat.delta
    eye = np.eye(n)
    group = np.abs(bauer.shift_operator(lat, 0.0) - eye).max()
    for _ in range(20):
        m1, m2 = (int(x) for x in rng.integers(-2 * n, 2 * n, size=2))
        d1, d2 = bauer.shift_operator(lat, m1 * dl), bauer.shift_operator(lat, m2 * dl)
        dm = bauer.shift_operator(lat, -m1 * dl)
        group = max(
            group,
            np.abs(d1 @ d1.conj().T - eye).max(),
            np.abs(d1.conj().T @ d1 - eye).max(),
            np.abs(d1.conj().T - dm).max(),
            np.abs(d1.conj().T - np.linalg.inv(d1)).max(),
            np.abs(d1 @ d2 - bauer.shift_operator(lat, (m1 + m2) * dl)).max(),
        )
    t_op = bauer.time_operator(lat)
    w, v = qcore.eig_hermitian(t_op)
    stone = max(
        np.abs((v * np.exp(-1j * m * dl * w)) @ v.conj().T - bauer.shift_operator(lat, m * dl)).max()
        for m in range(-n, n + 1)
    )
    ok = group <= 1e-12 and stone <= 1e-10
    report(4, "shift group and Stone relation", ok, f"group {group:.2e} (<=1e-12), Stone {stone:.2e} (<=1e-10)")
    assert ok


# fixed by a brute-force calibration: the double-precision residual of a centered
# sigma = 8 delta packet at 2M = 256 sits near 1.3e-13
COMMUTATOR_THRESHOLD = 1e-12


def test_ac05_weak_commutator(report):
    lat = bauer.EnergyLattice(128, 1.0)
    r256 = bauer.commutator_residual(lat, bauer.gaussian_packet(lat, 0.0, 8.0))
    sweep = [bauer.gaussian_commutator_residual_mp(bauer.EnergyLattice(m, 1.0), 0.0, 8.0) for m in (64, 128, 256)]
    mono = all(b < a for a, b in zip(sweep, sweep[1:]))
    ok = r256 <= COMMUTATOR_THRESHOLD and mono
    report(5, "weak canonical commutator", ok,
           f"2M=256 residual {r256:.2e} (<={COMMUTATOR_THRESHOLD:.0e}); 2M=128/256/512 "
           f"{float(sweep[0]):.1e} > {float(sweep[1]):.1e} > {float(sweep[2]):.1e}")
    assert ok


def test_ac06_drift(report):
    lat = bauer.EnergyLattice(256, 1.0)
    dt = lat.time_spacing
    e0 = lat.M * lat.delta / 2
    f_pk = bauer.gaussian_packet(lat, e0, 16.0, "f")
    b_pk = bauer.gaussian_packet(lat, -e0, 16.0, "b")
    df, none_b = bauer.drift_check(lat, f_pk, dt)
    none_f, db = bauer.drift_check(lat, b_pk, dt)
    mixed = bauer.ExtendedState(lat, (f_pk.psi + b_pk.psi) / np.sqrt(2))
    dmix = bauer.total_drift(lat, mixed, dt)
    ok = (abs(df - dt) <= 1e-4 * dt and abs(db + dt) <= 1e-4 * dt and abs(dmix) <= 1e-6
          and none_b is None and none_f is None)
    report(6, "forward/backward drift", ok,
           f"|df/dt-1| {abs(df / dt - 1):.1e}, |db/dt+1| {abs(db / dt + 1):.1e} (<=1e-4), mixed {abs(dmix):.1e} (<=1e-6)")
    assert ok


def test_ac07_abl(rng, report):
    norm = swap = 0.0
    for i in range(200):
        d = 2 + i % 2
        H = qcore.random_hermitian(d, rng)
        psi, phi, basis = qcore.random_state(d, rng), qcore.random_state(d, rng), qcore.random_basis(d, rng)
        p = tsvf.abl_probability(tsvf.TwoStateVector(psi, phi, H, 0.0, 1.3), basis, 0.45)
        q = tsvf.abl_distribution(phi, 1.3, psi, 0.0, H, basis, 0.45)
        norm = max(norm, abs(p.sum() - 1))
        swap = max(swap, np.abs(p - q).max())
    s = 1 / np.sqrt(2)
    hand = tsvf.abl_probability(
        tsvf.TwoStateVector([1, 0], [1, 0], np.zeros((2, 2))), [np.array([s, s]), np.array([s, -s])], 0.5
    )
    hand_err = np.abs(hand - 0.5).max()
    ok = norm <= 1e-12 and hand_err <= 1e-12 and swap <= 1e-12
    report(7, "ABL rule", ok, f"normalization {norm:.1e}, |0>/x/|0> {hand_err:.1e}, swap {swap:.1e} (all <=1e-12)")
    assert ok


def test_ac08_fpf_equivalences(rng, report):
    born = abl = fact = 0.0
    g2 = fpf.ContourGrid((0.0, 0.8))
    g3 = fpf.ContourGrid((0.0, 0.35, 1.2))
    g4 = fpf.ContourGrid((0.0, 0.3, 0.9, 1.4))
    g4_past = fpf.ContourGrid((0.0, 0.3, 0.9))
    g4_future = fpf.ContourGrid((0.3, 0.9, 1.4))
    for i in range(100):
        d = 2 + i % 2
        H = qcore.random_hermitian(d, rng)
        psi, phi = qcore.random_state(d, rng), qcore.random_state(d, rng)
        A, B = qcore.random_basis(d, rng), qcore.random_basis(d, rng)
        m = fpf.measure_distribution(fpf.FamilySpec(g2, ((psi,), A), H))[0]
        u = qcore.matexp_hermitian(H, 0.8)
        born = max(born, np.abs(m - [abs(np.vdot(k, u @ psi)) ** 2 for k in A]).max())
        m3 = fpf.measure_distribution(fpf.FamilySpec(g3, ((psi,), A, (phi,)), H))[0, :, 0]
        ref = tsvf.abl_probability(tsvf.TwoStateVector(psi, phi, H, 0.0, 1.2), A, 0.35)
        abl = max(abl, np.abs(m3 - ref).max())
        m4 = fpf.measure_distribution(fpf.FamilySpec(g4, ((psi,), A, B, (phi,)), H))[0, :, :, 0]
        for k in range(d):
            # fixed point B[k] at the interior time closes the past and opens the future
            past = fpf.measure_distribution(fpf.FamilySpec(g4_past, ((psi,), A, (B[k],)), H))[0, :, 0]
            fact = max(fact, np.abs(m4[:, k] - m4[:, k].sum() * past).max())
        for k in range(d):
            future = fpf.measure_distribution(fpf.FamilySpec(g4_future, ((A[k],), B, (phi,)), H))[0, :, 0]
            fact = max(fact, np.abs(m4[k, :] - m4[k, :].sum() * future).max())
    ok = born <= 1e-12 and abl <= 1e-12 and fact <= 1e-12
    report(8, "FPF Born/ABL equivalences", ok,
           f"Born {born:.1e}, ABL {abl:.1e}, four-point factorization {fact:.1e} (all <=1e-12)")
    assert ok


def test_ac09_fp_time_operator(report):
    lat = bauer.EnergyLattice(32, 1.0)
    t_fp = fpf.fp_time_operator(lat)
    worst = 0.0
    for n, t in zip(lat.indices, lat.times):
        v = fpf.lattice_fixed_point(lat, int(n))
        worst = max(worst, np.abs(t_fp @ v - t * v).max())
    herm = np.abs(t_fp - t_fp.conj().T).max()
    ok = worst <= 1e-12 and herm <= 1e-12
    report(9, "fixed-point time operator", ok, f"eigenrelation {worst:.1e}, hermiticity {herm:.1e} (<=1e-12)")
    assert ok


def test_ac10_decoherent_histories(rng, report):
    d = 3
    H = qcore.random_hermitian(d, rng)
    _, v = np.linalg.eigh(H)
    energy = [v[:, i] for i in range(d)]
    times = (0.0, 0.4, 1.0, 1.7)
    fam = dhist.ProjectorFamily(times, (energy,) * 3, H, qcore.random_state(d, rng))
    _, off = dhist.check_decoherence(fam)
    mk = dhist.markov_probabilities(fam)
    markov = max(abs(mk[l.outcomes] - abs(dhist.overlap_chain(fam, l)) ** 2) for l in fam.labels())
    add = 0.0
    for lab in fam.labels():
        for k in (1, 2, 3):
            fine = sum(
                dhist.history_probability(fam, tuple(m if i == k - 1 else a for i, a in enumerate(lab.outcomes)))
                for m in (0, 1)
            )
            add = max(add, abs(dhist.coarse_grained_probability(fam, k, (0, 1), lab) - fine))
    total = 0.0
    for fam_ in (fam, dhist.ProjectorFamily(times, tuple(qcore.random_basis(d, rng) for _ in range(3)), H, fam.psi1)):
        total = max(total, abs(dhist.decoherence_matrix(fam_).sum() - 1))
    ok = off <= 1e-12 and markov <= 1e-10 and add <= 1e-11 and total <= 1e-10
    report(10, "decoherent histories", ok,
           f"max off-diagonal {off:.1e} (<=1e-12), Markov {markov:.1e} (<=1e-10), "
           f"additivity {add:.1e} (<=1e-11), sum D - 1 {total:.1e} (<=1e-10)")
    assert ok


def test_ac11_mts(rng, report):
    loop = 0.0
    for i in range(20):
        d = 2 + i % 3
        u = qcore.random_unitary(d, rng)
        loop = max(loop, abs(tsvf.mts_contract(tsvf.identity_loop_state(d), [u]) - np.trace(u)))
    echo = 0.0
    for d in (2, 3, 5):
        psi, basis = qcore.random_state(d, rng), qcore.random_basis(d, rng)
        ref = np.array([abs(np.vdot(b, psi)) ** 2 for b in basis])
        echo = max(echo, np.abs(tsvf.transaction_echo(psi, basis) - ref).max())
    ok = loop <= 1e-12 and echo <= 1e-14
    report(11, "multiple-time states", ok, f"loop vs trace {loop:.1e} (<=1e-12), echo vs Born {echo:.1e} (<=1e-14)")
    assert ok


def test_ac12_cli_determinism(tmp_path, report):
    runs = {"qubit_abl.json": "abl", "pw_clock.json": "pw-evolve", "bauer_lattice.json": "bauer-check"}
    same = []
    for name, sub in runs.items():
        outs = []
        for rep in range(2):
            out = tmp_path / f"{rep}_{name}"
            assert main([sub, "--spec", str(SPECS / name), "--out", str(out)]) == 0
            outs.append(strip_wall_time(out.read_text()).encode())
        same.append(outs[0] == outs[1])
    ok = all(same)
    report(12, "CLI determinism", ok, f"byte-identical reruns {sum(same)}/3 sample specs")
    assert ok
