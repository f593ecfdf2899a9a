"""One function per subcommand; each fills a ResultRecord from a validated spec."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .. import bauer, dhist, fpf, pw, qcore, tsvf
from .records import ResultRecord, Table
from .spec import ModelSpec, SpecError, _matrix, param, require_complete

# contract tolerances for identities that hold to machine precision
EXACT = 1e-12
FIDELITY = 1e-8


def _clock(spec: ModelSpec) -> pw.ClockModel:
    if spec.clock is None:
        raise SpecError("clock", f"experiment {spec.experiment!r} needs a clock section")
    return pw.build_ideal_clock(spec.clock["d_C"], spec.clock["omega"], spec.clock["centered"])


def _times(spec: ModelSpec, n_min: int = 2) -> list[float]:
    times = param(spec, "times", kind=list)
    if len(times) < n_min or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in times):
        raise SpecError("experiment.params.times", f"expected a list of at least {n_min} numbers")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise SpecError("experiment.params.times", "times must be strictly increasing")
    return [float(t) for t in times]


def _basis_names(spec: ModelSpec, count: int) -> list[str]:
    names = param(spec, "bases", kind=list)
    if len(names) != count or not all(isinstance(n, str) for n in names):
        raise SpecError("experiment.params.bases", f"expected {count} basis names")
    return names


def _label_str(labels_per_time, idx) -> str:
    return "/".join(labels_per_time[i][k] for i, k in enumerate(idx))


def pw_evolve(spec: ModelSpec, rng, rec: ResultRecord) -> None:
    clock = _clock(spec)
    tol = spec.tolerances["check"]
    Psi = pw.history_state(clock, spec.hamiltonian, spec.initial_state)
    H_T = pw.total_hamiltonian(clock, spec.hamiltonian)
    fids = []
    for k, t in enumerate(clock.time_grid):
        got = pw.condition_on_clock(Psi, clock, k)
        ref = qcore.matexp_hermitian(spec.hamiltonian, t) @ spec.initial_state
        fids.append(qcore.fidelity(got, ref))
    comm = pw.is_commensurate(clock, spec.hamiltonian)
    res = pw.constraint_residual(H_T, Psi)
    rec.outputs.update(commensurate=comm, min_fidelity=min(fids))
    rec.residuals.update(constraint=res, max_infidelity=1 - min(fids))
    rec.checks["fidelity"] = 1 - min(fids) <= tol
    if comm:
        rec.checks["constraint"] = res <= tol
    rec.tables["fidelity"] = Table(("t", "fidelity"), list(zip(clock.time_grid.tolist(), fids)))


def pw_constraint(spec: ModelSpec, rng, rec: ResultRecord) -> None:
    clock = _clock(spec)
    tol = spec.tolerances["check"]
    inter = None
    if spec.interaction is not None:
        inter = pw.InteractionSpec(spec.interaction["matrix"], spec.interaction["time_diagonal"])
    H_T = pw.total_hamiltonian(clock, spec.hamiltonian, inter)
    space = pw.kinematical_space(clock, spec.dim)
    phys = pw.physical_states(H_T, space=space)
    worst = max((pw.constraint_residual(H_T, s) for s in phys), default=0.0)
    rec.outputs["physical_dim"] = len(phys)
    rec.residuals["physical_constraint"] = worst
    rec.checks["physical_constraint"] = worst <= tol

    comm = pw.is_commensurate(clock, spec.hamiltonian)
    rec.outputs["commensurate"] = comm
    sizes = param(spec, "eom_sizes", [clock.d_C, 2 * clock.d_C, 4 * clock.d_C], kind=list)
    eom = []
    for d in sizes:
        c = pw.build_ideal_clock(int(d), clock.omega, clock.centered)
        psi = pw.history_state(c, spec.hamiltonian, spec.initial_state)
        eom.append(float(pw.verify_nonlocal_eom(psi, c, spec.hamiltonian).max()))
    ratios = [a / b for a, b in zip(eom, eom[1:])]
    rec.outputs["eom_ratios"] = ratios
    rec.tables["eom"] = Table(("d_C", "residual"), list(zip([int(d) for d in sizes], eom)))
    if comm:
        rec.checks["eom_second_order"] = all(r >= 3.5 for r in ratios)

    if inter is not None:
        kern = pw.interaction_kernel(clock, inter)
        rows = [
            (float(clock.time_grid[k]), float(clock.time_grid[l]), float(np.linalg.norm(kern[k, l])))
            for k in range(clock.d_C)
            for l in range(clock.d_C)
        ]
        rec.tables["kernel"] = Table(("t_k", "t_l", "norm"), rows)
        if inter.time_diagonal:
            psi = pw.history_state(clock, spec.hamiltonian, spec.initial_state)
            diff = np.abs(
                pw.verify_nonlocal_eom(psi, clock, spec.hamiltonian, inter)
                - pw.verify_local_eom(psi, clock, spec.hamiltonian, inter)
            ).max()
            rec.residuals["local_vs_nonlocal"] = float(diff)
            rec.checks["local_vs_nonlocal"] = diff <= tol


def dual_clock(spec: ModelSpec, rng, rec: ResultRecord) -> None:
    clock = _clock(spec)
    h_f, h_b = pw.dual_constraint_hamiltonians(clock, clock, spec.hamiltonian)
    comm = float(np.linalg.norm(qcore.commutator(h_f, h_b)))
    rec.residuals["constraint_commutator"] = comm
    rec.checks["constraints_commute"] = comm <= EXACT * 100
    states = pw.dual_constraint_states(clock, clock, spec.hamiltonian)
    rec.outputs["joint_null_dim"] = len(states)
    rec.checks["null_space_nonempty"] = len(states) > 0
    if not states:
        return
    coef = rng.normal(size=len(states)) + 1j * rng.normal(size=len(states))
    Psi = pw.KinematicalState(states[0].space, sum(c * s.psi for c, s in zip(coef, states))).normalized()
    p0 = pw.condition_on_clocks(Psi, clock, clock, 0, 0)
    rows = []
    worst = worst_diag = 0.0
    for k, tk in enumerate(clock.time_grid):
        for l, tl in enumerate(clock.time_grid):
            got = pw.condition_on_clocks(Psi, clock, clock, k, l)
            ref = qcore.matexp_hermitian(spec.hamiltonian, tk - tl) @ p0
            inf = 1 - qcore.fidelity(got, ref)
            rows.append((float(tk), float(tl), 1 - inf))
            worst = max(worst, inf)
            if k == l:
                worst_diag = max(worst_diag, 1 - qcore.fidelity(got, p0))
    rec.residuals.update(max_infidelity=worst, diagonal_infidelity=worst_diag)
    rec.checks["two_branch_conditioning"] = worst <= FIDELITY
    rec.checks["diagonal_returns_initial"] = worst_diag <= FIDELITY
    rec.tables["conditioning"] = Table(("t_f", "t_b", "fidelity"), rows)


def bauer_check(spec: ModelSpec, rng, rec: ResultRecord) -> None:
    M = param(spec, "M", 32, kind=int)
    delta = param(spec, "delta", 1.0, kind=float)
    n_pairs = param(spec, "n_pairs", 20, kind=int)
    lat = bauer.EnergyLattice(M, delta)
    n = lat.size
    eye = np.eye(n)
    group = 0.0
    for _ in range(n_pairs):
        m1, m2 = (int(x) for x in rng.integers(-n, n + 1, size=2))
        d1, d2 = bauer.shift_operator(lat, m1 * delta), bauer.shift_operator(lat, m2 * delta)
        d12 = bauer.shift_operator(lat, (m1 + m2) * delta)
        dm = bauer.shift_operator(lat, -m1 * delta)
        group = max(
            group,
            np.abs(d1 @ d1.conj().T - eye).max(),
            np.abs(d1.conj().T @ d1 - eye).max(),
            np.abs(d1.conj().T - dm).max(),
            np.abs(dm @ d1 - eye).max(),
            np.abs(d1 @ d2 - d12).max(),
        )
    group = max(group, np.abs(bauer.shift_operator(lat, 0.0) - eye).max())
    t_op = bauer.time_operator(lat)
    stone = max(
        np.abs(qcore.matexp_hermitian(t_op, m * delta) - bauer.shift_operator(lat, m * delta)).max()
        for m in range(-M, M)
    )
    rec.residuals.update(shift_group=float(group), stone=float(stone))
    rec.checks["shift_group"] = group <= EXACT
    rec.checks["stone_relation"] = stone <= 1e-10

    sigma = param(spec, "sigma", 8.0, kind=float)
    sweep = param(spec, "sweep_M", [M, 2 * M, 4 * M], kind=list)
    rows = []
    for m in sweep:
        lm = bauer.EnergyLattice(int(m), delta)
        rows.append((2 * int(m), bauer.commutator_residual(lm, bauer.gaussian_packet(lm, 0.0, sigma * delta))))
    rec.tables["commutator"] = Table(("size", "residual"), rows)

    drift_m = param(spec, "drift_M", 4 * M, kind=int)
    drift_sigma = param(spec, "drift_sigma", 2 * sigma, kind=float)
    ld = bauer.EnergyLattice(drift_m, delta)
    dt = ld.time_spacing
    e0 = drift_m * delta / 2
    df, _ = bauer.drift_check(ld, bauer.gaussian_packet(ld, e0, drift_sigma * delta, "f"), dt)
    _, db = bauer.drift_check(ld, bauer.gaussian_packet(ld, -e0, drift_sigma * delta, "b"), dt)
    mixed = bauer.ExtendedState(
        ld,
        (bauer.gaussian_packet(ld, e0, drift_sigma * delta, "f").psi
         + bauer.gaussian_packet(ld, -e0, drift_sigma * delta, "b").psi) / np.sqrt(2),
    )
    dmix = bauer.total_drift(ld, mixed, dt)
    rec.outputs.update(dt=dt, drift_f=df, drift_b=db, drift_mixed=dmix)
    rec.residuals.update(drift_f=abs(df - dt) / dt, drift_b=abs(db + dt) / dt)
    rec.checks["drift_forward"] = abs(df - dt) <= 1e-4 * dt
    rec.checks["drift_backward"] = abs(db + dt) <= 1e-4 * dt
    rec.checks["drift_mixed"] = abs(dmix) <= 1e-6


def _tsv(spec: ModelSpec) -> tsvf.TwoStateVector:
    if spec.post_state is None:
        raise SpecError("post_state", f"experiment {spec.experiment!r} needs a post_state")
    return tsvf.TwoStateVector(
        spec.initial_state, spec.post_state, spec.hamiltonian, param(spec, "t1", 0.0, float), param(spec, "t2", 1.0, float)
    )


def abl(spec: ModelSpec, rng, rec: ResultRecord) -> None:
    tsv = _tsv(spec)
    name = param(spec, "basis", kind=str)
    basis = require_complete(spec, name)
    t = param(spec, "t", (tsv.t1 + tsv.t2) / 2, float)
    p = tsvf.abl_probability(tsv, basis.vectors, t)
    rec.outputs["probabilities"] = dict(zip(basis.labels, p.tolist()))
    rec.residuals["normalization"] = abs(p.sum() - 1)
    rec.checks["normalization"] = abs(p.sum() - 1) <= spec.tolerances["check"]
    rec.tables["abl"] = Table(("outcome", "probability"), list(zip(basis.labels, p.tolist())))


def weak_value(spec: ModelSpec, rng, rec: ResultRecord) -> None:
    tsv = _tsv(spec)
    try:
        obs = _matrix(param(spec, "observable", kind=list), "experiment.params.observable", spec.dim)
    except ValueError as exc:
        raise SpecError("experiment.params.observable", str(exc)) from None
    t = param(spec, "t", (tsv.t1 + tsv.t2) / 2, float)
    w = tsvf.weak_value(tsv, obs, t)
    ident = tsvf.weak_value(tsv, np.eye(spec.dim), t)
    rec.outputs["weak_value"] = w
    rec.residuals["identity"] = abs(ident - 1)
    rec.checks["identity_weak_value"] = abs(ident - 1) <= spec.tolerances["check"]


def dhist_run(spec: ModelSpec, rng, rec: ResultRecord) -> None:
    times = _times(spec)
    names = _basis_names(spec, len(times) - 1)
    bases = [require_complete(spec, n) for n in names]
    fam = dhist.ProjectorFamily(tuple(times), tuple(b.vectors for b in bases), spec.hamiltonian, spec.initial_state)
    cap = param(spec, "cap", dhist.DEFAULT_LABEL_CAP, kind=int)
    dmat = dhist.decoherence_matrix(fam, cap)
    labels = list(fam.labels())
    weights = np.diag(dmat).real
    off = dmat - np.diag(np.diag(dmat))
    max_off = float(np.abs(off).max(initial=0.0))
    decoherent = max_off <= EXACT
    markov = dhist.markov_probabilities(fam)
    mk = max(abs(markov[l.outcomes] - w) for l, w in zip(labels, weights))
    herm = float(np.abs(dmat - dmat.conj().T).max())
    norm = abs(dmat.sum() - 1)
    names_per_time = [b.labels for b in bases]
    strs = [_label_str(names_per_time, l.outcomes) for l in labels]
    rec.outputs.update(decoherent=decoherent, max_offdiag=max_off)
    if decoherent:
        rec.outputs["probabilities"] = dict(zip(strs, weights.tolist()))
        rec.checks["probabilities_sum"] = abs(weights.sum() - 1) <= spec.tolerances["check"]
    rec.residuals.update(markov_vs_overlap=float(mk), hermitian_symmetry=herm, functional_sum=float(norm))
    rec.checks["markov_vs_overlap"] = mk <= 1e-10
    rec.checks["hermitian_symmetry"] = herm <= EXACT
    rec.checks["functional_sum"] = norm <= 1e-10
    rec.tables["histories"] = Table(("history", "weight"), list(zip(strs, weights.tolist())))


def fpf_measure(spec: ModelSpec, rng, rec: ResultRecord) -> None:
    times = _times(spec)
    has_post = spec.post_state is not None
    n_inner = len(times) - (2 if has_post else 1)
    if n_inner < 1:
        raise SpecError("experiment.params.times", "need at least one measured time")
    names = _basis_names(spec, n_inner)
    bases = [require_complete(spec, n) for n in names]
    sets = [(spec.initial_state,)] + [b.vectors for b in bases] + ([(spec.post_state,)] if has_post else [])
    fam = fpf.FamilySpec(fpf.ContourGrid(tuple(times)), tuple(sets), spec.hamiltonian)
    dist = fpf.measure_distribution(fam)
    inner = dist.reshape([len(b.vectors) for b in bases])
    label_sets = [b.labels for b in bases]
    rows = [(_label_str(label_sets, idx), float(inner[idx])) for idx in np.ndindex(inner.shape)]
    rec.outputs["measures"] = dict(rows)
    rec.residuals["normalization"] = abs(dist.sum() - 1)
    rec.checks["normalization"] = abs(dist.sum() - 1) <= spec.tolerances["check"]
    if len(times) == 2:
        u = qcore.matexp_hermitian(spec.hamiltonian, times[1] - times[0])
        born = np.array([abs(np.vdot(k, u @ spec.initial_state)) ** 2 for k in bases[0].vectors])
        delta = float(np.abs(inner - born).max())
        rec.residuals["born_delta"] = delta
        rec.checks["born_equivalence"] = delta <= EXACT
    if len(times) == 3 and has_post:
        tsv = tsvf.TwoStateVector(spec.initial_state, spec.post_state, spec.hamiltonian, times[0], times[2])
        ref = tsvf.abl_probability(tsv, bases[0].vectors, times[1])
        delta = float(np.abs(inner - ref).max())
        rec.residuals["abl_delta"] = delta
        rec.checks["abl_equivalence"] = delta <= EXACT
    rec.tables["measures"] = Table(("history", "measure"), rows)


def mts_trace(spec: ModelSpec, rng, rec: ResultRecord) -> None:
    d = spec.dim
    n = param(spec, "n_random", 20, kind=int)
    us = [qcore.matexp_hermitian(spec.hamiltonian, param(spec, "t", 1.0, float))]
    us += [qcore.random_unitary(d, rng) for _ in range(n)]
    loop = tsvf.identity_loop_state(d)
    trace_delta = max(abs(tsvf.mts_contract(loop, [u]) - np.trace(u)) for u in us)
    four = tsvf.entangled_four_time_state(d)
    four_delta = 0.0
    for u, w in zip(us, us[1:]):
        ref = np.einsum("abcd,ba,dc->", four.dense(), u, w)
        four_delta = max(four_delta, abs(tsvf.mts_contract(four, [u, w]) - ref))
    basis = qcore.random_basis(d, rng)
    echo = tsvf.transaction_echo(spec.initial_state, basis)
    born = np.array([abs(np.vdot(b, spec.initial_state)) ** 2 for b in basis])
    echo_delta = float(np.abs(echo - born).max())
    rec.outputs["trace"] = np.trace(us[0])
    rec.residuals.update(loop_trace=float(trace_delta), four_time=float(four_delta), echo_born=echo_delta)
    rec.checks["loop_trace"] = trace_delta <= EXACT
    rec.checks["four_time_oracle"] = four_delta <= EXACT
    rec.checks["echo_born"] = echo_delta <= 1e-14


def equiv_suite(spec: ModelSpec, rng, rec: ResultRecord) -> None:
    n = param(spec, "n_instances", 50, kind=int)
    tol = min(spec.tolerances["check"], EXACT)
    deltas = dict.fromkeys(
        ["born_measure", "born_echo", "abl_measure", "abl_swap", "abl_normalization",
         "weak_linearity", "four_point_factorization", "dhist_markov", "loop_trace"],
        0.0,
    )
    grid2 = fpf.ContourGrid((0.0, 0.7))
    grid3 = fpf.ContourGrid((0.0, 0.4, 1.1))
    grid4 = fpf.ContourGrid((0.0, 0.3, 0.8, 1.3))
    grid4_past = fpf.ContourGrid((0.0, 0.3, 0.8))
    for i in range(n):
        d = 2 + i % 2
        H = qcore.random_hermitian(d, rng)
        psi, phi = qcore.random_state(d, rng), qcore.random_state(d, rng)
        A, B = qcore.random_basis(d, rng), qcore.random_basis(d, rng)

        m2 = fpf.measure_distribution(fpf.FamilySpec(grid2, ((psi,), A), H))[0]
        u = qcore.matexp_hermitian(H, 0.7)
        born = np.array([abs(np.vdot(k, u @ psi)) ** 2 for k in A])
        deltas["born_measure"] = max(deltas["born_measure"], np.abs(m2 - born).max())
        echo = tsvf.transaction_echo(qcore.normalized(u @ psi), A)
        deltas["born_echo"] = max(deltas["born_echo"], np.abs(echo - born).max())

        m3 = fpf.measure_distribution(fpf.FamilySpec(grid3, ((psi,), A, (phi,)), H))[0, :, 0]
        tsv = tsvf.TwoStateVector(psi, phi, H, 0.0, 1.1)
        p = tsvf.abl_probability(tsv, A, 0.4)
        swapped = tsvf.abl_distribution(phi, 1.1, psi, 0.0, H, A, 0.4)
        deltas["abl_measure"] = max(deltas["abl_measure"], np.abs(m3 - p).max())
        deltas["abl_swap"] = max(deltas["abl_swap"], np.abs(swapped - p).max())
        deltas["abl_normalization"] = max(deltas["abl_normalization"], abs(p.sum() - 1))

        a, b = rng.normal(size=2) + 1j * rng.normal(size=2)
        X, Y = qcore.random_hermitian(d, rng), qcore.random_hermitian(d, rng)
        lin = tsvf.weak_value(tsv, a * X + b * Y, 0.4) - a * tsvf.weak_value(tsv, X, 0.4) - b * tsvf.weak_value(tsv, Y, 0.4)
        deltas["weak_linearity"] = max(deltas["weak_linearity"], abs(lin))

        m4 = fpf.measure_distribution(fpf.FamilySpec(grid4, ((psi,), A, B, (phi,)), H))[0, :, :, 0]
        for kb in range(d):
            past = fpf.measure_distribution(fpf.FamilySpec(grid4_past, ((psi,), A, (B[kb],)), H))[0, :, 0]
            deltas["four_point_factorization"] = max(
                deltas["four_point_factorization"], np.abs(m4[:, kb] - m4[:, kb].sum() * past).max()
            )

        fam = dhist.ProjectorFamily((0.0, 0.4, 1.1), (A, B), H, psi)
        mk = dhist.markov_probabilities(fam)
        deltas["dhist_markov"] = max(
            deltas["dhist_markov"],
            max(abs(mk[l.outcomes] - dhist.history_probability(fam, l)) for l in fam.labels()),
        )

        U = qcore.random_unitary(d, rng)
        deltas["loop_trace"] = max(
            deltas["loop_trace"], abs(tsvf.mts_contract(tsvf.identity_loop_state(d), [U]) - np.trace(U))
        )
    rec.outputs["n_instances"] = n
    rec.residuals.update({k: float(v) for k, v in deltas.items()})
    rec.checks.update({k: v <= tol for k, v in deltas.items()})


EXPERIMENTS: dict[str, Callable] = {
    "pw-evolve": pw_evolve,
    "pw-constraint": pw_constraint,
    "dual-clock": dual_clock,
    "bauer-check": bauer_check,
    "abl": abl,
    "weak-value": weak_value,
    "dhist": dhist_run,
    "fpf-measure": fpf_measure,
    "mts-trace": mts_trace,
    "equiv-suite": equiv_suite,
}
