"""Built-in invariant suite run by ``qalab verify``.

Every check is a small-N, seeded experiment returning ``(ok, detail)``.
"""

from __future__ import annotations

import tempfile
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import bounds, schedules
from .config import parse_config
from .dynamics import Propagator, evolve, initial_ground_state
from .errors import CapacityError, ParseError
from .harness import run_anneal
from .ising import (DriverKind, HamiltonianView, materialize_dense, parse_instance,
                    potential_diagonal, random_instance)
from .oracle import enumerate_classical, success_probability
from .spectra import adiabatic_estimate, full_spectrum

CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = []


def check(name):
    def register(fn):
        CHECKS.append((name, fn))
        return fn
    return register


def _rng(tag: int) -> np.random.Generator:
    return np.random.default_rng(20240 + tag)


@check("ising.flip_symmetry")
def _flip_symmetry():
    rng = _rng(1)
    inst = random_instance(5, rng, orders=(1, 2, 3))
    full = inst.dim - 1
    for t in inst.terms:
        diag = potential_diagonal(type(inst)(5, (t,)))
        flipped = diag[np.arange(inst.dim) ^ full]
        expect = diag if t.order % 2 == 0 else -diag
        if not np.array_equal(flipped, expect):
            return False, f"term {t.sites} breaks the all-flip rule"
    return True, f"{len(inst.terms)} terms"


@check("ising.nonnegative_irreducible")
def _nonneg_irreducible():
    rng = _rng(2)
    for n in range(1, 7):
        inst = random_instance(n, rng)
        e_max = enumerate_classical(inst).e_max
        for driver in DriverKind:
            mat = -materialize_dense(HamiltonianView.from_instance(inst, driver, 0.05))
            mat[np.diag_indices_from(mat)] += e_max
            if mat.min() < -1e-12:
                return False, f"negative entry at N={n} ({driver.value})"
            n_comp, _ = connected_components(mat - np.diag(np.diag(mat)) > 0, directed=False)
            if n_comp != 1:
                return False, f"{n_comp} components at N={n}"
    return True, "N=1..6, both drivers"


@check("ising.apply_matches_dense")
def _apply_dense():
    rng = _rng(3)
    worst = 0.0
    for n in range(1, 9):
        inst = random_instance(n, rng, orders=(1, 2, 3))
        for driver in DriverKind:
            h = HamiltonianView.from_instance(inst, driver, rng.uniform(0.1, 2))
            v = rng.normal(size=h.dim) + 1j * rng.normal(size=h.dim)
            ref = materialize_dense(h) @ v
            worst = max(worst, np.linalg.norm(h.apply(v) - ref) / np.linalg.norm(ref))
    return worst <= 1e-12, f"max rel err {worst:.2e}"


@check("oracle.matches_diagonal")
def _oracle_diag():
    rng = _rng(4)
    for n in range(1, 13):
        inst = random_instance(n, rng)
        diag = potential_diagonal(inst)
        s = enumerate_classical(inst)
        if s.e_min != diag.min() or s.e_max != diag.max():
            return False, f"extremes differ at N={n}"
        if s.ground_states[0] != int(diag.argmin()):
            return False, f"ground state differs at N={n}"
    return True, "N=1..12 exact"


@check("oracle.success_probability_invariance")
def _success_invariance():
    rng = _rng(5)
    inst = parse_instance("n 3\nterm 1 0 1\nterm 1 1 2")
    s = enumerate_classical(inst)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    p0 = success_probability(psi, s)
    p1 = success_probability(psi * np.exp(0.7j), s)
    p2 = success_probability(psi, type(s)(s.n_sites, s.e_min, s.e_max, s.ground_states[::-1], s.max_states))
    return abs(p0 - p1) < 1e-14 and abs(p0 - p2) < 1e-14, f"p={p0:.6f}"


@check("spectra.trace_and_simple_ground")
def _trace_gap():
    rng = _rng(6)
    for n in range(1, 11):
        inst = random_instance(n, rng)
        for g in (1e-3, 1e-1, 10.0):
            h = HamiltonianView.from_instance(inst, DriverKind.TRANSVERSE, g)
            vals = full_spectrum(h, want_vectors=False).eigenvalues
            tr = h.potential_diag.sum()
            if abs(vals.sum() - tr) > 1e-9 * max(1.0, np.abs(vals).sum()):
                return False, f"trace mismatch N={n} gamma={g}"
            if not vals[1] - vals[0] > 0:
                return False, f"degenerate ground N={n} gamma={g}"
    return True, "N=1..10, gamma in {1e-3, 0.1, 10}"


@check("spectra.numerator_bound")
def _numerator():
    rng = _rng(7)
    for n in range(2, 7):
        inst = random_instance(n, rng)
        for driver in DriverKind:
            h = HamiltonianView.from_instance(inst, driver, 0.3)
            est = adiabatic_estimate(h, -1.0)
            k = driver.n_generator_terms(n)
            if est.max_numerator > k * (1 + 1e-10):
                return False, f"N={n} {driver.value}: {est.max_numerator} > {k}"
    return True, "both drivers, N=2..6"


@check("bounds.hopf_fuzz")
def _hopf_fuzz():
    rng = _rng(8)
    for _ in range(100):
        a = rng.uniform(0.01, 1.0, size=(8, 8))
        res = bounds.hopf_check(a + a.T)
        if not res.passed:
            return False, f"margin {res.margin}"
    return True, "100 symmetric positive 8x8"


@check("bounds.chain_asymptotic")
def _chain():
    rng = _rng(9)
    count = 0
    for n in range(2, 7):
        for _ in range(5):
            inst = random_instance(n, rng)
            s = enumerate_classical(inst)
            for g in (1e-3, 1e-2, 1e-1):
                rep = bounds.gap_bound_check(HamiltonianView.from_instance(inst, DriverKind.TRANSVERSE, g), s)
                count += 1
                if not rep.passed:
                    return False, f"N={n} gamma={g}: {rep.failures()}"
    return True, f"{count} reports"


@check("bounds.kappa_scaling")
def _kappa_scaling():
    rng = _rng(10)
    inst = random_instance(3, rng)
    s = enumerate_classical(inst)
    scaled = []
    for g in (1e-4, 1e-3, 1e-2):
        m = bounds.positive_power(HamiltonianView.from_instance(inst, DriverKind.TRANSVERSE, g), s.e_max, 3)
        scaled.append(bounds.kappa_exact(m) * g**3)
    ratio = max(scaled) / min(scaled)
    return ratio < 1.1, f"kappa*gamma^N spread {ratio:.4f}"


@check("schedules.monotone_and_continuous")
def _schedules():
    sched = [schedules.PowerLaw(1e-3, 3, 2.0), schedules.ExtendedPowerLaw(1e-3, 4, 2.0),
             schedules.Linear(2.0, 5.0), schedules.Exponential(2.0, 0.3), schedules.Constant(1.0)]
    ts = np.concatenate([[0.0], np.logspace(-3, 6, 400)])
    for s in sched:
        vals = np.array([s.gamma(t) for t in ts])
        if np.any(np.diff(vals) > 0):
            return False, f"{s.kind} increases"
    for s in sched[:2]:
        tc = s.t_cap
        if abs(s.gamma(tc * (1 + 1e-15)) - s.gamma_cap) > 1e-12:
            return False, f"{s.kind} jumps at t_cap"
    return True, "5 kinds"


@check("schedules.calibration_closure")
def _closure():
    for n, a, delta in ((2, 0.25, 0.1), (4, 1e-3, 0.03), (6, 1e-6, 0.5)):
        alpha = schedules.calibrate_alpha(schedules.AdiabaticityTarget(delta), a, n)
        s = schedules.PowerLaw(alpha, n, 1.0)
        for mult in (2.0, 10.0, 100.0):
            env = schedules.adiabaticity_envelope(s, a, n, s.t_cap * mult)
            if abs(env / delta - 1) > 1e-10:
                return False, f"N={n}: envelope {env} vs delta {delta}"
    return True, "envelope == delta beyond the cap"


@check("dynamics.norm_and_energy_bracket")
def _norm_energy():
    inst = random_instance(3, _rng(11))
    s = enumerate_classical(inst)
    traj = evolve(inst, DriverKind.TRANSVERSE, schedules.Linear(2.0, 20.0), 20.0, 0.01, samples=21, summary=s)
    drift = traj.max_norm_drift
    ok = drift <= 1e-8 and min(traj.residual_energy) >= -1e-9
    total = np.array(traj.fidelity) + np.array(traj.excitation)
    ok = ok and np.abs(total - 1).max() <= 1e-8
    return ok, f"drift {drift:.1e}"


@check("dynamics.frozen_ground_state")
def _frozen():
    inst = random_instance(3, _rng(12))
    traj = evolve(inst, DriverKind.TRANSVERSE, schedules.Constant(0.7), 50.0, 0.05, samples=11)
    worst = 1 - min(traj.fidelity)
    return worst <= 1e-8, f"max infidelity {worst:.1e}"


@check("dynamics.reversibility")
def _reverse():
    inst = random_instance(4, _rng(13))
    base = HamiltonianView.from_instance(inst, DriverKind.TRANSVERSE, 0.0)
    sched = schedules.Constant(0.9)
    psi0 = initial_ground_state(base.with_gamma(1.3))
    prop = Propagator(base.potential_diag, DriverKind.TRANSVERSE, sched, dense_threshold=0)
    psi = prop.propagate(psi0, 0.0, 5.0, 100)
    back = prop.propagate(psi, 5.0, 0.0, 100)
    err = float(np.linalg.norm(back - psi0))
    return err <= 1e-6, f"round-trip error {err:.1e}"


@check("harness.parse_error_path")
def _parse_error():
    try:
        parse_instance("n 3\nterm 0.5 0 0 1\n")
    except ParseError as exc:
        return exc.line == 2, str(exc)
    return False, "duplicate site accepted"


@check("harness.capacity_path")
def _capacity():
    inst = random_instance(5, _rng(14))
    try:
        materialize_dense(HamiltonianView.from_instance(inst, DriverKind.TRANSVERSE, 1.0), limit=16)
    except CapacityError as exc:
        return True, str(exc)
    return False, "no capacity error"


@check("harness.deterministic_anneal")
def _determinism():
    inst = random_instance(3, _rng(15))
    outputs = []
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "inst.txt"
        path.write_text(inst.to_text())
        text = ("[run]\ninstance = inst.txt\ndt = 0.05\nsamples = 5\nseed = 3\n"
                "[schedule]\nschedule = power\ngamma_final = 1.5\n[sweep]\ndelta = 0.3, 0.1\n")
        for k in range(2):
            cfg = parse_config(text, base_dir=Path(tmp)).validate()
            run_anneal(cfg, Path(tmp) / f"out{k}")
            outputs.append((Path(tmp) / f"out{k}" / "summary.csv").read_bytes())
    return outputs[0] == outputs[1], f"{len(outputs[0])} bytes"


def run_all(select: str = "") -> list[tuple[str, bool, str]]:
    results = []
    for name, fn in CHECKS:
        if select and select not in name:
            continue
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results

