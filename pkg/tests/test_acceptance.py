"""Acceptance criteria, one test per criterion.

Each test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line. Run on its own with
``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
"""

import json
import math
import time

import numpy as np
import pytest

from conftest import H0_OSC, RHO_OSC, V_OSC, random_density
from qcb.bounds import SubspacePartition, decoupled_bounds, haar_expectation_samples, kinematical_bounds, optimal_unitary
from qcb.cli import main
from qcb.controllability import lie_closure
from qcb.dynamics import ControlModel, PulseSchedule, simulate_expectation
from qcb.matcore import expm_unitary, hermitian_eig, random_hermitian, unitarity_error
from qcb.optimizer import OptimizationConfig, gradient, multi_start, optimize
from qcb.states import DensityMatrix, Observable, evolve_state, expectation

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    lines = []

    def emit(n, ok, detail):
        lines.append(f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'}  {detail}")

    yield emit
    with capsys.disabled():
        for line in lines:
            print("\n" + line)


def test_criterion_1_lie_dimension(report):
    t = time.perf_counter()
    base = lie_closure([H0_OSC, V_OSC])
    v = V_OSC.copy()
    v[0, 1] = v[1, 0] = math.sqrt(2)
    pert = lie_closure([H0_OSC, v])
    elapsed = time.perf_counter() - t
    ok = base.dimension == 11 and not base.controllable and pert.dimension == 16 and pert.controllable and elapsed < 5
    report(1, ok, f"dims {base.dimension}/{pert.dimension} controllable {base.controllable}/{pert.controllable} in {elapsed:.2f}s")
    assert ok


def test_criterion_2_osc_bounds(report):
    t = time.perf_counter()
    a = Observable(H0_OSC)
    rho = DensityMatrix(RHO_OSC)
    b = kinematical_bounds(a, rho)
    attained = expectation(a, evolve_state(rho, optimal_unitary(a, rho, "max")))
    samples = np.concatenate([haar_expectation_samples(a, rho, 25_000, seed=s) for s in range(4)])
    elapsed = time.perf_counter() - t
    ok = (
        abs(b.lower - 1.5) <= 1e-12
        and abs(b.upper - 2.5) <= 1e-12
        and abs(attained - 2.5) <= 1e-9
        and samples.size == 100_000
        and samples.max() <= 2.5 + 1e-9
        and elapsed < 30
    )
    report(2, ok, f"bounds ({b.lower!r}, {b.upper!r}) attained {attained!r} haar max {samples.max():.6f} in {elapsed:.2f}s")
    assert ok


@pytest.mark.parametrize("case,obs", [("a", H0_OSC), ("b", V_OSC)])
def test_criterion_3_yield_floors(report, case, obs):
    t = time.perf_counter()
    model = ControlModel(H0_OSC, (V_OSC,))
    cfg = OptimizationConfig()
    assert cfg.iterations <= 200
    rep = multi_start(model, DensityMatrix(RHO_OSC), Observable(obs), cfg, n_starts=8)
    elapsed = time.perf_counter() - t
    ok = rep.yield_fraction >= 0.90 and elapsed < 120
    report(
        f"3{case}",
        ok,
        f"yield {rep.yield_fraction:.4f} (value/upper {rep.yield_of_upper:.4f}) seed {rep.seed} in {elapsed:.1f}s",
    )
    assert ok


def test_criterion_4_two_level_realizability(report):
    t = time.perf_counter()
    model = ControlModel(np.diag([0.0, 1.0]), (np.array([[0.0, 1.0], [1.0, 0.0]]),))
    assert lie_closure(model.generators).dimension == 4
    rep = optimize(model, DensityMatrix.diagonal([0.7, 0.3]), Observable(np.diag([0.0, 1.0])), OptimizationConfig(seed=0))
    elapsed = time.perf_counter() - t
    ok = abs(rep.bounds.upper - 0.7) < 1e-12 and rep.yield_fraction >= 0.99 and elapsed < 30
    report(4, ok, f"expectation {rep.final_expectation:.6f} of 0.7, yield {rep.yield_fraction:.4f} in {elapsed:.2f}s")
    assert ok


def _fd(model, pulses, rho, a, h=1e-6):
    from qcb.dynamics import propagate

    g = np.zeros_like(pulses.amplitudes)
    for idx in np.ndindex(g.shape):
        vals = []
        for sgn in (1, -1):
            amps = pulses.amplitudes.copy()
            amps[idx] += sgn * h
            u = propagate(model, PulseSchedule(pulses.t0, pulses.tF, amps))
            vals.append(expectation(a, evolve_state(rho, u)))
        g[idx] = (vals[0] - vals[1]) / (2 * h)
    return g


def test_criterion_5_invariant_suites(report):
    t = time.perf_counter()
    rng = np.random.default_rng(5)
    failures = []

    # matcore reconstruction and unitarity
    worst_rec = worst_uni = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 9))
        h = random_hermitian(n, rng)
        v, u = hermitian_eig(h)
        worst_rec = max(worst_rec, np.max(np.abs(u @ np.diag(v) @ u.conj().T - h)))
        worst_uni = max(worst_uni, unitarity_error(expm_unitary(h, rng.uniform(-5, 5))))
    if not (worst_rec < 1e-10 and worst_uni < 1e-10):
        failures.append(f"matcore {worst_rec:.1e}/{worst_uni:.1e}")

    # dynamics respects the kinematical bounds: 5 models x 20 schedules
    worst_dyn = -np.inf
    for k in range(5):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(1, 3))
        model = ControlModel(random_hermitian(n, rng), tuple(random_hermitian(n, rng) for _ in range(m)))
        rho = random_density(n, rng)
        a = Observable(random_hermitian(n, rng))
        b = kinematical_bounds(a, rho)
        for _ in range(20):
            p = PulseSchedule(0.0, rng.uniform(0.5, 5), rng.uniform(-3, 3, (int(rng.integers(1, 80)), m)))
            s = simulate_expectation(model, p, rho, a)
            worst_dyn = max(worst_dyn, s.max() - b.upper, b.lower - s.min())
    if not worst_dyn <= 1e-8:
        failures.append(f"dynamics {worst_dyn:.1e}")

    # nesting of decoupled bounds inside global bounds: 50 instances
    worst_nest = -np.inf
    for _ in range(50):
        sizes = rng.integers(1, 4, size=int(rng.integers(2, 4)))
        n = int(sizes.sum())
        perm = rng.permutation(n)
        blocks, start = [], 0
        for s in sizes:
            blocks.append(sorted(perm[start : start + s].tolist()))
            start += s
        rho = np.zeros((n, n), dtype=complex)
        for blk, p in zip(blocks, rng.dirichlet(np.ones(len(blocks)))):
            rho[np.ix_(blk, blk)] = p * random_density(len(blk), rng).matrix
        rho = DensityMatrix(rho)
        a = Observable(random_hermitian(n, rng))
        d = decoupled_bounds(a, rho, SubspacePartition(blocks))
        g = kinematical_bounds(a, rho)
        worst_nest = max(worst_nest, d.upper - g.upper, g.lower - d.lower)
    if not worst_nest <= 1e-9:
        failures.append(f"nesting {worst_nest:.1e}")

    # gradient versus central finite differences: 20 instances
    worst_grad = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 3))
        model = ControlModel(random_hermitian(n, rng), tuple(random_hermitian(n, rng) for _ in range(m)))
        p = PulseSchedule(0.0, rng.uniform(0.5, 3), rng.uniform(-1, 1, (int(rng.integers(1, 21)), m)))
        rho = random_density(n, rng)
        a = Observable(random_hermitian(n, rng))
        g = gradient(model, p, rho, a)
        fd = _fd(model, p, rho, a)
        worst_grad = max(worst_grad, np.max(np.abs(g - fd)) / np.max(np.abs(fd)))
    if not worst_grad < 1e-4:
        failures.append(f"gradient {worst_grad:.1e}")

    elapsed = time.perf_counter() - t
    if elapsed >= 180:
        failures.append(f"runtime {elapsed:.0f}s")
    ok = not failures
    report(
        5,
        ok,
        f"eig {worst_rec:.1e} unitarity {worst_uni:.1e} dyn excess {worst_dyn:.1e} "
        f"nest excess {worst_nest:.1e} grad rel {worst_grad:.1e} in {elapsed:.1f}s" + (f" FAILED: {failures}" if failures else ""),
    )
    assert ok


def test_criterion_6_cli_contract(report, capsys, tmp_path):
    t = time.perf_counter()

    def call(*argv):
        code = main(list(argv))
        out, err = capsys.readouterr()
        return code, (json.loads(out) if code == 0 else None), err

    checks = []
    code, doc, _ = call("bounds", "--model", "modified_oscillator", "--observable", "h0")
    checks.append(code == 0 and abs(doc["lower"] - 1.5) < 1e-12 and abs(doc["upper"] - 2.5) < 1e-12
                  and abs(doc["initial_expectation"] - 1.5) < 1e-12 and doc["classification"] == "AtLower")
    code, doc, _ = call("controllability", "--model", "modified_oscillator")
    checks.append(code == 0 and doc["dimension"] == 11 and doc["controllable"] is False)
    code, doc, _ = call("controllability", "--model", "perturbed_oscillator")
    checks.append(code == 0 and doc["dimension"] == 16 and doc["controllable"] is True)
    code, doc, _ = call("decompose", "--model", "modified_oscillator")
    checks.append(code == 0 and doc["blocks"] == [[1, 2, 3, 4]])
    code, doc, _ = call("decompose", "--model", "two_block_decoupled")
    checks.append(code == 0 and len(doc["blocks"]) == 2
                  and doc["decoupled_bounds"]["upper"] <= doc["global_bounds"]["upper"])
    code, doc, _ = call("optimize", "--model", "two_level_controllable", "--target-time", "10", "--steps", "100")
    checks.append(code == 0 and doc["yield_fraction"] >= 0.99)

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dim": 2, "h0": [[0, 1], [0, 0]], "controls": []}))
    code, _, err = call("controllability", "--model", str(bad))
    checks.append(code == 2 and "h0: not Hermitian" in err)
    norho = tmp_path / "norho.json"
    norho.write_text(json.dumps({"dim": 2, "h0": [[0, 0], [0, 1]], "controls": [], "observable": "h0"}))
    code, _, err = call("bounds", "--model", str(norho))
    checks.append(code == 2 and "rho0" in err)

    elapsed = time.perf_counter() - t
    ok = all(checks) and elapsed < 10
    report(6, ok, f"{sum(checks)}/{len(checks)} CLI checks in {elapsed:.2f}s")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
