"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.  Criterion 4 documents a known gap between the two-cell greedy rule
and the exhaustive optimum (see the counterexample test in test_twocell.py);
its failures are reported verbatim, not hidden.
"""

import time

import numpy as np
import pytest
from click.testing import CliRunner

from jtloadsim import (
    JTPattern,
    OptimizerConfig,
    SolveStatus,
    SymmetricPattern,
    best_signal_association,
    brute_force_minmax,
    check_monotonicity,
    check_scalability,
    expand_instance,
    expand_pattern,
    fixed_point_solve,
    generate,
    GeneratorParams,
    greedy_optimal,
    jt_minmax,
    mixed_map_bound_check,
    serialize_twocell,
    solve_pattern,
    with_uniform_demand,
)
from jtloadsim.cli import main as cli_main
from jtloadsim.cli import run_sweep, sweep_demands

from conftest import (
    random_converging_scenario,
    random_sif_pattern,
    random_raw_scenario,
    random_twocell,
)
from test_optimizer import accepting_instance, swap_completing_twocell


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")


def test_criterion_1_sif_property_suite():
    start = time.monotonic()
    rng = np.random.default_rng(1001)
    violations = 0
    for trial in range(200):
        scn = random_raw_scenario(rng)
        pattern = random_sif_pattern(rng, scn.n_cells, scn.n_ues)
        violations += len(check_scalability(scn, pattern, samples=1000, rng_seed=trial))
        violations += len(check_monotonicity(scn, pattern, samples=1000, rng_seed=trial))
    elapsed = time.monotonic() - start
    ok = violations == 0 and elapsed < 60.0
    report("1 (SIF property suite)", ok,
           f"{violations} violations over 200 scenarios x 2 checkers x 1000 samples, "
           f"{elapsed:.1f}s (< 60s)")
    assert violations == 0
    assert elapsed < 60.0


def test_criterion_2_fixed_point_uniqueness():
    start = time.monotonic()
    rng = np.random.default_rng(1002)
    worst = 0.0
    solved = 0
    while solved < 50:
        built = random_converging_scenario(rng)
        if built is None:
            continue
        scn, pattern = built
        res0 = fixed_point_solve(scn, pattern)
        res1 = fixed_point_solve(scn, pattern, initial=np.ones(scn.n_cells))
        assert res0.status is SolveStatus.CONVERGED
        assert res1.status is SolveStatus.CONVERGED
        worst = max(worst, float(np.max(np.abs(res0.load - res1.load))))
        solved += 1
    elapsed = time.monotonic() - start
    ok = worst <= 1e-6 and elapsed < 30.0
    report("2 (fixed-point uniqueness)", ok,
           f"worst zeros-vs-ones disagreement {worst:.3e} (<= 1e-6) over 50 scenarios, "
           f"{elapsed:.1f}s (< 30s)")
    assert worst <= 1e-6
    assert elapsed < 30.0


def test_criterion_3_two_cell_symmetry():
    rng = np.random.default_rng(1003)
    worst = 0.0
    checked = 0
    while checked < 100:
        inst = random_twocell(rng, m=int(rng.integers(1, 9)), load_target=(0.3, 0.6))
        if inst is None:
            continue
        pattern = SymmetricPattern(tuple(int(b) for b in rng.integers(0, 2, inst.n_pairs)))
        res = solve_pattern(inst, pattern)
        if res.status is not SolveStatus.CONVERGED:
            continue
        worst = max(worst, abs(float(res.load[0] - res.load[1])))
        checked += 1
    ok = worst <= 1e-8
    report("3 (two-cell load symmetry)", ok,
           f"worst |x1 - x2| = {worst:.3e} (<= 1e-8) over 100 instances")
    assert worst <= 1e-8


def test_criterion_4_greedy_matches_brute_force():
    start = time.monotonic()
    rng = np.random.default_rng(1004)
    counterexamples = []
    checked = 0
    while checked < 200:
        inst = random_twocell(rng, m=int(rng.integers(2, 9)))
        if inst is None:
            continue
        greedy_pattern, greedy_res = greedy_optimal(inst)
        brute_pattern, brute_eta = brute_force_minmax(inst)
        gap = greedy_res.max_load - brute_eta
        if abs(gap) > 1e-6:
            counterexamples.append((inst, greedy_pattern, greedy_res.max_load,
                                    brute_pattern, brute_eta))
        checked += 1
    elapsed = time.monotonic() - start
    ok = not counterexamples and elapsed < 300.0
    report("4 (greedy = brute force)", ok,
           f"{len(counterexamples)} counterexamples in 200 instances, {elapsed:.1f}s (< 5min)")
    if counterexamples:
        print("deviation report: greedy selection on the baseline gain of load"
              " is not optimal under the nonlinear coupling; counterexamples follow verbatim")
        for inst, gpat, geta, bpat, beta in counterexamples:
            print(f"greedy {gpat.kappa} eta={geta:.12g} "
                  f"| brute {bpat.kappa} eta={beta:.12g} | instance:")
            print(serialize_twocell(inst).rstrip())
    assert elapsed < 300.0
    assert not counterexamples, (
        f"{len(counterexamples)} counterexamples (printed verbatim above); the greedy "
        "rule evaluates the gain of load only at the no-JT baseline and misses the "
        "equilibrium shift JT itself causes - see notes in the counterexample test "
        "in test_twocell.py"
    )


def test_criterion_5_mixed_map_bound():
    rng = np.random.default_rng(1005)
    failures = 0
    for _ in range(100):
        scn = random_raw_scenario(rng)
        pattern = best_signal_association(scn)
        zeros = np.argwhere(pattern.kappa == 0.0)
        i, j = zeros[rng.integers(0, len(zeros))]
        x = rng.uniform(0.0, 2.0, scn.n_cells)
        if not mixed_map_bound_check(scn, pattern, pattern.with_link(int(i), int(j)), x):
            failures += 1
    ok = failures == 0
    report("5 (mixed-map bound)", ok, f"{failures} failures over 100 random triples")
    assert failures == 0


def _collect_optimizer_runs():
    """A spread of optimizer runs: random coupled scenarios, the constructed
    acceptance instance, the swap-completing two-cell case, and one full-size
    generated scenario near capacity."""
    runs = []
    rng = np.random.default_rng(1006)
    produced = 0
    while produced < 8:
        built = random_converging_scenario(rng, load_target=(0.6, 0.9))
        if built is None:
            continue
        scn, pat = built
        runs.append((scn, pat, OptimizerConfig(sweeps=3, condition_iters=10,
                                               max_serving=min(3, scn.n_cells))))
        produced += 1
    scn, pat = accepting_instance()
    runs.append((scn, pat, OptimizerConfig(max_serving=2)))
    inst = swap_completing_twocell()
    runs.append((expand_instance(inst),
                 expand_pattern(inst, SymmetricPattern((0,) * inst.n_pairs)),
                 OptimizerConfig(sweeps=6, condition_iters=40, max_serving=2)))
    hetnet = generate(GeneratorParams(seed=1))
    hot = with_uniform_demand(hetnet, 287_000.0)
    runs.append((hot, best_signal_association(hot), OptimizerConfig()))
    return runs


def test_criterion_6_acceptance_certificate_soundness():
    total_moves = 0
    worst = -np.inf
    for scn, pat, cfg in _collect_optimizer_runs():
        out = jt_minmax(scn, pat, cfg)
        kappa = np.array(pat.kappa)
        x_prev = fixed_point_solve(scn, pat, config=cfg.solver).load
        for cell, ue, _sweep in out.accepted_moves:
            kappa[cell, ue] = 1.0
            res = fixed_point_solve(scn, JTPattern(kappa=kappa), config=cfg.solver)
            assert res.status is SolveStatus.CONVERGED
            worst = max(worst, float(np.max(res.load - x_prev)))
            x_prev = res.load
            total_moves += 1
    ok = total_moves > 0 and worst <= 1e-8
    report("6 (certificate soundness)", ok,
           f"{total_moves} accepted moves re-solved independently, "
           f"worst componentwise increase {worst:.3e} (<= 1e-8)")
    assert total_moves > 0, "test batch produced no accepted moves to audit"
    assert worst <= 1e-8


@pytest.fixture(scope="module")
def hetnet_sweeps():
    """Five seeds of the default scenario, each swept up to its own capacity edge."""
    start = time.monotonic()
    per_seed = []
    config = OptimizerConfig()
    for seed in range(5):
        scenario = generate(GeneratorParams(seed=seed))
        baseline = best_signal_association(scenario)
        lo, hi = 1e4, 2e6
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            res = fixed_point_solve(with_uniform_demand(scenario, mid), baseline)
            if res.status is SolveStatus.CONVERGED and not res.capacity_violated:
                lo = mid
            else:
                hi = mid
        demand_max = lo * 0.999
        demands = sweep_demands(demand_max / 10.0, demand_max, 10)
        rows, _tables = run_sweep(scenario, demands, config)
        parsed = []
        for row in rows:
            demand, nonjt, jt, red, _s0, _s1, sred, nonjt_feas, jt_feas = row.split(",")
            parsed.append({
                "demand": float(demand),
                "nonjt": float(nonjt) if nonjt else None,
                "jt": float(jt) if jt else None,
                "reduction": float(red) if red else None,
                "spread_reduction": float(sred) if sred else None,
                "feasible": nonjt_feas == "true" and jt_feas == "true",
            })
        per_seed.append(parsed)
    return per_seed, time.monotonic() - start


def test_criterion_7a_jt_never_worse(hetnet_sweeps):
    per_seed, elapsed = hetnet_sweeps
    worst = -np.inf
    points = 0
    for rows in per_seed:
        for row in rows:
            if row["feasible"]:
                worst = max(worst, row["jt"] - row["nonjt"])
                points += 1
    ok = points > 0 and worst <= 1e-8 and elapsed < 900.0
    report("7a (JT max load <= non-JT at every feasible point)", ok,
           f"worst jt-nonjt difference {worst:.3e} over {points} feasible points, "
           f"sweeps took {elapsed:.0f}s (< 15min)")
    assert points > 0
    assert worst <= 1e-8
    assert elapsed < 900.0


def _max_achievable(rows):
    feasible = [row for row in rows if row["feasible"]]
    return feasible[-1] if feasible else None


def test_criterion_7b_reduction_at_max_demand(hetnet_sweeps):
    per_seed, _elapsed = hetnet_sweeps
    reductions = []
    for rows in per_seed:
        row = _max_achievable(rows)
        assert row is not None, "a seed had no feasible demand point"
        reductions.append(row["reduction"])
    mean = float(np.mean(reductions))
    all_positive = all(r > 0 for r in reductions)
    ok = all_positive and 5.0 <= mean <= 40.0
    report("7b (reduction at max achievable demand)", ok,
           f"per-seed reductions {['%.3f%%' % r for r in reductions]}, "
           f"mean {mean:.3f}% (required: every one > 0, mean in [5%, 40%])")
    assert ok, (
        "the certificate-gated JT-MinMax accepts only moves whose adopting cell "
        "recoups the adopted UE's cost within one relaxation step, which is rare "
        "in the 21-cell layout; reductions of tens of percent are not "
        "reachable under the componentwise-sound acceptance rule (see the "
        "Verification notes in the README)"
    )


def test_criterion_7c_spread_reduction_at_max_demand(hetnet_sweeps):
    per_seed, _elapsed = hetnet_sweeps
    spread_reductions = []
    for rows in per_seed:
        row = _max_achievable(rows)
        spread_reductions.append(row["spread_reduction"])
    mean = float(np.mean(spread_reductions))
    ok = mean > 0.0
    report("7c (spread reduction at max achievable demand)", ok,
           f"per-seed spread reductions {['%.3f%%' % r for r in spread_reductions]}, "
           f"mean {mean:.3f}% (required > 0)")
    assert ok, "JT-MinMax accepted no load-spread-improving move at the capacity edge"


def test_sweep_max_load_monotone_in_demand(hetnet_sweeps):
    # not a numbered criterion: the end-to-end sanity property that the
    # baseline max load only grows with uniform demand
    per_seed, _elapsed = hetnet_sweeps
    for rows in per_seed:
        loads = [row["nonjt"] for row in rows if row["nonjt"] is not None]
        assert np.all(np.diff(loads) > 0)


def test_criterion_8_sweep_determinism(tmp_path):
    runner = CliRunner()
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / f"{name}.csv"
        result = runner.invoke(cli_main, [
            "sweep", "--seed", "0",
            "--demand-min", "50000", "--demand-max", "250000", "--demand-steps", "4",
            "-o", str(out),
        ])
        assert result.exit_code == 0, result.output
        cells = tmp_path / f"{name}_cells.csv"
        outputs.append(out.read_bytes() + cells.read_bytes())
    ok = outputs[0] == outputs[1]
    report("8 (byte-identical sweep)", ok,
           f"two runs produced {'identical' if ok else 'different'} CSV bytes "
           f"({len(outputs[0])} bytes)")
    assert ok
