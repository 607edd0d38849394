"""Shared random-instance builders for the test suite.

All builders take an explicit numpy Generator so every test controls its
own seed; demands are scaled by bisection so the no-JT fixed point lands
near a requested max load (instances near capacity exercise the coupling,
instances far below it converge fast).
"""

from __future__ import annotations

import numpy as np
import pytest

from jtloadsim import (
    Cell,
    JTPattern,
    NetworkScenario,
    SolverConfig,
    SolveStatus,
    SymmetricPattern,
    TwoCellInstance,
    Ue,
    best_signal_association,
    fixed_point_solve,
    solve_pattern,
)


def scale_demands_to_load(build, target: float, config: SolverConfig | None = None):
    """Find a demand scale where `build(scale)`'s solve lands just under `target`.

    `build(scale)` must return (scenario, pattern) or a TwoCellInstance.
    Returns the scaled object, or None when even tiny demands diverge.
    """

    def solve_at(scale: float):
        built = build(scale)
        if isinstance(built, TwoCellInstance):
            return built, solve_pattern(built, SymmetricPattern((0,) * built.n_pairs), config)
        scenario, pattern = built
        return built, fixed_point_solve(scenario, pattern, config=config)

    lo, hi, scale = None, None, 1.0
    for _ in range(60):
        _, result = solve_at(scale)
        if result.status is SolveStatus.CONVERGED and result.max_load < target:
            lo = scale
            scale *= 2.0
        else:
            hi = scale
            scale /= 4.0
        if lo is not None and hi is not None:
            break
    if lo is None or hi is None:
        return None
    lo = min(lo, hi / 2.0)
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        _, result = solve_at(mid)
        if result.status is SolveStatus.CONVERGED and result.max_load < target:
            lo = mid
        else:
            hi = mid
    built, _ = solve_at(lo)
    return built


def random_raw_scenario(rng: np.random.Generator, n=None, m=None) -> NetworkScenario:
    """Random scenario with unscaled demands; fine for map-level properties."""
    n = int(rng.integers(2, 11)) if n is None else n
    m = int(rng.integers(n, 51)) if m is None else m
    cells = tuple(Cell(power_per_rb=float(p)) for p in rng.uniform(0.05, 1.0, n))
    ues = tuple(Ue(demand=float(d)) for d in rng.uniform(0.5, 1.5, m))
    gain = 10.0 ** rng.uniform(-3.0, 0.0, (n, m))
    noise = float(10.0 ** rng.uniform(-3.0, -1.0))
    return NetworkScenario(cells=cells, ues=ues, gain=gain, noise_power=noise)


def with_demands(scenario: NetworkScenario, demands: np.ndarray) -> NetworkScenario:
    ues = tuple(Ue(demand=float(d), position=u.position)
                for u, d in zip(scenario.ues, demands))
    return NetworkScenario(cells=scenario.cells, ues=ues, gain=scenario.gain,
                           noise_power=scenario.noise_power,
                           rb_bandwidth=scenario.rb_bandwidth, rb_count=scenario.rb_count)


def random_converging_scenario(rng: np.random.Generator, load_target=(0.3, 0.8),
                               n=None, m=None, config: SolverConfig | None = None):
    """Random scenario whose best-signal baseline converges near the target load.

    Returns (scenario, baseline pattern) or None for the rare draw where no
    demand scale converges.
    """
    raw = random_raw_scenario(rng, n=n, m=m)
    demands = raw.demands
    pattern = best_signal_association(raw)
    target = float(rng.uniform(*load_target))
    built = scale_demands_to_load(
        lambda s: (with_demands(raw, demands * s), pattern), target, config
    )
    if built is None:
        return None
    return built[0], pattern


def random_sif_pattern(rng: np.random.Generator, n: int, m: int) -> JTPattern:
    """Random pattern with 1 <= column sums <= n-1 and every cell serving >= 1 UE."""
    assert m >= n
    for _ in range(200):
        kappa = np.zeros((n, m))
        for j in range(m):
            k = int(rng.integers(1, n))  # 1 .. n-1 serving cells
            kappa[rng.choice(n, size=k, replace=False), j] = 1.0
        if kappa.sum(axis=1).min() >= 1:
            return JTPattern(kappa=kappa)
    raise AssertionError("failed to draw a pattern covering every cell")


def random_twocell(rng: np.random.Generator, m=None, load_target=(0.4, 0.9)):
    """Random symmetric two-cell instance whose no-JT baseline converges.

    Own gains span 0-20 dB over the noise floor; cross gains sit up to 15 dB
    below the own gain, so some pairs are JT-attractive (cell-edge like) and
    some are not.  Demands are scaled so the baseline lands near the target.
    """
    m = int(rng.integers(2, 9)) if m is None else m
    own = 10.0 ** rng.uniform(0.0, 2.0, m)
    cross = own * 10.0 ** rng.uniform(-1.5, 0.0, m)
    demand = rng.uniform(0.5, 1.5, m)
    target = float(rng.uniform(*load_target))
    return scale_demands_to_load(
        lambda s: TwoCellInstance(power=1.0, noise_power=1.0,
                                  pairs=tuple(zip(own, cross, demand * s))),
        target,
    )


@pytest.fixture(scope="session")
def tight_config() -> SolverConfig:
    return SolverConfig(tolerance=1e-12, max_iterations=100_000)
