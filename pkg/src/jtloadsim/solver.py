"""Fixed-point solver for the load-coupling equation, plus SIF checkers.

The coupled map is a standard interference function (positive, monotone,
scalable) whenever the pattern leaves at least one interferer per UE, so
plain fixed-point iteration converges to the unique fixed point whenever
one exists.  Iteration is deliberately unaccelerated: the monotonicity
arguments the optimizer relies on hold for the plain sequence only.

Divergence (instance asks for more capacity than exists) is reported as a
status, never raised, so demand sweeps can record infeasible points.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import CouplingMap, JTPattern, NetworkScenario


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-9          # max-norm step size declaring convergence
    max_iterations: int = 10_000
    divergence_ceiling: float = 1e6  # any load above this declares divergence

    def __post_init__(self):
        if not (np.isfinite(self.tolerance) and self.tolerance > 0):
            raise ValueError("tolerance must be finite and > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.divergence_ceiling > 1:
            raise ValueError("divergence_ceiling must be > 1")


class SolveStatus(enum.Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    ITERATION_CAP = "iteration_cap"


@dataclass(frozen=True)
class FixedPointResult:
    load: np.ndarray        # final iterate
    status: SolveStatus
    iterations: int
    residual: float         # final max-norm step size
    capacity_violated: bool  # any x_i > 1 at the final iterate

    @property
    def converged(self) -> bool:
        return self.status is SolveStatus.CONVERGED

    @property
    def max_load(self) -> float:
        return float(np.max(self.load))


def fixed_point_solve(
    scenario: NetworkScenario,
    pattern: JTPattern,
    initial: np.ndarray | None = None,
    config: SolverConfig | None = None,
) -> FixedPointResult:
    """Iterate x <- f(h(x)) until the max-norm step drops below tolerance.

    The default start is the all-zeros vector: the map is positive and
    monotone, so iterates climb towards the fixed point from below.  By
    uniqueness the result is independent of `initial` up to tolerance.
    """
    config = config or SolverConfig()
    mapping = CouplingMap(scenario, pattern)
    if initial is None:
        x = np.zeros(scenario.n_cells)
    else:
        x = np.array(initial, dtype=float)
        if x.shape != (scenario.n_cells,):
            raise ValueError(f"initial load must have shape ({scenario.n_cells},)")
        if not np.all(np.isfinite(x)) or np.any(x < 0):
            raise ValueError("initial load must be finite and >= 0")

    residual = np.inf
    with np.errstate(over="ignore"):  # overflow to inf is how divergence manifests
        for iteration in range(1, config.max_iterations + 1):
            x_next = mapping(x)
            if np.any(x_next > config.divergence_ceiling) or not np.all(np.isfinite(x_next)):
                return FixedPointResult(
                    load=x_next, status=SolveStatus.DIVERGED, iterations=iteration,
                    residual=float(np.max(np.abs(x_next - x))), capacity_violated=True,
                )
            residual = float(np.max(np.abs(x_next - x)))
            x = x_next
            if residual <= config.tolerance:
                return FixedPointResult(
                    load=x, status=SolveStatus.CONVERGED, iterations=iteration,
                    residual=residual, capacity_violated=bool(np.any(x > 1.0)),
                )
    return FixedPointResult(
        load=x, status=SolveStatus.ITERATION_CAP, iterations=config.max_iterations,
        residual=residual, capacity_violated=bool(np.any(x > 1.0)),
    )


def feasibility_probe(
    scenario: NetworkScenario,
    pattern: JTPattern,
    candidate: np.ndarray,
    slack: float = 1e-9,
) -> bool:
    """True iff f(h(candidate)) <= candidate + slack componentwise.

    A true answer certifies that a fixed point exists (and lies near or
    below the candidate); probing the zero vector is always false for
    positive demand.  The default slack matches the solver tolerance so
    that a converged iterate probes true even when iteration approached
    the fixed point from below; pass slack=0 for the exact criterion.
    """
    mapping = CouplingMap(scenario, pattern)
    candidate = np.asarray(candidate, dtype=float)
    return bool(np.all(mapping(candidate) <= candidate + slack))


class ScalabilityViolation(NamedTuple):
    load: np.ndarray
    alpha: float
    scaled_map: np.ndarray   # alpha * f(h(x))
    map_scaled: np.ndarray   # f(h(alpha x))


class MonotonicityViolation(NamedTuple):
    load_high: np.ndarray
    load_low: np.ndarray
    map_high: np.ndarray
    map_low: np.ndarray


def _check_sif_preconditions(scenario: NetworkScenario, pattern: JTPattern) -> None:
    # The coupled map is only an SIF (positive in every component, strictly
    # scalable) when every cell serves someone and every UE keeps at least
    # one interferer.
    n = scenario.n_cells
    cols = pattern.kappa.sum(axis=0)
    if np.any(cols >= n):
        bad = int(np.argmax(cols))
        raise ValueError(
            f"UE {bad} is served by all {n} cells; the SIF checkers require every "
            "column sum < n so that each UE keeps at least one interferer"
        )
    rows = pattern.kappa.sum(axis=1)
    if np.any(rows < 1):
        bad = int(np.argmin(rows))
        raise ValueError(f"cell {bad} serves no UE; its map component is not positive")


def check_scalability(
    scenario: NetworkScenario,
    pattern: JTPattern,
    samples: int = 1000,
    rng_seed: int = 0,
    load_scale: float = 3.0,
    alpha_max: float = 10.0,
) -> list[ScalabilityViolation]:
    """Sample (x, alpha) pairs and verify alpha * f(h(x)) > f(h(alpha x)) strictly.

    Returns the violating samples; an empty list is the expected outcome.
    """
    _check_sif_preconditions(scenario, pattern)
    mapping = CouplingMap(scenario, pattern)
    rng = np.random.default_rng(rng_seed)
    loads = rng.uniform(0.0, load_scale, size=(samples, scenario.n_cells))
    alphas = rng.uniform(1.0, alpha_max, size=samples)
    alphas = np.where(alphas == 1.0, 1.5, alphas)  # alpha must be strictly > 1
    mapped = mapping(loads)
    mapped_scaled = mapping(alphas[:, None] * loads)
    ok = np.all(alphas[:, None] * mapped > mapped_scaled, axis=1)
    return [
        ScalabilityViolation(loads[s], float(alphas[s]), alphas[s] * mapped[s], mapped_scaled[s])
        for s in np.nonzero(~ok)[0]
    ]


def check_monotonicity(
    scenario: NetworkScenario,
    pattern: JTPattern,
    samples: int = 1000,
    rng_seed: int = 0,
    load_scale: float = 3.0,
) -> list[MonotonicityViolation]:
    """Sample ordered pairs x >= x' and verify f(h(x)) >= f(h(x')) componentwise."""
    _check_sif_preconditions(scenario, pattern)
    mapping = CouplingMap(scenario, pattern)
    rng = np.random.default_rng(rng_seed)
    low = rng.uniform(0.0, load_scale, size=(samples, scenario.n_cells))
    high = low + rng.uniform(0.0, load_scale, size=(samples, scenario.n_cells))
    mapped_low = mapping(low)
    mapped_high = mapping(high)
    ok = np.all(mapped_high >= mapped_low, axis=1)
    return [
        MonotonicityViolation(high[s], low[s], mapped_high[s], mapped_low[s])
        for s in np.nonzero(~ok)[0]
    ]
