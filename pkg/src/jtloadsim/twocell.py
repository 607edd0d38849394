"""Symmetric two-cell case: exact min-max load via greedy selection.

Two cells with equal power each serve m UEs, and the instance is mirror
symmetric: UE j of cell 1 and UE m+j of cell 2 share the same own-cell and
cross-cell gains and the same demand.  The instance is stored in reduced
(half) form so the symmetry is a construction-time guarantee instead of a
runtime check on floating-point data.

When a pair (j, m+j) is jointly served by both cells, its SINR no longer
depends on either load, and the pair costs each cell a constant

    c_j = d_j / log2(1 + (p g_own_j + p g_cross_j) / sigma2)

per cell (each cell pays c_j twice: once for its own UE j, once for the
mirrored UE it expanded to serve).  Against that stands the baseline load
ybar_j the UE consumed without JT, so the gain of load G_j = ybar_j - 2 c_j
decides the pair: the greedy pattern serves exactly the pairs with G_j > 0.
`brute_force_minmax` is the exhaustive oracle over all 2^m symmetric
patterns, solving every fixed point nonlinearly rather than trusting the
linear greedy decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import (
    Cell,
    CellKind,
    JTPattern,
    NetworkScenario,
    Ue,
    _log2_1p,
    sinr_function,
    ue_load,
)
from .solver import FixedPointResult, SolverConfig, SolveStatus, fixed_point_solve


class DivergenceError(RuntimeError):
    """A fixed point required by the computation does not exist."""


class UePair(NamedTuple):
    own_gain: float    # g between the UE and its own cell (linear)
    cross_gain: float  # g between the UE and the opposite cell (linear)
    demand: float      # bit/s, normalized by M*B


@dataclass(frozen=True)
class TwoCellInstance:
    power: float        # common per-RB transmit power of both cells, W
    noise_power: float  # sigma2, W per resource block
    pairs: tuple[UePair, ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(UePair(*p) for p in self.pairs))
        if not (np.isfinite(self.power) and self.power > 0):
            raise ValueError("power must be finite and > 0")
        if not (np.isfinite(self.noise_power) and self.noise_power > 0):
            raise ValueError("noise_power must be finite and > 0")
        if len(self.pairs) < 1:
            raise ValueError("instance needs at least one UE pair")
        for k, pair in enumerate(self.pairs):
            for name, v in pair._asdict().items():
                if not (np.isfinite(v) and v > 0):
                    raise ValueError(f"pair {k}: {name} must be finite and > 0, got {v}")

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def own_gains(self) -> np.ndarray:
        return np.array([p.own_gain for p in self.pairs])

    @property
    def cross_gains(self) -> np.ndarray:
        return np.array([p.cross_gain for p in self.pairs])

    @property
    def demands(self) -> np.ndarray:
        return np.array([p.demand for p in self.pairs])


@dataclass(frozen=True)
class SymmetricPattern:
    """kappa[j] = 1 means the pair (j, m+j) is jointly served by both cells."""

    kappa: tuple[int, ...]

    def __post_init__(self):
        kappa = tuple(int(k) for k in self.kappa)
        if any(k not in (0, 1) for k in kappa):
            raise ValueError("kappa entries must be 0 or 1")
        object.__setattr__(self, "kappa", kappa)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.kappa, dtype=float)

    def __len__(self) -> int:
        return len(self.kappa)


def expand_instance(instance: TwoCellInstance) -> NetworkScenario:
    """The full 2-cell, 2m-UE scenario this reduced form stands for.

    UEs 0..m-1 belong to cell 0 and UEs m..2m-1 mirror them on cell 1;
    gains are placed so that g[0, j] = g[1, m+j] and g[0, m+j] = g[1, j]
    hold exactly.  Demands are already normalized, so M = B = 1.
    """
    m = instance.n_pairs
    own, cross = instance.own_gains, instance.cross_gains
    gain = np.empty((2, 2 * m))
    gain[0, :m] = own
    gain[1, :m] = cross
    gain[0, m:] = cross
    gain[1, m:] = own
    cells = (Cell(power_per_rb=instance.power, kind=CellKind.MACRO),
             Cell(power_per_rb=instance.power, kind=CellKind.MACRO))
    ues = tuple(Ue(demand=float(d)) for d in np.concatenate([instance.demands, instance.demands]))
    return NetworkScenario(cells=cells, ues=ues, gain=gain,
                           noise_power=instance.noise_power, rb_bandwidth=1.0, rb_count=1)


def expand_pattern(instance: TwoCellInstance, pattern: SymmetricPattern) -> JTPattern:
    """The 2 x 2m serving matrix the symmetric pattern stands for."""
    m = instance.n_pairs
    if len(pattern) != m:
        raise ValueError(f"pattern length {len(pattern)} does not match m={m}")
    k = pattern.array
    kappa = np.empty((2, 2 * m))
    kappa[0, :m] = 1.0
    kappa[1, :m] = k
    kappa[0, m:] = k
    kappa[1, m:] = 1.0
    return JTPattern(kappa=kappa)


def constant_loads(instance: TwoCellInstance) -> np.ndarray:
    """The load c_j a jointly served pair costs each cell, for every pair."""
    p = instance.power
    snr = (p * instance.own_gains + p * instance.cross_gains) / instance.noise_power
    return instance.demands / _log2_1p(snr)


def constant_load(instance: TwoCellInstance, ue_index: int) -> float:
    """c_j for pair `ue_index` (0-based); independent of any load vector."""
    if not 0 <= ue_index < instance.n_pairs:
        raise IndexError(f"ue_index {ue_index} out of range for m={instance.n_pairs}")
    return float(constant_loads(instance)[ue_index])


def two_cell_coupled_map(
    instance: TwoCellInstance, pattern: SymmetricPattern, x1: float, x2: float
) -> tuple[float, float]:
    """One application of the reduced coupling map (x1, x2) -> (x1', x2').

    Non-JT UEs of cell 1 are interfered by cell 2's load and vice versa.
    A JT pair costs each cell 2 c_j: c_j for the cell's own UE plus c_j for
    the mirrored UE it expanded to serve, matching the generic model on the
    expanded scenario (the UE-load share lands on every serving cell).
    """
    if len(pattern) != instance.n_pairs:
        raise ValueError(f"pattern length {len(pattern)} does not match m={instance.n_pairs}")
    if x1 < 0 or x2 < 0:
        raise ValueError("loads must be >= 0")
    p = instance.power
    signal = p * instance.own_gains
    cross = p * instance.cross_gains
    d = instance.demands
    k = pattern.array
    c = constant_loads(instance)
    y1 = (1.0 - k) * d / _log2_1p(signal / (cross * x2 + instance.noise_power))
    y2 = (1.0 - k) * d / _log2_1p(signal / (cross * x1 + instance.noise_power))
    jt = float(np.dot(k, 2.0 * c))
    return float(np.sum(y1) + jt), float(np.sum(y2) + jt)


def solve_pattern(
    instance: TwoCellInstance,
    pattern: SymmetricPattern,
    config: SolverConfig | None = None,
) -> FixedPointResult:
    """Fixed point of the expanded scenario under the symmetric pattern."""
    scenario = expand_instance(instance)
    return fixed_point_solve(scenario, expand_pattern(instance, pattern), config=config)


def baseline_ue_loads(
    instance: TwoCellInstance, config: SolverConfig | None = None
) -> np.ndarray:
    """Converged per-UE loads (length 2m) under the all-zeros pattern."""
    scenario = expand_instance(instance)
    pattern = expand_pattern(instance, SymmetricPattern(kappa=(0,) * instance.n_pairs))
    result = fixed_point_solve(scenario, pattern, config=config)
    if result.status is not SolveStatus.CONVERGED:
        raise DivergenceError(
            f"no-JT baseline did not converge (status {result.status.value}); "
            "the gain of load is undefined"
        )
    return ue_load(scenario, sinr_function(scenario, pattern, result.load))


def gain_of_load(instance: TwoCellInstance, baseline_y: np.ndarray) -> np.ndarray:
    """G_j = ybar_j - 2 c_j for every UE, from the no-JT per-UE loads.

    `baseline_y` may be given in reduced (length m) or expanded (length 2m)
    form; in the latter case the two halves must agree, as they do at any
    converged symmetric fixed point.  The result is always length 2m with
    G_j = G_{m+j}.
    """
    m = instance.n_pairs
    y = np.asarray(baseline_y, dtype=float)
    if y.shape == (2 * m,):
        if not np.allclose(y[:m], y[m:], rtol=1e-8, atol=1e-12):
            raise ValueError("baseline per-UE loads are not mirror symmetric; "
                             "they do not come from a converged symmetric solve")
        y = y[:m]
    elif y.shape != (m,):
        raise ValueError(f"baseline_y must have length {m} or {2 * m}, got shape {y.shape}")
    if not np.all(np.isfinite(y)) or np.any(y <= 0):
        raise ValueError("baseline per-UE loads must be finite and > 0")
    g_half = y - 2.0 * constant_loads(instance)
    return np.concatenate([g_half, g_half])


def greedy_optimal(
    instance: TwoCellInstance, config: SolverConfig | None = None
) -> tuple[SymmetricPattern, FixedPointResult]:
    """Greedy selection: jointly serve exactly the pairs with G_j > 0.

    Ties G_j = 0 resolve to no JT (either choice gives the same objective;
    fewer JT links is the cheaper operational one).  Returns the pattern
    and the converged loads under it.
    """
    m = instance.n_pairs
    gains = gain_of_load(instance, baseline_ue_loads(instance, config))[:m]
    pattern = SymmetricPattern(kappa=tuple(int(g > 0) for g in gains))
    return pattern, solve_pattern(instance, pattern, config)


def brute_force_minmax(
    instance: TwoCellInstance,
    config: SolverConfig | None = None,
    max_pairs: int = 20,
    _batch: int = 4096,
) -> tuple[SymmetricPattern, float]:
    """Exhaustive minimum of max(x1, x2) over all 2^m symmetric patterns.

    Every pattern's fixed point is solved with plain nonlinear iteration
    (batched over patterns); nothing is inferred from the greedy rule, so
    this doubles as its independent test oracle.  Patterns whose iteration
    diverges score +inf.  Refuses above `max_pairs` (2^m enumeration).
    """
    m = instance.n_pairs
    if m > max_pairs:
        raise ValueError(f"brute force is capped at m <= {max_pairs} pairs, got m={m}")
    config = config or SolverConfig()

    best_eta = np.inf
    best_index = -1
    total = 1 << m
    bits = 1 << np.arange(m)
    for start in range(0, total, _batch):
        indices = np.arange(start, min(start + _batch, total))
        kappas = ((indices[:, None] & bits) > 0).astype(float)  # (P, m)
        eta = _solve_symmetric_batch(instance, kappas, config)
        better = int(np.argmin(eta))
        if eta[better] < best_eta:
            best_eta = float(eta[better])
            best_index = int(indices[better])
    if not np.isfinite(best_eta):
        raise DivergenceError("no symmetric pattern has a finite fixed point")
    kappa = tuple(int(b) for b in ((best_index >> np.arange(m)) & 1))
    return SymmetricPattern(kappa=kappa), best_eta


def _solve_symmetric_batch(
    instance: TwoCellInstance, kappas: np.ndarray, config: SolverConfig
) -> np.ndarray:
    """max(x1, x2) at the fixed point for each pattern row; inf if divergent."""
    p = instance.power
    signal = p * instance.own_gains
    cross = p * instance.cross_gains
    d = instance.demands
    noise = instance.noise_power
    c = instance.demands / _log2_1p((signal + cross) / noise)
    n_patterns = kappas.shape[0]
    non_jt = (1.0 - kappas) * d           # (P, m) demand of load-coupled UEs
    jt = kappas @ (2.0 * c)               # (P,) constant JT contribution per cell
    x1 = np.zeros(n_patterns)
    x2 = np.zeros(n_patterns)
    eta = np.full(n_patterns, np.inf)
    active = np.ones(n_patterns, dtype=bool)
    with np.errstate(over="ignore", divide="ignore"):
        for _ in range(config.max_iterations):
            x1_new = (non_jt / _log2_1p(signal / (cross * x2[:, None] + noise))).sum(axis=1) + jt
            x2_new = (non_jt / _log2_1p(signal / (cross * x1[:, None] + noise))).sum(axis=1) + jt
            step = np.maximum(np.abs(x1_new - x1), np.abs(x2_new - x2))
            x1, x2 = x1_new, x2_new
            blown = active & (~np.isfinite(x1) | ~np.isfinite(x2)
                              | (x1 > config.divergence_ceiling) | (x2 > config.divergence_ceiling))
            done = active & ~blown & (step <= config.tolerance)
            eta[done] = np.maximum(x1[done], x2[done])
            active &= ~(blown | done)
            if not active.any():
                break
            # freeze resolved rows so divergent ones cannot poison the batch
            x1 = np.where(active, x1, 0.0)
            x2 = np.where(active, x2, 0.0)
    return eta
