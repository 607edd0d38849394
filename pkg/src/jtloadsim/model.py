"""Physical network data model and the load-coupling maps.

The downlink is abstracted at resource-block granularity: each cell i
transmits with power p_i per resource block, each UE j requests d_j bit/s,
and a binary serving matrix (the JT pattern) says which cells jointly
transmit to which UEs.  A cell's load x_i is the fraction of its M resource
blocks consumed, and it doubles as the probability that the cell interferes
with its neighbours, which couples all loads through the SINR:

    gamma_j = sum_i p_i g_ij k_ij / (sum_k p_k g_kj x_k (1 - k_kj) + sigma2)
    y_j     = d_j / (M B log2(1 + gamma_j))
    x_i     = sum_j k_ij y_j

All gains are linear power ratios (dB conversion, if any, happens in the
scenario generator).  Loads are deliberately NOT clamped to [0, 1] here;
capacity violation is a diagnosis the solver reports, not something the
map hides.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

# log2 via natural-log ratio, for bit-identical results across platforms
_LN2 = float(np.log(2.0))


def _log2_1p(gamma: np.ndarray) -> np.ndarray:
    """log2(1 + gamma), accurate for very small gamma."""
    return np.log1p(gamma) / _LN2


class CellKind(enum.Enum):
    MACRO = "macro"
    SMALL = "small"


@dataclass(frozen=True)
class Cell:
    power_per_rb: float  # W per resource block
    kind: CellKind = CellKind.MACRO
    position: tuple[float, float] | None = None  # metres; optional for hand-built instances

    def __post_init__(self):
        if not (np.isfinite(self.power_per_rb) and self.power_per_rb > 0):
            raise ValueError(f"cell power_per_rb must be finite and > 0, got {self.power_per_rb}")


@dataclass(frozen=True)
class Ue:
    demand: float  # bit/s (must be > 0 to take part in any coupling computation)
    position: tuple[float, float] | None = None  # metres

    def __post_init__(self):
        if not (np.isfinite(self.demand) and self.demand >= 0):
            raise ValueError(f"UE demand must be finite and >= 0, got {self.demand}")


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class NetworkScenario:
    """Immutable physical instance: cells, UEs, gains, noise, bandwidth.

    gain[i, j] is the linear channel gain between cell i and UE j.
    noise_power is per resource block.  Safe to share across threads.
    """

    cells: tuple[Cell, ...]
    ues: tuple[Ue, ...]
    gain: np.ndarray           # (n, m), linear, all > 0
    noise_power: float         # sigma2, W per resource block
    rb_bandwidth: float = 1.0  # B, Hz
    rb_count: int = 1          # M, resource blocks per cell

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "ues", tuple(self.ues))
        n, m = len(self.cells), len(self.ues)
        if n < 1 or m < 1:
            raise ValueError("scenario needs at least one cell and one UE")
        gain = _readonly(self.gain)
        if gain.shape != (n, m):
            raise ValueError(f"gain matrix shape {gain.shape} does not match n={n}, m={m}")
        if not np.all(np.isfinite(gain)) or np.any(gain <= 0):
            raise ValueError("all channel gains must be finite and strictly positive")
        object.__setattr__(self, "gain", gain)
        if not (np.isfinite(self.noise_power) and self.noise_power > 0):
            raise ValueError("noise_power must be finite and > 0")
        if not (np.isfinite(self.rb_bandwidth) and self.rb_bandwidth > 0):
            raise ValueError("rb_bandwidth must be finite and > 0")
        if not (isinstance(self.rb_count, (int, np.integer)) and self.rb_count >= 1):
            raise ValueError("rb_count must be a positive integer")

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_ues(self) -> int:
        return len(self.ues)

    @property
    def powers(self) -> np.ndarray:
        return np.array([c.power_per_rb for c in self.cells])

    @property
    def demands(self) -> np.ndarray:
        return np.array([u.demand for u in self.ues])

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkScenario):
            return NotImplemented
        return (
            self.cells == other.cells
            and self.ues == other.ues
            and self.gain.shape == other.gain.shape
            and bool(np.all(self.gain == other.gain))
            and self.noise_power == other.noise_power
            and self.rb_bandwidth == other.rb_bandwidth
            and self.rb_count == other.rb_count
        )

    def __hash__(self):
        return object.__hash__(self)


def with_uniform_demand(scenario: NetworkScenario, demand: float) -> NetworkScenario:
    """Copy of the scenario with every UE demand replaced by `demand` (bit/s)."""
    ues = tuple(Ue(demand=float(demand), position=u.position) for u in scenario.ues)
    return NetworkScenario(
        cells=scenario.cells,
        ues=ues,
        gain=scenario.gain,
        noise_power=scenario.noise_power,
        rb_bandwidth=scenario.rb_bandwidth,
        rb_count=scenario.rb_count,
    )


@dataclass(frozen=True, eq=False)
class JTPattern:
    """Binary n x m serving matrix; kappa[i, j] = 1 means cell i serves UE j.

    Every UE must be served by at least one cell.  `max_serving` is an
    optional per-UE cardinality cap (None means no cap beyond n); the
    optimizer enforces its own, stricter K < n.
    """

    kappa: np.ndarray
    max_serving: int | None = None

    def __post_init__(self):
        kappa = np.array(self.kappa, dtype=float)
        if kappa.ndim != 2:
            raise ValueError("kappa must be a 2-D matrix")
        if not np.all((kappa == 0.0) | (kappa == 1.0)):
            raise ValueError("kappa entries must be 0 or 1")
        kappa.flags.writeable = False
        object.__setattr__(self, "kappa", kappa)
        cols = kappa.sum(axis=0)
        if np.any(cols < 1):
            bad = int(np.argmin(cols))
            raise ValueError(f"UE {bad} is served by no cell (every column sum must be >= 1)")
        if self.max_serving is not None:
            k = int(self.max_serving)
            if k < 1:
                raise ValueError("max_serving must be a positive integer")
            object.__setattr__(self, "max_serving", k)
            if np.any(cols > k):
                bad = int(np.argmax(cols))
                raise ValueError(f"UE {bad} is served by {int(cols[bad])} cells, above the cap K={k}")

    @property
    def n_cells(self) -> int:
        return self.kappa.shape[0]

    @property
    def n_ues(self) -> int:
        return self.kappa.shape[1]

    def column_sums(self) -> np.ndarray:
        return self.kappa.sum(axis=0)

    def with_link(self, cell: int, ue: int) -> "JTPattern":
        """New pattern with the (cell, ue) entry flipped 0 -> 1."""
        if self.kappa[cell, ue] != 0.0:
            raise ValueError(f"link ({cell}, {ue}) is already set")
        kappa = np.array(self.kappa)
        kappa[cell, ue] = 1.0
        return JTPattern(kappa=kappa, max_serving=self.max_serving)

    def __eq__(self, other) -> bool:
        if not isinstance(other, JTPattern):
            return NotImplemented
        return (
            self.kappa.shape == other.kappa.shape
            and bool(np.all(self.kappa == other.kappa))
            and self.max_serving == other.max_serving
        )

    def __hash__(self):
        return object.__hash__(self)


def _check_compatible(scenario: NetworkScenario, pattern: JTPattern) -> None:
    if pattern.kappa.shape != scenario.gain.shape:
        raise ValueError(
            f"pattern shape {pattern.kappa.shape} does not match scenario "
            f"({scenario.n_cells} cells, {scenario.n_ues} UEs)"
        )


def _check_load(scenario: NetworkScenario, load: np.ndarray) -> np.ndarray:
    load = np.asarray(load, dtype=float)
    if load.shape[-1:] != (scenario.n_cells,):
        raise ValueError(f"load vector must have length n={scenario.n_cells}, got shape {load.shape}")
    if not np.all(np.isfinite(load)) or np.any(load < 0):
        raise ValueError("load components must be finite and >= 0")
    return load


class CouplingMap:
    """Precomputed evaluator for one (scenario, pattern) coupling map.

    Construction does the validation and array prep once so that the
    fixed-point iteration and the optimizer's candidate scans only pay for
    the arithmetic.  All methods accept a trailing-dimension-n (or -m) array
    and broadcast over leading dimensions.
    """

    def __init__(self, scenario: NetworkScenario, pattern: JTPattern):
        _check_compatible(scenario, pattern)
        self.scenario = scenario
        self.pattern = pattern
        p = scenario.powers
        pg = p[:, None] * scenario.gain            # (n, m) received power per unit load
        self.signal = (pg * pattern.kappa).sum(axis=0)      # (m,) numerator of the SINR
        self.interference = pg * (1.0 - pattern.kappa)      # (n, m) per-interferer weights
        self.noise = scenario.noise_power
        demands = scenario.demands
        if np.any(demands <= 0):
            bad = int(np.argmin(demands))
            raise ValueError(f"UE {bad} has zero demand; zero-demand UEs cannot enter the coupling")
        self.demand_norm = demands / (scenario.rb_count * scenario.rb_bandwidth)  # d_j / (M B)
        self.kappa_t = np.ascontiguousarray(pattern.kappa.T)  # (m, n) for the load stage

    def sinr(self, load: np.ndarray) -> np.ndarray:
        """SINR of every UE at the given cell loads; shape (..., n) -> (..., m)."""
        load = _check_load(self.scenario, load)
        return self.signal / (load @ self.interference + self.noise)

    def ue_load(self, sinr: np.ndarray) -> np.ndarray:
        """Per-UE resource-block share y_j = d_j / (M B log2(1 + gamma_j))."""
        sinr = np.asarray(sinr, dtype=float)
        if sinr.shape[-1:] != (self.scenario.n_ues,):
            raise ValueError(f"SINR vector must have length m={self.scenario.n_ues}")
        if not np.all(np.isfinite(sinr)) or np.any(sinr <= 0):
            raise ValueError("SINR values must be finite and strictly positive")
        return self.demand_norm / _log2_1p(sinr)

    def cell_load(self, ue_loads: np.ndarray) -> np.ndarray:
        """Cell loads x_i = sum_j kappa_ij y_j; a JT UE contributes the same y_j to every serving cell."""
        return ue_loads @ self.kappa_t

    def __call__(self, load: np.ndarray) -> np.ndarray:
        """One application of the coupled map x -> f(h(x))."""
        return self.cell_load(self.ue_load(self.sinr(load)))


def sinr_function(scenario: NetworkScenario, pattern: JTPattern, load: np.ndarray) -> np.ndarray:
    """SINR of every UE under the pattern, at the given interfering loads.

    Serving cells contribute signal independent of load; every other cell k
    interferes in proportion to its load x_k.
    """
    return CouplingMap(scenario, pattern).sinr(load)


def ue_load(scenario: NetworkScenario, sinr: np.ndarray) -> np.ndarray:
    """Resource-block share each UE consumes on each of its serving cells."""
    sinr = np.asarray(sinr, dtype=float)
    if sinr.shape[-1:] != (scenario.n_ues,):
        raise ValueError(f"SINR vector must have length m={scenario.n_ues}")
    if not np.all(np.isfinite(sinr)) or np.any(sinr <= 0):
        raise ValueError("SINR values must be finite and strictly positive")
    demands = scenario.demands
    if np.any(demands <= 0):
        raise ValueError("all UE demands must be > 0")
    return (demands / (scenario.rb_count * scenario.rb_bandwidth)) / _log2_1p(sinr)


def cell_load_function(scenario: NetworkScenario, pattern: JTPattern, sinr: np.ndarray) -> np.ndarray:
    """Load of every cell given the UEs' SINRs: x_i = sum over served UEs of y_j."""
    _check_compatible(scenario, pattern)
    return ue_load(scenario, sinr) @ pattern.kappa.T


def coupled_map(scenario: NetworkScenario, pattern: JTPattern, load: np.ndarray) -> np.ndarray:
    """One application of the load-coupling map; its fixed points are the operating loads."""
    return CouplingMap(scenario, pattern)(load)
