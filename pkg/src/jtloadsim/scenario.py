"""HetNet instance generation and scenario (de)serialization.

The generated layout is a flower of hexagonal regions: one macro cell at
each hexagon centre, a few small cells and a crowd of UEs dropped uniformly
inside each hexagon.  Channel gains combine COST-231-Hata path loss with
i.i.d. log-normal shadowing per (cell, UE) link; everything is a pure
function of the generator parameters, seed included.

Scenario documents are JSON with explicit units in the field names.
Floats rely on shortest-repr encoding, which round-trips every IEEE double
bit-exactly.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from .model import Cell, CellKind, JTPattern, NetworkScenario, Ue
from .twocell import TwoCellInstance, UePair

log = logging.getLogger(__name__)


class ScenarioFormatError(ValueError):
    """A scenario/pattern/instance document is malformed."""


@dataclass(frozen=True)
class PathLossParams:
    carrier_freq: float = 2000.0   # MHz
    base_height: float = 30.0      # h_b, m
    mobile_height: float = 1.5     # h_m, m
    city_correction: float = 0.0   # C_m, dB (0 = medium city / suburban)


def path_loss_db(params: PathLossParams, distance_m: float | np.ndarray,
                 min_distance_m: float = 10.0) -> float | np.ndarray:
    """COST-231-Hata path loss in dB at the given distance(s) in metres.

    Distances below `min_distance_m` are clamped, never an error.  The
    model is specified for f in [1500, 2000] MHz and base heights of
    30-200 m; out-of-band inputs are used as-is (logged once by the
    generator, not here).
    """
    f = params.carrier_freq
    h_b = params.base_height
    h_m = params.mobile_height
    d_km = np.maximum(np.asarray(distance_m, dtype=float), min_distance_m) / 1000.0
    a_hm = (1.1 * math.log10(f) - 0.7) * h_m - (1.56 * math.log10(f) - 0.8)
    pl = (
        46.3
        + 33.9 * math.log10(f)
        - 13.82 * math.log10(h_b)
        - a_hm
        + (44.9 - 6.55 * math.log10(h_b)) * np.log10(d_km)
        + params.city_correction
    )
    return float(pl) if np.ndim(distance_m) == 0 else pl


def noise_power_per_rb_w(noise_psd_dbm_hz: float, rb_bandwidth_hz: float) -> float:
    """Noise power over one resource block, in watts."""
    dbm = noise_psd_dbm_hz + 10.0 * math.log10(rb_bandwidth_hz)
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class GeneratorParams:
    hex_count: int = 7             # hexagonal regions, one MC each
    sc_per_hex: int = 2            # small cells per hexagon
    ue_per_hex: int = 30           # UEs per hexagon
    hex_circumradius: float = 500.0  # m, centre to vertex
    carrier_freq: float = 2000.0   # MHz
    rb_bandwidth: float = 180e3    # Hz per resource block
    rb_count: int = 25             # resource blocks per cell (4.5 MHz / 180 kHz)
    mc_power_per_rb: float = 0.200  # W
    sc_power_per_rb: float = 0.050  # W
    noise_psd: float = -174.0      # dBm/Hz
    shadowing_sigma: float = 8.0   # dB, log-normal; draws clamped to +-6 sigma
    mc_antenna_height: float = 30.0  # m
    sc_antenna_height: float = 10.0  # m
    ue_height: float = 1.5         # m
    city_correction: float = 0.0   # dB
    min_distance: float = 10.0     # m, path-loss clamp
    demand_bps: float = 1e5        # uniform initial UE demand, bit/s
    seed: int = 0

    def __post_init__(self):
        positive = {
            "hex_count": self.hex_count, "sc_per_hex": self.sc_per_hex,
            "ue_per_hex": self.ue_per_hex, "hex_circumradius": self.hex_circumradius,
            "carrier_freq": self.carrier_freq, "rb_bandwidth": self.rb_bandwidth,
            "rb_count": self.rb_count, "mc_power_per_rb": self.mc_power_per_rb,
            "sc_power_per_rb": self.sc_power_per_rb, "shadowing_sigma": self.shadowing_sigma,
            "mc_antenna_height": self.mc_antenna_height, "sc_antenna_height": self.sc_antenna_height,
            "ue_height": self.ue_height, "min_distance": self.min_distance,
            "demand_bps": self.demand_bps,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ValueError(f"{name} must be > 0, got {value}")


# apothem directions of a hexagon with a vertex on the +x axis
_HEX_AXES = np.array(
    [[math.cos(a), math.sin(a)] for a in (math.pi / 6, math.pi / 2, 5 * math.pi / 6)]
)


def hex_centers(params: GeneratorParams) -> np.ndarray:
    """Hexagon centres: origin first, then rings of six around it."""
    r = params.hex_circumradius
    pitch = math.sqrt(3.0) * r  # centre-to-centre across a shared edge
    centers = [(0.0, 0.0)]
    ring = 1
    while len(centers) < params.hex_count:
        for k in range(6 * ring):
            angle = math.pi / 6 + k * (2 * math.pi) / (6 * ring)
            centers.append((ring * pitch * math.cos(angle), ring * pitch * math.sin(angle)))
        ring += 1
    return np.array(centers[: params.hex_count])


def in_hexagon(point_xy: np.ndarray, center_xy: np.ndarray, circumradius: float) -> bool:
    """True iff the point lies in the (vertex on +x) hexagon around the centre."""
    rel = np.asarray(point_xy, dtype=float) - np.asarray(center_xy, dtype=float)
    apothem = math.sqrt(3.0) / 2.0 * circumradius
    return bool(np.all(np.abs(_HEX_AXES @ rel) <= apothem))


def _uniform_in_hexagon(rng: np.random.Generator, center: np.ndarray, circumradius: float) -> np.ndarray:
    apothem = math.sqrt(3.0) / 2.0 * circumradius
    while True:
        p = rng.uniform([-circumradius, -apothem], [circumradius, apothem])
        if np.all(np.abs(_HEX_AXES @ p) <= apothem):
            return center + p


def generate(params: GeneratorParams) -> NetworkScenario:
    """Generate the HetNet scenario: macro cells first, then small cells, then UEs.

    Cells 0..hex_count-1 are the MCs at the hexagon centres; the SCs follow
    hexagon by hexagon.  Gains are 10^(-(PL + S)/10) with one shadowing
    draw per (cell, UE) link, clamped to +-6 sigma so gains stay positive
    and finite.  Deterministic for a fixed seed.
    """
    if not 1500.0 <= params.carrier_freq <= 2000.0:
        log.warning("carrier frequency %.0f MHz is outside COST-231-Hata validity (1500-2000 MHz)",
                    params.carrier_freq)
    if params.sc_antenna_height < 30.0:
        log.warning("small-cell antenna height %.1f m is below COST-231-Hata validity (>= 30 m); "
                    "the model is applied anyway", params.sc_antenna_height)

    rng = np.random.default_rng(params.seed)
    centers = hex_centers(params)
    r = params.hex_circumradius

    cells: list[Cell] = [
        Cell(power_per_rb=params.mc_power_per_rb, kind=CellKind.MACRO, position=(float(c[0]), float(c[1])))
        for c in centers
    ]
    for c in centers:
        for _ in range(params.sc_per_hex):
            pos = _uniform_in_hexagon(rng, c, r)
            cells.append(Cell(power_per_rb=params.sc_power_per_rb, kind=CellKind.SMALL,
                              position=(float(pos[0]), float(pos[1]))))
    ues: list[Ue] = []
    for c in centers:
        for _ in range(params.ue_per_hex):
            pos = _uniform_in_hexagon(rng, c, r)
            ues.append(Ue(demand=params.demand_bps, position=(float(pos[0]), float(pos[1]))))

    n, m = len(cells), len(ues)
    cell_xy = np.array([c.position for c in cells])
    ue_xy = np.array([u.position for u in ues])
    dist = np.linalg.norm(cell_xy[:, None, :] - ue_xy[None, :, :], axis=2)

    pl = np.empty((n, m))
    for i, cell in enumerate(cells):
        height = params.mc_antenna_height if cell.kind is CellKind.MACRO else params.sc_antenna_height
        pl_params = PathLossParams(carrier_freq=params.carrier_freq, base_height=height,
                                   mobile_height=params.ue_height,
                                   city_correction=params.city_correction)
        pl[i] = path_loss_db(pl_params, dist[i], min_distance_m=params.min_distance)

    shadow = rng.normal(0.0, params.shadowing_sigma, size=(n, m))
    shadow = np.clip(shadow, -6.0 * params.shadowing_sigma, 6.0 * params.shadowing_sigma)
    gain = 10.0 ** (-(pl + shadow) / 10.0)

    return NetworkScenario(
        cells=tuple(cells),
        ues=tuple(ues),
        gain=gain,
        noise_power=noise_power_per_rb_w(params.noise_psd, params.rb_bandwidth),
        rb_bandwidth=params.rb_bandwidth,
        rb_count=params.rb_count,
    )


# ---------------------------------------------------------------------------
# document formats


def scenario_to_document(scenario: NetworkScenario,
                         generator_params: GeneratorParams | None = None) -> dict:
    doc = {
        "cells": [
            {
                "id": i,
                "kind": cell.kind.value,
                "x_m": None if cell.position is None else cell.position[0],
                "y_m": None if cell.position is None else cell.position[1],
                "power_per_rb_w": cell.power_per_rb,
            }
            for i, cell in enumerate(scenario.cells)
        ],
        "ues": [
            {
                "id": j,
                "x_m": None if u.position is None else u.position[0],
                "y_m": None if u.position is None else u.position[1],
                "demand_bps": u.demand,
            }
            for j, u in enumerate(scenario.ues)
        ],
        "gain": [list(row) for row in scenario.gain],
        "noise_power_w": scenario.noise_power,
        "rb_bandwidth_hz": scenario.rb_bandwidth,
        "rb_count": scenario.rb_count,
        "meta": {} if generator_params is None else {
            "seed": generator_params.seed,
            "generator_params": asdict(generator_params),
        },
    }
    return doc


def _require(mapping: dict, field: str, context: str) -> object:
    if field not in mapping:
        raise ScenarioFormatError(f"{context}: missing field '{field}'")
    return mapping[field]


def _position(entry: dict, context: str) -> tuple[float, float] | None:
    x = _require(entry, "x_m", context)
    y = _require(entry, "y_m", context)
    if x is None or y is None:
        return None
    return (float(x), float(y))


def scenario_from_document(doc: dict) -> NetworkScenario:
    if not isinstance(doc, dict):
        raise ScenarioFormatError("scenario document must be a JSON object")
    cells = []
    for entry in _require(doc, "cells", "scenario"):
        context = f"cell {entry.get('id', '?')}"
        kind_name = str(_require(entry, "kind", context))
        try:
            kind = CellKind(kind_name)
        except ValueError:
            raise ScenarioFormatError(f"{context}: unknown kind '{kind_name}'") from None
        cells.append(Cell(power_per_rb=float(_require(entry, "power_per_rb_w", context)),
                          kind=kind, position=_position(entry, context)))
    ues = []
    for entry in _require(doc, "ues", "scenario"):
        context = f"ue {entry.get('id', '?')}"
        ues.append(Ue(demand=float(_require(entry, "demand_bps", context)),
                      position=_position(entry, context)))
    gain = np.array(_require(doc, "gain", "scenario"), dtype=float)
    try:
        return NetworkScenario(
            cells=tuple(cells),
            ues=tuple(ues),
            gain=gain,
            noise_power=float(_require(doc, "noise_power_w", "scenario")),
            rb_bandwidth=float(_require(doc, "rb_bandwidth_hz", "scenario")),
            rb_count=int(_require(doc, "rb_count", "scenario")),
        )
    except ValueError as exc:
        raise ScenarioFormatError(f"scenario: {exc}") from exc


def serialize_scenario(scenario: NetworkScenario,
                       generator_params: GeneratorParams | None = None) -> str:
    return json.dumps(scenario_to_document(scenario, generator_params), indent=2) + "\n"


def deserialize_scenario(text: str) -> NetworkScenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"scenario document is not valid JSON: {exc}") from exc
    return scenario_from_document(doc)


def serialize_pattern(pattern: JTPattern) -> str:
    doc = {
        "kappa": [[int(v) for v in row] for row in pattern.kappa],
        "max_serving": pattern.max_serving,
    }
    return json.dumps(doc, indent=2) + "\n"


def deserialize_pattern(text: str) -> JTPattern:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"pattern document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioFormatError("pattern document must be a JSON object")
    kappa = _require(doc, "kappa", "pattern")
    max_serving = doc.get("max_serving")
    try:
        return JTPattern(kappa=np.array(kappa, dtype=float),
                         max_serving=None if max_serving is None else int(max_serving))
    except ValueError as exc:
        raise ScenarioFormatError(f"pattern: {exc}") from exc


def serialize_twocell(instance: TwoCellInstance) -> str:
    doc = {
        "power_w": instance.power,
        "noise_power_w": instance.noise_power,
        "pairs": [
            {"own_gain": p.own_gain, "cross_gain": p.cross_gain, "demand": p.demand}
            for p in instance.pairs
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def deserialize_twocell(text: str) -> TwoCellInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"instance document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioFormatError("two-cell document must be a JSON object")
    pairs = []
    for k, entry in enumerate(_require(doc, "pairs", "two-cell instance")):
        context = f"pair {k}"
        pairs.append(UePair(
            own_gain=float(_require(entry, "own_gain", context)),
            cross_gain=float(_require(entry, "cross_gain", context)),
            demand=float(_require(entry, "demand", context)),
        ))
    try:
        return TwoCellInstance(
            power=float(_require(doc, "power_w", "two-cell instance")),
            noise_power=float(_require(doc, "noise_power_w", "two-cell instance")),
            pairs=tuple(pairs),
        )
    except ValueError as exc:
        raise ScenarioFormatError(f"two-cell instance: {exc}") from exc
