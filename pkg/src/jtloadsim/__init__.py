"""Downlink HetNet load-coupling simulator with JT min-max load optimization."""

from .model import (
    Cell,
    CellKind,
    CouplingMap,
    JTPattern,
    NetworkScenario,
    Ue,
    cell_load_function,
    coupled_map,
    sinr_function,
    ue_load,
    with_uniform_demand,
)
from .optimizer import (
    ConsistencyError,
    OptimizeResult,
    OptimizerConfig,
    best_signal_association,
    jt_minmax,
    mixed_map_bound_check,
    sufficient_condition,
)
from .scenario import (
    GeneratorParams,
    PathLossParams,
    ScenarioFormatError,
    deserialize_pattern,
    deserialize_scenario,
    deserialize_twocell,
    generate,
    noise_power_per_rb_w,
    path_loss_db,
    serialize_pattern,
    serialize_scenario,
    serialize_twocell,
)
from .solver import (
    FixedPointResult,
    SolverConfig,
    SolveStatus,
    check_monotonicity,
    check_scalability,
    feasibility_probe,
    fixed_point_solve,
)
from .twocell import (
    DivergenceError,
    SymmetricPattern,
    TwoCellInstance,
    UePair,
    baseline_ue_loads,
    brute_force_minmax,
    constant_load,
    constant_loads,
    expand_instance,
    expand_pattern,
    gain_of_load,
    greedy_optimal,
    solve_pattern,
    two_cell_coupled_map,
)

__version__ = "0.1.0"

__all__ = [
    "Cell", "CellKind", "CouplingMap", "JTPattern", "NetworkScenario", "Ue",
    "cell_load_function", "coupled_map", "sinr_function", "ue_load", "with_uniform_demand",
    "SolverConfig", "SolveStatus", "FixedPointResult",
    "fixed_point_solve", "feasibility_probe", "check_scalability", "check_monotonicity",
    "TwoCellInstance", "UePair", "SymmetricPattern", "DivergenceError",
    "expand_instance", "expand_pattern", "constant_load", "constant_loads",
    "two_cell_coupled_map", "solve_pattern", "baseline_ue_loads", "gain_of_load",
    "greedy_optimal", "brute_force_minmax",
    "OptimizerConfig", "OptimizeResult", "ConsistencyError",
    "best_signal_association", "mixed_map_bound_check", "sufficient_condition", "jt_minmax",
    "GeneratorParams", "PathLossParams", "ScenarioFormatError",
    "generate", "path_loss_db", "noise_power_per_rb_w",
    "serialize_scenario", "deserialize_scenario",
    "serialize_pattern", "deserialize_pattern",
    "serialize_twocell", "deserialize_twocell",
    "__version__",
]
