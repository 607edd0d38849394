"""Command-line front end: generate / solve / optimize / twocell / sweep.

Every float in CSV output is printed with 9 significant digits; files are
UTF-8 with LF line endings.  Exit codes: 0 success (infeasible demand
points are data, not failure), 2 usage or input error, 3 runtime failure
(e.g. the optimizer's baseline diverges).  Every option can also be set
through environment variables prefixed JTLOADSIM_ (e.g.
JTLOADSIM_SWEEP_GAMMA=3).
"""

from __future__ import annotations

import dataclasses
import sys
from pathlib import Path

import click
import numpy as np

from .model import JTPattern, NetworkScenario, with_uniform_demand
from .optimizer import OptimizerConfig, best_signal_association, jt_minmax
from .scenario import (
    GeneratorParams,
    ScenarioFormatError,
    deserialize_pattern,
    deserialize_scenario,
    deserialize_twocell,
    generate,
    serialize_pattern,
    serialize_scenario,
)
from .solver import FixedPointResult, SolverConfig, SolveStatus, fixed_point_solve
from .twocell import (
    DivergenceError,
    baseline_ue_loads,
    brute_force_minmax,
    constant_loads,
    gain_of_load,
    greedy_optimal,
)


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="\n")


def _load_scenario(path: str) -> NetworkScenario:
    try:
        return deserialize_scenario(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise click.UsageError(f"scenario file not found: {path}")
    except ScenarioFormatError as exc:
        raise click.UsageError(f"{path}: {exc}")


def _solver_config(tolerance: float, max_iters: int) -> SolverConfig:
    try:
        return SolverConfig(tolerance=tolerance, max_iterations=max_iters)
    except ValueError as exc:
        raise click.UsageError(str(exc))


def _load_report_csv(scenario: NetworkScenario, result: FixedPointResult) -> str:
    lines = ["cell_id,kind,load,status"]
    for i, cell in enumerate(scenario.cells):
        lines.append(f"{i},{cell.kind.value},{_fmt(result.load[i])},{result.status.value}")
    return "\n".join(lines) + "\n"


def _load_report_pretty(scenario: NetworkScenario, result: FixedPointResult) -> str:
    lines = []
    for i, cell in enumerate(scenario.cells):
        lines.append(f"cell {i:3d} ({cell.kind.value:5s})  load {_fmt(result.load[i])}")
    lines.append(f"max load      {_fmt(result.max_load)}")
    lines.append(f"status        {result.status.value}")
    lines.append(f"iterations    {result.iterations}")
    lines.append(f"residual      {_fmt(result.residual)}")
    lines.append(f"capacity_ok   {not result.capacity_violated}")
    return "\n".join(lines) + "\n"


@click.group(context_settings={"auto_envvar_prefix": "JTLOADSIM"})
@click.version_option(package_name="jtloadsim")
def main() -> None:
    """Downlink HetNet load-coupling simulator with JT min-max optimization."""


@main.command("generate")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--hex-count", type=int, default=7, show_default=True)
@click.option("--sc-per-hex", type=int, default=2, show_default=True)
@click.option("--ue-per-hex", type=int, default=30, show_default=True)
@click.option("--hex-radius", type=float, default=500.0, show_default=True,
              help="Hexagon circumradius in metres.")
@click.option("--carrier-freq", type=float, default=2000.0, show_default=True, help="MHz.")
@click.option("--rb-bandwidth", type=float, default=180e3, show_default=True, help="Hz.")
@click.option("--rb-count", type=int, default=25, show_default=True)
@click.option("--mc-power", type=float, default=0.200, show_default=True, help="W per RB.")
@click.option("--sc-power", type=float, default=0.050, show_default=True, help="W per RB.")
@click.option("--noise-psd", type=float, default=-174.0, show_default=True, help="dBm/Hz.")
@click.option("--shadowing-sigma", type=float, default=8.0, show_default=True, help="dB.")
@click.option("--mc-height", type=float, default=30.0, show_default=True, help="m.")
@click.option("--sc-height", type=float, default=10.0, show_default=True, help="m.")
@click.option("--ue-height", type=float, default=1.5, show_default=True, help="m.")
@click.option("--city-correction", type=float, default=0.0, show_default=True, help="dB.")
@click.option("--min-distance", type=float, default=10.0, show_default=True, help="m.")
@click.option("--demand", type=float, default=1e5, show_default=True,
              help="Uniform UE demand in bit/s.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
              help="Scenario file path (stdout if omitted).")
def cmd_generate(seed, hex_count, sc_per_hex, ue_per_hex, hex_radius, carrier_freq,
                 rb_bandwidth, rb_count, mc_power, sc_power, noise_psd, shadowing_sigma,
                 mc_height, sc_height, ue_height, city_correction, min_distance,
                 demand, output) -> None:
    """Generate a hexagonal HetNet scenario and write its document."""
    try:
        params = GeneratorParams(
            hex_count=hex_count, sc_per_hex=sc_per_hex, ue_per_hex=ue_per_hex,
            hex_circumradius=hex_radius, carrier_freq=carrier_freq,
            rb_bandwidth=rb_bandwidth, rb_count=rb_count,
            mc_power_per_rb=mc_power, sc_power_per_rb=sc_power, noise_psd=noise_psd,
            shadowing_sigma=shadowing_sigma, mc_antenna_height=mc_height,
            sc_antenna_height=sc_height, ue_height=ue_height,
            city_correction=city_correction, min_distance=min_distance,
            demand_bps=demand, seed=seed,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))
    _write_text(output, serialize_scenario(generate(params), params))


@main.command("solve")
@click.argument("scenario_path", type=click.Path(dir_okay=False))
@click.option("--pattern", "pattern_path", type=click.Path(dir_okay=False), default=None,
              help="Pattern file; defaults to the best-signal association.")
@click.option("--demand", type=float, default=None,
              help="Override every UE demand (bit/s) before solving.")
@click.option("--tolerance", type=float, default=1e-9, show_default=True)
@click.option("--max-iters", type=int, default=10_000, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "pretty"]), default="csv",
              show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
def cmd_solve(scenario_path, pattern_path, demand, tolerance, max_iters, fmt, output) -> None:
    """Solve the load-coupling fixed point for one scenario and pattern."""
    scenario = _load_scenario(scenario_path)
    if demand is not None:
        scenario = with_uniform_demand(scenario, demand)
    if pattern_path is None:
        pattern = best_signal_association(scenario)
    else:
        try:
            pattern = deserialize_pattern(Path(pattern_path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise click.UsageError(f"pattern file not found: {pattern_path}")
        except ScenarioFormatError as exc:
            raise click.UsageError(f"{pattern_path}: {exc}")
        if pattern.kappa.shape != scenario.gain.shape:
            raise click.UsageError(
                f"{pattern_path}: pattern shape {pattern.kappa.shape} does not match scenario"
            )
    result = fixed_point_solve(scenario, pattern, config=_solver_config(tolerance, max_iters))
    render = _load_report_csv if fmt == "csv" else _load_report_pretty
    _write_text(output, render(scenario, result))


@main.command("optimize")
@click.argument("scenario_path", type=click.Path(dir_okay=False))
@click.option("--gamma", type=int, default=5, show_default=True,
              help="Candidate sweeps over all (cell, UE) pairs.")
@click.option("--tau", type=int, default=20, show_default=True,
              help="Max iterations of the acceptance-condition test.")
@click.option("--k-max", type=int, default=2, show_default=True,
              help="Per-UE serving-set cap K.")
@click.option("--demand", type=float, default=None,
              help="Override every UE demand (bit/s) before optimizing.")
@click.option("--tolerance", type=float, default=1e-9, show_default=True)
@click.option("--max-iters", type=int, default=10_000, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "pretty"]), default="csv",
              show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
              help="Load report destination (stdout if omitted).")
@click.option("--pattern-out", type=click.Path(dir_okay=False), default=None,
              help="Write the optimized pattern document here.")
@click.option("--moves-out", type=click.Path(dir_okay=False), default=None,
              help="Write the accepted-moves CSV here.")
@click.pass_context
def cmd_optimize(ctx, scenario_path, gamma, tau, k_max, demand, tolerance, max_iters,
                 fmt, output, pattern_out, moves_out) -> None:
    """Run best-signal association then JT-MinMax on a scenario."""
    scenario = _load_scenario(scenario_path)
    if demand is not None:
        scenario = with_uniform_demand(scenario, demand)
    try:
        config = OptimizerConfig(sweeps=gamma, condition_iters=tau, max_serving=k_max,
                                 solver=_solver_config(tolerance, max_iters))
    except ValueError as exc:
        raise click.UsageError(str(exc))
    if k_max > scenario.n_cells:
        raise click.UsageError(
            f"--k-max {k_max} exceeds the number of cells ({scenario.n_cells})"
        )
    baseline = best_signal_association(scenario)
    try:
        result = jt_minmax(scenario, baseline, config)
    except (DivergenceError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(3)
        return
    if pattern_out is not None:
        _write_text(pattern_out, serialize_pattern(result.pattern))
    if moves_out is not None:
        lines = ["move_index,sweep,cell_id,ue_id"]
        lines += [f"{idx},{sweep},{cell},{ue}"
                  for idx, (cell, ue, sweep) in enumerate(result.accepted_moves)]
        _write_text(moves_out, "\n".join(lines) + "\n")
    if fmt == "csv":
        _write_text(output, _load_report_csv(scenario, result.fixed_point))
    else:
        text = _load_report_pretty(scenario, result.fixed_point)
        text += f"accepted moves {len(result.accepted_moves)}\n"
        text += "max-load trace " + " ".join(_fmt(v) for v in result.trace) + "\n"
        _write_text(output, text)


@main.command("twocell")
@click.argument("instance_path", type=click.Path(dir_okay=False))
@click.option("--mode", type=click.Choice(["greedy", "brute", "both"]), default="greedy",
              show_default=True)
@click.option("--tolerance", type=float, default=1e-9, show_default=True)
@click.option("--max-iters", type=int, default=10_000, show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
              help="Write the per-pair CSV table here.")
def cmd_twocell(instance_path, mode, tolerance, max_iters, output) -> None:
    """Solve a symmetric two-cell instance by greedy selection and/or brute force."""
    try:
        instance = deserialize_twocell(Path(instance_path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise click.UsageError(f"instance file not found: {instance_path}")
    except ScenarioFormatError as exc:
        raise click.UsageError(f"{instance_path}: {exc}")
    if mode in ("brute", "both") and instance.n_pairs > 20:
        raise click.UsageError(
            f"brute force needs m <= 20 pairs (2^m enumeration), got m={instance.n_pairs}"
        )
    config = _solver_config(tolerance, max_iters)
    m = instance.n_pairs
    c = constant_loads(instance)
    try:
        gains = gain_of_load(instance, baseline_ue_loads(instance, config))[:m]
    except DivergenceError as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(3)

    greedy_pat = greedy_eta = None
    if mode in ("greedy", "both"):
        greedy_pat, greedy_res = greedy_optimal(instance, config)
        greedy_eta = greedy_res.max_load
        click.echo(f"greedy pattern   {' '.join(str(k) for k in greedy_pat.kappa)}")
        click.echo(f"greedy max load  {_fmt(greedy_eta)}")
    brute_pat = brute_eta = None
    if mode in ("brute", "both"):
        brute_pat, brute_eta = brute_force_minmax(instance, config)
        click.echo(f"brute pattern    {' '.join(str(k) for k in brute_pat.kappa)}")
        click.echo(f"brute max load   {_fmt(brute_eta)}")
    if mode == "both":
        if abs(greedy_eta - brute_eta) <= 1e-6:
            click.echo("AGREE (within 1e-6)")
        else:
            click.echo(f"DISAGREE (greedy - brute = {_fmt(greedy_eta - brute_eta)})")

    if output is not None:
        lines = ["pair_index,own_gain,cross_gain,demand,constant_load,gain_of_load,"
                 "kappa_greedy,kappa_brute"]
        for j, pair in enumerate(instance.pairs):
            kg = "" if greedy_pat is None else str(greedy_pat.kappa[j])
            kb = "" if brute_pat is None else str(brute_pat.kappa[j])
            lines.append(f"{j},{_fmt(pair.own_gain)},{_fmt(pair.cross_gain)},"
                         f"{_fmt(pair.demand)},{_fmt(c[j])},{_fmt(gains[j])},{kg},{kb}")
        _write_text(output, "\n".join(lines) + "\n")


_SWEEP_COLUMNS = ("demand_bps,nonjt_max_load,jt_max_load,reduction_percent,"
                  "nonjt_spread,jt_spread,spread_reduction_percent,"
                  "nonjt_feasible,jt_feasible")


@main.command("sweep")
@click.option("--scenario", "scenario_path", type=click.Path(dir_okay=False), default=None,
              help="Scenario file; defaults to a generated one (see --seed).")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for the generated scenario when --scenario is omitted.")
@click.option("--demand-min", type=float, required=True, help="bit/s.")
@click.option("--demand-max", type=float, required=True, help="bit/s.")
@click.option("--demand-steps", type=int, default=10, show_default=True)
@click.option("--gamma", type=int, default=5, show_default=True)
@click.option("--tau", type=int, default=20, show_default=True)
@click.option("--k-max", type=int, default=2, show_default=True)
@click.option("--tolerance", type=float, default=1e-9, show_default=True)
@click.option("--max-iters", type=int, default=10_000, show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
              help="Sweep CSV destination (stdout if omitted).")
@click.option("--cells-output", type=click.Path(dir_okay=False), default=None,
              help="Per-cell comparison CSV at the max achievable demand "
                   "(defaults to <output stem>_cells.csv when --output is set).")
def cmd_sweep(scenario_path, seed, demand_min, demand_max, demand_steps, gamma, tau,
              k_max, tolerance, max_iters, output, cells_output) -> None:
    """Demand sweep comparing the non-JT baseline with JT-MinMax.

    Emits one row per demand point plus, at the largest demand where the
    baseline converges with every load <= 1 ("max achievable demand"),
    a per-cell load comparison table.
    """
    if demand_min <= 0 or demand_max < demand_min:
        raise click.UsageError("need 0 < demand-min <= demand-max")
    if demand_steps < 1:
        raise click.UsageError("demand-steps must be >= 1")
    if scenario_path is not None:
        scenario = _load_scenario(scenario_path)
    else:
        scenario = generate(GeneratorParams(seed=seed))
    try:
        config = OptimizerConfig(sweeps=gamma, condition_iters=tau, max_serving=k_max,
                                 solver=_solver_config(tolerance, max_iters))
    except ValueError as exc:
        raise click.UsageError(str(exc))
    if k_max > scenario.n_cells:
        raise click.UsageError(
            f"--k-max {k_max} exceeds the number of cells ({scenario.n_cells})"
        )

    demands = sweep_demands(demand_min, demand_max, demand_steps)
    rows, tables = run_sweep(scenario, demands, config)
    _write_text(output, "\n".join([_SWEEP_COLUMNS] + rows) + "\n")
    if not tables:
        click.echo("warning: no feasible demand point; no per-cell table emitted", err=True)
        return
    if cells_output is None and output is not None:
        out = Path(output)
        cells_output = str(out.with_name(out.stem + "_cells" + (out.suffix or ".csv")))
    cells_text = "\n".join(tables) + "\n"
    if cells_output is None:
        sys.stdout.write("\n" + cells_text)
    else:
        _write_text(cells_output, cells_text)


def sweep_demands(demand_min: float, demand_max: float, steps: int) -> list[float]:
    if steps == 1:
        return [demand_min]
    return [demand_min + (demand_max - demand_min) * k / (steps - 1) for k in range(steps)]


def run_sweep(scenario: NetworkScenario, demands: list[float],
              config: OptimizerConfig) -> tuple[list[str], list[str]]:
    """Sweep rows plus the per-cell table at the max achievable demand."""
    baseline = best_signal_association(scenario)
    rows: list[str] = []
    best_feasible = None  # (demand, nonjt result, jt result)
    for demand in demands:
        point = with_uniform_demand(scenario, demand)
        nonjt = fixed_point_solve(point, baseline, config=config.solver)
        nonjt_ok = nonjt.status is SolveStatus.CONVERGED
        nonjt_feasible = nonjt_ok and not nonjt.capacity_violated
        jt = None
        if nonjt_ok:
            jt = jt_minmax(point, baseline, config)
        if jt is None:
            rows.append(",".join([
                _fmt(demand),
                _fmt(nonjt.max_load) if nonjt_ok else "",
                "", "", "", "", "",
                str(nonjt_feasible).lower(), "",
            ]))
            continue
        jt_fp = jt.fixed_point
        jt_feasible = not jt_fp.capacity_violated
        nonjt_spread = nonjt.max_load - float(np.min(nonjt.load))
        jt_spread = jt_fp.max_load - float(np.min(jt_fp.load))
        both_feasible = nonjt_feasible and jt_feasible
        reduction = (100.0 * (nonjt.max_load - jt_fp.max_load) / nonjt.max_load
                     if both_feasible else None)
        spread_reduction = (100.0 * (nonjt_spread - jt_spread) / nonjt_spread
                            if both_feasible and nonjt_spread > 0 else None)
        rows.append(",".join([
            _fmt(demand),
            _fmt(nonjt.max_load),
            _fmt(jt_fp.max_load),
            "" if reduction is None else _fmt(reduction),
            _fmt(nonjt_spread),
            _fmt(jt_spread),
            "" if spread_reduction is None else _fmt(spread_reduction),
            str(nonjt_feasible).lower(),
            str(jt_feasible).lower(),
        ]))
        if nonjt_feasible:
            best_feasible = (demand, nonjt, jt_fp)
    tables: list[str] = []
    if best_feasible is not None:
        demand, nonjt, jt_fp = best_feasible
        tables.append("demand_bps,cell_id,kind,nonjt_load,jt_load")
        for i, cell in enumerate(scenario.cells):
            tables.append(f"{_fmt(demand)},{i},{cell.kind.value},"
                          f"{_fmt(nonjt.load[i])},{_fmt(jt_fp.load[i])}")
    return rows, tables


if __name__ == "__main__":
    main()
