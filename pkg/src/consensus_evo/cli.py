"""Command-line interface.

Subcommands: simulate, classify, sweep, match-check, sensitivity. Model
parameters resolve with the precedence flags > environment variables
(CONSENSUS_EVO_*) > config file (--config) > built-in defaults. Paths given
via --out receive the delimited output plus a rendered figure alongside
(suppress with --no-plot).

Exit codes: 0 converged or all checks passed, 1 usage or validation error,
2 not converged / failed check / ambiguous boundary, 3 frozen.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .dynamics import (
    AgentPopulation,
    EquilibriumClass,
    Trajectory,
    simulate_agents,
    simulate_mean_field,
)
from .equilibrium import (
    BoundaryAmbiguous,
    classify_analytic,
    evaluate_equilibrium,
    interior_fixed_point,
    policy_sensitivity,
)
from .matching import matching_deviation, run_matching
from .model import (
    Belief,
    ModelConfig,
    PayoffParams,
    ProtocolParams,
    ValidatedModel,
    validate_model,
)
from .sweep import (
    SweepAxis,
    SweepConfigError,
    SweepSpec,
    format_float,
    run_sweep,
    write_csv,
)

ENV_PREFIX = "CONSENSUS_EVO_"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNRESOLVED = 2
EXIT_FROZEN = 3

PRESETS = ("pos-ethereum",)

# key -> (parser, default); keys double as config-file keys and, uppercased
# with dashes replaced, as environment variable suffixes
MODEL_KEYS: dict[str, tuple] = {
    "reward": (float, 10.0),
    "check-cost": (float, 4.0),
    "send-cost": (float, 2.0),
    "penalty": (float, 1.0),
    "committee-size": (int, 10),
    "threshold": (int, 3),
    "belief-m": (float, 0.2),
    "x1": (float, 0.5),
    "max-rounds": (int, 10_000),
    "tol": (float, 1e-9),
    "seed": (int, 0),
}


class UsageError(Exception):
    """Bad flags, config, or model parameters; maps to exit code 1."""


class CliParser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors by default; this CLI
    # reserves 2 for unresolved outcomes
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dest(key: str) -> str:
    return key.replace("-", "_")


def _env_name(key: str) -> str:
    return ENV_PREFIX + key.upper().replace("-", "_")


def add_model_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model parameters")
    group.add_argument("--reward", type=float, help="reward for committing an accepted block")
    group.add_argument("--check-cost", type=float, help="cost of checking a proposal")
    group.add_argument("--send-cost", type=float, help="cost of sending a vote")
    group.add_argument("--penalty", type=float, help="honest loss when an invalid block is accepted")
    group.add_argument("-N", "--committee-size", type=int, help="number of committee members")
    group.add_argument("--threshold", type=int, help="votes needed to commit a block")
    group.add_argument("--belief-m", type=float, help="assortativity of the matching belief in [0, 1]")
    group.add_argument("--x1", type=float, help="initial honest fraction in [0, 1]")
    group.add_argument("--max-rounds", type=int, help="round budget before giving up")
    group.add_argument("--tol", type=float, help="convergence tolerance")
    group.add_argument("--seed", type=int, help="rng seed for stochastic paths")
    group.add_argument("--config", metavar="PATH", help="flat key=value file mirroring the flag names")
    group.add_argument("--preset", choices=PRESETS, help="named protocol preset")


def read_config_file(path: str) -> dict[str, str]:
    """Parse a flat key=value file; '#' starts a comment, blank lines ignored."""
    values: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
                key, _, value = line.partition("=")
                values[key.strip()] = value.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    return values


def _parse_typed(key: str, text: str, cast, source: str):
    try:
        return cast(text)
    except ValueError as exc:
        raise UsageError(f"{source}: cannot parse {key}={text!r} as {cast.__name__}") from exc


def resolve_key(args: argparse.Namespace, config: dict[str, str], key: str, default=...):
    """Resolve one model key: flag > environment > config file > default."""
    cast, built_in = MODEL_KEYS[key]
    flag_value = getattr(args, _dest(key), None)
    if flag_value is not None:
        return flag_value
    env_value = os.environ.get(_env_name(key))
    if env_value is not None:
        return _parse_typed(key, env_value, cast, _env_name(key))
    if key in config:
        return _parse_typed(key, config[key], cast, "config file")
    return built_in if default is ... else default


def _apply_preset(args: argparse.Namespace, config: dict[str, str]) -> tuple[int, int]:
    """Resolve (committee_size, threshold), honoring --preset pos-ethereum.

    The preset pins the pivotality rate to 2/3: the default committee is 12
    with threshold 8, and a user-supplied committee size must be divisible by
    3. An explicit threshold conflicts with the preset.
    """
    if args.preset is None:
        return resolve_key(args, config, "committee-size"), resolve_key(args, config, "threshold")
    explicit_threshold = (
        getattr(args, "threshold", None) is not None
        or os.environ.get(_env_name("threshold")) is not None
        or "threshold" in config
    )
    if explicit_threshold:
        raise UsageError("--preset pos-ethereum fixes the threshold; drop the explicit threshold setting")
    n = resolve_key(args, config, "committee-size", default=None)
    if n is None:
        n = 12
    if n % 3 != 0:
        raise UsageError(f"--preset pos-ethereum needs a committee size divisible by 3, got {n}")
    return n, (2 * n) // 3


def build_model(args: argparse.Namespace) -> ValidatedModel:
    config = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in config:
        if key not in MODEL_KEYS and key not in ("axis1", "axis2", "axis3", "master-seed", "seeds-per-cell"):
            raise UsageError(f"config file: unknown key {key!r}")
    committee_size, threshold = _apply_preset(args, config)
    model_config = ModelConfig(
        payoffs=PayoffParams(
            reward=resolve_key(args, config, "reward"),
            check_cost=resolve_key(args, config, "check-cost"),
            send_cost=resolve_key(args, config, "send-cost"),
            penalty=resolve_key(args, config, "penalty"),
        ),
        protocol=ProtocolParams(committee_size=committee_size, threshold=threshold),
        belief=Belief(assortativity=resolve_key(args, config, "belief-m")),
        initial_honest_fraction=resolve_key(args, config, "x1"),
        max_rounds=resolve_key(args, config, "max-rounds"),
        convergence_tol=resolve_key(args, config, "tol"),
        rng_seed=resolve_key(args, config, "seed"),
    )
    result = validate_model(model_config)
    if isinstance(result, list):
        details = "; ".join(f"[{v.code}] {v.message}" for v in result)
        raise UsageError(f"invalid model: {details}")
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return result


def _exit_for_outcome(outcome: EquilibriumClass) -> int:
    if outcome is EquilibriumClass.FROZEN:
        return EXIT_FROZEN
    if outcome is EquilibriumClass.NOT_CONVERGED:
        return EXIT_UNRESOLVED
    return EXIT_OK


def _figure_path(out_path: str) -> str:
    stem, _ = os.path.splitext(out_path)
    return stem + ".png"


# ---------------------------------------------------------------- simulate

def _trajectory_csv(trajectory: Trajectory) -> str:
    lines = ["t,x,regime,v_h,v_b"]
    for s in trajectory.states:
        lines.append(
            f"{s.round},{format_float(s.honest_fraction)},{s.regime.value},"
            f"{format_float(s.expected.v_h)},{format_float(s.expected.v_b)}"
        )
    t = trajectory.terminal
    lines.append(
        f"terminal,{t.outcome.value},{format_float(t.final_fraction)},{t.rounds},"
        f"{'true' if t.converged else 'false'}"
    )
    return "\n".join(lines) + "\n"


def _trajectory_json(trajectory: Trajectory) -> str:
    t = trajectory.terminal
    payload = {
        "states": [
            {
                "t": s.round,
                "x": s.honest_fraction,
                "regime": s.regime.value,
                "v_h": s.expected.v_h,
                "v_b": s.expected.v_b,
            }
            for s in trajectory.states
        ],
        "terminal": {
            "class": t.outcome.value,
            "final_x": t.final_fraction,
            "rounds": t.rounds,
            "converged": t.converged,
            "frozen": t.frozen,
        },
    }
    return json.dumps(payload, indent=2) + "\n"


def cmd_simulate(args: argparse.Namespace) -> int:
    model = build_model(args)
    trajectory = simulate_agents(model) if args.agents else simulate_mean_field(model)
    text = _trajectory_json(trajectory) if args.format == "json" else _trajectory_csv(trajectory)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        if not args.no_plot:
            from .plots import render_trajectory

            render_trajectory(trajectory, _figure_path(args.out))
        t = trajectory.terminal
        print(f"{t.outcome.value} after {t.rounds} rounds (final x = {format_float(t.final_fraction)}); wrote {args.out}")
    else:
        sys.stdout.write(text)
    return _exit_for_outcome(trajectory.terminal.outcome)


# ---------------------------------------------------------------- classify

def cmd_classify(args: argparse.Namespace) -> int:
    model = build_model(args)
    try:
        outcome = classify_analytic(model)
    except BoundaryAmbiguous as exc:
        print(f"ambiguous: {exc}", file=sys.stderr)
        return EXIT_UNRESOLVED
    report = evaluate_equilibrium(outcome, model)
    try:
        fixed_point = interior_fixed_point(model.payoffs)
    except ValueError:
        fixed_point = None
    payload = {
        "class": outcome.value,
        "case": report.case,
        "immediate_safety": report.immediate_safety,
        "eventual_safety": report.eventual_safety,
        "immediate_liveness": report.immediate_liveness,
        "eventual_liveness": report.eventual_liveness,
        "eventual_validity": report.eventual_validity,
        "welfare": report.honest_agent_welfare,
        "interior_fixed_point": fixed_point,
        "x1": model.initial_honest_fraction,
        "assortativity": model.belief.assortativity,
    }
    if args.format == "csv":
        header = ",".join(payload.keys())
        row = ",".join(
            format_float(v) if isinstance(v, float) else ("true" if v is True else "false" if v is False else str(v))
            for v in payload.values()
        )
        text = header + "\n" + row + "\n"
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"{outcome.value}; wrote {args.out}")
    else:
        sys.stdout.write(text)
    return _exit_for_outcome(outcome)


# ---------------------------------------------------------------- sweep

def _parse_axis(text: str) -> SweepAxis:
    parts = text.split(":")
    if len(parts) != 4:
        raise UsageError(f"axis must look like name:lower:upper:steps, got {text!r}")
    name, lo, hi, steps = parts
    try:
        return SweepAxis(name=name, lower=float(lo), upper=float(hi), steps=int(steps))
    except ValueError as exc:
        raise UsageError(f"cannot parse axis {text!r}: {exc}") from exc


def cmd_sweep(args: argparse.Namespace) -> int:
    config = read_config_file(args.config) if args.config else {}
    model = build_model(args)
    axis_texts = list(args.axis or [])
    if not axis_texts:
        axis_texts = [config[k] for k in ("axis1", "axis2", "axis3") if k in config]
    axes = tuple(_parse_axis(t) for t in axis_texts)
    master_seed = args.master_seed
    if master_seed is None:
        master_seed = int(config.get("master-seed", 0))
    seeds_per_cell = args.seeds_per_cell
    if seeds_per_cell is None:
        seeds_per_cell = int(config.get("seeds-per-cell", 1))
    spec = SweepSpec(
        base=model.config,
        axes=axes,
        master_seed=master_seed,
        seeds_per_cell=seeds_per_cell,
        agent_based=args.agents,
    )
    try:
        result = run_sweep(spec)
    except SweepConfigError as exc:
        raise UsageError(str(exc)) from exc
    write_csv(result, args.out)
    figure = None
    if not args.no_plot:
        from .plots import render_region_map

        figure = _figure_path(args.out)
        render_region_map(result, figure)
    summary = f"{len(result.rows)} rows, {result.mismatch_count} analytic/simulated mismatches; wrote {args.out}"
    if figure:
        summary += f" and {figure}"
    print(summary)
    return EXIT_OK


# ---------------------------------------------------------------- match-check

def cmd_match_check(args: argparse.Namespace) -> int:
    n = args.agents
    if n < 2:
        raise UsageError(f"--agents must be >= 2, got {n}")
    xs = args.x if args.x else [0.25, 0.5, 0.75]
    ms = args.m if args.m else [0.0, 0.5, 1.0]
    rounds = args.rounds if args.rounds is not None else max(1, math.ceil(100_000 / n))
    print(f"population {n}, {rounds} rounds per cell ({n * rounds} agent-rounds)")
    print("m,x,pi_hh,target_hh,z_hh,pi_bb,target_bb,z_bb,fallbacks,verdict")
    all_passed = True
    cell = 0
    for m in ms:
        if not 0.0 <= m <= 1.0:
            raise UsageError(f"--m must lie in [0, 1], got {m}")
        for x in xs:
            if not 0.0 <= x <= 1.0:
                raise UsageError(f"--x must lie in [0, 1], got {x}")
            population = AgentPopulation.from_fraction(n, x)
            seed = int(np.random.SeedSequence(entropy=args.seed or 0, spawn_key=(cell,)).generate_state(1, np.uint64)[0])
            stats = run_matching(population, Belief(m), rounds, seed)
            report = matching_deviation(stats, Belief(m), population.honest_fraction, n)
            by_name = {c.name: c for c in report.checks}
            hh, bb = by_name["pi_hh"], by_name["pi_bb"]
            verdict = "PASS" if report.passed else "FAIL"
            all_passed = all_passed and report.passed
            print(
                f"{format_float(m)},{format_float(x)},"
                f"{format_float(hh.empirical)},{format_float(hh.corrected_target)},{format_float(hh.z_corrected)},"
                f"{format_float(bb.empirical)},{format_float(bb.corrected_target)},{format_float(bb.z_corrected)},"
                f"{report.fallback_count},{verdict}"
            )
            cell += 1
    return EXIT_OK if all_passed else EXIT_UNRESOLVED


# ---------------------------------------------------------------- sensitivity

def cmd_sensitivity(args: argparse.Namespace) -> int:
    config = read_config_file(args.config) if args.config else {}
    committee_size, threshold = _apply_preset(args, config)
    payoffs = PayoffParams(
        reward=resolve_key(args, config, "reward"),
        check_cost=resolve_key(args, config, "check-cost"),
        send_cost=resolve_key(args, config, "send-cost"),
        penalty=resolve_key(args, config, "penalty"),
    )
    protocol = ProtocolParams(committee_size=committee_size, threshold=threshold)
    probe = validate_model(
        ModelConfig(payoffs=payoffs, protocol=protocol, belief=Belief(0.0), initial_honest_fraction=0.5)
    )
    if isinstance(probe, list):
        details = "; ".join(f"[{v.code}] {v.message}" for v in probe)
        raise UsageError(f"invalid parameters: {details}")
    report = policy_sensitivity(payoffs, protocol)
    x1 = resolve_key(args, config, "x1", default=None)
    classification = None
    ambiguous = None
    if x1 is not None:
        model = build_model(args)
        try:
            outcome = classify_analytic(model)
            classification = evaluate_equilibrium(outcome, model)
        except BoundaryAmbiguous as exc:
            ambiguous = str(exc)
    if args.format == "json":
        payload = {
            "interior_fixed_point": report.threshold_share,
            "d_fixed_point_d_alpha": report.d_threshold_d_alpha,
            "d_fixed_point_d_alpha_analytic": report.d_threshold_d_alpha_analytic,
            "d_fixed_point_d_beta": report.d_threshold_d_beta,
            "d_fixed_point_d_beta_analytic": report.d_threshold_d_beta_analytic,
            "alpha_sign": report.alpha_sign,
            "beta_sign": report.beta_sign,
            "gamma": report.gamma,
            "gamma_step": report.gamma_step,
            "region_widths": report.region_widths_now,
            "region_width_deltas": report.region_width_deltas,
            "honest_boundary_only": report.honest_boundary_only,
        }
        if classification is not None:
            payload["classification"] = {"class": classification.outcome.value, "case": classification.case}
        if ambiguous is not None:
            payload["classification"] = {"ambiguous": ambiguous}
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    else:
        print(f"interior fixed point: {format_float(report.threshold_share)}")
        print(
            f"d x*/d alpha = {format_float(report.d_threshold_d_alpha)} "
            f"(analytic {format_float(report.d_threshold_d_alpha_analytic)}) sign {report.alpha_sign:+d}"
        )
        print(
            f"d x*/d beta  = {format_float(report.d_threshold_d_beta)} "
            f"(analytic {format_float(report.d_threshold_d_beta_analytic)}) sign {report.beta_sign:+d}"
        )
        widths = report.region_widths_now
        deltas = report.region_width_deltas
        print(
            f"region widths at gamma={format_float(report.gamma)}: "
            f"honest {format_float(widths['honest'])}, byzantine {format_float(widths['byzantine'])}, "
            f"pooling {format_float(widths['pooling'])}"
        )
        print(
            f"width deltas for gamma +{format_float(report.gamma_step)}: "
            f"honest {format_float(deltas['honest'])}, byzantine {format_float(deltas['byzantine'])}, "
            f"pooling {format_float(deltas['pooling'])}"
        )
        if report.honest_boundary_only:
            print("threshold equals committee size: the honest region is the single share x1 = 1")
        if classification is not None:
            print(f"classification at x1={format_float(x1)}: {classification.outcome.value} ({classification.case})")
        if ambiguous is not None:
            print(f"classification at x1={format_float(x1)}: ambiguous ({ambiguous})")
    if ambiguous is not None:
        return EXIT_UNRESOLVED
    if classification is not None:
        return _exit_for_outcome(classification.outcome)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="consensus-evo", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="iterate the population dynamics and print the trajectory")
    add_model_flags(p_sim)
    p_sim.add_argument("--agents", action="store_true", help="run the stochastic agent-based path")
    p_sim.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sim.add_argument("--out", metavar="PATH", help="write the trajectory here (figure rendered alongside)")
    p_sim.add_argument("--no-plot", action="store_true", help="skip the figure when writing --out")
    p_sim.set_defaults(handler=cmd_simulate)

    p_cls = sub.add_parser("classify", help="closed-form classification plus the security report")
    add_model_flags(p_cls)
    p_cls.add_argument("--format", choices=("csv", "json"), default="json")
    p_cls.add_argument("--out", metavar="PATH", help="write the report here")
    p_cls.set_defaults(handler=cmd_classify)

    p_swp = sub.add_parser("sweep", help="grid sweep written as CSV (region map rendered alongside)")
    add_model_flags(p_swp)
    p_swp.add_argument("--axis", action="append", metavar="NAME:LO:HI:STEPS", help="swept axis, up to 3")
    p_swp.add_argument("--master-seed", type=int, help="seed from which per-cell streams derive")
    p_swp.add_argument("--seeds-per-cell", type=int, help="agent-mode repeats per cell")
    p_swp.add_argument("--agents", action="store_true", help="agent-based cells instead of mean-field")
    p_swp.add_argument("--out", metavar="PATH", required=True, help="CSV output path")
    p_swp.add_argument("--no-plot", action="store_true", help="skip the region-map figure")
    p_swp.set_defaults(handler=cmd_sweep)

    p_mc = sub.add_parser("match-check", help="Monte Carlo audit of the matching belief")
    p_mc.add_argument("--agents", type=int, default=1000, help="population size")
    p_mc.add_argument("--x", type=float, action="append", help="honest fraction grid value (repeatable)")
    p_mc.add_argument("--m", type=float, action="append", help="assortativity grid value (repeatable)")
    p_mc.add_argument("--rounds", type=int, help="matching rounds per cell (default targets 1e5 agent-rounds)")
    p_mc.add_argument("--seed", type=int, default=0)
    p_mc.set_defaults(handler=cmd_match_check)

    p_sen = sub.add_parser("sensitivity", help="policy sensitivities of the fixed point and regions")
    add_model_flags(p_sen)
    p_sen.add_argument("--format", choices=("text", "json"), default="text")
    p_sen.set_defaults(handler=cmd_sensitivity)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
