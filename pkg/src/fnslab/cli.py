"""Batch command-line front end.

Each invocation runs one command against a flat key=value configuration and
writes its artifacts (field snapshots, CSV reports, JSON summary, and the
figures rendered from the delimited output) into the output directory.

Exit codes: 0 success, 1 configuration or usage error, 2 solver divergence
(a divergence report is still written).
"""

from __future__ import annotations

import argparse
import platform
import sys
import time
from pathlib import Path

import matplotlib
import numpy as np

from . import __version__
from .bootstrap import bootstrap_exponent, iterate_bootstrap, shell_spectrum, spectral_tail_fit
from .config import (
    ConfigError,
    RunConfig,
    merge_mappings,
    parse_config_file,
    parse_override,
)
from .forcing import (
    build_forcing,
    decaying_solenoidal_field,
    scale_to_sobolev_norm,
    validate_forcing,
)
from .liouville import decay_scan
from .norms import (
    embedding_trials,
    fractional_leibniz_trials,
    lebesgue_norm,
    product_rule_trials,
    sobolev_norm,
)
from .reports import write_csv, write_json
from .snapshot import read_snapshot, write_snapshot
from .solver import (
    continuation_solve,
    energy_inequality_check,
    picard_solve,
    recover_pressure,
)
from .spectral import Grid, SpectralField, transform_inverse
from . import figures

COMMANDS = (
    "solve",
    "liouville-scan",
    "verify-energy",
    "norms",
    "bootstrap",
    "check-lemmas",
)

LEDGER_HEADER = ("iter", "H1", "Halpha2", "residual")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fnslab",
        description=(
            "Pseudo-spectral laboratory for stationary fractional "
            "Navier-Stokes flows on a periodic box."
        ),
    )
    parser.add_argument("command", nargs="?", help="|".join(COMMANDS))
    parser.add_argument("--config", metavar="PATH", help="key=value config file")
    parser.add_argument(
        "--set",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        dest="overrides",
        help="override a config key (repeatable)",
    )
    parser.add_argument(
        "--output", metavar="DIR", default="fnslab-out", help="artifact directory"
    )
    parser.add_argument("--seed", type=int, default=None, help="run seed")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


class _Run:
    """Shared per-run state: config, output dir, logging, artifact list."""

    def __init__(self, config: RunConfig, outdir: Path, quiet: bool):
        self.config = config
        self.outdir = outdir
        self.quiet = quiet
        self.artifacts: list[str] = []
        self.results: dict = {}
        self.started = time.perf_counter()

    def say(self, message: str):
        if not self.quiet:
            print(message)

    def add(self, path: Path):
        self.artifacts.append(path.name)
        return path

    def csv(self, name: str, header, rows):
        return self.add(write_csv(self.outdir / name, header, rows))

    def json(self, name: str, payload):
        return self.add(write_json(self.outdir / name, payload))

    def snapshot(self, name: str, field):
        write_snapshot(self.outdir / name, field)
        return self.add(self.outdir / name)

    def figure(self, name: str, renderer, *args):
        if self.config.plots:
            self.add(renderer(*args, self.outdir / name))

    def finish(self, command: str, status: str) -> None:
        summary = {
            "command": command,
            "status": status,
            "config": self.config.to_mapping(),
            "versions": {
                "python": platform.python_version(),
                "numpy": np.__version__,
                "matplotlib": matplotlib.__version__,
                "fnslab": __version__,
            },
            "wall_time_s": time.perf_counter() - self.started,
            "artifacts": sorted(self.artifacts),
            "results": self.results,
        }
        write_json(self.outdir / "summary.json", summary)


def _prepare_forcing(run: _Run):
    config = run.config
    f = build_forcing(config.grid, config.forcing)
    if config.forcing_target_dual is not None and config.forcing.amplitude != 0:
        f = scale_to_sobolev_norm(
            f, -0.5 * config.solver.alpha, config.forcing_target_dual
        )
    validate_forcing(f)
    return f


def _load_field(run: _Run, name: str):
    path = Path(run.config.input_dir) / name
    if not path.exists():
        raise ConfigError(f"input snapshot not found: {path}")
    field = read_snapshot(path)
    if not isinstance(field, SpectralField):
        raise ConfigError(f"{path}: expected a spectral snapshot")
    return field


def _ledger_rows(solution):
    return [tuple(row) for row in solution.energy_ledger]


def _cmd_solve(run: _Run) -> int:
    config = run.config
    f = _prepare_forcing(run)
    run.snapshot("forcing.fns", f)
    if config.solver.continuation:
        result = continuation_solve(f, config.solver)
        final = result.stages[-1]
        run.csv(
            "stages.csv",
            ("stage", "epsilon", "cutoff_radius", "iterations", "status",
             "residual", "Halpha2", "distance_from_previous"),
            [
                (
                    i,
                    eps,
                    radius,
                    sol.iterations_used,
                    sol.status,
                    sol.residual_norm,
                    sobolev_norm(sol.velocity, 0.5 * config.solver.alpha),
                    result.stage_distances[i - 1] if i >= 1 else "",
                )
                for i, ((eps, radius), sol) in enumerate(
                    zip(result.schedule, result.stages)
                )
            ],
        )
        run.results["stage_distances"] = list(result.stage_distances)
        run.results["halted_stage"] = result.halted_stage
        solved = result.halted_stage is None
    else:
        final = picard_solve(f, config.solver)
        solved = final.converged
    run.snapshot("velocity.fns", final.velocity)
    run.snapshot("pressure.fns", final.pressure)
    run.csv("energy_ledger.csv", LEDGER_HEADER, _ledger_rows(final))
    run.figure("convergence.png", figures.plot_convergence, _ledger_rows(final))
    run.results.update(
        {
            "status": final.status,
            "iterations": final.iterations_used,
            "residual_norm": final.residual_norm,
            "pde_residual_norm": final.pde_residual_norm,
            "velocity_Halpha2": sobolev_norm(final.velocity, 0.5 * config.solver.alpha),
            "forcing_dual_norm": sobolev_norm(f, -0.5 * config.solver.alpha),
        }
    )
    run.say(
        f"solve: {final.status} after {final.iterations_used} iterations, "
        f"fixed-point residual {final.residual_norm:.3e}"
    )
    return 0 if solved else 2


def _cmd_verify_energy(run: _Run) -> int:
    config = run.config
    if config.input_dir:
        velocity = _load_field(run, "velocity.fns")
        f = _load_field(run, "forcing.fns")
        validate_forcing(f)
    else:
        f = _prepare_forcing(run)
        sol = picard_solve(f, config.solver)
        velocity = sol.velocity
    checks = energy_inequality_check(velocity, f, config.solver)
    run.csv(
        "energy_check.csv",
        ("inequality", "lhs", "rhs", "slack", "rel_slack", "passed"),
        [(c.name, c.lhs, c.rhs, c.slack, c.rel_slack, c.passed) for c in checks],
    )
    run.figure("energy_slack.png", figures.plot_energy_checks, checks)
    run.results["checks"] = {
        c.name: {"rel_slack": c.rel_slack, "passed": c.passed} for c in checks
    }
    worst = min(c.rel_slack for c in checks)
    run.say(f"verify-energy: worst relative slack {worst:+.3e}")
    return 0


def _cmd_liouville_scan(run: _Run) -> int:
    config = run.config
    if config.input_dir:
        u = _load_field(run, "velocity.fns")
        pressure_path = Path(config.input_dir) / "pressure.fns"
        if pressure_path.exists():
            p = read_snapshot(pressure_path)
        else:
            p = recover_pressure(u)
    else:
        u = decaying_solenoidal_field(
            config.grid,
            seed=config.scan.seed,
            band=config.scan.band,
            width=config.scan.width,
            envelope=config.scan.envelope,
        )
        p = recover_pressure(u)
    report = decay_scan(
        u, p, config.scan.alpha, config.scan.epsilon, config.scan.radii, config.scan.nu
    )
    run.csv(
        "liouville_scan.csv",
        ("R", "I_a", "I_b", "I_c", "truncated_energy"),
        list(
            zip(
                report.radii,
                report.commutator,
                report.cubic_flux,
                report.pressure_flux,
                report.truncated_energy,
            )
        ),
    )
    run.json(
        "liouville_summary.json",
        {
            "alpha": report.alpha,
            "eps_param": report.eps_param,
            "nu": report.nu,
            "total_energy": report.total_energy,
            "slopes": report.fitted_slopes,
            "predicted": report.predicted,
            "regime": report.regime,
            "regime_ok": report.regime_ok,
            "slope_flags": report.slope_flags,
        },
    )
    run.figure("decay.png", figures.plot_decay_scan, report)
    run.results["slopes"] = report.fitted_slopes
    run.results["regime"] = report.regime
    if not report.regime_ok:
        run.say(
            f"liouville-scan: warning: (alpha={report.alpha}, eps={report.eps_param}) "
            "violates the admissible-regime conditions; scan ran in exploration mode"
        )
    run.say(f"liouville-scan: fitted slopes {report.fitted_slopes}")
    return 0


def _cmd_norms(run: _Run) -> int:
    config = run.config
    if config.input_dir:
        field = _load_field(run, "velocity.fns")
    else:
        field = _prepare_forcing(run)
    phys = transform_inverse(field)
    rows = []
    for q in config.norms_lebesgue:
        rows.append(("lebesgue", q, lebesgue_norm(phys, q)))
    for s in config.norms_sobolev:
        rows.append(("homogeneous_sobolev", s, sobolev_norm(field, s)))
    run.csv("norms.csv", ("kind", "order", "value"), rows)
    kappa, energy = shell_spectrum(field)
    run.figure("spectrum.png", figures.plot_shell_spectrum, kappa, energy)
    run.results["norms"] = [
        {"kind": kind, "order": order, "value": value} for kind, order, value in rows
    ]
    run.say(f"norms: wrote {len(rows)} rows")
    return 0


def _cmd_bootstrap(run: _Run) -> int:
    config = run.config
    try:
        plan = iterate_bootstrap(
            config.bootstrap_alpha, config.bootstrap_mode, config.bootstrap_target
        )
    except ValueError as exc:
        raise ConfigError(f"bootstrap: {exc}") from None
    payload = {
        "alpha": plan.alpha,
        "mode": plan.mode,
        "sigma_sequence": list(plan.sigma_sequence),
        "increment": plan.increment,
        "tail_fit": None,
    }
    if config.input_dir and config.tail_orders:
        velocity = _load_field(run, "velocity.fns")
        payload["tail_fit"] = [
            {
                "order": fit.order,
                "verdict": fit.verdict,
                "tail_slope": fit.tail_slope,
                "last_shell_fraction": fit.last_shell_fraction,
                "increment_fraction": fit.increment_fraction,
            }
            for fit in (
                spectral_tail_fit(velocity, s) for s in config.tail_orders
            )
        ]
    run.json("bootstrap.json", payload)
    run.csv(
        "bootstrap.csv",
        ("pass", "sigma"),
        [(i + 1, s) for i, s in enumerate(plan.sigma_sequence)],
    )
    run.figure("sigma_sequence.png", figures.plot_sigma_sequence, plan)
    run.results["sigma_sequence"] = list(plan.sigma_sequence)
    run.say(
        f"bootstrap: sigma_1 = {plan.sigma_sequence[0]} gains {plan.increment} per pass, "
        f"{len(plan.sigma_sequence)} passes to exceed {config.bootstrap_target}"
    )
    return 0


def _cmd_check_lemmas(run: _Run) -> int:
    config = run.config
    lemmas = config.lemmas
    grid = Grid(lemmas.grid_n, config.grid.box_len)
    records = []
    records += product_rule_trials(
        grid,
        lemmas.product_s,
        lemmas.product_delta,
        trials=lemmas.trials,
        seed=config.seed,
    )
    records += fractional_leibniz_trials(
        grid,
        lemmas.leibniz_s1,
        lemmas.leibniz_s2,
        lemmas.leibniz_p1,
        lemmas.leibniz_p2,
        trials=lemmas.trials,
        seed=config.seed + 10_000,
    )
    records += embedding_trials(
        grid, lemmas.embedding_s, trials=lemmas.trials, seed=config.seed + 20_000
    )
    run.csv(
        "lemma_checks.csv",
        ("checker", "params", "trial_seed", "lhs", "rhs", "ratio"),
        [(r.checker, r.params, r.trial_seed, r.lhs, r.rhs, r.ratio) for r in records],
    )
    summary = {}
    for name in sorted({r.checker for r in records}):
        ratios = sorted(r.ratio for r in records if r.checker == name)
        median = ratios[len(ratios) // 2]
        summary[name] = {
            "trials": len(ratios),
            "max_ratio": ratios[-1],
            "median_ratio": median,
            "stable": bool(ratios[-1] <= 10.0 * median),
        }
    run.json("lemma_summary.json", summary)
    run.figure("lemma_ratios.png", figures.plot_ratio_histograms, records)
    run.results["checkers"] = summary
    run.say(
        "check-lemmas: "
        + "; ".join(f"{k}: max {v['max_ratio']:.3g}" for k, v in summary.items())
    )
    return 0


_DISPATCH = {
    "solve": _cmd_solve,
    "liouville-scan": _cmd_liouville_scan,
    "verify-energy": _cmd_verify_energy,
    "norms": _cmd_norms,
    "bootstrap": _cmd_bootstrap,
    "check-lemmas": _cmd_check_lemmas,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if args.command is None or args.command not in COMMANDS:
        parser.print_usage(sys.stderr)
        print(
            f"fnslab: expected a command out of: {', '.join(COMMANDS)}",
            file=sys.stderr,
        )
        return 1

    try:
        mapping = {}
        if args.config:
            mapping = parse_config_file(args.config)
        overrides = dict(parse_override(item) for item in args.overrides)
        mapping = merge_mappings(mapping, overrides)
        if args.seed is not None:
            mapping["seed"] = str(args.seed)
        config = RunConfig.from_mapping(mapping)
    except ConfigError as exc:
        print(f"fnslab: {exc}", file=sys.stderr)
        return 1

    outdir = Path(args.output)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        probe = outdir / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"fnslab: output directory not writable: {exc}", file=sys.stderr)
        return 1

    run = _Run(config, outdir, args.quiet)
    try:
        code = _DISPATCH[args.command](run)
    except ConfigError as exc:
        print(f"fnslab: {exc}", file=sys.stderr)
        run.finish(args.command, "config-error")
        return 1
    run.finish(args.command, "ok" if code == 0 else "diverged")
    return code


if __name__ == "__main__":
    sys.exit(main())
