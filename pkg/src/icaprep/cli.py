"""``icaprep`` command line.

Exit codes: 0 when every enabled check passes, 1 when a check fails, 2 for
a bad configuration or unreadable input.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import fields

from .errors import IcaPrepError
from .io import FORMATS, load_signals, report_json, save_report, save_signals
from .matrices import SignalMatrix
from .oracle import SCENARIO_KINDS, generate_bss
from .pipeline import SWEEPABLE, RunConfig, cmd_run, cmd_sweep, format_summary, sweep_csv

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
SEED_ENV = "ICAPREP_SEED"


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    d = RunConfig()
    p.add_argument("--N", type=int, default=d.N, help="number of received signals (even)")
    p.add_argument("--M", type=int, default=d.M, help="samples per signal (power of two)")
    p.add_argument("--word-length", type=int, default=d.word_length)
    p.add_argument("--frac-bits", type=int, default=d.frac_bits)
    p.add_argument("--cordic-iters", type=int, default=d.cordic_iters)
    p.add_argument("--evd-sweeps", type=int, default=d.evd_sweeps)
    p.add_argument("--issue-interval", type=int, default=d.issue_interval)
    p.add_argument("--pipeline-depth", type=int, default=d.pipeline_depth)
    p.add_argument("--clock-hz", type=float, default=d.clock_hz)
    p.add_argument("--seed", type=int, default=d.seed, help=f"scenario seed; {SEED_ENV} overrides")
    p.add_argument("--scenario-kind", choices=SCENARIO_KINDS, default=d.scenario_kind)
    p.add_argument("--peak", type=float, default=d.peak, help="largest generated sample component")
    p.add_argument("--cond-max", type=float, default=d.cond_max, help="mixing-matrix condition bound")
    p.add_argument("--input", dest="input_path", help="signal file to load instead of generating")
    p.add_argument("--input-format", choices=FORMATS)
    p.add_argument("--output", dest="output_path", help="write the JSON report here")


def _config(args: argparse.Namespace) -> RunConfig:
    values = {f.name: getattr(args, f.name) for f in fields(RunConfig) if hasattr(args, f.name)}
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            values["seed"] = int(env)
        except ValueError:
            raise IcaPrepError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    if values.get("input_path"):
        # the file header is authoritative for dimensions and format
        Y = load_signals(values["input_path"], values.get("input_format"))
        values.update(N=Y.N, M=Y.M, word_length=Y.fmt.word_length, frac_bits=Y.fmt.frac_bits)
    return RunConfig(**values)


def _run(args) -> int:
    cfg = _config(args)
    report = cmd_run(cfg)
    print(format_summary(report))
    if cfg.output_path:
        save_report(report, cfg.output_path)
    elif args.json:
        sys.stdout.write(report_json(report.to_dict()))
    return EXIT_OK if report.passed else EXIT_FAIL


def _sweep(args) -> int:
    cfg = _config(args)
    reports = cmd_sweep(cfg, args.axis, args.values, workers=args.workers)
    table = sweep_csv(args.axis, reports)
    if cfg.output_path:
        with open(cfg.output_path, "w") as fh:
            fh.write(table)
    else:
        sys.stdout.write(table)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def _gen(args) -> int:
    cfg = _config(args)
    if not cfg.output_path:
        raise IcaPrepError("gen needs --output")
    sc = generate_bss(cfg.N, cfg.M, cfg.seed, cfg.scenario_kind, cond_max=cfg.cond_max, peak=cfg.peak)
    Y = SignalMatrix.from_complex(sc.Y, cfg.fmt)
    save_signals(Y, cfg.output_path, args.format)
    print(f"wrote {cfg.output_path}: N={Y.N} M={Y.M} {Y.fmt} kind={cfg.scenario_kind} seed={cfg.seed}")
    return EXIT_OK


def _check(args) -> int:
    from .acceptance import run_all

    results = run_all(set(args.only) if args.only else None)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="icaprep", description="Cycle-level model of an ICA preprocessor.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one matrix end to end and compare with the float oracle")
    _add_config_flags(run)
    run.add_argument("--json", action="store_true", help="print the JSON report when no --output is given")
    run.set_defaults(func=_run)

    sweep = sub.add_parser("sweep", help="repeat run over values of one parameter; CSV out")
    _add_config_flags(sweep)
    sweep.add_argument("--axis", required=True, choices=sorted(SWEEPABLE))
    sweep.add_argument("--values", required=True, nargs="+")
    sweep.add_argument("--workers", type=int, default=1)
    sweep.set_defaults(func=_sweep)

    gen = sub.add_parser("gen", help="write a generated scenario to a signal file")
    _add_config_flags(gen)
    gen.add_argument("--format", choices=FORMATS, help="defaults to the output file suffix")
    gen.set_defaults(func=_gen)

    check = sub.add_parser("check", help="run the acceptance suite")
    check.add_argument("--only", type=int, nargs="+", metavar="K", help="criterion numbers to run")
    check.set_defaults(func=_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (IcaPrepError, ValueError, OSError) as exc:
        print(f"icaprep: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
