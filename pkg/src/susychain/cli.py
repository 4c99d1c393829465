"""Command-line interface.

Subcommands: spectrum, witten, dynamics, sweep, cache. Every run that
writes files also writes a JSON manifest sufficient to reproduce them.
Exit codes: 0 success, 2 usage error, 3 numerical-consistency error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import shutil
import sys
from pathlib import Path

from . import __version__
from .analysis import (
    SweepSpec,
    compare_first_order,
    default_grid,
    fit_report_json,
    sweep,
    write_sweep_csv,
)
from .dynamics import ProtocolConfig, run_protocol, write_trace_csv
from .model import ModelParams
from .susy import (
    NumericalConsistencyError,
    assemble,
    witten_regularized,
    wtilde_gca_exact,
    wtilde_qgca_exact,
)

DEFAULT_N_LIST = tuple(range(3, 12))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cache-dir", default=None, help="spectrum cache directory")
    p.add_argument("--seed", type=int, default=1, help="base random seed")
    p.add_argument("--out", default=None, help="output file or directory")
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--config", default=None, help="key = value defaults file")
    p.add_argument("--J", type=float, default=-1.0)
    p.add_argument("--Delta", type=float, default=1.0)
    p.add_argument("--h", type=float, default=0.5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="susychain",
        description="Witten-index spectra, estimators, and Monte Carlo dynamics "
                    "for an open XXZ chain with a supersymmetric point.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = {}

    p = parser.subcommands["spectrum"] = sub.add_parser(
        "spectrum", help="sector level listing with zero modes")
    p.add_argument("--N", type=int, required=True)
    _add_common(p)

    p = parser.subcommands["witten"] = sub.add_parser(
        "witten", help="exact index estimators")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--which", choices=("regularized", "gca", "qgca"), default="gca")
    p.add_argument("--beta", type=float, default=5.0)
    p.add_argument("--beta0", type=float, default=None,
                   help="regularization beta for --which regularized")
    _add_common(p)

    p = parser.subcommands["dynamics"] = sub.add_parser(
        "dynamics", help="Metropolis collision traces")
    p.add_argument("--protocol", choices=("gca", "qgca"), default="gca")
    p.add_argument("--N", type=int, default=None,
                   help="single sector; default runs all of 3..11")
    p.add_argument("--beta", type=float, default=5.0)
    p.add_argument("--runs", type=int, default=50000)
    p.add_argument("--iterations", type=int, default=500)
    _add_common(p)

    p = parser.subcommands["sweep"] = sub.add_parser(
        "sweep", help="coupling sweeps and first-order fits")
    p.add_argument("--coupling", choices=("delta", "j"), default="delta")
    p.add_argument("--estimator",
                   choices=("exact-gca", "exact-qgca", "sampled-gca", "sampled-qgca"),
                   default="exact-gca")
    p.add_argument("--N", default="3,4,5,6,7,8,9,10,11",
                   help="comma-separated sector list")
    p.add_argument("--beta", type=float, default=5.0)
    p.add_argument("--points", type=int, default=21)
    p.add_argument("--values", default=None,
                   help="comma-separated coupling values (overrides --points grid)")
    p.add_argument("--runs", type=int, default=50000)
    p.add_argument("--iterations", type=int, default=500)
    _add_common(p)

    p = parser.subcommands["cache"] = sub.add_parser(
        "cache", help="inspect or clear the spectrum cache")
    p.add_argument("action", choices=("inspect", "clear"))
    _add_common(p)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Load `key = value` defaults; command-line flags still win."""
    if "--config" not in argv:
        return argv
    path = argv[argv.index("--config") + 1]
    defaults = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        defaults[key.replace("-", "_")] = value
    for sub in parser.subcommands.values():
        known = {a.dest for a in sub._actions}  # noqa: SLF001
        sub.set_defaults(**{
            k: _coerce(sub, k, v) for k, v in defaults.items() if k in known
        })
    return argv


def _coerce(parser: argparse.ArgumentParser, dest: str, value: str):
    for action in parser._actions:  # noqa: SLF001
        if action.dest == dest and action.type is not None:
            return action.type(value)
    return value


def _timestamp() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace,
                    outputs: list[Path], started: str) -> Path:
    manifest = {
        "command": command,
        "arguments": {k: v for k, v in sorted(vars(args).items()) if k != "config"},
        "base_seed": getattr(args, "seed", None),
        "version": __version__,
        "started": started,
        "finished": _timestamp(),
        "outputs": [str(p) for p in outputs],
        "cache_dir": args.cache_dir,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return path


def _params(args) -> ModelParams:
    return ModelParams(J=args.J, Delta=args.Delta, h=args.h)


def _cmd_spectrum(args) -> int:
    spec = assemble(args.N, _params(args), args.cache_dir)
    rows = [
        {"L": lv.key.L, "n_d": lv.key.n_d, "energy": lv.energy,
         "parity": lv.parity, "pair_id": lv.pair_id}
        for lv in spec.levels
    ]
    summary = {
        "N": spec.N,
        "zero_mode_count": spec.zero_mode_count,
        "zero_mode_length": spec.zero_mode_length,
        "levels": rows,
    }
    if args.format == "json":
        text = json.dumps(summary, indent=1) + "\n"
    elif args.format == "csv":
        lines = ["L,n_d,energy,parity,pair_id"]
        lines += [
            f"{r['L']},{r['n_d']},{float(r['energy'])!r},{r['parity']},"
            f"{'' if r['pair_id'] is None else r['pair_id']}"
            for r in rows
        ]
        text = "\n".join(lines) + "\n"
    else:
        lines = [f"{'L':>3} {'n_d':>4} {'energy':>18} {'parity':>7} {'pair':>5}"]
        for r in rows:
            pair = "-" if r["pair_id"] is None else str(r["pair_id"])
            star = "  *zero" if abs(r["energy"]) < 1e-10 else ""
            lines.append(
                f"{r['L']:>3} {r['n_d']:>4} {r['energy']:>18.12f} "
                f"{r['parity']:>7} {pair:>5}{star}"
            )
        lines.append(
            f"zero modes: {spec.zero_mode_count}"
            + (f" (at L={spec.zero_mode_length})" if spec.zero_mode_count else "")
        )
        text = "\n".join(lines) + "\n"
    return _emit(args, "spectrum", text)


def _cmd_witten(args) -> int:
    params = _params(args)
    if args.which == "regularized":
        beta0 = args.beta0 if args.beta0 is not None else 1.0
        value = witten_regularized(assemble(args.N, params, args.cache_dir), beta0)
        beta_used = beta0
    elif args.which == "gca":
        value = wtilde_gca_exact(assemble(args.N, params, args.cache_dir), args.beta)
        beta_used = args.beta
    else:
        value = wtilde_qgca_exact(args.N, params, args.beta, args.cache_dir)
        beta_used = args.beta
    if args.format == "json":
        text = json.dumps(
            {"N": args.N, "which": args.which, "beta": beta_used, "value": value},
            indent=1,
        ) + "\n"
    else:
        text = f"{value!r}\n"
    return _emit(args, "witten", text)


def _emit(args, command: str, text: str) -> int:
    if args.out is None:
        sys.stdout.write(text)
        return 0
    started = _timestamp()
    out = Path(args.out)
    if out.suffix:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        _write_manifest(out.parent, command, args, [out], started)
    else:
        out.mkdir(parents=True, exist_ok=True)
        target = out / f"{command}.txt"
        target.write_text(text)
        _write_manifest(out, command, args, [target], started)
    return 0


def _cmd_dynamics(args) -> int:
    started = _timestamp()
    sectors = [args.N] if args.N is not None else list(DEFAULT_N_LIST)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    outputs = []
    for N in sectors:
        config = ProtocolConfig(
            protocol=args.protocol, N=N, beta=args.beta,
            iterations=args.iterations, runs=args.runs,
            base_seed=args.seed, params=_params(args),
        )
        trace = run_protocol(config, args.cache_dir, args.threads)
        line = (
            f"{args.protocol} N={N} beta={args.beta}: "
            f"window estimate {trace.window_estimate:.6f} "
            f"+- {trace.window_stderr:.6f} ({trace.window_legit} in-sector samples)"
        )
        print(line)
        if out:
            path = out / f"trace_{args.protocol}_N{N}.csv"
            write_trace_csv(trace, path, {"version": __version__})
            outputs.append(path)
    if out:
        _write_manifest(out, "dynamics", args, outputs, started)
    return 0


def _cmd_sweep(args) -> int:
    started = _timestamp()
    n_list = tuple(int(s) for s in str(args.N).split(","))
    if args.values is not None:
        values = tuple(float(s) for s in args.values.split(","))
    else:
        values = default_grid(args.coupling, args.points)
    spec = SweepSpec(
        coupling=args.coupling, values=values, n_list=n_list, beta=args.beta,
        estimator=args.estimator, runs=args.runs, iterations=args.iterations,
        base_seed=args.seed,
    )
    records = sweep(spec, args.cache_dir, args.threads)
    meta = {
        "coupling": spec.coupling, "estimator": spec.estimator, "beta": spec.beta,
        "base_seed": spec.base_seed, "version": __version__,
    }
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"sweep_{spec.coupling}_{spec.estimator}.csv"
    write_sweep_csv(records, csv_path, meta)
    outputs = [csv_path]
    try:
        reports = compare_first_order(records, spec.beta)
    except ValueError as exc:
        print(f"fit skipped: {exc}", file=sys.stderr)
    else:
        fit_path = out / f"fit_{spec.coupling}_{spec.estimator}.json"
        fit_path.write_text(fit_report_json(reports))
        outputs.append(fit_path)
    _write_manifest(out, "sweep", args, outputs, started)
    for path in outputs:
        print(path)
    return 0


def _cmd_cache(args) -> int:
    if args.cache_dir is None:
        raise ValueError("cache command requires --cache-dir")
    root = Path(args.cache_dir)
    if args.action == "clear":
        if root.exists():
            shutil.rmtree(root)
        print(f"cleared {root}")
        return 0
    entries = sorted(root.glob("v*/*.json"))
    for sidecar in entries:
        info = json.loads(sidecar.read_text())
        print(
            f"{sidecar.with_suffix('.spec').name}: "
            f"L={info['L']} n_d={info['n_d']} "
            f"J={info['J']} Delta={info['Delta']} h={info['h']} "
            f"levels={len(info['energies'])}"
        )
    print(f"{len(entries)} entries")
    return 0


_COMMANDS = {
    "spectrum": _cmd_spectrum,
    "witten": _cmd_witten,
    "dynamics": _cmd_dynamics,
    "sweep": _cmd_sweep,
    "cache": _cmd_cache,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
    except OSError as exc:
        print(f"cannot read config file: {exc}", file=sys.stderr)
        return 4
    except (ValueError, IndexError) as exc:
        print(f"bad config file: {exc}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except NumericalConsistencyError as exc:
        print(f"numerical consistency failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
