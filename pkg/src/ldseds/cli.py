"""Command-line entry point.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime
failure (partial results, if any, are left on disk).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ldseds import __version__, harness, lds, stream
from ldseds.errors import ConfigError, InvalidArgument

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("ldseds")


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ldseds", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sample", help="dump a point set or expanded-stream blocks")
    s.add_argument("--generator", default="halton", choices=[g.value for g in lds.GeneratorId if g.value != "external"])
    s.add_argument("-n", type=int, required=True)
    s.add_argument("-d", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--construction", choices=[c.value for c in stream.Construction],
                   help="emit the flattened expanded sample set instead of a plain point set")
    s.add_argument("--mode", default="pso", choices=[m.value for m in stream.Mode])
    s.add_argument("--horizon", type=int, default=1)
    s.add_argument("--out", help="output file (default stdout)")

    s = sub.add_parser("dispersion", help="Monte Carlo dispersion of sampler streams")
    s.add_argument("-n", type=int, required=True)
    s.add_argument("-d", type=int, required=True)
    s.add_argument("--horizon", type=int, default=0, help="iterations G of the flattened set")
    s.add_argument("--mode", default="pso", choices=[m.value for m in stream.Mode])
    s.add_argument("--sampler", action="append", metavar="LABEL:CONSTRUCTION[:GENERATOR]",
                   help="repeatable; default compares random with direct halton")
    s.add_argument("--probes", type=int, default=100_000)
    s.add_argument("--probe-seed", type=int, default=7)
    s.add_argument("--seed", type=_ints, default=[0], help="comma-separated sampler seeds")
    s.add_argument("--out", help="write the table as JSON here")

    s = sub.add_parser("run", help="run an experiment from a TOML config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="override output_dir")
    s.add_argument("--jobs", type=int)
    s.add_argument("--seed", type=int, help="override master_seed")

    for name, helptext in (("rank", "Friedman/Nemenyi report from a results directory"),
                           ("report", "render CS(rank) tables")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("results", help="directory written by `run`")
        s.add_argument("--tol", type=_floats, help="comma-separated tolerances (default: config's)")
        s.add_argument("--alpha", type=float)
        s.add_argument("--out", help="directory for report files")
        if name == "report":
            s.add_argument("--format", choices=["text", "csv", "json"], default="text")
    return p


def _parse_sampler(text):
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise InvalidArgument(f"sampler {text!r} must be LABEL:CONSTRUCTION[:GENERATOR]")
    return harness.SamplerSpec(*parts)


def cmd_sample(args):
    if args.construction:
        eps = stream.build_stream(args.construction, args.n, args.d, args.horizon, args.mode,
                                  generator_id=args.generator, seed=args.seed, permutation_seed=args.seed)
        pts = eps.flatten()
    else:
        pts = lds.generate(args.generator, args.n, args.d, args.seed).points
    text = lds.format_points(pts)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_dispersion(args):
    samplers = [_parse_sampler(s) for s in args.sampler] if args.sampler else [
        harness.SamplerSpec("random", "random"), harness.SamplerSpec("halton", "direct", "halton")]
    rows = harness.dispersion_report(samplers, args.n, args.d, args.horizon, args.probes, args.seed,
                                     mode=args.mode, probe_seed=args.probe_seed)
    print(f"{'sampler':<16}{'seed':>8}{'dim':>6}  dispersion")
    for r in rows:
        print(f"{r['sampler']:<16}{r['seed']:>8}{r['total_dim']:>6}  {r['dispersion']:.6f}")
    if args.out:
        Path(args.out).write_text(json.dumps(rows, indent=2) + "\n")
    return EXIT_OK


def cmd_run(args):
    cfg = harness.load_config(args.config)
    if args.seed is not None or args.jobs is not None:
        raw = cfg.to_dict()
        if args.seed is not None:
            raw["master_seed"] = args.seed
        if args.jobs is not None:
            raw["jobs"] = args.jobs
        cfg = harness.ExperimentConfig.from_dict(raw)
    rs = harness.run_experiment(cfg, output_dir=args.out)
    n_runs = len(rs.manifest["runs"])
    failed = rs.failures
    print(f"{n_runs - len(failed)}/{n_runs} runs completed; results in {rs.root}")
    for entry in failed:
        print(f"failed: {entry['function']}/{entry['algorithm']}/run {entry['run']}: {entry['error']}",
              file=sys.stderr)
    return EXIT_RUNTIME if failed else EXIT_OK


def _reports(args):
    rs = harness.load_results(args.results)
    tols = args.tol or list(rs.config.tolerances)
    alpha = args.alpha if args.alpha is not None else rs.config.alpha
    for tol in tols:
        table = harness.summarize(rs, tol)
        yield tol, harness.rank_report(table, alpha)


def cmd_rank(args, fmt="text"):
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    for tol, (_, rendered) in _reports(args):
        if out:
            for ext in ("text", "csv", "json"):
                suffix = "txt" if ext == "text" else ext
                (out / f"rank_tol{tol:g}.{suffix}").write_text(getattr(rendered, ext))
        if fmt == "text":
            print(f"eps_tol = {tol:g}")
        sys.stdout.write(getattr(rendered, fmt))
        if fmt == "text":
            print()
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "sample":
            return cmd_sample(args)
        if args.command == "dispersion":
            return cmd_dispersion(args)
        if args.command == "run":
            return cmd_run(args)
        if args.command == "rank":
            return cmd_rank(args)
        return cmd_rank(args, args.format)
    except (ConfigError, InvalidArgument, ValueError) as exc:
        print(f"ldseds: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"ldseds: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
