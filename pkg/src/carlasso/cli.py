"""``carlasso`` command line: fit, summary, graph, simulate.

Exit codes: 0 success, 1 pipeline failure (structured message on stderr),
2 flag misuse. Progress lines go to stderr; results go to files.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
from pathlib import Path

from . import __version__
from .chainio import load_fit, summary_dict, write_fit
from .errors import CarlassoError, FitDirectoryError
from .graph import build_graph, export_graph
from .inference import FitRequest, fit
from .model import LINKS, Hyperparams
from .simulate import simulate, write_simulation

BUNDLED_PREFIX = "bundled:"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _fraction(s: str) -> float:
    v = float(s)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {s}")
    return v


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {s}")
    return v


def _nonneg_int(s: str) -> int:
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be a non-negative integer, got {s}")
    return v


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="carlasso", description="Sparse chain-graph models fitted by Gibbs sampling.",
                     formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fit", help="run the sampler and write a fit directory", formatter_class=fmt)
    f.add_argument("--formula", required=True, help="'y1 + ... + yk ~ x1 + ... + xp'")
    f.add_argument("--data", required=True,
                   help=f"CSV path, or {BUNDLED_PREFIX}NAME for a dataset shipped with the package")
    f.add_argument("--link", choices=LINKS, default="identity", help="response link")
    f.add_argument("--adaptive", action="store_true", help="separate shrinkage rate per coefficient and edge")
    f.add_argument("--n-iter", type=_positive_int, default=5000, help="sweeps after burn-in")
    f.add_argument("--burn-in", type=_nonneg_int, default=1000, help="discarded sweeps (MH step sizes adapt here)")
    f.add_argument("--thin", type=_positive_int, default=10, help="keep every THIN-th post-burn-in sweep")
    f.add_argument("--seed", type=_nonneg_int, default=0, help="RNG seed")
    f.add_argument("--chains", type=_positive_int, default=1, help="independent chains (parallel, capped by CARLASSO_THREADS)")
    f.add_argument("--ci-level", type=_fraction, default=0.90, help="equal-tailed credible interval level")
    f.add_argument("--r-beta", type=_positive_float, default=1.0, help="Gamma shape for lambda_beta")
    f.add_argument("--delta-beta", type=_positive_float, default=0.01, help="Gamma rate for lambda_beta")
    f.add_argument("--r-omega", type=_positive_float, default=1.0, help="Gamma shape for lambda_omega")
    f.add_argument("--delta-omega", type=_positive_float, default=0.01, help="Gamma rate for lambda_omega")
    f.add_argument("--mu-prior-precision", type=float, default=0.0,
                   help="precision of the N(0, 1/c) intercept prior; 0 is flat")
    f.add_argument("--out", required=True, help="output directory (must be empty or absent)")
    f.add_argument("--force", action="store_true", help="replace a non-empty output directory")
    f.add_argument("--quiet", action="store_true", help="suppress progress lines")
    f.set_defaults(func=cmd_fit, subparser=f)

    s = sub.add_parser("summary", help="print the posterior summary of a fit as JSON", formatter_class=fmt)
    s.add_argument("--fit", required=True, help="fit directory written by 'carlasso fit'")
    s.add_argument("--ci-level", type=_fraction, default=None, help="recompute intervals at this level (default: the fit's)")
    s.add_argument("--out", default=None, help="write JSON here instead of stdout")
    s.set_defaults(func=cmd_summary, subparser=s)

    g = sub.add_parser("graph", help="export the chain graph of a fit", formatter_class=fmt)
    g.add_argument("--fit", required=True, help="fit directory written by 'carlasso fit'")
    g.add_argument("--format", choices=("dot", "graphml", "json"), default="dot", help="output format")
    g.add_argument("--out", required=True, help="output file")
    g.add_argument("--ci-level", type=_fraction, default=None,
                   help="include edges whose interval at this level excludes 0 (default: the fit's level)")
    g.add_argument("--min-abs-weight", type=float, default=None,
                   help="include edges by |posterior mean weight| >= this instead of intervals")
    g.add_argument("--alpha-frac", type=_fraction, default=0.5,
                   help="alpha-centrality damping as a fraction of 1/spectral radius")
    g.set_defaults(func=cmd_graph, subparser=g)

    m = sub.add_parser("simulate", help="write synthetic data with a known chain graph", formatter_class=fmt)
    m.add_argument("--k", type=int, required=True, help="number of responses")
    m.add_argument("--p", type=int, required=True, help="number of predictors")
    m.add_argument("--n", type=int, required=True, help="number of rows")
    m.add_argument("--link", choices=LINKS, default="identity", help="response link")
    m.add_argument("--seed", type=_nonneg_int, default=0, help="RNG seed")
    m.add_argument("--frac-nonzero", type=float, default=0.3, help="fraction of B entries set to +-1")
    m.add_argument("--row-total", type=int, default=1000, help="multinomial total per row (logit link)")
    m.add_argument("--out", required=True, help="output directory for data.csv and truth.json")
    m.add_argument("--force", action="store_true", help="replace a non-empty output directory")
    m.set_defaults(func=cmd_simulate, subparser=m)
    return parser


def _resolve_data(spec: str):
    if spec.startswith(BUNDLED_PREFIX):
        from .data import bundled_path

        return bundled_path(spec[len(BUNDLED_PREFIX):])
    return spec


def _progress_printer():
    last = [-1]

    def report(done: int, total: int) -> None:
        decile = done * 10 // total
        if decile > last[0] and decile > 0:
            last[0] = decile
            print(f"carlasso: {decile * 10:3d}% ({done}/{total} sweeps)", file=sys.stderr, flush=True)

    return report


def cmd_fit(args, parser) -> int:
    try:
        hyper = Hyperparams(
            link=args.link, adaptive=args.adaptive, n_iter=args.n_iter, n_burn_in=args.burn_in,
            thin_by=args.thin, seed=args.seed, r_beta=args.r_beta, delta_beta=args.delta_beta,
            r_omega=args.r_omega, delta_omega=args.delta_omega, mu_prior_precision=args.mu_prior_precision,
        )
        request = FitRequest(args.formula, _resolve_data(args.data), hyper, args.ci_level, args.chains)
    except ValueError as e:
        parser.error(str(e))
    out_dir = Path(args.out)
    if out_dir.exists() and not out_dir.is_dir():
        raise FitDirectoryError(f"{out_dir} exists and is not a directory", location=str(out_dir))
    if out_dir.exists() and any(out_dir.iterdir()) and not args.force:
        raise FitDirectoryError(f"output directory {out_dir} is not empty (use --force to replace it)",
                                location=str(out_dir))
    out, chains = fit(request, None if args.quiet else _progress_printer())
    write_fit(out_dir, out, chains, overwrite=args.force)
    print(f"carlasso: wrote {out.draws.draw_count} draws to {out_dir}", file=sys.stderr)
    return 0


def cmd_summary(args, parser) -> int:
    out = load_fit(args.fit, args.ci_level)
    text = json.dumps(summary_dict(out), indent=2) + "\n"
    if args.out:
        _atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_graph(args, parser) -> int:
    if args.min_abs_weight is not None and args.min_abs_weight < 0:
        parser.error("--min-abs-weight must be non-negative")
    out = load_fit(args.fit)
    graph = build_graph(out, args.ci_level, args.min_abs_weight, args.alpha_frac)
    target = Path(args.out)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent if str(target.parent) else ".")
    os.close(fd)
    try:
        export_graph(graph, args.format, tmp)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    n_resp = sum(n.kind == "response" for n in graph.nodes)
    n_inc = len(graph.included_edges)
    print(f"{len(graph.nodes)} nodes ({n_resp} response, {len(graph.nodes) - n_resp} predictor), "
          f"{n_inc} of {len(graph.edges)} edges included")
    return 0


def cmd_simulate(args, parser) -> int:
    if args.k < 1 or args.p < 0 or args.n < 1:
        parser.error(f"invalid dimensions k={args.k}, p={args.p}, n={args.n}")
    if args.link == "logit" and args.k < 2:
        parser.error("the logit link needs --k >= 2")
    if not 0 <= args.frac_nonzero <= 1:
        parser.error("--frac-nonzero must lie in [0, 1]")
    if args.row_total < 1:
        parser.error("--row-total must be positive")
    out_dir = Path(args.out)
    if out_dir.exists() and any(out_dir.iterdir()) and not args.force:
        raise FitDirectoryError(f"output directory {out_dir} is not empty (use --force to replace it)",
                                location=str(out_dir))
    sim = simulate(args.k, args.p, args.n, args.link, args.seed, args.frac_nonzero, args.row_total)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.", dir=out_dir.parent))
    try:
        write_simulation(sim, stage / "data.csv", stage / "truth.json")
        if out_dir.exists():
            shutil.rmtree(out_dir)
        os.replace(stage, out_dir)
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    print(f"{sim.Y.shape[0]} rows, formula: {sim.formula}")
    return 0


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent if str(path.parent) else ".")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def format_error(err: CarlassoError) -> str:
    loc = f" at {err.location}" if err.location else ""
    return f"carlasso: error [{err.kind}]{loc}: {err}"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, args.subparser)
    except CarlassoError as e:
        print(format_error(e), file=sys.stderr)
        return 1
    except OSError as e:
        print(f"carlasso: error [IOError] at {e.filename}: {e.strerror}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
