"""Command-line interface: ``latentlog {fit,transform,synth,compare}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 convergence failure.
"""

import argparse
import logging
import sys

from . import __version__
from .exceptions import ConvergenceError, LatentLogError
from .experiments import SynthConfig, compare_table, generate, parse_o_spec
from .icm import FitOptions
from .io import read_table, write_columns, write_table
from .map_solver import PriorSpec
from .transform import load_prior, save_prior, transform_fixed, transform_learned

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONVERGENCE = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _delimiter(text):
    if text in ("\\t", "tab", "TAB"):
        return "\t"
    if len(text) != 1:
        raise argparse.ArgumentTypeError("delimiter must be a single character or 'tab'")
    return text


def _positive(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _o_spec(text):
    try:
        return parse_o_spec(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _table_args(p):
    p.add_argument("--input", required=True, help="delimited input file")
    p.add_argument("--output", required=True, help="output file")
    p.add_argument("--t-col", default="t", help="measurement column (default: t)")
    p.add_argument("--o-col", default=None,
                   help="exposure column (default: o if present, else o = 1)")
    p.add_argument("--delimiter", type=_delimiter, default=",", help="field separator or 'tab'")


def build_parser():
    parser = _Parser(prog="latentlog", description="Latent logarithm of non-negative data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="learn the prior by ICM and transform")
    _table_args(p)
    p.add_argument("--save-prior", help="write the learned prior here")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=_positive, default=1e-8)
    p.add_argument("--mu-step", choices=("profile", "mean"), default="profile")

    p = sub.add_parser("transform", help="transform under a fixed prior")
    _table_args(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--prior", help="prior document")
    g.add_argument("--mu", type=float, help="prior mean (with --sigma2)")
    p.add_argument("--sigma2", type=_positive, help="prior variance (with --mu)")

    p = sub.add_parser("synth", help="simulate from the hierarchy")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--sigma2", type=_positive, required=True)
    p.add_argument("--o-spec", type=_o_spec, required=True,
                   help="const:<v>, loggrid:<lo>:<hi> or lognormal:<m>:<s>")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--zero-counts", action="store_true", help="force every t to 0")
    p.add_argument("--method", choices=("grid", "poisson"), default="grid",
                   help="continuous inverse-CDF draws or integer Poisson counts")

    p = sub.add_parser("compare", help="lag next to log(t + pseudocount)")
    _table_args(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--prior", help="prior document")
    g.add_argument("--fit", action="store_true", help="learn the prior from the input")
    p.add_argument("--pseudocount", type=_positive, default=1.0)
    return parser


def _read(args):
    return read_table(args.input, t_col=args.t_col, o_col=args.o_col, delimiter=args.delimiter)


def _report(prior, fit=None):
    print(f"mu = {prior.mu!r}", file=sys.stderr)
    print(f"sigma2 = {prior.sigma2!r}", file=sys.stderr)
    if fit is not None:
        print(f"iterations = {fit.iterations}", file=sys.stderr)
        print(f"converged = {'yes' if fit.converged else 'no'}", file=sys.stderr)


def _learn(rows, args):
    opts = FitOptions(tol=getattr(args, "tol", 1e-8), max_iter=getattr(args, "max_iter", 500),
                      mu_step=getattr(args, "mu_step", "profile"))
    return transform_learned((rows.t, rows.o), opts=opts)


def cmd_fit(args):
    rows = _read(args)
    res = _learn(rows, args)
    write_table(rows, res, args.output)
    if args.save_prior:
        save_prior(res.prior, args.save_prior, n_fit=len(rows))
    _report(res.prior, res.fit)
    return EXIT_OK if res.fit.converged else EXIT_CONVERGENCE


def cmd_transform(args):
    if args.prior is not None:
        if args.sigma2 is not None:
            raise _UsageError("--sigma2 goes with --mu, not --prior")
        prior = load_prior(args.prior)
    else:
        if args.sigma2 is None:
            raise _UsageError("--mu requires --sigma2")
        prior = PriorSpec(args.mu, args.sigma2)
    rows = _read(args)
    write_table(rows, transform_fixed((rows.t, rows.o), prior), args.output)
    return EXIT_OK


def cmd_synth(args):
    if args.n < 1:
        raise _UsageError("--n must be at least 1")
    cfg = SynthConfig(n=args.n, mu=args.mu, sigma2=args.sigma2, o_spec=args.o_spec,
                      seed=args.seed, zero_counts=args.zero_counts, method=args.method)
    write_columns(args.output, generate(cfg).columns())
    return EXIT_OK


def cmd_compare(args):
    rows = _read(args)
    if args.fit:
        res = _learn(rows, args)
        _report(res.prior, res.fit)
        status = EXIT_OK if res.fit.converged else EXIT_CONVERGENCE
    else:
        res = transform_fixed((rows.t, rows.o), load_prior(args.prior))
        status = EXIT_OK
    write_columns(args.output, compare_table(res, args.pseudocount), delimiter=rows.delimiter)
    return status


COMMANDS = {"fit": cmd_fit, "transform": cmd_transform, "synth": cmd_synth, "compare": cmd_compare}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if not exc.code else EXIT_USAGE

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr, force=True)
    try:
        return COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"latentlog {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"latentlog: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (LatentLogError, ValueError, OSError) as exc:
        print(f"latentlog: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
