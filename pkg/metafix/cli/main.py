#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Command-line entry point: `metafix solve|simulate|sweep`.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure
(non-convergence, divergence, exhausted budget).
"""

__all__ = ["main", "make_parser"]

import argparse
import logging
import sys

from .. import __version__
from ..colorizer import ColorScheme, colorize
from ..errors import ConfigError, MetafixError, NumericalFailure
from ..log import setup_logging
from ..testmaps import map_names
from .commands import SOLVERS, cmd_simulate, cmd_solve, cmd_sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


def _floats(text):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def make_parser():
    parser = argparse.ArgumentParser(prog="metafix",
                                     description="""Fixed points of self-modifying goal systems: solvers, scenario simulation, parameter sweeps.""",
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument('--version', action='version', version=('%(prog)s ' + __version__))
    parser.add_argument('-v', '--verbose', dest='verbose', action='count', default=0,
                        help='more log output (repeat for debug messages)')
    parser.add_argument('-q', '--quiet', dest='quiet', action='store_true', default=False,
                        help='only log errors')
    sub = parser.add_subparsers(dest='command', metavar='command')

    solve = sub.add_parser('solve', help='find a fixed point of a test map or the invariant distribution of a kernel')
    solve.add_argument('--solver', dest='solver', choices=SOLVERS, default='banach',
                       help='fixed-point solver (default: %(default)s)')
    solve.add_argument('--map', dest='map', default=None, metavar='name',
                       help=f'built-in test map, one of: {", ".join(map_names())}')
    solve.add_argument('--kernel', dest='kernel', default=None, metavar='file',
                       help='Markov kernel as a headerless CSV of rows (for --solver markov)')
    solve.add_argument('--start', dest='start', type=_floats, default=None, metavar='x1,x2,...',
                       help='start point for --solver banach (default: the map\'s own)')
    solve.add_argument('--tol', dest='tol', type=float, default=1e-10,
                       help='residual tolerance for banach and markov (default: %(default)s)')
    solve.add_argument('--epsilon', dest='epsilon', type=float, default=1e-6,
                       help='residual tolerance for grid and surrogate (default: %(default)s)')
    solve.add_argument('--budget', dest='budget', type=int, default=10000,
                       help='iteration or evaluation budget (default: %(default)s)')
    solve.add_argument('--seed', dest='seed', type=int, default=0)
    solve.add_argument('--sampler', dest='sampler', choices=('halton', 'sobol'), default='halton',
                       help='initial design of the surrogate solver (default: %(default)s)')
    solve.add_argument('-o', '--outdir', dest='outdir', default='.', metavar='dir')
    solve.set_defaults(handler=cmd_solve)

    for name, handler, text in (('simulate', cmd_simulate, 'run one scenario'),
                                ('sweep', cmd_sweep, 'run the parameter sweep declared in a scenario config')):
        p = sub.add_parser(name, help=text)
        p.add_argument(dest='config', metavar='config.toml', help='scenario configuration')
        p.add_argument('-o', '--outdir', dest='outdir', default='.', metavar='dir')
        p.add_argument('--seed', dest='seed', type=int, default=None,
                       help='override the seed of the config')
        p.add_argument('--metric', dest='metric', choices=('TV', 'W1'), default='TV',
                       help='residual metric for the convergence report (default: %(default)s)')
        p.add_argument('--queries', dest='queries', type=int, default=4,
                       help='query states for the self-model accuracy of global variants (default: %(default)s)')
        if name == 'sweep':
            p.add_argument('--replications', dest='replications', type=int, default=None,
                           help='override the replication count of the config')
        p.set_defaults(handler=handler)
    return parser


def _error(text):
    if sys.stderr.isatty():
        text = colorize(text, ColorScheme.FAILURE)
    print(text, file=sys.stderr)


def main(argv=None):
    """Parse arguments, run the command, and return the exit code."""
    parser = make_parser()
    opts = parser.parse_args(argv)
    level = logging.ERROR if opts.quiet else {0: logging.WARNING, 1: logging.INFO}.get(opts.verbose, logging.DEBUG)
    setup_logging(level)

    if not opts.command:
        parser.print_help()
        return EXIT_USAGE

    try:
        return opts.handler(opts)
    except ConfigError as err:
        _error(str(err))
        return EXIT_USAGE
    except NumericalFailure as err:
        _error(f"{type(err).__name__}: {err}")
        return EXIT_NUMERICAL
    except (MetafixError, ValueError, KeyError, OSError) as err:
        _error(f"metafix {opts.command}: {err}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
