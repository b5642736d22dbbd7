"""
Common options shared by the suqtwist subcommands
"""

import logging

from suqtwist.validators import (validate_q, validate_tol,
                                 validate_positive_int,
                                 validate_non_negative_int, validate_window_size)


def add_log_debug_option(p):
    """This requires the log-level option"""
    p.add_argument('--debug', action="store_true", default=False,
                   help="Alias for setting log level to DEBUG")
    return p


def add_log_quiet_option(p):
    """This requires the log-level option"""
    p.add_argument('--quiet', action="store_true", default=False,
                   help="Alias for setting log level to ERROR to suppress output.")
    return p


def add_log_verbose_option(p):
    p.add_argument("-v", "--verbose", dest="verbosity", action="count",
                   help="Set the verbosity level.")
    return p


def add_log_level_option(p, default_level='INFO'):
    """Add logging level with a default value"""
    if isinstance(default_level, int):
        default_level = logging.getLevelName(default_level)
    p.add_argument('--log-level', choices=('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'),
                   default=default_level, help="Set log level")
    return p


def add_log_file_option(p):
    p.add_argument('--log-file', default=None, type=str,
                   help="Write the log to file. Default(None) will write to stderr.")
    return p


def add_nproc_option(p, default=1):
    p.add_argument("-j", "--nproc", type=validate_positive_int, default=default,
                   help="Number of q values computed in parallel")
    return p


def add_base_options(p, default_level='INFO'):
    """Add the core logging options to the parser and set the default log level

    Reports go to stdout unless --out is given; the log goes to stderr
    unless --log-file is given.

    suqtwist verify-relations --log-level=DEBUG --log-file=run.log --out report.json
    """
    add_log_file_option(p)
    p_log = p.add_mutually_exclusive_group()
    add_log_verbose_option(add_log_quiet_option(add_log_debug_option(
        add_log_level_option(p_log, default_level=default_level))))
    return p


def add_q_option(p):
    p.add_argument("--q", type=validate_q, action="append", default=None,
                   help="Deformation parameter in [0, 1). Repeat for several values; "
                        "each command has its own default list.")
    return p


def add_window_options(p):
    p.add_argument("--kmax", type=validate_window_size, default=10,
                   help="Levels kept per leg of the two-leg window")
    p.add_argument("--mmax", type=validate_window_size, default=10,
                   help="Windings kept per leg (-mmax..mmax) of the two-leg window")
    p.add_argument("--triple-kmax", type=validate_window_size, default=6,
                   help="Levels kept per leg of the three-leg window")
    p.add_argument("--triple-mmax", type=validate_window_size, default=6,
                   help="Windings kept per leg of the three-leg window")
    return p


def add_budget_options(p):
    p.add_argument("--tol", type=validate_tol, default=1e-8,
                   help="Target tolerance of projections, series and lambda tails")
    p.add_argument("--power-budget", type=validate_positive_int, default=512,
                   help="Largest power allowed for spectral projections")
    p.add_argument("--series-budget", type=validate_positive_int, default=2048,
                   help="Largest number of inverse square root series terms")
    p.add_argument("--samples", type=validate_positive_int, default=100,
                   help="Interior vectors probed per check")
    p.add_argument("--seed", type=validate_non_negative_int, default=0,
                   help="Seed of the random interior probes")
    return p


def add_output_options(p):
    p.add_argument("--out", default=None, type=str,
                   help="Report output path. Default(None) writes to stdout.")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="Report format; csv is a projection of the json rows")
    p.add_argument("--dump-ops", default=None, type=str,
                   help="Directory for text dumps of the operators built by the command")
    return p


def add_run_options(p):
    """All options of a suqtwist subcommand"""
    for f in (add_q_option, add_window_options, add_budget_options,
              add_output_options, add_nproc_option, add_base_options):
        f(p)
    return p
