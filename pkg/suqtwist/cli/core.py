"""
Running a suqtwist command: logging setup, timing and the mapping of outcomes
to exit codes.

- 0: every gated check passed
- 1: IOError (unreadable input, unwritable output, invalid report)
- 2: any other error
- 3: the command ran but at least one gated check failed
"""

import argparse
import logging
import sys
import time
import traceback

import suqtwist
from suqtwist.common_options import add_base_options
from suqtwist.utils import get_parsed_args_log_level, get_peak_memory_usage


class ExitCodes:
    OK = 0
    IO_ERROR = 1
    ERROR = 2
    FAILED_CHECKS = 3


def _add_version(p, version):
    p.version = version
    p.add_argument('--version',
                   action="version",
                   version=version,
                   help="show program's version number and exit")
    return p


def get_default_argparser(version, description):
    """
    Parser with --version only; subcommands add their own options.

    :rtype: ArgumentParser
    """
    p = argparse.ArgumentParser(description=description,
                                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    return _add_version(p, version)


def get_default_argparser_with_base_opts(version, description, default_level="INFO"):
    """Return a parser with the default log related options"""
    return add_base_options(get_default_argparser(version, description),
                            default_level=default_level)


def main_runner(alog, setup_log_func, exe_main_func, *args, **kwargs):
    """
    Runs a command func and logs results. The func returns an int exit code;
    exceptions are logged with traceback and mapped to 1 (IOError) or 2.

    :param alog: a log instance
    :param setup_log_func: F(alog, level=value, file_name=value) or None
    :param exe_main_func: F(args) -> int, args parsed from p.parse_args()
    :rtype: int
    """
    started_at = time.time()

    pargs = args[0]
    if 'level' in kwargs:
        level = kwargs.pop('level')
    else:
        level = get_parsed_args_log_level(pargs)

    # None will default to stderr
    log_file = getattr(pargs, 'log_file', None)
    log_options = dict(level=level, file_name=log_file)

    if setup_log_func is not None and alog is not None:
        setup_log_func(alog, **log_options)
        alog.info("Using suqtwist v{v}".format(v=suqtwist.get_version()))
        alog.info("log opts {d}".format(d=log_options))

    try:
        return_code = exe_main_func(*args, **kwargs)
    except Exception as e:
        if alog is not None:
            alog.error(e, exc_info=True)
        else:
            traceback.print_exc(file=sys.stderr)
        if isinstance(e, IOError):
            return_code = ExitCodes.IO_ERROR
        else:
            return_code = ExitCodes.ERROR
    run_time = time.time() - started_at

    maxrss = get_peak_memory_usage()
    _d = dict(r=return_code, s=run_time)
    if alog is not None:
        alog.info(f"Max RSS (kB): {maxrss}")
        alog.info("exiting with return code {r} in {s:.2f} sec.".format(**_d))
    return return_code


def _dispatch(args):
    return args.func(args)


def args_runner(argv, parser, alog, setup_log_func):
    """Parse argv and run the selected subcommand through main_runner"""
    args = parser.parse_args(argv)
    if getattr(args, "func", None) is None:
        parser.print_help(sys.stderr)
        return ExitCodes.ERROR
    return main_runner(alog, setup_log_func, _dispatch, args)
