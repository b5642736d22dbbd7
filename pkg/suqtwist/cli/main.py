"""
suqtwist command line: numerical verification of the twist between Delta_0
and Delta_q on truncated windows.

suqtwist verify-relations --q 0.5 --kmax 12 --mmax 12
suqtwist build-omega --q 0.5 --dump-ops ops/ --out omega.json
suqtwist verify-theorem --format csv --out theorem.csv
suqtwist cocycle-probe --q 0.2 --q 0.5 --triple-kmax 6 --triple-mmax 6
suqtwist sweep --log-level DEBUG --log-file sweep.log
"""

import logging
import sys

import suqtwist
from suqtwist.cli.core import get_default_argparser, args_runner
from suqtwist.cli.commands import Commands, run_args
from suqtwist.cli.utils import subparser_builder
from suqtwist.common_options import add_run_options
from suqtwist.utils import setup_log

log = logging.getLogger(__name__)

_DESCRIPTIONS = {
    Commands.VERIFY_RELATIONS: "Relations of the Toeplitz generators and of C(SU_q(2)) on interior vectors",
    Commands.BUILD_OMEGA: "Build Delta_q, U~ and U; check unitarity, the f basis and both U~ constructions",
    Commands.VERIFY_THEOREM: "Delta_q = Ad(U) o Delta_0, ideal stability, counit identities and continuity",
    Commands.COCYCLE_PROBE: "Pseudo-cocycle commutant gate and 2-cocycle residual on the triple window",
    Commands.SWEEP: "Norm continuity in q of Delta_q(S), Delta_q(T) and U(rho(x)rho)(w) under grid refinement",
}


def get_parser():
    p = get_default_argparser(suqtwist.get_version(), __doc__.strip().splitlines()[0])
    sp = p.add_subparsers(help='commands')

    def builder(subparser_id, options_func, exe_func):
        subparser_builder(sp, subparser_id, _DESCRIPTIONS[subparser_id], options_func, exe_func)

    for command in Commands.ALL:
        builder(command, add_run_options, run_args)
    return p


def main(argv=None):
    argv_ = sys.argv if argv is None else argv
    parser = get_parser()
    return args_runner(argv_[1:], parser, log, setup_log)


if __name__ == '__main__':
    sys.exit(main(sys.argv))
