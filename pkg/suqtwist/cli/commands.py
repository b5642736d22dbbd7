"""
The five suqtwist commands. Each command computes its rows per q value
(in parallel with --nproc), adds the q independent rows once, and writes one
report. The exit code is 0 iff every gated row passes.
"""

import functools
import logging
import os

from suqtwist.models.common import RunConfig
from suqtwist.models.report import Report
from suqtwist.models.words import TensorWordSum
from suqtwist.operators.core import InteriorSet, locality_margin
from suqtwist.algebra.suq2 import (check_A_relations, check_suq2_relations,
                                   check_phi_series, phi_b_continuity_rows,
                                   word_sum_op)
from suqtwist.algebra.comultiplication import (ComultiplicationSet,
                                               comultiplication_rows,
                                               counit_checks, continuity_probe,
                                               refinement_row)
from suqtwist.algebra.cocycle import (u_q, omega_rows, verify_intertwining,
                                      symbol_rows, d_words, u_times_word,
                                      host_levels, host_window)
from suqtwist.algebra.lift import (counit_factor_rows, u_tilde_word_row,
                                   density_identity_rows, nonvanishing_row,
                                   extraction_rows, pseudo_cocycle_probe,
                                   two_cocycle_residual, counit_u_rows)
from suqtwist.sq_io.report import write_report
from suqtwist.sq_io.dump import dump_operator
from suqtwist.cli.core import ExitCodes
from suqtwist.utils import pool_map, stopwatch

log = logging.getLogger(__name__)


class Commands:
    VERIFY_RELATIONS = "verify-relations"
    BUILD_OMEGA = "build-omega"
    VERIFY_THEOREM = "verify-theorem"
    COCYCLE_PROBE = "cocycle-probe"
    SWEEP = "sweep"

    ALL = (VERIFY_RELATIONS, BUILD_OMEGA, VERIFY_THEOREM, COCYCLE_PROBE, SWEEP)


COARSE_GRID = tuple(round(0.1 * i, 12) for i in range(10))

DEFAULT_Q_VALUES = {
    Commands.VERIFY_RELATIONS: (0.0, 0.3, 0.5, 0.7, 0.9),
    Commands.BUILD_OMEGA: (0.0, 0.5),
    Commands.VERIFY_THEOREM: (0.3, 0.5, 0.7),
    Commands.COCYCLE_PROBE: (0.0, 0.2, 0.5),
    Commands.SWEEP: COARSE_GRID,
}

# the triple probes use a handful of vectors; each costs four lifts
MAX_TRIPLE_SAMPLES = 8

# reach of the fixed words w probed through U (rho(x)rho)(w)
CONTINUITY_REACH = 1

# Delta_q(T) and U~ carry the q dependence of U
U_FACTORS = 2


def _timed(func, *args, **kwargs):
    """Rows of func(*args) with the group's wall time recorded on each row"""
    with stopwatch() as ms:
        rows = func(*args, **kwargs)
    if not isinstance(rows, list):
        rows = [rows]
    return [r.with_timing(ms[0]) for r in rows]


def _log_rows(rows):
    for r in rows:
        log.info("{c} q={q} residual={r:.3e} budget={b:.3e} {v}".format(
            c=r.check, q=r.q, r=r.residual, b=r.budget, v=r.verdict))


def _dump_name(config, name, q):
    tag = "{n}_q{q:.3f}.txt".format(n=name, q=q).replace(".", "p", 1)
    return os.path.join(config.dump_ops, tag)


def finish(config, rows):
    """Assemble, log and write the report; return the exit code"""
    rows = [r.with_command(config.command) for r in rows]
    _log_rows(rows)
    report = Report(rows=rows, config=config.to_dict())
    write_report(report, config.output, config.output_format)
    log.info("Summary {s}".format(s=report.summary))
    return ExitCodes.FAILED_CHECKS if report.has_failures else ExitCodes.OK


def _run_per_q(config, func):
    chunks = pool_map(functools.partial(func, config), list(config.q_values), config.nproc)
    return [row for chunk in chunks for row in chunk]


def relations_rows(config, q):
    w = config.window(1)
    rows = _timed(check_suq2_relations, q, w, command=config.command)
    if q > 0:
        rows.extend(_timed(check_phi_series, q, w, config.tol, command=config.command))
    return rows


def cmd_verify_relations(config):
    rows = _timed(check_A_relations, config.window(1), command=config.command)
    rows.extend(_run_per_q(config, relations_rows))
    return finish(config, rows)


def omega_bundle_rows(config, q):
    w = config.window(2)
    host = host_window(q, w, config.tol)
    comult = ComultiplicationSet(q, host, config.tol, config.power_budget, config.series_budget)
    log.info("Built comultiplication {d}".format(d=comult.to_dict()))
    bundle = u_q(q, w, config.tol, comult=comult)
    rows = _timed(comultiplication_rows, comult, command=config.command,
                  samples=config.samples)
    rows.extend(_timed(omega_rows, bundle, samples=config.samples, command=config.command))
    rows.extend(_timed(u_tilde_word_row, bundle, command=config.command))
    if config.dump_ops is not None:
        os.makedirs(config.dump_ops, exist_ok=True)
        dump_operator(bundle.u_tilde, _dump_name(config, "u_tilde", q))
        interior = InteriorSet(bundle.window, bundle.u.order, floor=0,
                               level_order=bundle.level_margin)
        dump_operator(bundle.u, _dump_name(config, "u", q), columns=interior.indices(),
                      cutoff=config.tol / 100.0)
    return rows


def cmd_build_omega(config):
    return finish(config, _run_per_q(config, omega_bundle_rows))


def theorem_rows(config, q):
    w = config.window(2)
    bundle = u_q(q, w, config.tol, config.power_budget, config.series_budget)
    c, s = config.command, config.samples
    rows = _timed(verify_intertwining, bundle, command=c, samples=s)
    rows.extend(_timed(symbol_rows, bundle, command=c))
    rows.extend(_timed(counit_factor_rows, bundle, command=c, samples=s))
    rows.extend(_timed(counit_u_rows, bundle, command=c, samples=s))
    rows.extend(_timed(counit_checks, q, w, config.tol, command=c,
                       power_budget=config.power_budget,
                       series_budget=config.series_budget))
    rows.extend(_timed(extraction_rows, q, w, config.tol, command=c))
    rows.extend(_timed(nonvanishing_row, q, levels=w.k_max, seed=config.seed,
                       command=c))
    return rows


def shared_host_levels(config, grid):
    """Host levels of the largest q in the grid, so every U shares one window"""
    return max(host_levels(q, config.tol) for q in grid)


def _u_word_builder(config, wsum, levels, q):
    bundle = u_q(q, config.window(2), config.tol, config.power_budget, config.series_budget,
                 levels=levels)
    return u_times_word(bundle, wsum)


def _continuity_interior(config, grid, levels=0):
    """
    Fixed vectors for increments along a grid, below ``levels`` host levels.
    The order is capped at half the window: near q = 1 the locality margin
    outgrows desk windows, and increments are bounded measurements rather
    than exact identities.
    """
    w = config.window(2)
    margin = max(locality_margin(q, config.tol) for q in grid)
    order = min(margin + CONTINUITY_REACH, w.k_max // 2, w.m_max // 2)
    if order < margin + CONTINUITY_REACH:
        log.debug("Capping the continuity interior order at %d (margin %d)", order, margin)
    host = host_window(0.0, w, config.tol, levels=levels)
    return InteriorSet(host, order, floor=0, level_order=levels)


def u_word_continuity_rows(config, grid, suffix="", samples=None, levels=None):
    """Increments of U (rho(x)rho)(w) along the q grid, one group per fixed word"""
    if levels is None:
        levels = shared_host_levels(config, grid)
    rows = []
    interior = _continuity_interior(config, grid, levels)
    for name, wsum in sorted(d_words().items()):
        builder = functools.partial(_u_word_builder, config, wsum, levels)
        rows.extend(continuity_probe(builder, grid, interior,
                                     "continuity_u_{n}{s}".format(n=name, s=suffix),
                                     command=config.command,
                                     anchor="q -> U(rho(x)rho)(w) is norm continuous",
                                     samples=samples,
                                     factors=U_FACTORS))
    return rows


def u_word_refinement_rows(config, coarse, fine, samples=None):
    """Increments of U (rho(x)rho)(w) on both grids and one refinement row per word"""
    levels = shared_host_levels(config, fine)
    coarse_u = u_word_continuity_rows(config, coarse, suffix="_coarse", samples=samples,
                                      levels=levels)
    fine_u = u_word_continuity_rows(config, fine, suffix="_fine", samples=samples,
                                    levels=levels)
    rows = coarse_u + fine_u
    for name in sorted(d_words()):
        tag = "continuity_u_" + name
        rows.append(refinement_row("refinement_u_" + name, config.command,
                                   [r for r in coarse_u if r.check == tag + "_coarse"],
                                   [r for r in fine_u if r.check == tag + "_fine"]))
    return rows


def cmd_verify_theorem(config):
    rows = _timed(density_identity_rows, config.window(2), command=config.command,
                  samples=config.samples)
    rows.extend(_run_per_q(config, theorem_rows))
    grid = sorted(config.q_values)
    if len(grid) > 1:
        rows.extend(u_word_refinement_rows(config, grid, refine_grid(grid),
                                           samples=config.samples))
    return finish(config, rows)


def cocycle_rows(config, q):
    host = config.window(2)
    w3 = config.triple_window()
    bundle = u_q(q, host, config.tol, config.power_budget, config.series_budget)
    n = min(config.samples, MAX_TRIPLE_SAMPLES)
    rows = _timed(pseudo_cocycle_probe, q, w3, n, config.tol, bundle=bundle,
                  seed=config.seed, command=config.command)
    rows.extend(_timed(two_cocycle_residual, q, w3, n, config.tol, bundle=bundle,
                       seed=config.seed, command=config.command))
    return rows


def cmd_cocycle_probe(config):
    return finish(config, _run_per_q(config, cocycle_rows))


def refine_grid(grid):
    """Insert the midpoint of every step"""
    grid = sorted(grid)
    out = []
    for a, b in zip(grid[:-1], grid[1:]):
        out.extend([a, round((a + b) / 2.0, 12)])
    out.append(grid[-1])
    return out


def _delta_builder(config, name, q):
    comult = ComultiplicationSet(q, config.window(2), config.tol,
                                 config.power_budget, config.series_budget)
    return comult.generator(name)


def _constant_builder(config, wsum, q):
    return word_sum_op(wsum, config.window(2))


def sweep_rows(config, coarse, fine):
    rows = []
    c, s = config.command, config.samples
    interior = _continuity_interior(config, fine)
    for name in ("S", "T"):
        builder = functools.partial(_delta_builder, config, name)
        check = "continuity_delta_" + name.lower()
        per_grid = []
        for suffix, grid in (("_coarse", coarse), ("_fine", fine)):
            per_grid.append(continuity_probe(builder, grid, interior, check + suffix,
                                             command=c, samples=s))
            rows.extend(per_grid[-1])
        rows.append(refinement_row("refinement_delta_" + name.lower(), c, *per_grid))
    rows.extend(u_word_refinement_rows(config, coarse, fine, samples=s))
    rows.extend(phi_b_continuity_rows(fine, config.window(1), command=c, samples=s))
    constant = functools.partial(_constant_builder, config,
                                 TensorWordSum.from_generators("S*S").tensor(
                                     TensorWordSum.from_generators("T")))
    rows.extend(continuity_probe(constant, coarse, interior, "continuity_constant_word",
                                 command=c, bound=0.0,
                                 anchor="a q independent operator has zero increments",
                                 samples=s))
    return rows


def cmd_sweep(config):
    coarse = sorted(config.q_values)
    if len(coarse) < 2:
        raise ValueError("sweep needs at least two q values, got {q}".format(q=coarse))
    fine = refine_grid(coarse)
    log.info("Sweeping {n} coarse and {m} fine grid points".format(n=len(coarse), m=len(fine)))
    return finish(config, sweep_rows(config, coarse, fine))


_RUNNERS = {
    Commands.VERIFY_RELATIONS: cmd_verify_relations,
    Commands.BUILD_OMEGA: cmd_build_omega,
    Commands.VERIFY_THEOREM: cmd_verify_theorem,
    Commands.COCYCLE_PROBE: cmd_cocycle_probe,
    Commands.SWEEP: cmd_sweep,
}


def args_to_config(args):
    return RunConfig.from_args(args, args.command, DEFAULT_Q_VALUES[args.command])


def run_args(args):
    """Entry point of every subcommand: F(args) -> int"""
    config = args_to_config(args)
    log.info("Running {c}".format(c=config))
    return _RUNNERS[config.command](config)
