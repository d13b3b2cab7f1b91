"""Command-line entry point: ``python -m nzddopt <command> ...``.

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import core, data, erlpboost, extform, lpfile, softmargin
from .build import compress
from .lp import solve_lp
from .system import read_system, write_system

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class NumericalFailure(RuntimeError):
    pass


def _out(path):
    return open(path, "w") if path and path != "-" else sys.stdout


def _write(path, text: str):
    fh = _out(path)
    try:
        fh.write(text)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _stats_tsv(stats: core.NzddStats) -> str:
    return "".join(f"{k}\t{v}\n" for k, v in stats.as_rows())


def cmd_compress(args) -> int:
    family = core.read_family(args.family, args.ground)
    g, stats = compress(family, args.order)
    if args.output:
        core.write_nzdd(g, args.output)
    else:
        sys.stdout.write(core.format_nzdd(g))
    sys.stderr.write(_stats_tsv(stats))
    return EXIT_OK


def cmd_stats(args) -> int:
    g = core.read_nzdd(args.nzdd)
    report = core.validate(g, args.path_cap)
    if report.ok:
        sys.stdout.write(_stats_tsv(core.compute_stats(g)))
    status = "ok" if report.ok else "invalid"
    if report.unverified:
        status += " (unverified: " + ",".join(report.unverified) + ")"
    sys.stdout.write(f"valid\t{status}\n")
    for v in report.violations:
        sys.stdout.write(f"violation\t{v.kind}\t{v.detail}\t{list(v.edges)}\n")
    return EXIT_OK if report.ok else EXIT_INPUT


def cmd_extend(args) -> int:
    system = read_system(args.system)
    if args.int_mode is None:
        try:
            ext = extform.extend_binary(system)
        except extform.NonBinaryCoefficientError as exc:
            raise ValueError(f"{exc}; pass --int-mode binary|sigma for integer coefficients") from None
    else:
        mode = "binary" if args.int_mode == "binary" else "sigma"
        ext = extform.extend_integer(system, mode)
    lpfile.emit_lp(ext, args.output)
    g = ext.origin
    sys.stderr.write(
        f"original_rows\t{system.num_rows}\nduplicates_removed\t{ext.duplicates_removed}\n"
        f"nodes\t{g.node_count}\nedges\t{g.num_edges}\nextended_rows\t{ext.base.num_rows}\n"
        f"added_node_vars\t{ext.added_node_vars}\n"
    )
    return EXIT_OK


def _format_solution(sol: softmargin.MarginSolution, algo: str, iterations: int) -> str:
    lines = [
        f"algo\t{algo}",
        f"iterations\t{iterations}",
        f"rho\t{sol.rho:.17g}",
        f"bias\t{sol.bias:.17g}",
        f"objective\t{sol.objective:.17g}",
    ]
    for j, v in enumerate(sol.w[:-1]):
        if v != 0:
            lines.append(f"w\t{j + 1}\t{v:.17g}")
    return "\n".join(lines) + "\n"


def cmd_softmargin(args) -> int:
    if not 0 < args.nu <= 1:
        raise ValueError("--nu must lie in (0, 1]")
    sample = data.parse_libsvm(args.libsvm, args.threshold)
    sn = softmargin.build_sample_nzdd(sample)
    logging.getLogger(__name__).info("sample nzdd: %d nodes, %d edges", sn.g.node_count, sn.num_edges)
    try:
        if args.algo == "export-lp":
            system, lay = softmargin.build_primal(sn, args.nu)
            text = lpfile.emit_lp(system, args.lp_out)
            back = lpfile.parse_lp(text)
            res = solve_lp(back)
            if not res.ok:
                raise NumericalFailure(f"LP solve: {res.status}")
            x = res.x
            sol = softmargin.MarginSolution(float(x[lay.rho]), x[lay.w].copy(), x[lay.beta].copy(),
                                            res.value, args.nu)
            iterations = res.iterations
        elif args.algo == "cg":
            sol, iterations = softmargin.column_generation(sn, args.nu, args.eps)
        else:
            log_fh = open(args.log, "w") if args.log else None
            try:
                cb = None
                if log_fh:
                    log_fh.write("t\tj\tdelta\tentropy\tobjective\n")
                    cb = lambda rec: log_fh.write(erlpboost.format_record(rec) + "\n")  # noqa: E731
                sol, iterations = erlpboost.run(sn, args.nu, args.eps, eta=args.eta, callback=cb)
            finally:
                if log_fh:
                    log_fh.close()
    except (softmargin.SubproblemError, erlpboost.SubproblemNotConverged, np.linalg.LinAlgError) as exc:
        raise NumericalFailure(str(exc)) from exc
    if not np.isfinite(sol.objective):
        raise NumericalFailure("non-finite objective")
    _write(args.output, _format_solution(sol, args.algo, iterations))
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.kind == "mip":
        system = data.gen_mip(args.n or 25, args.k or 10, args.l if args.l is not None else 12, args.m, args.seed)
        if args.output:
            write_system(system, args.output)
        else:
            from .system import format_system
            sys.stdout.write(format_system(system))
    else:
        sample = data.gen_rofk(args.n or 20, args.k or 10, args.r or 5, args.m, args.seed)
        _write(args.output, data.format_libsvm(sample))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nzddopt", description="NZDD constraint compression and soft-margin solvers")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compress", help="compress a subset family into an NZDD")
    c.add_argument("family")
    c.add_argument("-o", "--output")
    c.add_argument("--order", choices=["frequency", "natural"], default="frequency")
    c.add_argument("--ground", type=int, default=None, help="ground set size (default: max element + 1)")
    c.set_defaults(func=cmd_compress)

    s = sub.add_parser("stats", help="validate an NZDD file and print its statistics")
    s.add_argument("nzdd")
    s.add_argument("--path-cap", type=int, default=10**5)
    s.set_defaults(func=cmd_stats)

    e = sub.add_parser("extend", help="write the extended formulation of a constraint system as LP text")
    e.add_argument("system")
    e.add_argument("--int-mode", choices=["binary", "sigma"], default=None)
    e.add_argument("-o", "--output", required=True)
    e.set_defaults(func=cmd_extend)

    m = sub.add_parser("softmargin", help="1-norm soft-margin optimization on a libsvm file")
    m.add_argument("libsvm")
    m.add_argument("--nu", type=float, required=True)
    m.add_argument("--algo", choices=["export-lp", "cg", "erlp"], required=True)
    m.add_argument("--eps", type=float, default=1e-3)
    m.add_argument("--threshold", type=float, default=0.5)
    m.add_argument("--eta", type=float, default=None)
    m.add_argument("--lp-out", default=None, help="where export-lp writes the LP text")
    m.add_argument("--log", default=None, help="erlp progress log (TSV)")
    m.add_argument("-o", "--output", default=None)
    m.set_defaults(func=cmd_softmargin)

    g = sub.add_parser("gen", help="synthetic generators")
    g.add_argument("kind", choices=["mip", "rofk"])
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, default=None)
    g.add_argument("--k", type=int, default=None)
    g.add_argument("--l", type=int, default=None)
    g.add_argument("--r", type=int, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", default=None)
    g.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except NumericalFailure as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (core.FormatError, core.NzddError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
