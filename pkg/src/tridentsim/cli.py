"""Command-line interface: ``tridentsim {run,compare,gen,mcl,permute}``."""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .algorithms import ALGORITHMS, make_grid, run_algorithm
from .apps import MclParams, mcl, permutation_study, write_permutation_csv
from .errors import TridentSimError
from .generators import gen_arrowhead, gen_banded, gen_block_diagonal, gen_erdos_renyi, gen_planted_graph
from .mmio import read_matrix_market, write_matrix_market
from .netmodel import LinkClass, load_topology, topology_from_dict
from .report import build_report, verify_product

EXIT_OK, EXIT_ERROR, EXIT_VERIFY, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _algo_list(text: str) -> list[str]:
    algos = [a.strip() for a in text.split(",") if a.strip()]
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown algorithm(s): {', '.join(bad)}")
    return algos


def _add_machine(p: argparse.ArgumentParser) -> None:
    p.add_argument("--procs", type=int, default=16, help="number of simulated processes P")
    p.add_argument("--gpus-per-node", type=int, default=None, help="processes per node (lambda); default 4")
    p.add_argument("--topo", help="TOML/JSON config with a [topology] section")
    for name in ("alpha-li", "alpha-gi", "beta-li", "beta-gi", "flop-rate"):
        p.add_argument(f"--{name}", type=float, default=None)


def _add_inputs(p: argparse.ArgumentParser, with_b: bool = True) -> None:
    p.add_argument("--a", help="Matrix Market file for A (default: generated Erdos-Renyi)")
    if with_b:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--b", help="Matrix Market file for B")
        g.add_argument("--square", action="store_true", help="use B = A (default when --b is absent)")
    p.add_argument("--n", type=int, default=512, help="size of the generated matrix when --a is absent")
    p.add_argument("--density", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tridentsim", description="Simulated distributed SpGEMM on a two-level network.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one driver and write a JSON report")
    run.add_argument("--algo", choices=ALGORITHMS, default="trident")
    _add_inputs(run)
    _add_machine(run)
    run.add_argument("--verify", action="store_true", help="check the result against the serial product")
    run.add_argument("--out", help="JSON report path (default: stdout)")
    run.add_argument("--ledger-csv", help="per-process ledger CSV path")
    run.add_argument("--timeline", help="event timeline JSONL path")

    cmp_ = sub.add_parser("compare", help="run several drivers on the same input")
    cmp_.add_argument("--algos", type=_algo_list, default=["trident", "summa"])
    _add_inputs(cmp_)
    _add_machine(cmp_)
    cmp_.add_argument("--verify", action="store_true")
    cmp_.add_argument("--csv", help="per-process GI volume table")
    cmp_.add_argument("--out", help="JSON summary path (default: stdout)")

    gen = sub.add_parser("gen", help="generate a synthetic matrix")
    kind = gen.add_mutually_exclusive_group(required=True)
    kind.add_argument("--er", nargs=2, metavar=("N", "D"), help="Erdos-Renyi N x N with density D")
    kind.add_argument("--banded", nargs=2, type=int, metavar=("N", "HALFWIDTH"))
    kind.add_argument("--block-diag", nargs=3, metavar=("N", "BLOCKS", "D"))
    kind.add_argument("--arrowhead", nargs=2, type=int, metavar=("N", "WIDTH"))
    kind.add_argument("--planted", nargs=4, metavar=("N", "GROUPS", "P_IN", "P_OUT"))
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    m = sub.add_parser("mcl", help="Markov clustering with a distributed expansion step")
    m.add_argument("--a", required=True)
    m.add_argument("--iters", type=int, default=10)
    m.add_argument("--prune", type=float, default=0.002)
    m.add_argument("--inflation", type=float, default=2.0)
    m.add_argument("--algo", choices=(*ALGORITHMS, "serial"), default="trident")
    _add_machine(m)
    m.add_argument("--out", default="clusters.csv", help="cluster CSV path")
    m.add_argument("--reports", help="JSON file for the per-iteration reports")

    perm = sub.add_parser("permute", help="compare drivers before and after a random permutation")
    perm.add_argument("--a", required=True)
    perm.add_argument("--seed", type=int, default=1)
    perm.add_argument("--algos", type=_algo_list, default=list(ALGORITHMS))
    _add_machine(perm)
    perm.add_argument("--out", default="permutation.csv")
    perm.add_argument("--reports", help="JSON file with the paired reports")
    return parser


def resolve_topology(args, P: int):
    """Topology from --topo with command-line flags taking precedence."""
    section = load_topology(args.topo) if args.topo else {}
    lam = args.gpus_per_node or section.get("gpus_per_node", 4)
    section["gpus_per_node"] = lam
    for key in ("alpha_li", "alpha_gi", "beta_li", "beta_gi", "flop_rate"):
        value = getattr(args, key)
        if value is not None:
            section[key] = value
    section["nodes"] = -(-P // lam)
    return topology_from_dict(section), lam


def _load_inputs(args):
    if args.a:
        a = read_matrix_market(args.a)
        a_id = args.a
    else:
        a = gen_erdos_renyi(args.n, args.density, args.seed)
        a_id = f"er(n={args.n},d={args.density},seed={args.seed})"
    if getattr(args, "b", None):
        return a, read_matrix_market(args.b), {"a": a_id, "b": args.b, "seed": args.seed}
    return a, a, {"a": a_id, "b": a_id, "seed": args.seed}


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    topology, lam = resolve_topology(args, args.procs)
    make_grid(args.algo, args.procs, lam)  # fail on a bad grid before reading inputs
    a, b, ids = _load_inputs(args)
    result = run_algorithm(args.algo, a, b, args.procs, lam, topology)
    verified = verify_product(result.c, a, b) if args.verify else None
    report = build_report(result, {**ids, "lam": lam}, verified)
    _emit(report.to_json(), args.out)
    if args.ledger_csv:
        result.ledger.write_csv(args.ledger_csv)
    if args.timeline:
        result.timeline.write_jsonl(args.timeline)
    return EXIT_VERIFY if verified is False else EXIT_OK


def cmd_compare(args) -> int:
    if len(args.algos) < 2:
        raise UsageError("compare needs at least two algorithms")
    topology, lam = resolve_topology(args, args.procs)
    for algo in args.algos:
        make_grid(algo, args.procs, lam)
    a, b, ids = _load_inputs(args)
    reports = {}
    columns = {}
    all_ok = True
    for algo in args.algos:
        result = run_algorithm(algo, a, b, args.procs, lam, topology)
        verified = verify_product(result.c, a, b) if args.verify else None
        all_ok &= verified is not False
        reports[algo] = build_report(result, {**ids, "lam": lam}, verified)
        columns[algo] = result.ledger.per_process(LinkClass.GI)
    summary = {
        "config": {**ids, "P": args.procs, "lam": lam, "topology": topology.to_dict()},
        "algorithms": {
            algo: {**rep.aggregate, "makespan": rep.makespan, "checksum": rep.checksum, "verified": rep.verified}
            for algo, rep in reports.items()
        },
    }
    if "trident" in reports and "summa" in reports:
        tri = reports["trident"].aggregate["gi_nnz"]
        summa = reports["summa"].aggregate["gi_nnz"]
        summary["summa_over_trident_gi_nnz"] = summa / tri if tri else None
        summary["summa_over_trident_makespan"] = reports["summa"].makespan / reports["trident"].makespan
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["process", *(f"{algo}_gi_nnz" for algo in args.algos)])
            for p in range(args.procs):
                writer.writerow([p, *(columns[algo][p] for algo in args.algos)])
    _emit(json.dumps(summary, sort_keys=True, indent=2) + "\n", args.out)
    return EXIT_OK if all_ok else EXIT_VERIFY


def cmd_gen(args) -> int:
    if args.er:
        m = gen_erdos_renyi(int(args.er[0]), float(args.er[1]), args.seed)
    elif args.banded:
        m = gen_banded(args.banded[0], seed=args.seed, halfwidth=args.banded[1])
    elif args.block_diag:
        n, blocks, d = args.block_diag
        m = gen_block_diagonal(int(n), int(blocks), float(d), args.seed)
    elif args.arrowhead:
        m = gen_arrowhead(args.arrowhead[0], args.arrowhead[1], args.seed)
    else:
        n, groups, p_in, p_out = args.planted
        m = gen_planted_graph(int(n), int(groups), float(p_in), float(p_out), args.seed)
    write_matrix_market(m, args.out, comment=f"tridentsim gen seed={args.seed}")
    return EXIT_OK


def cmd_mcl(args) -> int:
    a = read_matrix_market(args.a)
    params = MclParams(args.iters, args.prune, args.inflation)
    if args.algo == "serial":
        result = mcl(a, params)
    else:
        topology, lam = resolve_topology(args, args.procs)
        make_grid(args.algo, args.procs, lam)
        result = mcl(a, params, args.algo, args.procs, lam, topology)
    result.write_csv(args.out)
    if args.reports:
        _emit(json.dumps([r.to_dict() for r in result.reports], sort_keys=True, indent=2) + "\n", args.reports)
    print(f"{len(result.clusters)} clusters written to {args.out}")
    return EXIT_OK


def cmd_permute(args) -> int:
    topology, lam = resolve_topology(args, args.procs)
    for algo in args.algos:
        make_grid(algo, args.procs, lam)
    a = read_matrix_market(args.a)
    runs = permutation_study(a, args.seed, args.algos, args.procs, lam, topology)
    write_permutation_csv(runs, args.out)
    if args.reports:
        paired = [{"algo": r.algo, "original": r.original.to_dict(), "permuted": r.permuted.to_dict()} for r in runs]
        _emit(json.dumps(paired, sort_keys=True, indent=2) + "\n", args.reports)
    ok = all(r.original.verified and r.permuted.verified for r in runs)
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "gen": cmd_gen, "mcl": cmd_mcl, "permute": cmd_permute}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"tridentsim: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TridentSimError, OSError) as exc:
        print(f"tridentsim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
