"""Command-line surface: reconcile, correct, assemble, solve-exact, simulate,
and stats subcommands over plain Newick and TSV files."""

import argparse
import concurrent.futures
import os
import sys
import tempfile

from . import report as report_mod
from .errors import (BijectionError, CapError, ConsistencyError, DreconError,
                     MappingError, NewickError, SimulationError)
from .correction import correct_gene_tree, solve_exact
from .assembly import SubtreeFamily, assemble_protein_tree, span_partition
from .reconcile import (double_cost_parts, infer_gene_to_species,
                        infer_protein_to_gene, parse_cost_spec,
                        read_mapping_tsv, reconcile_gene_species,
                        write_mapping_tsv)
from .simulate import SimConfig, simulate_instance
from .trees import parse_newick, parse_newick_many, with_event_labels

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_PARSE = 3
EXIT_MAPPING = 4
EXIT_CONSISTENCY = 5
EXIT_CAP = 6
EXIT_BIJECTION = 7
EXIT_SIMULATION = 8

_EXIT_OF = (
    (NewickError, EXIT_PARSE),
    (BijectionError, EXIT_BIJECTION),
    (MappingError, EXIT_MAPPING),
    (CapError, EXIT_CAP),
    (ConsistencyError, EXIT_CONSISTENCY),
    (SimulationError, EXIT_SIMULATION),
    (DreconError, EXIT_FAILURE),
)


def _read(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ConsistencyError(f"cannot read {path}: {exc.strerror}") from None


def _write_atomic(path, text):
    """Write via a temp file and rename, so partial outputs never appear."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".drecon-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_tree(path):
    return parse_newick(_read(path))


def _load_mapping(path, src_tree, infer, kind):
    """Mapping from a TSV path, or inferred from leaf names; TSV wins."""
    if path:
        return read_mapping_tsv(_read(path))
    if not infer:
        raise MappingError(
            f"no {kind} mapping given; pass the TSV or use --infer-map")
    names = src_tree.leaf_names
    if kind == "gene-species":
        return infer_gene_to_species(names)
    return infer_protein_to_gene(names)


def _clade_str(tree, node):
    if node.is_leaf:
        return node.name
    return "|".join(sorted(tree.clade(node)))


def _losses_tsv(recon):
    lines = ["edge_parent\tedge_child\tlost"]
    src, dst = recon.source, recon.target
    for node in src.nodes:
        if node.parent is None:
            continue
        lost = recon.loss_list(node)
        if not lost:
            continue
        lines.append("\t".join((
            _clade_str(src, node.parent), _clade_str(src, node),
            ";".join(_clade_str(dst, n) for n in lost))))
    return "\n".join(lines) + "\n"


# -- subcommands ---------------------------------------------------------------

def cmd_reconcile(args):
    species = _load_tree(args.species)
    gene = _load_tree(args.gene)
    smap = _load_mapping(args.map, gene, args.infer_map, "gene-species")
    recon_gs = reconcile_gene_species(gene, species, smap)
    out = args.out
    _write_atomic(os.path.join(out, "gene.labeled.nwk"),
                  with_event_labels(gene, recon_gs.labels).newick() + "\n")
    _write_atomic(os.path.join(out, "gene.losses.tsv"), _losses_tsv(recon_gs))
    lines = [recon_gs.summary()]

    if args.protein:
        protein = _load_tree(args.protein)
        gmap = _load_mapping(args.pmap, protein, args.infer_map,
                             "protein-gene")
        recon_pg, _ = double_cost_parts(protein, gene, species, gmap, smap)
        _write_atomic(os.path.join(out, "protein.labeled.nwk"),
                      with_event_labels(protein, recon_pg.labels).newick() + "\n")
        _write_atomic(os.path.join(out, "protein.losses.tsv"),
                      _losses_tsv(recon_pg))
        x, y = parse_cost_spec(args.cost)
        total = recon_pg.cost(x) + recon_gs.cost(y)
        lines.insert(0, recon_pg.summary())
        lines.append(f"{args.cost}={total}")
    elif args.pmap:
        raise MappingError("--pmap given without --protein")

    summary = "\n".join(lines) + "\n"
    _write_atomic(os.path.join(out, "costs.txt"), summary)
    print(summary, end="")
    return EXIT_OK


def _gene_species_mapping(map_path, genes, infer):
    if map_path:
        return read_mapping_tsv(_read(map_path))
    if not infer:
        raise MappingError(
            "no gene-species mapping given; pass the TSV or use --infer-map")
    return infer_gene_to_species(sorted(genes))


def _correct_one(protein_path, species_path, pmap_path, map_path, cost,
                 infer, out_dir, timings):
    protein = _load_tree(protein_path)
    species = _load_tree(species_path)
    gmap = _load_mapping(pmap_path, protein, infer, "protein-gene")
    smap = _gene_species_mapping(map_path, set(gmap.values()), infer)
    corrected, rep = correct_gene_tree(protein, species, gmap, smap, cost)
    _write_atomic(os.path.join(out_dir, "G_opt.nwk"), corrected.newick() + "\n")
    return rep


def _batch_instances(directory):
    found = []
    for name in sorted(os.listdir(directory)):
        inst = os.path.join(directory, name)
        if os.path.isdir(inst) and os.path.exists(os.path.join(inst, "P.nwk")):
            found.append((name, inst))
    if not found:
        raise ConsistencyError(
            f"no instance directories with P.nwk under {directory}")
    return found


def _run_batch_instance(spec):
    name, inst, cost, infer, timings = spec
    rep = _correct_one(
        os.path.join(inst, "P.nwk"), os.path.join(inst, "S.nwk"),
        os.path.join(inst, "pg.tsv"), os.path.join(inst, "gs.tsv"),
        cost, infer, inst, timings)
    return name, report_mod.report_row(name, rep, timings=timings)


def cmd_correct(args):
    timings = not args.no_timings
    if args.dir:
        specs = [(name, inst, args.cost, args.infer_map, timings)
                 for name, inst in _batch_instances(args.dir)]
        if args.jobs > 1:
            with concurrent.futures.ProcessPoolExecutor(args.jobs) as pool:
                results = list(pool.map(_run_batch_instance, specs))
        else:
            results = [_run_batch_instance(s) for s in specs]
        results.sort(key=lambda r: r[0])
        table = report_mod.report_header() + "\n" + \
            "\n".join(row for _, row in results) + "\n"
        _write_atomic(os.path.join(args.dir, "reports.tsv"), table)
        print(table, end="")
        summaries = report_mod.summarize(
            report_mod.parse_report_rows(table),
            report_mod.parse_buckets(args.buckets))
        print(report_mod.summary_text(summaries), end="")
        return EXIT_OK

    for name, flag in (("protein", args.protein), ("species", args.species)):
        if not flag:
            raise ConsistencyError(f"--{name} is required without --dir")
    rep = _correct_one(args.protein, args.species, args.pmap, args.map,
                       args.cost, args.infer_map, args.out, timings)
    table = report_mod.report_header() + "\n" + \
        report_mod.report_row(args.protein, rep, timings=timings) + "\n"
    _write_atomic(os.path.join(args.out, "report.tsv"), table)
    print(table, end="")
    return EXIT_OK


def cmd_stats(args):
    tables = []
    for dirpath, _, files in os.walk(args.reports):
        for name in sorted(files):
            if not name.endswith(".tsv"):
                continue
            path = os.path.join(dirpath, name)
            text = _read(path)
            if text.startswith(report_mod.report_header().split("\t", 1)[0]):
                try:
                    tables.extend(report_mod.parse_report_rows(text, path))
                except ConsistencyError:
                    continue
    if not tables:
        raise ConsistencyError(f"no correction reports found under {args.reports}")
    summaries = report_mod.summarize(tables,
                                     report_mod.parse_buckets(args.buckets))
    os.makedirs(args.out, exist_ok=True)
    _write_atomic(os.path.join(args.out, "summary.tsv"),
                  report_mod.summary_tsv(summaries))
    text = report_mod.summary_text(summaries)
    _write_atomic(os.path.join(args.out, "summary.txt"), text)
    figures = report_mod.render_figures(summaries, args.out)
    print(text, end="")
    for path in figures:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_assemble(args):
    trees = parse_newick_many(_read(args.subtrees))
    family = SubtreeFamily(trees)
    partition = span_partition(family)
    assembled = assemble_protein_tree(family)
    lines = ["class\tspan"]
    for cls in partition:
        lines.append("{}\t{}".format(
            "|".join(sorted(cls.leaves)),
            ";".join(f"P{i + 1}" for i in sorted(cls.span))))
    _write_atomic(os.path.join(args.out, "assembled.nwk"),
                  assembled.newick() + "\n")
    _write_atomic(os.path.join(args.out, "spans.tsv"), "\n".join(lines) + "\n")
    print(assembled.newick())
    return EXIT_OK


def cmd_solve_exact(args):
    protein = _load_tree(args.protein)
    species = _load_tree(args.species)
    gmap = _load_mapping(args.pmap, protein, args.infer_map, "protein-gene")
    smap = _gene_species_mapping(args.map, set(gmap.values()), args.infer_map)
    tree, cost = solve_exact(protein, species, gmap, smap, args.cost,
                             cap=args.cap)
    print(f"optimum {cost}")
    print(tree.newick())
    if args.out:
        _write_atomic(os.path.join(args.out, "G_exact.nwk"),
                      tree.newick() + "\n")
    return EXIT_OK


def cmd_simulate(args):
    seed = args.seed
    env = os.environ.get("DRECON_SEED")
    if env is not None:
        try:
            seed = int(env)
        except ValueError:
            raise ConsistencyError(f"DRECON_SEED={env!r} is not an integer")
    cfg = SimConfig(species=args.species_leaves, dup_prob=args.dup_prob,
                    gene_loss_prob=args.gene_loss_prob,
                    creation_prob=args.creation_prob,
                    protein_loss_prob=args.protein_loss_prob, seed=seed)
    sim = simulate_instance(cfg)
    out = args.out
    _write_atomic(os.path.join(out, "S.nwk"), sim.species_tree.newick() + "\n")
    _write_atomic(os.path.join(out, "G.nwk"), sim.gene_tree.newick() + "\n")
    _write_atomic(os.path.join(out, "P.nwk"), sim.protein_tree.newick() + "\n")
    _write_atomic(os.path.join(out, "gs.tsv"),
                  write_mapping_tsv(sim.gene_species))
    _write_atomic(os.path.join(out, "pg.tsv"),
                  write_mapping_tsv(sim.protein_gene))
    truth = ["tree\tclade\tevent"]
    for tree_name, events in (("G", sim.gene_events()),
                              ("P", sim.protein_events())):
        for clade in sorted(events, key=lambda c: (len(c), sorted(c))):
            truth.append(f"{tree_name}\t{'|'.join(sorted(clade))}\t{events[clade]}")
    _write_atomic(os.path.join(out, "truth.tsv"), "\n".join(truth) + "\n")
    print(f"wrote S.nwk G.nwk P.nwk gs.tsv pg.tsv truth.tsv to {out}")
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="drecon",
        description="Double reconciliation of protein, gene, and species trees")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_maps(p, protein_required):
        p.add_argument("--protein", required=protein_required,
                       help="protein tree (Newick)")
        p.add_argument("--species", required=protein_required,
                       help="species tree (Newick)")
        p.add_argument("--pmap", help="protein->gene mapping TSV")
        p.add_argument("--map", help="gene->species mapping TSV")
        p.add_argument("--infer-map", action="store_true",
                       help="infer mappings from <species><gene><protein> "
                            "leaf names when a TSV is missing")
        p.add_argument("--cost", default="MM",
                       help="double cost code (CD,CL,CM,LD,LL,LM,MD,ML,MM)")

    p = sub.add_parser("reconcile", help="label trees and report costs")
    p.add_argument("--gene", required=True, help="gene tree (Newick)")
    p.add_argument("--species", required=True, help="species tree (Newick)")
    p.add_argument("--map", help="gene->species mapping TSV")
    p.add_argument("--protein", help="protein tree (Newick)")
    p.add_argument("--pmap", help="protein->gene mapping TSV")
    p.add_argument("--infer-map", action="store_true")
    p.add_argument("--cost", default="MM")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_reconcile)

    p = sub.add_parser("correct", help="heuristic gene-tree correction")
    add_common_maps(p, protein_required=False)
    p.add_argument("--out", default=".")
    p.add_argument("--dir", help="batch directory of instance subdirectories")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--buckets", default="1-9,10-99,100-199")
    p.add_argument("--no-timings", action="store_true",
                   help="write ms=0 so outputs are byte-reproducible")
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("assemble",
                       help="rebuild a protein tree from creation-free subtrees")
    p.add_argument("--subtrees", required=True,
                   help="Newick file with one ';'-terminated subtree per entry")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("solve-exact",
                       help="exhaustive search over gene-tree topologies")
    add_common_maps(p, protein_required=True)
    p.add_argument("--cap", type=int, default=8)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve_exact)

    p = sub.add_parser("simulate", help="generate a seeded (S, G, P) instance")
    p.add_argument("--species-leaves", "-n", type=int, default=5)
    p.add_argument("--dup-prob", type=float, default=0.15)
    p.add_argument("--gene-loss-prob", type=float, default=0.10)
    p.add_argument("--creation-prob", type=float, default=0.10)
    p.add_argument("--protein-loss-prob", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0,
                   help="overridden by DRECON_SEED when set")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stats", help="Table-style summary of correction reports")
    p.add_argument("--reports", required=True,
                   help="directory searched recursively for report TSVs")
    p.add_argument("--buckets", default="1-9,10-99,100-199")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DreconError as exc:
        for klass, code in _EXIT_OF:
            if isinstance(exc, klass):
                print(f"drecon: error: {exc}", file=sys.stderr)
                return code
        raise
    except ValueError as exc:
        print(f"drecon: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
