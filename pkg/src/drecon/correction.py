"""Gene-tree correction under the one-protein-per-gene restriction.

The heuristic starts from the gene tree induced by the protein tree, finds
duplication nodes whose mapping disagrees with a child, regrafts the
divergent child subtree onto a loss-bearing edge of its sibling when that
lowers the double reconciliation cost, and applies a best antichain of such
moves. An exhaustive solver over all gene-tree topologies serves as oracle.
"""

import time
from dataclasses import dataclass

from .errors import BijectionError, CapError
from .reconcile import (check_mapping, double_cost, parse_cost_spec,
                        reconcile_gene_species)
from .trees import (PhyloTree, enumerate_topologies, join_trees,
                    rename_leaves, subtree_as_tree, with_replaced_subtrees)


@dataclass
class LocalMove:
    """One accepted local rearrangement at a gene-tree node."""

    node: object                # node of g(P) whose subtree is replaced
    replacement: PhyloTree      # same leaf set, regrafted topology
    delta: int                  # reference_cost - candidate_cost, > 0
    candidate_cost: int         # XY(P[u], replacement, S[v])
    reference_cost: int         # Y(G[x], S[v])


@dataclass
class CorrectionReport:
    """Outcome of one correction run, enough to feed batch statistics."""

    cost_spec: str
    n_genes: int
    baseline_cost: int
    output_cost: int
    deltas: tuple
    modified: bool
    millis: float
    baseline_duplications: int
    baseline_losses: int
    moved_clades: tuple

    @property
    def reduction(self):
        return self.baseline_cost - self.output_cost


def induced_gene_tree(protein_tree, protein_gene_map):
    """g(P): the protein tree with each leaf renamed to its gene.

    Requires a one-to-one protein-gene map. Node i of the result corresponds
    to node i of the protein tree (same preorder position).
    """
    names = protein_tree.leaf_names
    for name in names:
        if name not in protein_gene_map:
            raise BijectionError(f"no gene for protein {name!r}")
    targets = [protein_gene_map[n] for n in names]
    if len(set(targets)) != len(targets):
        raise BijectionError(
            "protein-gene map is not one-to-one; the heuristic only applies "
            "when each gene has a single protein")
    return rename_leaves(protein_tree, protein_gene_map, drop_labels=True)


def incongruent_duplications(gene_tree, species_tree, gene_species_map,
                             recon=None):
    """Duplication nodes whose image differs from at least one child's image.

    These root the subtrees the heuristic considers rearranging. Returns the
    reconciliation alongside the nodes in preorder.
    """
    if recon is None:
        recon = reconcile_gene_species(gene_tree, species_tree,
                                       gene_species_map)
    image = recon.image
    found = []
    for node in gene_tree.nodes:
        if node.is_leaf or recon.labels[node] != "Dup":
            continue
        if (image[node] is not image[node.left]
                or image[node] is not image[node.right]):
            found.append(node)
    return recon, found


def regraft_candidates(gene_tree, node, recon):
    """Regraft candidates for one incongruent duplication node.

    The divergent child subtree is grafted, in turn, onto every edge strictly
    inside the sibling subtree whose loss list contains the divergent child's
    image. Candidates are trees on the leaf set of ``node``'s subtree.
    """
    image = recon.image
    out = []
    for moved, host in ((node.left, node.right), (node.right, node.left)):
        if image[moved] is image[node]:
            continue
        target = image[moved]
        moved_tree = subtree_as_tree(gene_tree, moved)
        host_tree = subtree_as_tree(gene_tree, host)
        # edges strictly inside the host subtree, in preorder of the child end
        for child in gene_tree.nodes[host.index + 1:
                                     host.index + gene_tree.subtree_size(host)]:
            if target not in recon.loss_list(child):
                continue
            graft_point = host_tree.nodes[child.index - host.index]
            spliced = join_trees(moved_tree,
                                 subtree_as_tree(host_tree, graft_point))
            out.append(with_replaced_subtrees(
                host_tree, {graft_point: spliced}))
    return out


def best_local_replacement(protein_tree, species_tree, protein_gene_map,
                           gene_species_map, gene_tree, node, spec, recon):
    """Cheapest regraft at one incongruent node, if it beats the status quo.

    Evaluates the double cost of every candidate against the protein subtree
    mapping onto this node and the species subtree at its image; returns the
    move with the largest positive improvement, or None.
    """
    x_letter, y_letter = parse_cost_spec(spec)
    u = protein_tree.nodes[node.index]
    v = recon.image[node]
    p_sub = subtree_as_tree(protein_tree, u)
    s_sub = subtree_as_tree(species_tree, v)
    g_sub = {name: protein_gene_map[name] for name in p_sub.leaf_names}
    gene_clade = gene_tree.clade(node)
    s_map_sub = {gene: gene_species_map[gene] for gene in gene_clade}
    assert set(g_sub.values()) == gene_clade

    g_here = subtree_as_tree(gene_tree, node)
    reference = reconcile_gene_species(g_here, s_sub, s_map_sub).cost(y_letter)
    # the induced pairing is free of protein events, so the reference can
    # drop the X term; cheap to verify while we are here
    assert double_cost(p_sub, g_here, s_sub, g_sub, s_map_sub,
                       x_letter + y_letter) == reference

    best = None
    best_key = None
    for candidate in regraft_candidates(gene_tree, node, recon):
        cost = double_cost(p_sub, candidate, s_sub, g_sub, s_map_sub, spec)
        key = (cost, candidate.canonical_form())
        if best_key is None or key < best_key:
            best_key = key
            best = candidate
    if best is None:
        return None
    delta = reference - best_key[0]
    if delta <= 0:
        return None
    return LocalMove(node=node, replacement=best, delta=delta,
                     candidate_cost=best_key[0], reference_cost=reference)


def select_antichain(moves, gene_tree):
    """Max-total-improvement subset of moves with no ancestor/descendant pair.

    Exact bottom-up dynamic program: a node either applies its own move or
    passes through the best choices of its children.
    """
    move_at = {m.node.index: m for m in moves}
    best = {}
    take = {}
    for node in gene_tree.bottom_up():
        below = sum(best[c.index] for c in node.children)
        move = move_at.get(node.index)
        if move is not None and move.delta >= below:
            best[node.index] = move.delta
            take[node.index] = True
        else:
            best[node.index] = below
            take[node.index] = False
    chosen = []
    stack = [gene_tree.root]
    while stack:
        node = stack.pop()
        if take[node.index]:
            chosen.append(move_at[node.index])
        elif not node.is_leaf:
            stack.append(node.right)
            stack.append(node.left)
    chosen.sort(key=lambda m: m.node.index)
    return chosen


def correct_gene_tree(protein_tree, species_tree, protein_gene_map,
                      gene_species_map, spec="MM"):
    """Heuristic correction of g(P) against the species tree.

    Returns the corrected gene tree and a report. The output is g(P) itself
    when no move improves the double cost; otherwise its cost is exactly the
    baseline minus the summed improvements of the applied moves.
    """
    t0 = time.perf_counter()
    x_letter, y_letter = parse_cost_spec(spec)
    gene_tree = induced_gene_tree(protein_tree, protein_gene_map)
    check_mapping(gene_tree, species_tree, gene_species_map)
    recon, suspects = incongruent_duplications(gene_tree, species_tree,
                                               gene_species_map)
    baseline = recon.cost(y_letter)

    moves = []
    for node in suspects:
        move = best_local_replacement(
            protein_tree, species_tree, protein_gene_map, gene_species_map,
            gene_tree, node, spec, recon)
        if move is not None:
            moves.append(move)
    chosen = select_antichain(moves, gene_tree)

    if chosen:
        corrected = with_replaced_subtrees(
            gene_tree, {m.node: m.replacement for m in chosen})
    else:
        corrected = gene_tree
    output_cost = double_cost(protein_tree, corrected, species_tree,
                              protein_gene_map, gene_species_map, spec)
    gained = sum(m.delta for m in chosen)
    assert output_cost == baseline - gained, \
        "applied moves must account exactly for the cost change"

    millis = (time.perf_counter() - t0) * 1000.0
    report = CorrectionReport(
        cost_spec=spec,
        n_genes=gene_tree.n_leaves,
        baseline_cost=baseline,
        output_cost=output_cost,
        deltas=tuple(m.delta for m in chosen),
        modified=bool(chosen),
        millis=millis,
        baseline_duplications=recon.event_cost,
        baseline_losses=recon.loss_cost,
        moved_clades=tuple(",".join(sorted(gene_tree.clade(m.node)))
                           for m in chosen),
    )
    return corrected, report


def solve_exact(protein_tree, species_tree, protein_gene_map,
                gene_species_map, spec="MM", cap=8):
    """Exhaustive minimizer of the double cost over all gene-tree topologies.

    The gene set is the image of the protein-gene map (which need not be
    one-to-one). Ties break on the canonical form of the tree, so the result
    is deterministic. Refuses gene sets larger than ``cap``.
    """
    genes = sorted(set(protein_gene_map.values()))
    if len(genes) > cap:
        raise CapError(f"{len(genes)} genes exceeds the exact-search cap of {cap}")
    best = None
    best_key = None
    for candidate in enumerate_topologies(genes, cap=cap):
        cost = double_cost(protein_tree, candidate, species_tree,
                           protein_gene_map, gene_species_map, spec)
        key = (cost, candidate.canonical_form())
        if best_key is None or key < best_key:
            best_key = key
            best = candidate
    return best, best_key[0]
