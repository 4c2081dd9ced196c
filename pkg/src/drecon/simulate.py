"""Seeded generative model of the layered evolutionary process.

Gene lineages evolve top-down inside a species tree (speciation, duplication,
loss); protein lineages then evolve inside the resulting gene tree (creation,
loss). Output trees carry their true event labels, which tests compare with
the labels recomputed by LCA reconciliation.
"""

import random
from dataclasses import dataclass

from .errors import SimulationError
from .trees import PhyloTree, join, leaf


@dataclass(frozen=True)
class SimConfig:
    """Rates and seed for one simulated instance.

    Rates are per lineage per guide-tree edge; they are test knobs, not
    calibrated biology.
    """

    species: int = 5
    dup_prob: float = 0.15
    gene_loss_prob: float = 0.10
    creation_prob: float = 0.10
    protein_loss_prob: float = 0.05
    seed: int = 0
    max_retries: int = 100

    def __post_init__(self):
        if self.species < 1:
            raise ValueError("need at least one species")
        for name in ("dup_prob", "gene_loss_prob", "creation_prob",
                     "protein_loss_prob"):
            p = getattr(self, name)
            if not 0.0 <= p < 1.0:
                raise ValueError(f"{name} must lie in [0, 1)")
        if self.dup_prob + self.gene_loss_prob >= 1.0:
            raise ValueError("dup_prob + gene_loss_prob must stay below 1")
        if self.creation_prob + self.protein_loss_prob >= 1.0:
            raise ValueError("creation_prob + protein_loss_prob must stay below 1")
        if self.max_retries < 1:
            raise ValueError("max_retries must be positive")


@dataclass
class GroundTruth:
    """One simulated triple with its true histories."""

    species_tree: PhyloTree
    gene_tree: PhyloTree
    protein_tree: PhyloTree
    gene_species: dict
    protein_gene: dict
    gene_losses: list
    protein_losses: list

    def gene_events(self):
        return _event_clades(self.gene_tree)

    def protein_events(self):
        return _event_clades(self.protein_tree)


def _event_clades(tree):
    return {tree.clade(n): n.label for n in tree.nodes
            if not n.is_leaf and n.label}


def species_names(n):
    """n alphabetic names: a..z, aa, ab, ... (never ending in a digit)."""
    out = []
    for i in range(n):
        k = i + 1
        name = ""
        while k:
            k, rem = divmod(k - 1, 26)
            name = chr(ord("a") + rem) + name
        out.append(name)
    return out


def _rng_of(seed):
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def simulate_species_tree(n, seed=0):
    """Random binary tree on n named species by sequential leaf attachment.

    Every insertion point (each edge plus a new root) is equally likely, so
    the draw is deterministic given the seed.
    """
    rng = _rng_of(seed)
    names = species_names(n)
    root = leaf(names[0])
    nodes = [root]
    for name in names[1:]:
        at = nodes[rng.randrange(len(nodes))]
        parent = at.parent
        fresh = leaf(name)
        merged = join(at, fresh)
        if parent is None:
            root = merged
        else:
            if parent.left is at:
                parent.left = merged
            else:
                parent.right = merged
            merged.parent = parent
        nodes.append(fresh)
        nodes.append(merged)
    return PhyloTree(root)


class _Lin:
    """One lineage of the birth-death process; becomes a tree node."""

    __slots__ = ("event", "children", "name")

    def __init__(self):
        self.event = None
        self.children = None
        self.name = None


def _edge_pass(lineages, rng, loss_p, birth_p, birth_label, losses, guide_clade):
    """Events on one guide edge: each lineage dies, births, or continues."""
    out = []
    for lin in lineages:
        r = rng.random()
        if r < loss_p:
            lin.event = "Loss"
            losses.append(guide_clade)
        elif r < loss_p + birth_p:
            lin.event = birth_label
            lin.children = (_Lin(), _Lin())
            out.extend(lin.children)
        else:
            out.append(lin)
    return out


def _grow(guide, rng, loss_p, birth_p, birth_label, split_label_of):
    """Run the process along ``guide``; returns (root lineage, names, losses).

    ``names`` maps every produced leaf lineage name to its guide leaf name.
    """
    root_lin = _Lin()
    counters = {}
    names = {}
    losses = []

    # explicit stack, drawing in strict left-to-right depth-first order so
    # outputs stay reproducible per seed regardless of tree depth
    stack = [("node", guide.root, [root_lin])]
    while stack:
        kind, node, lineages = stack.pop()
        if kind == "edge":
            survivors = _edge_pass(lineages, rng, loss_p, birth_p,
                                   birth_label, losses, guide.clade(node))
            stack.append(("node", node, survivors))
            continue
        if not lineages:
            continue
        if node.is_leaf:
            for lin in lineages:
                idx = counters.get(node.name, 0) + 1
                counters[node.name] = idx
                lin.name = f"{node.name}{idx}"
                names[lin.name] = node.name
            continue
        lab = split_label_of(node)
        for lin in lineages:
            lin.event = lab
            lin.children = (_Lin(), _Lin())
        stack.append(("edge", node.right, [lin.children[1] for lin in lineages]))
        stack.append(("edge", node.left, [lin.children[0] for lin in lineages]))
    return root_lin, names, losses


def _materialize(root_lin):
    """Prune extinct lineages, suppress unary chains, build the tree root."""
    order = []
    stack = [root_lin]
    while stack:
        lin = stack.pop()
        order.append(lin)
        if lin.children:
            stack.extend(lin.children)
    built = {}
    for lin in reversed(order):
        if lin.children:
            kids = [built[id(c)] for c in lin.children if built[id(c)] is not None]
            if len(kids) == 2:
                built[id(lin)] = join(kids[0], kids[1], label=lin.event)
            elif len(kids) == 1:
                built[id(lin)] = kids[0]
            else:
                built[id(lin)] = None
        else:
            built[id(lin)] = leaf(lin.name) if lin.name else None
    return built[id(root_lin)]


def _simulate_tree_along(guide, rng, loss_p, birth_p, birth_label,
                         split_label_of, max_retries, what):
    for _ in range(max_retries):
        root_lin, names, losses = _grow(guide, rng, loss_p, birth_p,
                                        birth_label, split_label_of)
        root = _materialize(root_lin)
        if root is None:
            continue
        if set(names.values()) != set(guide.leaf_names):
            continue
        try:
            tree = PhyloTree(root)
        except ValueError:
            # leaf-name collision across nested numeric suffixes; redraw
            continue
        mapping = {name: names[name] for name in tree.leaf_names}
        return tree, mapping, losses
    raise SimulationError(
        f"no usable {what} after {max_retries} attempts; lower the rates")


def simulate_gene_tree(species_tree, cfg, seed=None):
    """Gene tree evolved inside the species tree.

    Returns (gene tree with true Spec/Dup labels, gene->species map, loss
    placements as species clades). Every species keeps at least one gene.
    """
    rng = _rng_of(cfg.seed if seed is None else seed)
    return _simulate_tree_along(
        species_tree, rng, cfg.gene_loss_prob, cfg.dup_prob, "Dup",
        lambda node: "Spec", cfg.max_retries, "gene tree")


def simulate_protein_tree(gene_tree, cfg, seed=None):
    """Protein tree evolved inside a labeled gene tree.

    Creations spawn sibling isoform lineages on gene-tree edges; splits at
    gene nodes inherit that node's Spec/Dup label. Every extant gene keeps
    at least one protein.
    """
    for node in gene_tree.nodes:
        if not node.is_leaf and node.label is None:
            raise ValueError("gene tree must carry event labels")
    rng = _rng_of(cfg.seed if seed is None else seed)
    return _simulate_tree_along(
        gene_tree, rng, cfg.protein_loss_prob, cfg.creation_prob, "Creat",
        lambda node: node.label, cfg.max_retries, "protein tree")


def simulate_instance(cfg):
    """One seeded (S, G, P) triple with mappings and true histories."""
    rng = random.Random(cfg.seed)
    species_tree = simulate_species_tree(cfg.species, rng)
    gene_tree, gene_species, gene_losses = simulate_gene_tree(
        species_tree, cfg, rng)
    protein_tree, protein_gene, protein_losses = simulate_protein_tree(
        gene_tree, cfg, rng)
    return GroundTruth(species_tree, gene_tree, protein_tree,
                       gene_species, protein_gene, gene_losses,
                       protein_losses)
