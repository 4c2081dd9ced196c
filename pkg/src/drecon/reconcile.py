"""LCA reconciliation of gene trees with species trees and of protein trees
with gene trees: event labeling, induced losses, the nine double costs, and
homology classification.

All functions are pure over immutable trees and safe to call concurrently.
"""

from itertools import combinations

from .errors import MappingError

GENE_SPECIES = "gene_species"
PROTEIN_GENE = "protein_gene"

# event that counts toward the X/Y cost and triggers the extra loss
_EVENT_OF_KIND = {GENE_SPECIES: "Dup", PROTEIN_GENE: "Creat"}
_LETTER_OF_KIND = {GENE_SPECIES: "D", PROTEIN_GENE: "C"}

X_COSTS = "CLM"
Y_COSTS = "DLM"


def parse_cost_spec(spec):
    """Validate a double-cost code like ``MM`` and split it into (X, Y)."""
    if len(spec) != 2 or spec[0] not in X_COSTS or spec[1] not in Y_COSTS:
        raise ValueError(
            f"bad cost spec {spec!r}: expected X in {{C,L,M}} and Y in {{D,L,M}}")
    return spec[0], spec[1]


ALL_COST_SPECS = tuple(x + y for x in X_COSTS for y in Y_COSTS)


def check_mapping(src, dst, mapping):
    """Require ``mapping`` to be total on src leaves with targets in dst."""
    for name in src.leaf_names:
        if name not in mapping:
            raise MappingError(f"no mapping for leaf {name!r}")
    for name, target in mapping.items():
        if not src.has_leaf(name):
            raise MappingError(f"mapping source {name!r} is not a leaf")
        if not dst.has_leaf(target):
            raise MappingError(
                f"mapping target {target!r} (for {name!r}) is not a leaf")


def is_surjective(dst, mapping):
    """Whether the mapping covers every leaf of the codomain tree."""
    return set(mapping.values()) == set(dst.leaf_names)


def extend_mapping(src, dst, mapping):
    """LCA extension of a leaf mapping to every node of the source tree.

    Returns a dict from src nodes to dst nodes: leaves map per ``mapping``,
    an internal node maps to the LCA of its children's images.
    """
    check_mapping(src, dst, mapping)
    image = {}
    for node in src.bottom_up():
        if node.is_leaf:
            image[node] = dst.node_by_leaf(mapping[node.name])
        else:
            image[node] = dst.lca_nodes(image[node.left], image[node.right])
    return image


def _interior_path(anc, desc):
    """Nodes strictly between an ancestor and a descendant, top-down."""
    if anc is desc:
        return []
    out = []
    cur = desc.parent
    while cur is not anc:
        if cur is None:
            raise ValueError("images are not in ancestor-descendant relation")
        out.append(cur)
        cur = cur.parent
    out.reverse()
    return out


class Reconciliation:
    """Event labels, per-edge loss lists, and cost totals for one tree pair.

    ``labels`` maps internal source nodes to events; ``losses`` maps a child
    node to the ordered list of target-tree nodes lost on the edge from its
    parent (the extra loss under a mapping-preserving Dup/Creat parent, when
    present, comes first).
    """

    def __init__(self, kind, source, target, image, labels, losses):
        self.kind = kind
        self.source = source
        self.target = target
        self.image = image
        self.labels = labels
        self.losses = losses
        event = _EVENT_OF_KIND[kind]
        self.event_cost = sum(1 for lab in labels.values() if lab == event)
        self.loss_cost = sum(len(v) for v in losses.values())

    @property
    def mutation_cost(self):
        return self.event_cost + self.loss_cost

    @property
    def event_letter(self):
        return _LETTER_OF_KIND[self.kind]

    def cost(self, letter):
        """Cost by its one-letter code: D or C, L, M."""
        if letter == "L":
            return self.loss_cost
        if letter == "M":
            return self.mutation_cost
        if letter == self.event_letter:
            return self.event_cost
        raise ValueError(f"cost {letter!r} undefined for a {self.kind} reconciliation")

    def loss_list(self, child):
        """Ordered losses on the edge entering ``child`` from its parent."""
        return self.losses.get(child, ())

    def summary(self):
        return (f"{self.event_letter}={self.event_cost} "
                f"L={self.loss_cost} M={self.mutation_cost}")


def _reconcile(kind, src, dst, mapping, label_of):
    image = extend_mapping(src, dst, mapping)
    labels = {}
    for node in src.nodes:
        if not node.is_leaf:
            labels[node] = label_of(node, image)
    trigger = _EVENT_OF_KIND[kind]
    losses = {}
    for node in src.nodes:
        parent = node.parent
        if parent is None:
            continue
        lost = _interior_path(image[parent], image[node])
        if labels[parent] == trigger and image[parent] is not image[node]:
            lost.insert(0, image[parent])
        if lost:
            losses[node] = lost
    return Reconciliation(kind, src, dst, image, labels, losses)


def reconcile_gene_species(gene_tree, species_tree, gene_species_map):
    """LCA reconciliation of a gene tree with a species tree.

    Labels every internal gene node Spec or Dup, materializes the induced
    loss list on every edge, and totals the D, L, M costs.
    """

    def label_of(node, image):
        img = image[node]
        if img is image[node.left] or img is image[node.right]:
            return "Dup"
        return "Spec"

    return _reconcile(GENE_SPECIES, gene_tree, species_tree,
                      gene_species_map, label_of)


def reconcile_protein_gene(protein_tree, gene_tree, protein_gene_map,
                           gene_recon):
    """LCA reconciliation of a protein tree with a gene tree.

    ``gene_recon`` must be the gene tree's own reconciliation with the
    species tree; its labels decide whether a mapping-separating protein
    node is a speciation or a duplication. Every other internal node is a
    protein creation (in particular every apparent creation node).
    """
    if gene_recon.kind != GENE_SPECIES or gene_recon.source is not gene_tree:
        raise ValueError("gene_recon must reconcile the given gene tree")

    def label_of(node, image):
        img = image[node]
        if img is image[node.left] or img is image[node.right]:
            return "Creat"
        # img is internal here: an LCA equal to no child image cannot be a leaf
        return gene_recon.labels[img]

    return _reconcile(PROTEIN_GENE, protein_tree, gene_tree,
                      protein_gene_map, label_of)


def double_cost_parts(protein_tree, gene_tree, species_tree,
                      protein_gene_map, gene_species_map):
    """Both reconciliations underlying a double cost, protein side first."""
    recon_gs = reconcile_gene_species(gene_tree, species_tree, gene_species_map)
    recon_pg = reconcile_protein_gene(protein_tree, gene_tree,
                                      protein_gene_map, recon_gs)
    return recon_pg, recon_gs


def double_cost(protein_tree, gene_tree, species_tree, protein_gene_map,
                gene_species_map, spec):
    """X(P,G) + Y(G,S) for one of the nine double-cost selectors."""
    x, y = parse_cost_spec(spec)
    recon_pg, recon_gs = double_cost_parts(
        protein_tree, gene_tree, species_tree, protein_gene_map,
        gene_species_map)
    return recon_pg.cost(x) + recon_gs.cost(y)


# -- homology relations -------------------------------------------------------

GENE_RELATIONS = {"Spec": "ortholog", "Dup": "paralog"}
PROTEIN_RELATIONS = {"Spec": "ortho-ortholog", "Dup": "para-ortholog",
                     "Creat": "paralog"}


def classify_pairs(tree, recon):
    """Relation of every unordered leaf pair, read off the LCA labels.

    Genes split into orthologs/paralogs; proteins into ortho-orthologs,
    para-orthologs, and paralogs.
    """
    table = (GENE_RELATIONS if recon.kind == GENE_SPECIES
             else PROTEIN_RELATIONS)
    out = []
    for a, b in combinations(tree.leaves, 2):
        lca = tree.lca_nodes(a, b)
        out.append((a.name, b.name, table[recon.labels[lca]]))
    return out


def apparent_creations(protein_tree, protein_gene_map):
    """Internal nodes whose two child subtrees share a gene.

    Such nodes are creations under every reconciliation, independent of the
    gene tree's shape.
    """
    check = set(protein_gene_map)
    missing = set(protein_tree.leaf_names) - check
    if missing:
        raise MappingError(f"no mapping for leaf {sorted(missing)[0]!r}")
    genes = {}
    out = set()
    for node in protein_tree.bottom_up():
        if node.is_leaf:
            genes[node] = frozenset((protein_gene_map[node.name],))
        else:
            l, r = genes[node.left], genes[node.right]
            if l & r:
                out.add(node)
            genes[node] = l | r
    return out


def as_gene_species_instance(protein_tree, gene_tree, protein_gene_map):
    """Recast a protein-gene instance as a gene-species instance.

    The protein tree is read as a gene tree, the gene tree as a species
    tree, and the protein-gene map as the gene-species map; reconciling the
    recast pair reproduces the creation/loss/mutation costs exactly.
    """
    return protein_tree, gene_tree, dict(protein_gene_map)


# -- mapping files and name-convention inference ------------------------------

def read_mapping_tsv(text):
    """Parse a two-column ``source<TAB>target`` mapping; '#' starts a comment."""
    mapping = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise MappingError(f"line {lineno}: expected 'source<TAB>target'")
        src, dst = parts[0].strip(), parts[1].strip()
        if src in mapping:
            raise MappingError(f"line {lineno}: duplicate source {src!r}")
        mapping[src] = dst
    if not mapping:
        raise MappingError("mapping file contains no rows")
    return mapping


def write_mapping_tsv(mapping):
    lines = [f"{src}\t{dst}" for src, dst in sorted(mapping.items())]
    return "\n".join(lines) + "\n"


def infer_gene_to_species(names):
    """Map gene names shaped <species><digits> to their species."""
    out = {}
    for name in names:
        stem = name.rstrip("0123456789")
        if not stem or stem == name:
            raise MappingError(
                f"cannot infer a species from gene name {name!r}")
        out[name] = stem
    return out


def infer_protein_to_gene(names):
    """Map protein names shaped <gene><digit> to their gene (drop one digit)."""
    out = {}
    for name in names:
        if not name or not name[-1].isdigit() or len(name) < 2:
            raise MappingError(
                f"cannot infer a gene from protein name {name!r}")
        gene = name[:-1]
        if not gene.rstrip("0123456789"):
            raise MappingError(
                f"cannot infer a gene from protein name {name!r}")
        out[name] = gene
    return out
