"""Reassembling a protein tree from its maximum creation-free subtrees.

The span partition groups proteins that occur in exactly the same input
subtrees. Classes are then merged bottom-up: two classes whose spans are
disjoint and whose complement views coincide are the two sides of a lowest
creation and are joined under a Creat node; classes whose spans have become
identical all sit in one creation-free region and are merged by inflating
the region's view tree with the already-built creation units.
"""

from collections import Counter
from dataclasses import dataclass

from .errors import CapError, FamilyError
from .trees import (PhyloTree, join_trees, strip_labels,
                    with_replaced_subtrees)


class SubtreeFamily:
    """Ordered list of protein subtrees over a shared protein universe.

    Event labels on the input trees are ignored: the inputs stand for
    inferred orthologous-isoform trees, which carry no event annotation.
    """

    def __init__(self, trees):
        if not trees:
            raise FamilyError("empty subtree family")
        self.trees = tuple(strip_labels(t) for t in trees)
        universe = set()
        for t in self.trees:
            universe.update(t.leaf_names)
        self.universe = frozenset(universe)

    def __len__(self):
        return len(self.trees)

    def __iter__(self):
        return iter(self.trees)


def compute_spans(family):
    """span(x): the set of input-tree indices whose tree contains leaf x."""
    spans = {name: set() for name in family.universe}
    for i, tree in enumerate(family.trees):
        for name in tree.leaf_names:
            spans[name].add(i)
    return {name: frozenset(s) for name, s in spans.items()}


@dataclass(frozen=True)
class SpanClass:
    """One class of the span partition: equal-span proteins and their tree."""

    leaves: frozenset
    span: frozenset
    tree: PhyloTree


class SpanPartition:
    """The unique coarsest partition of the universe into equal-span classes."""

    def __init__(self, family, classes):
        self.family = family
        self.classes = tuple(classes)

    def __len__(self):
        return len(self.classes)

    def __iter__(self):
        return iter(self.classes)

    def class_of(self, leaf_name):
        for c in self.classes:
            if leaf_name in c.leaves:
                return c
        raise KeyError(leaf_name)


def span_partition(family):
    """Group the universe by span and restrict the member trees per class.

    Every tree in a class's span must restrict to the same class tree;
    disagreement means the family cannot come from a single protein tree.
    """
    spans = compute_spans(family)
    groups = {}
    for name, span in spans.items():
        groups.setdefault(span, set()).add(name)
    classes = []
    for span, leaves in groups.items():
        leaves = frozenset(leaves)
        tree = None
        canon = None
        for i in sorted(span):
            restricted = family.trees[i].restrict(leaves)
            if tree is None:
                tree = restricted
                canon = restricted.canonical_form(with_labels=False)
            elif restricted.canonical_form(with_labels=False) != canon:
                raise FamilyError(
                    "span members disagree on the class tree for "
                    f"{sorted(leaves)}")
        classes.append(SpanClass(leaves=leaves, span=span, tree=tree))
    classes.sort(key=lambda c: tuple(sorted(c.leaves)))
    return SpanPartition(family, classes)


_EMPTY = "<empty>"


def _complement_views(family, span, leaves):
    """Multiset of each span member's restriction to its leaves outside ours."""
    views = Counter()
    for i in sorted(span):
        rest = frozenset(family.trees[i].leaf_names) - leaves
        if rest:
            views[family.trees[i].restrict(rest)
                  .canonical_form(with_labels=False)] += 1
        else:
            views[_EMPTY] += 1
    return views


def check_creation_pair(partition, u, v):
    """Whether classes u and v look like the two sides of a lowest creation.

    True iff their spans are disjoint and the two multisets of complement
    restrictions coincide.
    """
    cu, cv = partition.classes[u], partition.classes[v]
    if not cu.span or not cv.span or (cu.span & cv.span):
        return False
    return (_complement_views(partition.family, cu.span, cu.leaves)
            == _complement_views(partition.family, cv.span, cv.leaves))


class _Working:
    """Mutable per-class state while assembling."""

    __slots__ = ("leaves", "span", "tree", "built", "core", "atoms")

    def __init__(self, leaves, span, tree, built, core, atoms):
        self.leaves = leaves
        self.span = span          # set of input-tree indices, shrinks
        self.tree = tree
        self.built = built
        self.core = core          # leaves still visible to the span members
        self.atoms = atoms        # list of (core, tree) creation units

    @property
    def key(self):
        return tuple(sorted(self.leaves))


def _creation_pair(classes, family):
    for i in range(len(classes)):
        ci = classes[i]
        if not ci.span:
            continue
        views_i = None
        for j in range(i + 1, len(classes)):
            cj = classes[j]
            if not cj.span or (ci.span & cj.span):
                continue
            if views_i is None:
                views_i = _complement_views(family, ci.span, ci.leaves)
            if views_i == _complement_views(family, cj.span, cj.leaves):
                return ci, cj
    return None


def _apply_creation_join(classes, keep, drop):
    """Join two classes under a fresh Creat node; drop's span leaves play."""
    joined = join_trees(keep.tree, drop.tree, label="Creat")
    gone = frozenset(drop.span)
    for cls in classes:
        cls.span -= gone
    merged = _Working(
        leaves=keep.leaves | drop.leaves,
        span=set(keep.span),
        tree=joined,
        built=True,
        core=keep.core,
        atoms=[(keep.core, joined)],
    )
    classes.remove(keep)
    classes.remove(drop)
    classes.append(merged)
    classes.sort(key=lambda c: c.key)


def _equal_span_group(classes):
    by_span = {}
    for cls in classes:
        by_span.setdefault(frozenset(cls.span), []).append(cls)
    groups = [g for span, g in by_span.items() if span and len(g) >= 2]
    if not groups:
        return None
    groups.sort(key=lambda g: g[0].key)
    return groups[0]


def _merge_group(classes, group, family):
    """Merge one equal-span group by inflating its common view tree.

    All span members see exactly the group's visible leaves (class cores);
    their identical restriction to those leaves is the region's skeleton,
    into which every built creation unit is substituted at its core clade.
    """
    span = frozenset(group[0].span)
    group_leaves = frozenset().union(*(c.leaves for c in group))
    visible = frozenset().union(*(c.core for c in group))
    view = None
    canon = None
    for i in sorted(span):
        present = frozenset(family.trees[i].leaf_names) & group_leaves
        if present != visible:
            raise FamilyError(
                "family member does not cover the merge region consistently")
        restricted = family.trees[i].restrict(visible)
        if view is None:
            view = restricted
            canon = restricted.canonical_form(with_labels=False)
        elif restricted.canonical_form(with_labels=False) != canon:
            raise FamilyError("span members disagree on the merge region")

    substitutions = {}
    atoms = []
    for cls in group:
        atoms.extend(cls.atoms)
        for core, unit in cls.atoms:
            node = view.lca(core)
            if view.clade(node) != core:
                raise FamilyError(
                    "creation unit does not sit on a clade of the region view")
            substitutions[node] = unit
    merged_tree = (with_replaced_subtrees(view, substitutions)
                   if substitutions else view)

    for cls in group:
        got = merged_tree.restrict(cls.leaves).canonical_form(with_labels=False)
        if got != cls.tree.canonical_form(with_labels=False):
            raise FamilyError("merged region contradicts a class tree")

    merged = _Working(
        leaves=group_leaves,
        span=set(span),
        tree=merged_tree,
        built=True,
        core=visible,
        atoms=atoms,
    )
    for cls in group:
        classes.remove(cls)
    classes.append(merged)
    classes.sort(key=lambda c: c.key)


def assemble_protein_tree(family):
    """Rebuild the protein tree whose maximum creation-free subtrees these are.

    The result restricts to every input tree exactly and carries a Creat
    label on every node introduced by joining two creation sides; other
    internal nodes stay unlabeled. Families not consistent with any single
    tree raise FamilyError.
    """
    if not isinstance(family, SubtreeFamily):
        family = SubtreeFamily(family)
    partition = span_partition(family)
    classes = [
        _Working(leaves=c.leaves, span=set(c.span), tree=c.tree, built=False,
                 core=c.leaves, atoms=[])
        for c in partition.classes
    ]
    while len(classes) > 1:
        for cls in classes:
            if not cls.span:
                raise FamilyError(
                    "class lost every witness tree before being merged")
        pair = _creation_pair(classes, family)
        if pair is not None:
            _apply_creation_join(classes, pair[0], pair[1])
            continue
        group = _equal_span_group(classes)
        if group is None:
            raise FamilyError(
                "no creation pair and no mergeable region remain; the family "
                "is not consistent with a single protein tree")
        _merge_group(classes, group, family)

    result = classes[0].tree
    if frozenset(result.leaf_names) != family.universe:
        raise FamilyError("assembled tree does not cover the protein set")
    for i, member in enumerate(family.trees):
        got = result.restrict(member.leaf_names)
        if (got.canonical_form(with_labels=False)
                != member.canonical_form(with_labels=False)):
            raise FamilyError(
                f"assembled tree does not restrict to input tree {i}")
    return result


def extract_max_creation_free_subtrees(protein_tree, protein_gene_map=None,
                                       creation_cap=12):
    """All inclusion-maximal creation-free subtrees of a fully labeled tree.

    At a creation the families of the two sides stand alone; elsewhere every
    pairing of a left and a right member crosses the node. The family can
    grow exponentially in the creation count, hence the cap. When a
    protein-gene map is supplied, nodes whose child subtrees share a gene
    must already be labeled Creat.
    """
    creations = 0
    for node in protein_tree.nodes:
        if node.is_leaf:
            continue
        if node.label is None:
            raise ValueError("protein tree must be fully labeled")
        if node.label == "Creat":
            creations += 1
    if creations > creation_cap:
        raise CapError(
            f"{creations} creations exceed the extraction cap of {creation_cap}")
    if protein_gene_map is not None:
        from .reconcile import apparent_creations
        for node in apparent_creations(protein_tree, protein_gene_map):
            if node.label != "Creat":
                raise ValueError(
                    "apparent creation node is not labeled Creat")

    sets = {}
    for node in protein_tree.bottom_up():
        if node.is_leaf:
            sets[node] = [frozenset((node.name,))]
        elif node.label == "Creat":
            sets[node] = sets[node.left] + sets[node.right]
        else:
            sets[node] = [l | r
                          for l in sets[node.left]
                          for r in sets[node.right]]
    return SubtreeFamily([protein_tree.restrict(s)
                          for s in sets[protein_tree.root]])


@dataclass
class CreationPairReport:
    """Outcome of checking the lowest-creation pair structure (test mode)."""

    has_creation: bool
    passed: bool
    witness: tuple | None
    message: str


def check_lowest_creation_pair(family, partition, true_tree):
    """Verify the lowest-creation pair structure against a known tree.

    Whenever the true tree has a creation, some pair of classes must induce
    complete subtrees whose union is complete, join at a Creat node, have
    disjoint spans, agree with every span member, and show equal complement
    views. Reports the first witnessing pair.
    """
    creat_clades = {true_tree.clade(n) for n in true_tree.nodes
                    if not n.is_leaf and n.label == "Creat"}
    if not creat_clades:
        return CreationPairReport(False, True, None,
                            "no creation node; nothing to witness")
    clades = set(true_tree.clades())
    classes = partition.classes
    for i in range(len(classes)):
        for j in range(len(classes)):
            if i == j:
                continue
            cu, cv = classes[i], classes[j]
            union = cu.leaves | cv.leaves
            if (cu.leaves not in clades or cv.leaves not in clades
                    or union not in clades):
                continue
            if union not in creat_clades:
                continue
            if cu.span & cv.span:
                continue
            ok = True
            for cls in (cu, cv):
                want = true_tree.restrict(cls.leaves) \
                                .canonical_form(with_labels=False)
                for k in sorted(cls.span):
                    got = family.trees[k].restrict(cls.leaves) \
                                         .canonical_form(with_labels=False)
                    if got != want:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                continue
            if (_complement_views(family, cu.span, cu.leaves)
                    != _complement_views(family, cv.span, cv.leaves)):
                continue
            return CreationPairReport(
                True, True, (tuple(sorted(cu.leaves)), tuple(sorted(cv.leaves))),
                "witnessing pair found")
    return CreationPairReport(True, False, None, "no witnessing pair of classes")
