"""Shared helpers: independent oracles and simulation shortcuts."""

import itertools

from drecon import (SimConfig, reconcile_gene_species, reconcile_protein_gene,
                    simulate_instance, strip_labels)
from drecon.trees import with_event_labels


# -- independent reconciliation oracle (naive path walking) -------------------

def naive_ancestors(tree, node):
    out = []
    while node is not None:
        out.append(node)
        node = node.parent
    return out


def naive_lca(tree, a, b):
    seen = set(id(n) for n in naive_ancestors(tree, a))
    for n in naive_ancestors(tree, b):
        if id(n) in seen:
            return n
    raise AssertionError("disconnected tree")


def naive_image(src, dst, mapping):
    image = {}

    def walk(node):
        if node.is_leaf:
            image[node] = dst.node_by_leaf(mapping[node.name])
        else:
            walk(node.left)
            walk(node.right)
            image[node] = naive_lca(dst, image[node.left], image[node.right])

    walk(src.root)
    return image


def naive_reconcile(src, dst, mapping, trigger):
    """Labels, per-edge loss lists, and costs computed the slow direct way.

    ``trigger`` is the event that adds the extra loss (Dup or Creat); the
    Spec/Dup refinement of protein nodes is ignored here because it never
    affects costs or loss lists.
    """
    image = naive_image(src, dst, mapping)
    labels = {}
    for node in src.nodes:
        if node.is_leaf:
            continue
        if image[node] is image[node.left] or image[node] is image[node.right]:
            labels[node] = trigger
        else:
            labels[node] = "Spec"
    losses = {}
    for node in src.nodes:
        if node.parent is None:
            continue
        top, bottom = image[node.parent], image[node]
        path = []
        cur = bottom
        while cur is not top:
            cur = cur.parent
            if cur is not top:
                path.append(cur)
        path.reverse()
        if labels[node.parent] == trigger and top is not bottom:
            path.insert(0, top)
        losses[node] = path
    n_events = sum(1 for v in labels.values() if v == trigger)
    n_losses = sum(len(v) for v in losses.values())
    return labels, losses, n_events, n_losses


# -- simulation shortcuts ------------------------------------------------------

def sim(seed, species=5, dup=0.15, gloss=0.1, creat=0.1, ploss=0.05):
    return simulate_instance(SimConfig(
        species=species, dup_prob=dup, gene_loss_prob=gloss,
        creation_prob=creat, protein_loss_prob=ploss, seed=seed))


def lca_labeled_protein(ground_truth):
    """The simulated protein tree relabeled by LCA reconciliation."""
    rgs = reconcile_gene_species(ground_truth.gene_tree,
                                 ground_truth.species_tree,
                                 ground_truth.gene_species)
    rpg = reconcile_protein_gene(ground_truth.protein_tree,
                                 ground_truth.gene_tree,
                                 ground_truth.protein_gene, rgs)
    base = strip_labels(ground_truth.protein_tree)
    return with_event_labels(
        base, {base.nodes[n.index]: lab for n, lab in rpg.labels.items()})


def creat_clades(tree):
    return {tree.clade(n) for n in tree.nodes
            if not n.is_leaf and n.label == "Creat"}


def has_creation_chain(tree):
    """A creation node directly above another creation node.

    Stacked creations can be reassociated without changing the family of
    maximum creation-free subtrees, so such trees are not uniquely
    reconstructable from the family.
    """
    for node in tree.nodes:
        if node.is_leaf or node.label != "Creat":
            continue
        for child in node.children:
            if not child.is_leaf and child.label == "Creat":
                return True
    return False


def powerset(items):
    items = list(items)
    for k in range(len(items) + 1):
        yield from itertools.combinations(items, k)
