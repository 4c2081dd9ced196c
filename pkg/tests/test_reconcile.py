"""Reconciliation labels, losses, double costs, and homology relations."""

import pytest

from drecon import (ALL_COST_SPECS, MappingError, apparent_creations,
                    classify_pairs, double_cost,
                    extend_mapping, infer_gene_to_species,
                    infer_protein_to_gene, parse_newick, read_mapping_tsv,
                    reconcile_gene_species, reconcile_protein_gene,
                    as_gene_species_instance)
from drecon.reconcile import parse_cost_spec

from conftest import naive_reconcile, sim

S_ABC = parse_newick("((a,b),c);")
SMAP3 = {"a1": "a", "b1": "b", "c1": "c"}


# -- extended mapping -----------------------------------------------------------

def test_extend_mapping_congruent_root():
    G = parse_newick("(a1,b1);")
    S = parse_newick("(a,b);")
    image = extend_mapping(G, S, {"a1": "a", "b1": "b"})
    assert image[G.root] is S.root


def test_extend_mapping_same_species_cherry():
    G = parse_newick("(a1,a2);")
    S = parse_newick("(a,b);")
    image = extend_mapping(G, S, {"a1": "a", "a2": "a"})
    assert image[G.root] is S.node_by_leaf("a")


def test_extend_mapping_spans_root():
    G = parse_newick("((a1,c1),b1);")
    image = extend_mapping(G, S_ABC, SMAP3)
    assert image[G.root] is S_ABC.root
    assert image[G.lca({"a1", "c1"})] is S_ABC.root


def test_extend_mapping_monotone():
    for seed in range(10):
        ground = sim(seed)
        image = extend_mapping(ground.gene_tree, ground.species_tree,
                               ground.gene_species)
        for node in ground.gene_tree.nodes:
            for child in node.children:
                assert ground.species_tree.is_ancestor(image[node],
                                                       image[child])


def test_extend_mapping_errors():
    G = parse_newick("(a1,b1);")
    S = parse_newick("(a,b);")
    with pytest.raises(MappingError):
        extend_mapping(G, S, {"a1": "a"})
    with pytest.raises(MappingError):
        extend_mapping(G, S, {"a1": "a", "b1": "nope"})


# -- gene-species reconciliation ---------------------------------------------------

def test_congruent_trees_cost_zero():
    G = parse_newick("((a1,b1),c1);")
    r = reconcile_gene_species(G, S_ABC, SMAP3)
    assert (r.cost("D"), r.cost("L"), r.cost("M")) == (0, 0, 0)
    assert all(lab == "Spec" for lab in r.labels.values())


def test_same_species_cherry_is_dup():
    G = parse_newick("(a1,a2);")
    S = parse_newick("(a,b);")
    r = reconcile_gene_species(G, S, {"a1": "a", "a2": "a"})
    assert r.labels[G.root] == "Dup"
    assert (r.cost("D"), r.cost("L"), r.cost("M")) == (1, 0, 1)


def test_gene_species_worked_example():
    G = parse_newick("((a1,c1),b1);")
    r = reconcile_gene_species(G, S_ABC, SMAP3)
    assert r.labels[G.root] == "Dup"
    assert (r.cost("D"), r.cost("L"), r.cost("M")) == (1, 3, 4)
    ab = S_ABC.lca({"a", "b"})
    to_b1 = r.loss_list(G.node_by_leaf("b1"))
    assert list(to_b1) == [S_ABC.root, ab], "extra loss precedes the path loss"
    to_a1 = r.loss_list(G.node_by_leaf("a1"))
    assert list(to_a1) == [ab]
    assert not r.loss_list(G.node_by_leaf("c1"))


def test_losses_match_naive_oracle():
    for seed in range(25):
        ground = sim(seed, species=4 + seed % 4)
        G, S = ground.gene_tree, ground.species_tree
        r = reconcile_gene_species(G, S, ground.gene_species)
        labels, losses, n_dup, n_loss = naive_reconcile(
            G, S, ground.gene_species, "Dup")
        assert r.cost("D") == n_dup
        assert r.cost("L") == n_loss
        for node in G.nodes:
            if node.parent is not None:
                assert list(r.loss_list(node)) == losses[node]


def test_dup_criterion_restatement():
    for seed in range(10):
        ground = sim(seed)
        r = reconcile_gene_species(ground.gene_tree, ground.species_tree,
                                   ground.gene_species)
        for node, lab in r.labels.items():
            child_images = {r.image[node.left], r.image[node.right]}
            assert (lab == "Dup") == (r.image[node] in child_images)


# -- protein-gene reconciliation ------------------------------------------------------

def _protein_recon(p_nwk, g_nwk, s_nwk, gmap, smap):
    P, G, S = parse_newick(p_nwk), parse_newick(g_nwk), parse_newick(s_nwk)
    rgs = reconcile_gene_species(G, S, smap)
    return P, G, reconcile_protein_gene(P, G, gmap, rgs)


def test_congruent_protein_tree_cost_zero():
    P, G, r = _protein_recon("((a11,b11),c11);", "((a1,b1),c1);", "((a,b),c);",
                             {"a11": "a1", "b11": "b1", "c11": "c1"}, SMAP3)
    assert (r.cost("C"), r.cost("L"), r.cost("M")) == (0, 0, 0)


def test_single_gene_two_isoforms_forced_creation():
    P = parse_newick("(x11,x12);")
    G = parse_newick("x1;")
    S = parse_newick("x;")
    rgs = reconcile_gene_species(G, S, {"x1": "x"})
    r = reconcile_protein_gene(P, G, {"x11": "x1", "x12": "x1"}, rgs)
    assert r.labels[P.root] == "Creat"
    assert (r.cost("C"), r.cost("L")) == (1, 0)


def test_protein_gene_worked_example():
    P, G, r = _protein_recon(
        "((a11,b11),(a21,c11));", "(((a1,b1),a2),c1);", "((a,b),c);",
        {"a11": "a1", "b11": "b1", "a21": "a2", "c11": "c1"},
        {"a1": "a", "b1": "b", "a2": "a", "c1": "c"})
    assert r.labels[P.root] == "Creat"
    assert (r.cost("C"), r.cost("L"), r.cost("M")) == (1, 3, 4)
    gaba = G.lca({"a1", "b1", "a2"})
    cherry_ab = P.lca({"a11", "b11"})
    assert list(r.loss_list(cherry_ab)) == [G.root, gaba]
    assert list(r.loss_list(P.node_by_leaf("a21"))) == [gaba]


def test_protein_losses_match_naive_oracle():
    for seed in range(25):
        ground = sim(seed, species=3 + seed % 4)
        P, G = ground.protein_tree, ground.gene_tree
        rgs = reconcile_gene_species(G, ground.species_tree,
                                     ground.gene_species)
        r = reconcile_protein_gene(P, G, ground.protein_gene, rgs)
        labels, losses, n_creat, n_loss = naive_reconcile(
            P, G, ground.protein_gene, "Creat")
        assert r.cost("C") == n_creat
        assert r.cost("L") == n_loss
        for node in P.nodes:
            if node.parent is not None:
                assert list(r.loss_list(node)) == losses[node]
        for node, lab in r.labels.items():
            assert (lab == "Creat") == (labels[node] == "Creat")


def test_mutation_is_event_plus_loss():
    for seed in range(15):
        ground = sim(seed)
        rgs = reconcile_gene_species(ground.gene_tree, ground.species_tree,
                                     ground.gene_species)
        rpg = reconcile_protein_gene(ground.protein_tree, ground.gene_tree,
                                     ground.protein_gene, rgs)
        assert rgs.cost("M") == rgs.cost("D") + rgs.cost("L")
        assert rpg.cost("M") == rpg.cost("C") + rpg.cost("L")


# -- double cost -----------------------------------------------------------------------

CONGRUENT = dict(
    p="((a11,b11),c11);", g="((a1,b1),c1);", s="((a,b),c);",
    gmap={"a11": "a1", "b11": "b1", "c11": "c1"}, smap=SMAP3)


def test_double_cost_zero_on_congruent_triple():
    for spec in ALL_COST_SPECS:
        assert double_cost(parse_newick(CONGRUENT["p"]),
                           parse_newick(CONGRUENT["g"]),
                           parse_newick(CONGRUENT["s"]),
                           CONGRUENT["gmap"], CONGRUENT["smap"], spec) == 0


def test_double_cost_worked_examples():
    P = parse_newick("((a11,c11),b11);")
    S = parse_newick("((a,b),c);")
    gmap = {"a11": "a1", "c11": "c1", "b11": "b1"}
    assert double_cost(P, parse_newick("((a1,c1),b1);"), S, gmap, SMAP3,
                       "MM") == 4
    assert double_cost(P, parse_newick("((a1,b1),c1);"), S, gmap, SMAP3,
                       "MM") == 4
    assert double_cost(P, parse_newick("((b1,c1),a1);"), S, gmap, SMAP3,
                       "MM") == 8


def test_cost_spec_validation():
    assert parse_cost_spec("CD") == ("C", "D")
    for bad in ("DC", "MX", "M", "MMM", "cd"):
        with pytest.raises(ValueError):
            parse_cost_spec(bad)


def test_cost_letter_guard():
    G = parse_newick("(a1,b1);")
    S = parse_newick("(a,b);")
    r = reconcile_gene_species(G, S, {"a1": "a", "b1": "b"})
    with pytest.raises(ValueError):
        r.cost("C")


# -- homology classification ------------------------------------------------------------

def test_gene_cherry_orthologs():
    G = parse_newick("(a1,b1);")
    S = parse_newick("(a,b);")
    r = reconcile_gene_species(G, S, {"a1": "a", "b1": "b"})
    assert classify_pairs(G, r) == [("a1", "b1", "ortholog")]


def test_protein_cherry_paralogs():
    P = parse_newick("(x11,x12);")
    G = parse_newick("x1;")
    S = parse_newick("x;")
    rgs = reconcile_gene_species(G, S, {"x1": "x"})
    r = reconcile_protein_gene(P, G, {"x11": "x1", "x12": "x1"}, rgs)
    assert classify_pairs(P, r) == [("x11", "x12", "paralog")]


def test_relations_transfer_to_genes():
    # a para-ortholog protein pair must map to paralog genes, and an
    # ortho-ortholog pair to ortholog genes
    checked = 0
    for seed in range(30):
        ground = sim(seed)
        P, G = ground.protein_tree, ground.gene_tree
        rgs = reconcile_gene_species(G, ground.species_tree,
                                     ground.gene_species)
        rpg = reconcile_protein_gene(P, G, ground.protein_gene, rgs)
        gene_rel = {frozenset((a, b)): rel
                    for a, b, rel in classify_pairs(G, rgs)}
        for a, b, rel in classify_pairs(P, rpg):
            if rel == "paralog":
                continue
            ga, gb = ground.protein_gene[a], ground.protein_gene[b]
            assert ga != gb
            want = "ortholog" if rel == "ortho-ortholog" else "paralog"
            assert gene_rel[frozenset((ga, gb))] == want
            checked += 1
    assert checked > 50


# -- apparent creations ---------------------------------------------------------------------

def test_apparent_creation_same_gene_cherry():
    P = parse_newick("(x11,x12);")
    assert apparent_creations(P, {"x11": "x1", "x12": "x1"}) == {P.root}


def test_apparent_creation_injective_mapping_empty():
    P = parse_newick("((a11,b11),c11);")
    assert apparent_creations(
        P, {"a11": "a1", "b11": "b1", "c11": "c1"}) == set()


def test_apparent_creation_shared_gene_across_sides():
    P = parse_newick("((a11,b11),(a12,c11));")
    gmap = {"a11": "a1", "b11": "b1", "a12": "a1", "c11": "c1"}
    assert apparent_creations(P, gmap) == {P.root}
    # oracle: direct leaf-gene-set intersection per internal node
    for node in P.nodes:
        if node.is_leaf:
            continue
        left = {gmap[x] for x in P.clade(node.left)}
        right = {gmap[x] for x in P.clade(node.right)}
        assert (node in apparent_creations(P, gmap)) == bool(left & right)


def test_apparent_creations_are_labeled_creat():
    for seed in range(20):
        ground = sim(seed)
        rgs = reconcile_gene_species(ground.gene_tree, ground.species_tree,
                                     ground.gene_species)
        rpg = reconcile_protein_gene(ground.protein_tree, ground.gene_tree,
                                     ground.protein_gene, rgs)
        for node in apparent_creations(ground.protein_tree,
                                       ground.protein_gene):
            assert rpg.labels[node] == "Creat"


# -- the protein-as-gene equivalence -----------------------------------------------------------

def test_prop1_equivalence_on_simulated_instances():
    for seed in range(40):
        ground = sim(seed, species=3 + seed % 5)
        P, G = ground.protein_tree, ground.gene_tree
        rgs = reconcile_gene_species(G, ground.species_tree,
                                     ground.gene_species)
        rpg = reconcile_protein_gene(P, G, ground.protein_gene, rgs)
        Gp, Sp, sp = as_gene_species_instance(P, G, ground.protein_gene)
        req = reconcile_gene_species(Gp, Sp, sp)
        assert rpg.cost("C") == req.cost("D")
        assert rpg.cost("L") == req.cost("L")
        assert rpg.cost("M") == req.cost("M")


def test_single_leaf_trees_reconcile_for_free():
    # no internal nodes, no edges: every cost is zero
    G = parse_newick("a1;")
    S = parse_newick("((a,b),c);")
    r = reconcile_gene_species(G, S, {"a1": "a"})
    assert (r.cost("D"), r.cost("L"), r.cost("M")) == (0, 0, 0)
    P = parse_newick("a11;")
    rp = reconcile_protein_gene(P, G, {"a11": "a1"}, r)
    assert (rp.cost("C"), rp.cost("L"), rp.cost("M")) == (0, 0, 0)


# -- mapping files and inference ------------------------------------------------------------------

def test_read_mapping_tsv():
    mapping = read_mapping_tsv("# comment\na1\ta\n\nb1\tb\n")
    assert mapping == {"a1": "a", "b1": "b"}


def test_read_mapping_tsv_errors():
    with pytest.raises(MappingError):
        read_mapping_tsv("a1\n")
    with pytest.raises(MappingError):
        read_mapping_tsv("a1\ta\na1\tb\n")
    with pytest.raises(MappingError):
        read_mapping_tsv("# nothing\n")


def test_infer_conventions():
    assert infer_gene_to_species(["a31", "b1", "aa12"]) == {
        "a31": "a", "b1": "b", "aa12": "aa"}
    assert infer_protein_to_gene(["a31", "b11", "aa121"]) == {
        "a31": "a3", "b11": "b1", "aa121": "aa12"}
    with pytest.raises(MappingError):
        infer_gene_to_species(["abc"])
    with pytest.raises(MappingError):
        infer_protein_to_gene(["a"])


def test_missing_mapping_row_names_leaf():
    G = parse_newick("(a1,b1);")
    S = parse_newick("(a,b);")
    with pytest.raises(MappingError) as err:
        reconcile_gene_species(G, S, {"a1": "a"})
    assert "b1" in str(err.value)
