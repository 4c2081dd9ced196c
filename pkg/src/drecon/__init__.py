"""Double reconciliation of protein, gene, and species trees.

A protein tree reconciles with its gene tree the way a gene tree reconciles
with its species tree; the double cost of a gene tree is the sum of one cost
from each layer. The package provides the reconciliations and their nine
double costs, a local-rearrangement correction heuristic with an exhaustive
oracle, a reassembler of protein trees from creation-free subtrees, and a
seeded simulator of the underlying evolutionary process.
"""

from .errors import (BijectionError, CapError, ConsistencyError, DreconError,
                     FamilyError, MappingError, NewickError, SimulationError)
from .trees import (EVENT_LABELS, PhyloTree, enumerate_topologies,
                    n_topologies, parse_newick, parse_newick_many,
                    serialize_newick, strip_labels, subtree_as_tree,
                    with_event_labels)
from .reconcile import (ALL_COST_SPECS, Reconciliation, apparent_creations,
                        classify_pairs, double_cost, double_cost_parts,
                        extend_mapping, infer_gene_to_species,
                        infer_protein_to_gene, parse_cost_spec,
                        read_mapping_tsv, reconcile_gene_species,
                        reconcile_protein_gene, as_gene_species_instance)
from .correction import (CorrectionReport, LocalMove, best_local_replacement,
                      correct_gene_tree, incongruent_duplications,
                      induced_gene_tree, regraft_candidates, select_antichain,
                      solve_exact)
from .assembly import (CreationPairReport, SpanPartition, SubtreeFamily,
                       assemble_protein_tree, check_creation_pair, check_lowest_creation_pair,
                       compute_spans, extract_max_creation_free_subtrees,
                       span_partition)
from .simulate import (GroundTruth, SimConfig, simulate_gene_tree,
                       simulate_instance, simulate_protein_tree,
                       simulate_species_tree, species_names)

__version__ = "0.1.0"
