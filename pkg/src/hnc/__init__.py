"""Hierarchical navigation control for disk robots.

Cluster hierarchies, NNI moves between them, hierarchy-preserving vector
fields, portal maps between adjacent strata, and the hybrid executor that
chains them into a collision-free planner.
"""
from ._index import EvalStats
from .clustering import (CLOSED, INTERIOR, hc_2means, is_narrow, is_standard,
                         stratum_contains, stratum_margin, two_means_split)
from .configuration import (EPS_GEOM, Configuration, DegenerateHyperplaneError, Violation,
                            centroid, centroid_midpoint, centroid_separation, cluster,
                            cluster_radius, min_clearance, separation, validate)
from .executor import (HybridState, IntegrationError, Mode, RunResult, RunStats, TraceEvent,
                       run_hnc, step, transition_budget)
from .field import (FieldParams, OutsideDomainError, PolicyIndex, attracting_field,
                    compatible_partitions, hier_field, hier_field_reference, in_set_A, in_set_H,
                    lie_separation, policy_domain_contains, policy_select, priority,
                    repulsion_gain, separation_field, separation_gain, split_preserving_field,
                    substratum_policy)
from .hierarchy import (NniTriplet, NotAClusterError, Tree, TreeParseError, count_trees,
                        enumerate_trees, nni_adjacent, nni_control, nni_move, nni_navigate,
                        nni_neighbors, nni_path_bound, nni_step, nni_triplet, parse_newick,
                        to_newick)
from .portal import (NotSymmetricError, PortalContext, consensus_radius, in_portal,
                     is_symmetric, napoleon_double_outer, napoleon_offset_and_centroids,
                     napoleon_outer, portal_center, portal_map, portal_merge, portal_scale,
                     portal_scale_parameter)
from .scenarios import Scenario, ScenarioError

__version__ = "0.1.0"
