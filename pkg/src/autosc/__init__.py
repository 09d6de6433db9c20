"""Joint estimation of the number of subspaces and the clustering of their samples."""
from .cluster import (ClusteringResult, PartitionState, assign_remaining, auto_sc, auto_sc_n,
                      cluster_neighbors, connection_score, fusion_reward, grow_cluster,
                      local_density, merge_oversegmented, model_selection_reward,
                      select_seed_triplet, should_terminate)
from .core import DataMatrix, GroundTruth, Params, generate_synthetic, normalize_columns
from .errors import (AutoSCError, DegenerateColumn, EmptyTripletSet, Exhausted, InvalidConfig,
                     LengthMismatch, NoClusters, NoTriplets, SingularSystem, TooLarge, ZeroColumn)
from .metrics import TrialBatch, nce, nmi, triplet_error_rate
from .selfrep import (NeighborMap, SimilarityMatrix, greedy_neighbors, solve_least_squares,
                      solve_matching_pursuit, top_m_neighbors)
from .triplet import TripletSet, brute_force_triplets, enumerate_triplets, triplet_frequency

__version__ = "0.1.0"
