"""CART growing, exact cost-complexity pruning and hold-out selection, with
brute-force oracles and synthetic distributions of known Bayes rule."""

from .distributions import (
    TiledDistribution,
    bayes_label,
    bayes_tree,
    disagreement_mass,
    empirical_excess_loss,
    eta_at,
    excess_loss,
    margin_h,
    preset,
    sample,
)
from .errors import ConfigError, InputError, IntegrityError, ResourceCapError, StateError
from .growing import GrowConfig, best_split, gini, grow_maximal
from .oracle import (
    brute_force_t_alpha,
    count_pruned_subtrees,
    enumerate_pruned_subtrees,
    oracle_penalized_infimum,
)
from .pipeline import (
    BoundReport,
    SplitScheme,
    penalty_scale_alpha,
    run_m1,
    run_m2,
    sweep,
    vc_dimension_half_spaces,
)
from .pruning import PruneSequence, penalized_cost, prune_sequence, t_alpha, weakest_link
from .sample import LabeledPoint, LabeledSample
from .selection import holdout_gap_bound, holdout_select
from .tree import (
    Node,
    Split,
    Tree,
    empirical_distance_sq,
    empirical_error,
    fit_leaf_labels,
    is_pruned_subtree,
    predict,
)

__version__ = "0.1.0"
