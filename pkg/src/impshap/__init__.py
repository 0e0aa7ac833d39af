"""Tree-ensemble variable importances, exact Shapley values, and the
population formulas that connect them."""

__version__ = "0.1.0"

from .data import (
    Dataset,
    dataset_from_joint,
    dataset_to_joint,
    example_tables,
    led_population,
    led_sampled,
    load_csv,
    load_joint_csv,
    quantize,
    random_joint,
)
from .forest import (
    Forest,
    LocalImportanceMatrix,
    build_forest,
    correlation_report,
    global_mdi,
    local_mdi,
    predict_proba,
    saabas,
)
from .info_theory import (
    JointDistribution,
    cond_entropy_at,
    cond_entropy_mean,
    cond_mutual_info,
    entropy,
    joint_from_samples,
    mutual_info,
)
from .population import (
    PopulationImportance,
    check_decompositions,
    pop_global_mdi,
    pop_local_mdi,
)
from .relevance import (
    is_irrelevant,
    is_locally_irrelevant,
    is_strongly_relevant,
    verify_global_local_equivalence,
    verify_local_null_scores,
)
from .tree import Tree, build_tree, predict, tree_mdi
from .tu_game import (
    ShapleyVector,
    TUGame,
    check_axioms,
    check_strong_monotonicity,
    game_global_info,
    game_global_variance,
    game_local_info,
    game_local_variance,
    shapley_exact,
)

__all__ = [
    "Dataset",
    "Forest",
    "JointDistribution",
    "LocalImportanceMatrix",
    "PopulationImportance",
    "ShapleyVector",
    "TUGame",
    "Tree",
    "build_forest",
    "build_tree",
    "check_axioms",
    "check_decompositions",
    "check_strong_monotonicity",
    "cond_entropy_at",
    "cond_entropy_mean",
    "cond_mutual_info",
    "correlation_report",
    "dataset_from_joint",
    "dataset_to_joint",
    "entropy",
    "example_tables",
    "game_global_info",
    "game_global_variance",
    "game_local_info",
    "game_local_variance",
    "global_mdi",
    "is_irrelevant",
    "is_locally_irrelevant",
    "is_strongly_relevant",
    "joint_from_samples",
    "led_population",
    "led_sampled",
    "load_csv",
    "load_joint_csv",
    "local_mdi",
    "mutual_info",
    "pop_global_mdi",
    "pop_local_mdi",
    "predict",
    "predict_proba",
    "quantize",
    "random_joint",
    "saabas",
    "shapley_exact",
    "tree_mdi",
    "verify_global_local_equivalence",
    "verify_local_null_scores",
]
