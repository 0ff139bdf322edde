"""Python bindings for the signedrec ranking library."""

from ._signedrec import (
    SignedRecError,
    enumerate_relations,
    eligible_negatives,
    generate_synthetic,
    ndcg_at_k,
    recall_at_k,
    run_synthetic_experiment,
    validate_tower_shape,
)

__all__ = [
    "SignedRecError",
    "enumerate_relations",
    "eligible_negatives",
    "generate_synthetic",
    "ndcg_at_k",
    "recall_at_k",
    "run_synthetic_experiment",
    "validate_tower_shape",
]
