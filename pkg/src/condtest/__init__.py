"""Identity and closeness testing of discrete distributions with conditional samples."""

from .closeness import (
    CandidateSet,
    ClosenessConstants,
    ClosenessParams,
    GuessState,
    assisted_closeness_test,
    binary_search,
    closeness_test,
    prune_set,
)
from .distributions import (
    CondOracle,
    Distribution,
    InducedOracle,
    MixtureOracle,
    Partition,
    Verdict,
    induced_distribution,
)
from .equality import EqualityParams, t_statistic, test_equal
from .finder import CandidateTuple, find_element, tuple_quality
from .harness import ExperimentRecord, amplify, run_trials, sweep, verify_lemmas
from .identity import GroupingH, build_grouping, identity_test, near_uniform_identity_test

__all__ = [
    "CandidateSet",
    "CandidateTuple",
    "ClosenessConstants",
    "ClosenessParams",
    "CondOracle",
    "Distribution",
    "EqualityParams",
    "ExperimentRecord",
    "GroupingH",
    "GuessState",
    "InducedOracle",
    "MixtureOracle",
    "Partition",
    "Verdict",
    "amplify",
    "assisted_closeness_test",
    "binary_search",
    "build_grouping",
    "closeness_test",
    "find_element",
    "identity_test",
    "induced_distribution",
    "near_uniform_identity_test",
    "prune_set",
    "run_trials",
    "sweep",
    "t_statistic",
    "test_equal",
    "tuple_quality",
    "verify_lemmas",
]
