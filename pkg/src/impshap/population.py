"""Population-level MDI: the closed-form scores an infinite ensemble of
fully developed, totally randomized trees converges to, plus the
decomposition identities tying global scores, local scores and the total
information together.

The global score of feature m sums, over all subsets B of the other
features, the mean impurity decrease obtained by adding m after B, with
weight 1/(C(p,|B|) * (p-|B|)).  The local variant replaces mean decreases
with pointwise decreases at a concrete instance.
"""

from dataclasses import dataclass

import numpy as np

from .errors import PlayerCountTooLarge, ZeroProbabilityInstance
from .impurity import (
    ENTROPY,
    check_kind,
    conditional_impurity_at,
    mean_conditional_impurity,
    prior_impurity,
)
from .info_theory import JointDistribution, mask_members

MAX_FEATURES = 20


@dataclass
class PopulationImportance:
    """Per-feature asymptotic scores; global, or local at one instance."""

    scores: np.ndarray
    impurity: str
    instance: tuple | None = None  # None for the global measure

    @property
    def scope(self) -> str:
        return "global" if self.instance is None else "local"

    def to_json_dict(self) -> dict:
        d = {
            "method": f"pop-mdi-{self.scope}",
            "impurity": self.impurity,
            "scores": [float(v) for v in self.scores],
        }
        if self.instance is not None:
            d["instance"] = list(self.instance)
        return d


def pascal_binomials(p: int) -> list:
    """C(p, k) for k = 0..p by the Pascal recurrence, exact integers."""
    row = [1]
    for _ in range(p):
        row = [1] + [row[i] + row[i + 1] for i in range(len(row) - 1)] + [1]
    return row


def subset_weights(p: int) -> list:
    """Weight of a conditioning subset of size k: 1 / (C(p,k) * (p-k))."""
    binom = pascal_binomials(p)
    return [1.0 / (binom[k] * (p - k)) for k in range(p)]


def _check_p(p: int):
    if p > MAX_FEATURES:
        raise PlayerCountTooLarge(
            f"{p} features exceed the exact-enumeration limit {MAX_FEATURES}"
        )


def pop_global_mdi(j: JointDistribution, impurity: str = ENTROPY) -> PopulationImportance:
    """Asymptotic global MDI of every feature.

    For the entropy impurity the inner terms are the conditional mutual
    informations I(Y; X_m | B); other impurities substitute their own mean
    conditional decrease.  Contexts of probability zero contribute nothing
    (no tree branch ever reaches them).
    """
    check_kind(impurity)
    _check_p(j.p)
    p = j.p
    weights = subset_weights(p)
    full = (1 << p) - 1
    # mean conditional impurity per subset, shared across features
    cond = np.empty(1 << p)
    for mask in range(1 << p):
        cond[mask] = mean_conditional_impurity(j, mask, impurity)
    scores = np.zeros(p)
    for m in range(p):
        bit = 1 << m
        acc = 0.0
        rest = full & ~bit
        sub = rest
        while True:
            acc += weights[sub.bit_count()] * (cond[sub] - cond[sub | bit])
            if sub == 0:
                break
            sub = (sub - 1) & rest
        scores[m] = acc
    return PopulationImportance(scores, impurity)


def pop_local_mdi(
    j: JointDistribution, x, impurity: str = ENTROPY
) -> PopulationImportance:
    """Asymptotic local MDI of every feature at the instance x.

    Sums pointwise impurity differences i(Y | B = x_B) - i(Y | B = x_B,
    X_m = x_m) with the same subset weights as the global measure; terms
    can be negative.
    """
    check_kind(impurity)
    _check_p(j.p)
    p = j.p
    x = tuple(int(v) for v in x)
    if len(x) != p:
        raise ValueError(f"instance has {len(x)} values, expected {p}")
    if j.prob_of(dict(enumerate(x))) <= 0.0:
        raise ZeroProbabilityInstance(
            f"instance {x} has probability 0 under the joint"
        )
    weights = subset_weights(p)
    full = (1 << p) - 1
    at = np.empty(1 << p)
    for mask in range(1 << p):
        values = {m: x[m] for m in mask_members(mask)}
        at[mask] = conditional_impurity_at(j, values, impurity)
    scores = np.zeros(p)
    for m in range(p):
        bit = 1 << m
        acc = 0.0
        rest = full & ~bit
        sub = rest
        while True:
            acc += weights[sub.bit_count()] * (at[sub] - at[sub | bit])
            if sub == 0:
                break
            sub = (sub - 1) & rest
        scores[m] = acc
    return PopulationImportance(scores, impurity, instance=x)


@dataclass
class DecompositionReport:
    """Residuals of the three exact decomposition identities.

    (a) feature scores sum to the total impurity reduction of knowing all
        inputs; (b) each global score is the P(x)-weighted mean of its
        local scores; (c) the double sum over features and instances
        recovers the same total.
    """

    impurity: str
    total: float  # i(Y) - E[i(Y | V)]
    efficiency_residual: float
    instance_residual: float  # max over features
    double_sum_residual: float
    global_scores: np.ndarray
    tolerance: float = 1e-9

    @property
    def passed(self) -> bool:
        return (
            self.efficiency_residual < self.tolerance
            and self.instance_residual < self.tolerance
            and self.double_sum_residual < self.tolerance
        )

    def to_json_dict(self) -> dict:
        return {
            "impurity": self.impurity,
            "total": self.total,
            "efficiency_residual": self.efficiency_residual,
            "instance_residual": self.instance_residual,
            "double_sum_residual": self.double_sum_residual,
            "global_scores": [float(v) for v in self.global_scores],
            "passed": self.passed,
        }


def check_decompositions(
    j: JointDistribution, impurity: str = ENTROPY, tol: float = 1e-9
) -> DecompositionReport:
    """Verify the efficiency, per-instance and double decompositions by
    exhaustive enumeration of the positive-probability instances."""
    check_kind(impurity)
    glob = pop_global_mdi(j, impurity).scores
    full = (1 << j.p) - 1
    total = prior_impurity(j, impurity) - mean_conditional_impurity(j, full, impurity)
    instances = j.positive_instances()
    probs = np.array([j.prob_of(dict(enumerate(x))) for x in instances])
    local = np.vstack([pop_local_mdi(j, x, impurity).scores for x in instances])
    recomposed = probs @ local
    return DecompositionReport(
        impurity=impurity,
        total=float(total),
        efficiency_residual=abs(float(glob.sum()) - total),
        instance_residual=float(np.abs(recomposed - glob).max()),
        double_sum_residual=abs(float(local.sum(axis=1) @ probs) - total),
        global_scores=glob,
    )
