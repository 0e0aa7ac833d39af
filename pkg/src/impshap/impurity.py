"""Impurity abstraction shared by the population formulas and the trees.

Three kinds are supported: Shannon entropy (bits), the Gini index, and the
variance of the output with category codes read as real values.  Population
variants condition the exact joint; the count-based variants serve the tree
builder.
"""

from collections.abc import Mapping
from math import log2

import numpy as np

from .info_theory import JointDistribution, as_mask, mask_members

ENTROPY = "entropy"
GINI = "gini"
VARIANCE = "variance"
KINDS = (ENTROPY, GINI, VARIANCE)


def check_kind(kind: str) -> str:
    if kind not in KINDS:
        raise ValueError(f"impurity must be one of {KINDS}, got {kind!r}")
    return kind


def impurity_of_dist(probs: np.ndarray, kind: str) -> float:
    """Impurity of a normalized distribution over output categories 0..|Y|-1."""
    probs = np.asarray(probs, dtype=np.float64)
    if kind == ENTROPY:
        pos = probs[probs > 0.0]
        return float(-(pos * np.log2(pos)).sum())
    if kind == GINI:
        return float(1.0 - (probs * probs).sum())
    if kind == VARIANCE:
        codes = np.arange(probs.size, dtype=np.float64)
        mean = float(probs @ codes)
        return float(probs @ (codes * codes) - mean * mean)
    raise ValueError(f"unknown impurity kind {kind!r}")


def prior_impurity(j: JointDistribution, kind: str) -> float:
    """Impurity of the output marginal, i(Y)."""
    return impurity_of_dist(j.marginal(1 << j.p), kind)


def conditional_impurity_at(
    j: JointDistribution, values: Mapping[int, int], kind: str
) -> float:
    """Impurity of P(Y | assignment); the pointwise (per-context) quantity."""
    return impurity_of_dist(j.cond_output_dist(values), kind)


def mean_conditional_impurity(j: JointDistribution, subset, kind: str) -> float:
    """E_b[i(Y | subset = b)] over contexts with positive probability.

    For entropy this is the mean conditional entropy H(Y | subset); for
    variance it is E[Var(Y | subset)].
    """
    mask = as_mask(subset, j.p)
    if mask == 0:
        return prior_impurity(j, kind)
    marg = j.marginal(mask | (1 << j.p))  # output is the last axis
    flat = marg.reshape(-1, j.output_arity)
    ctx = flat.sum(axis=1)
    pos = ctx > 0.0
    cond = flat[pos] / ctx[pos, None]
    if kind == ENTROPY:
        safe = np.where(cond > 0.0, cond, 1.0)
        per_ctx = -(cond * np.log2(safe)).sum(axis=1)
    elif kind == GINI:
        per_ctx = 1.0 - (cond * cond).sum(axis=1)
    elif kind == VARIANCE:
        codes = np.arange(j.output_arity, dtype=np.float64)
        means = cond @ codes
        per_ctx = cond @ (codes * codes) - means * means
    else:
        raise ValueError(f"unknown impurity kind {kind!r}")
    return float(ctx[pos] @ per_ctx)


def impurity_from_counts(counts, kind: str) -> float:
    """Impurity of a node given per-class weighted counts (list or array)."""
    total = sum(counts)
    if total <= 0.0:
        return 0.0
    if kind == ENTROPY:
        h = 0.0
        for c in counts:
            if c > 0.0:
                q = c / total
                h -= q * log2(q)
        return h
    if kind == GINI:
        s = 0.0
        for c in counts:
            q = c / total
            s += q * q
        return 1.0 - s
    if kind == VARIANCE:
        mean = 0.0
        sq = 0.0
        for y, c in enumerate(counts):
            q = c / total
            mean += q * y
            sq += q * (y * y)
        return sq - mean * mean
    raise ValueError(f"unknown impurity kind {kind!r}")


def subset_impurities_at(
    j: JointDistribution, x, kind: str, masks=None
) -> dict:
    """{subset mask: i(Y | subset = x_subset)} for the given full instance.

    Every restriction of a positive-probability x has positive probability,
    so all requested masks are well defined.
    """
    masks = range(1 << j.p) if masks is None else masks
    out = {}
    for mask in masks:
        values = {m: x[m] for m in mask_members(mask)}
        out[mask] = conditional_impurity_at(j, values, kind)
    return out
