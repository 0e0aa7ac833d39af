"""The shared impurity abstraction used by the population formulas and
the trees."""

import numpy as np
import pytest

from oracles import entropy_of_counts, weighted_variance

from impshap.impurity import (
    conditional_impurity_at,
    impurity_from_counts,
    impurity_of_dist,
    mean_conditional_impurity,
    prior_impurity,
)
from impshap.info_theory import cond_entropy_mean


def test_impurity_of_dist():
    assert impurity_of_dist(np.array([0.5, 0.5]), "entropy") == 1.0
    assert impurity_of_dist(np.array([1.0, 0.0]), "entropy") == 0.0
    assert impurity_of_dist(np.array([0.5, 0.5]), "gini") == 0.5
    assert impurity_of_dist(np.array([0.5, 0.5]), "variance") == 0.25
    with pytest.raises(ValueError):
        impurity_of_dist(np.array([1.0]), "mse")


def test_counts_match_dist():
    counts = [3, 1, 4]
    total = sum(counts)
    dist = np.array([c / total for c in counts])
    for kind in ("entropy", "gini", "variance"):
        assert impurity_from_counts(counts, kind) == pytest.approx(
            impurity_of_dist(dist, kind), abs=1e-12
        )
    assert impurity_from_counts(counts, "entropy") == pytest.approx(
        entropy_of_counts(counts), abs=1e-12
    )
    assert impurity_from_counts([0, 0], "entropy") == 0.0


def test_mean_conditional_entropy_matches_info_route(tables, random_joints):
    """Two independent routes to H(Y | S) agree."""
    for j in list(tables.values()) + random_joints[:5]:
        for mask in (0b01, (1 << j.p) - 1):
            a = mean_conditional_impurity(j, mask, "entropy")
            b = cond_entropy_mean(j, 1 << j.p, mask)
            assert a == pytest.approx(b, abs=1e-12)


def test_mean_conditional_variance_by_enumeration(random_joints):
    for j in random_joints[:4]:
        mask = 0b01
        marg = j.marginal([0])
        want = 0.0
        for b in range(j.arities[0]):
            pb = float(marg[b])
            if pb <= 0.0:
                continue
            cond = j.cond_output_dist({0: b})
            want += pb * weighted_variance(np.arange(j.output_arity), cond)
        got = mean_conditional_impurity(j, mask, "variance")
        assert got == pytest.approx(want, abs=1e-12)


def test_conditional_at_matches_prior_on_empty(tables):
    j = tables["table1-y1"]
    for kind in ("entropy", "gini", "variance"):
        assert conditional_impurity_at(j, {}, kind) == pytest.approx(
            prior_impurity(j, kind), abs=1e-15
        )


def test_empty_subset_mean_is_prior(tables):
    j = tables["table2"]
    for kind in ("entropy", "gini", "variance"):
        assert mean_conditional_impurity(j, 0, kind) == pytest.approx(
            prior_impurity(j, kind), abs=1e-15
        )
