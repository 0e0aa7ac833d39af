"""Exact Shapley values for transferable-utility games over <= 20 players.

Coalitions are integer bitmasks.  The characteristic function is memoized
over all 2^p coalitions once, then every payoff is an exact-rational
weighted sum of marginal contributions.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np

from .errors import (
    NonZeroEmptyCoalition,
    PlayerCountTooLarge,
    ZeroProbabilityInstance,
)
from .impurity import (
    VARIANCE,
    conditional_impurity_at,
    mean_conditional_impurity,
    prior_impurity,
)
from .info_theory import (
    JointDistribution,
    cond_entropy_at,
    entropy,
    mask_members,
    mutual_info,
)

MAX_PLAYERS = 20

GLOBAL_INFO = "global-info"
LOCAL_INFO = "local-info"
GLOBAL_VARIANCE = "global-variance"
LOCAL_VARIANCE = "local-variance"


@dataclass
class TUGame:
    """A cooperative game: player count and coalition evaluator v(mask).

    v(0) must be 0; the evaluator must be deterministic per coalition.
    """

    p: int
    evaluate: callable
    label: str = "custom"

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("need at least one player")
        if self.p > MAX_PLAYERS:
            raise PlayerCountTooLarge(
                f"{self.p} players exceed the exact-enumeration limit {MAX_PLAYERS}"
            )
        v0 = float(self.evaluate(0))
        if abs(v0) > 1e-12:
            raise NonZeroEmptyCoalition(f"v(empty) = {v0!r}, expected 0")

    def coalition_values(self) -> np.ndarray:
        """Memo table v over all 2^p coalition masks."""
        values = np.empty(1 << self.p)
        for mask in range(1 << self.p):
            values[mask] = self.evaluate(mask)
        return values


@dataclass
class ShapleyVector:
    """Per-player payoffs; they sum to v(all players) by construction."""

    payoffs: np.ndarray
    game_total: float
    game_label: str = "custom"

    def __post_init__(self):
        self.payoffs = np.asarray(self.payoffs, dtype=np.float64)
        residual = abs(float(self.payoffs.sum()) - self.game_total)
        if residual > 1e-9:
            raise ValueError(
                f"payoffs sum to {self.payoffs.sum()!r}, expected "
                f"{self.game_total!r} (residual {residual:.3e})"
            )

    def to_json_dict(self) -> dict:
        return {
            "method": "shapley-exact",
            "game": self.game_label,
            "payoffs": [float(v) for v in self.payoffs],
            "total": float(self.game_total),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


def shapley_weights(p: int) -> list:
    """Exact coalition-size weights |S|!(p-|S|-1)!/p! as floats."""
    fp = factorial(p)
    return [
        float(Fraction(factorial(k) * factorial(p - k - 1), fp)) for k in range(p)
    ]


def _popcounts(n_masks: int, p: int) -> np.ndarray:
    sizes = np.zeros(n_masks, dtype=np.int64)
    idx = np.arange(n_masks)
    for b in range(p):
        sizes += (idx >> b) & 1
    return sizes


def shapley_exact(game: TUGame, values: np.ndarray | None = None) -> ShapleyVector:
    """Payoffs by direct evaluation of the permutation-weighted sum.

    `values` may carry a precomputed coalition table to avoid re-evaluating
    the characteristic function.
    """
    p = game.p
    if values is None:
        values = game.coalition_values()
    weights = np.array(shapley_weights(p))
    sizes = _popcounts(1 << p, p)
    masks = np.arange(1 << p)
    payoffs = np.empty(p)
    for m in range(p):
        bit = 1 << m
        without = masks[(masks & bit) == 0]
        mc = values[without | bit] - values[without]
        payoffs[m] = float(weights[sizes[without]] @ mc)
    return ShapleyVector(payoffs, float(values[-1]), game.label)


def game_global_info(j: JointDistribution) -> TUGame:
    """v(S) = I(Y; S): the information the coalition carries about the output."""
    return TUGame(j.p, lambda mask: mutual_info(j, 1 << j.p, mask), GLOBAL_INFO)


def game_local_info(j: JointDistribution, x) -> TUGame:
    """v(S; x) = H(Y) - H(Y | S = x_S) for a fixed full instance x.

    Coalition values can be negative: observing particular values may raise
    the uncertainty about the output.
    """
    x = _check_instance(j, x)
    h_y = entropy(j, 1 << j.p)

    def value(mask):
        if mask == 0:
            return 0.0
        values = {m: x[m] for m in mask_members(mask)}
        return h_y - cond_entropy_at(j, 1 << j.p, values)

    return TUGame(j.p, value, LOCAL_INFO)


def game_global_variance(j: JointDistribution) -> TUGame:
    """v(S) = Var(Y) - E_S[Var(Y | S)], output codes read as reals."""
    var_y = prior_impurity(j, VARIANCE)

    def value(mask):
        if mask == 0:
            return 0.0
        return var_y - mean_conditional_impurity(j, mask, VARIANCE)

    return TUGame(j.p, value, GLOBAL_VARIANCE)


def game_local_variance(j: JointDistribution, x) -> TUGame:
    """v(S; x) = Var(Y) - Var(Y | S = x_S) for a fixed full instance x."""
    x = _check_instance(j, x)
    var_y = prior_impurity(j, VARIANCE)

    def value(mask):
        if mask == 0:
            return 0.0
        values = {m: x[m] for m in mask_members(mask)}
        return var_y - conditional_impurity_at(j, values, VARIANCE)

    return TUGame(j.p, value, LOCAL_VARIANCE)


def _check_instance(j: JointDistribution, x) -> tuple:
    x = tuple(int(v) for v in x)
    if len(x) != j.p:
        raise ValueError(f"instance has {len(x)} values, expected {j.p}")
    if j.prob_of(dict(enumerate(x))) <= 0.0:
        raise ZeroProbabilityInstance(
            f"instance {x} has probability 0 under the joint"
        )
    return x


@dataclass
class AxiomReport:
    """Outcome of the testable Shapley axioms for one (game, vector) pair."""

    efficiency_residual: float
    null_players: list = field(default_factory=list)  # (player, |payoff|)
    symmetric_pairs: list = field(default_factory=list)  # (i, j, |diff|)
    tolerance: float = 1e-10

    @property
    def efficiency_ok(self) -> bool:
        return self.efficiency_residual < 1e-9

    @property
    def null_player_ok(self) -> bool:
        return all(mag < self.tolerance for _, mag in self.null_players)

    @property
    def symmetry_ok(self) -> bool:
        return all(diff < self.tolerance for _, _, diff in self.symmetric_pairs)

    @property
    def passed(self) -> bool:
        return self.efficiency_ok and self.null_player_ok and self.symmetry_ok

    def to_json_dict(self) -> dict:
        return {
            "efficiency_residual": self.efficiency_residual,
            "null_players": [
                {"player": m, "abs_payoff": mag} for m, mag in self.null_players
            ],
            "symmetric_pairs": [
                {"players": [i, k], "payoff_diff": d}
                for i, k, d in self.symmetric_pairs
            ],
            "passed": self.passed,
        }


def check_axioms(
    game: TUGame,
    vector: ShapleyVector,
    values: np.ndarray | None = None,
    tol: float = 1e-10,
) -> AxiomReport:
    """Exhaustively detect null players and symmetric pairs, then check the
    vector against efficiency, the null-player and the symmetry axioms."""
    p = game.p
    if values is None:
        values = game.coalition_values()
    masks = np.arange(1 << p)
    report = AxiomReport(
        efficiency_residual=abs(float(vector.payoffs.sum()) - float(values[-1])),
        tolerance=tol,
    )
    for m in range(p):
        bit = 1 << m
        without = masks[(masks & bit) == 0]
        if np.abs(values[without | bit] - values[without]).max() < tol:
            report.null_players.append((m, abs(float(vector.payoffs[m]))))
    for i in range(p):
        for k in range(i + 1, p):
            bits = (1 << i) | (1 << k)
            rest = masks[(masks & bits) == 0]
            if np.abs(values[rest | (1 << i)] - values[rest | (1 << k)]).max() < tol:
                diff = abs(float(vector.payoffs[i] - vector.payoffs[k]))
                report.symmetric_pairs.append((i, k, diff))
    return report


@dataclass
class MonotonicityComparison:
    """Strong-monotonicity comparison of one player across two games."""

    player: int
    premise_holds: bool  # MC in the first game >= MC in the second, all S
    payoff_first: float
    payoff_second: float

    @property
    def conclusion_holds(self) -> bool:
        return self.payoff_first >= self.payoff_second - 1e-10


def check_strong_monotonicity(game_v: TUGame, game_w: TUGame) -> list:
    """Per-player comparison of two games over the same player set.

    Wherever every marginal contribution in `game_v` dominates the one in
    `game_w`, the Shapley payoff must dominate too.
    """
    if game_v.p != game_w.p:
        raise ValueError("games must share the player set")
    p = game_v.p
    vals_v = game_v.coalition_values()
    vals_w = game_w.coalition_values()
    phi_v = shapley_exact(game_v, vals_v).payoffs
    phi_w = shapley_exact(game_w, vals_w).payoffs
    masks = np.arange(1 << p)
    out = []
    for m in range(p):
        bit = 1 << m
        without = masks[(masks & bit) == 0]
        mc_v = vals_v[without | bit] - vals_v[without]
        mc_w = vals_w[without | bit] - vals_w[without]
        out.append(
            MonotonicityComparison(
                player=m,
                premise_holds=bool((mc_v >= mc_w - 1e-12).all()),
                payoff_first=float(phi_v[m]),
                payoff_second=float(phi_w[m]),
            )
        )
    return out
