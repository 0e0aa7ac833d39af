"""Forests of randomized trees and the three finite-sample importance
measures: global MDI (per-feature averages of weighted impurity drops),
local MDI (per-instance impurity drops collected along traversed paths),
and the Saabas prediction decomposition.

Tree i of a forest is grown from a private RNG stream derived by hashing
(master seed, i), so results never depend on construction order or
worker scheduling.
"""

import hashlib
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .data import CATEGORICAL, Dataset
from .errors import MissingFeatureValue
from .impurity import ENTROPY
from .tree import LEAF, Tree, _build_with_context, _BuildContext, tree_mdi

LOCAL_MDI = "local-mdi"
SAABAS = "saabas"


def _tree_seed(master_seed: int, index: int) -> int:
    digest = hashlib.sha256(f"{master_seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _thread_budget() -> int:
    try:
        return max(1, int(os.environ.get("IMPSHAP_THREADS", "1")))
    except ValueError:
        return 1


class Forest:
    """An ensemble of trees sharing impurity kind, K and training data."""

    def __init__(self, trees, *, k, impurity, seed, dataset_fingerprint):
        if not trees:
            raise ValueError("a forest needs at least one tree")
        self.trees = list(trees)
        self.k = k
        self.impurity = impurity
        self.seed = seed
        self.dataset_fingerprint = dataset_fingerprint
        first = self.trees[0]
        self.n_features = first.n_features
        self.n_classes = first.n_classes
        self.feature_kinds = first.feature_kinds

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def prior(self) -> np.ndarray:
        """Training class distribution (the shared root distribution)."""
        return self.trees[0].dist[0]

    def to_json_dict(self, include_trees: bool = True) -> dict:
        d = {
            "n_trees": self.n_trees,
            "k": self.k,
            "impurity": self.impurity,
            "seed": self.seed,
            "dataset_fingerprint": self.dataset_fingerprint,
        }
        if include_trees:
            d["trees"] = [t.to_json_dict() for t in self.trees]
        return d


def _build_range(dataset, k, impurity, seed, lo, hi):
    ctx = _BuildContext(dataset)
    out = []
    for i in range(lo, hi):
        s = _tree_seed(seed, i)
        out.append(_build_with_context(ctx, k, impurity, random.Random(s), s))
    return out


def build_forest(
    dataset: Dataset,
    k: int,
    n_trees: int,
    impurity: str = ENTROPY,
    seed: int = 0,
    n_jobs: int | None = None,
) -> Forest:
    """Grow `n_trees` independent trees; deterministic in (dataset, k,
    n_trees, impurity, seed) whatever the worker count."""
    if n_trees < 1:
        raise ValueError("need at least one tree")
    if n_jobs is None:
        n_jobs = _thread_budget()
    if n_jobs <= 1 or n_trees < 4 * n_jobs:
        trees = _build_range(dataset, k, impurity, seed, 0, n_trees)
    else:
        bounds = np.linspace(0, n_trees, n_jobs + 1).astype(int)
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            chunks = pool.map(
                _build_range,
                *zip(*[
                    (dataset, k, impurity, seed, int(lo), int(hi))
                    for lo, hi in zip(bounds[:-1], bounds[1:])
                ]),
            )
        trees = [t for chunk in chunks for t in chunk]
    return Forest(
        trees,
        k=k,
        impurity=impurity,
        seed=seed,
        dataset_fingerprint=dataset.fingerprint(),
    )


def global_mdi(forest: Forest, normalize: bool = False) -> np.ndarray:
    """Per-feature importances averaged over the trees (fixed tree order)."""
    acc = np.zeros(forest.n_features)
    for tree in forest.trees:
        acc += tree_mdi(tree)
    acc /= forest.n_trees
    if normalize:
        total = np.abs(acc).sum()
        if total > 0.0:
            acc = acc / total
    return acc


@dataclass
class LocalImportanceMatrix:
    """Instance-by-feature local scores plus provenance."""

    scores: np.ndarray  # (n_instances, n_features)
    method: str  # LOCAL_MDI or SAABAS
    instance_ids: tuple
    k: int
    impurity: str
    seed: int
    classes: tuple | None = None  # saabas: decomposed class per instance

    @property
    def n_instances(self) -> int:
        return self.scores.shape[0]

    @property
    def n_features(self) -> int:
        return self.scores.shape[1]

    def to_json_dict(self) -> dict:
        d = {
            "method": self.method,
            "k": self.k,
            "impurity": self.impurity,
            "seed": self.seed,
            "instance_ids": list(self.instance_ids),
            "scores": [[float(v) for v in row] for row in self.scores],
        }
        if self.classes is not None:
            d["classes"] = list(self.classes)
        return d


def _walk_rows(tree: Tree, instances):
    """Yield per-instance move lists [(node, child, feature), ...].

    A move is recorded only when the instance proceeds to a positive-mass
    child; truncation at unseen categories ends the list early.
    """
    feature = tree.feature.tolist()
    children = tree.children.tolist()
    mass = tree.mass.tolist()
    threshold = tree.threshold.tolist()
    kinds = tree.feature_kinds
    arities = tree.feature_arities
    for x in instances:
        moves = []
        node = 0
        while True:
            f = feature[node]
            if f == LEAF:
                break
            v = x[f]
            if v is None:
                raise MissingFeatureValue(f"instance lacks a value for feature {f}")
            if kinds[f] == CATEGORICAL:
                c = int(v)
                if not 0 <= c < arities[f]:
                    raise MissingFeatureValue(
                        f"feature {f}: category {v!r} outside 0..{arities[f] - 1}"
                    )
                child = children[node][c]
                if mass[child] == 0.0:
                    break
            else:
                child = children[node][0 if float(v) <= threshold[node] else 1]
            moves.append((node, child, f))
            node = child
        yield moves


def _check_instances(forest: Forest, instances):
    instances = [tuple(x) for x in instances]
    for x in instances:
        if len(x) != forest.n_features:
            raise ValueError(
                f"instance has {len(x)} values, expected {forest.n_features}"
            )
    return instances


def local_mdi(forest: Forest, instances, instance_ids=None) -> LocalImportanceMatrix:
    """Sum of impurity drops i(t) - i(t_child) along each instance's paths,
    per split feature, averaged over trees.  Scores can be negative."""
    instances = _check_instances(forest, instances)
    acc = np.zeros((len(instances), forest.n_features))
    for tree in forest.trees:
        imp = tree.impurity.tolist()
        for row, moves in enumerate(_walk_rows(tree, instances)):
            arow = acc[row]
            for node, child, f in moves:
                arow[f] += imp[node] - imp[child]
    acc /= forest.n_trees
    return LocalImportanceMatrix(
        scores=acc,
        method=LOCAL_MDI,
        instance_ids=tuple(instance_ids or range(len(instances))),
        k=forest.k,
        impurity=forest.impurity,
        seed=forest.seed,
    )


def predict_proba(forest: Forest, instances) -> np.ndarray:
    """Forest class probabilities: the tree-average of the distribution at
    each instance's reached node (leaf, or truncation point)."""
    instances = _check_instances(forest, instances)
    acc = np.zeros((len(instances), forest.n_classes))
    for tree in forest.trees:
        for row, moves in enumerate(_walk_rows(tree, instances)):
            node = moves[-1][1] if moves else 0
            acc[row] += tree.dist[node]
    return acc / forest.n_trees


def saabas(
    forest: Forest,
    instances,
    class_selector: str = "predicted",
    class_index: int | None = None,
    instance_ids=None,
) -> LocalImportanceMatrix:
    """Changes in the probability of one class collected along paths.

    `class_selector` is "predicted" (the forest's predicted class per
    instance, ties to the lowest class) or "fixed" with `class_index`.
    Per instance, the scores plus the training prior of the class sum to
    the forest probability of that class.
    """
    instances = _check_instances(forest, instances)
    if class_selector == "predicted":
        classes = predict_proba(forest, instances).argmax(axis=1)
    elif class_selector == "fixed":
        if class_index is None:
            raise ValueError("class_selector='fixed' needs class_index")
        if not 0 <= class_index < forest.n_classes:
            raise ValueError(
                f"class index {class_index} outside 0..{forest.n_classes - 1}"
            )
        classes = np.full(len(instances), class_index, dtype=int)
    else:
        raise ValueError("class_selector must be 'predicted' or 'fixed'")
    acc = np.zeros((len(instances), forest.n_features))
    for tree in forest.trees:
        dist = tree.dist
        for row, moves in enumerate(_walk_rows(tree, instances)):
            cls = classes[row]
            arow = acc[row]
            for node, child, f in moves:
                arow[f] += dist[child][cls] - dist[node][cls]
    acc /= forest.n_trees
    return LocalImportanceMatrix(
        scores=acc,
        method=SAABAS,
        instance_ids=tuple(instance_ids or range(len(instances))),
        k=forest.k,
        impurity=forest.impurity,
        seed=forest.seed,
        classes=tuple(int(c) for c in classes),
    )


@dataclass
class CorrelationReport:
    """Per-instance rank and linear correlation of two local score matrices.

    Instances where either vector is constant have undefined correlation;
    they are excluded from the aggregates and counted.
    """

    pearson: np.ndarray  # NaN where undefined
    spearman: np.ndarray
    mode: str
    methods: tuple
    n_undefined: int = 0
    summary: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "methods": list(self.methods),
            "pearson": [None if np.isnan(v) else float(v) for v in self.pearson],
            "spearman": [None if np.isnan(v) else float(v) for v in self.spearman],
            "n_undefined": self.n_undefined,
            "summary": self.summary,
        }


def correlation_report(
    a: LocalImportanceMatrix, b: LocalImportanceMatrix, mode: str = "absolute"
) -> CorrelationReport:
    """Instance-wise Pearson and Spearman between two score matrices."""
    if a.scores.shape != b.scores.shape:
        raise ValueError(
            f"shape mismatch: {a.scores.shape} vs {b.scores.shape}"
        )
    if a.instance_ids != b.instance_ids:
        raise ValueError("instance sets differ")
    if mode not in ("absolute", "raw"):
        raise ValueError("mode must be 'absolute' or 'raw'")
    xs = np.abs(a.scores) if mode == "absolute" else a.scores
    ys = np.abs(b.scores) if mode == "absolute" else b.scores
    n = xs.shape[0]
    pearson = np.full(n, np.nan)
    spearman = np.full(n, np.nan)
    undefined = 0
    for i in range(n):
        if np.ptp(xs[i]) == 0.0 or np.ptp(ys[i]) == 0.0:
            undefined += 1
            continue
        pearson[i] = stats.pearsonr(xs[i], ys[i]).statistic
        spearman[i] = stats.spearmanr(xs[i], ys[i]).statistic
    summary = {}
    for label, arr in (("pearson", pearson), ("spearman", spearman)):
        ok = arr[~np.isnan(arr)]
        summary[label] = {
            "mean": float(ok.mean()) if ok.size else None,
            "min": float(ok.min()) if ok.size else None,
            "max": float(ok.max()) if ok.size else None,
        }
    return CorrelationReport(
        pearson=pearson,
        spearman=spearman,
        mode=mode,
        methods=(a.method, b.method),
        n_undefined=undefined,
        summary=summary,
    )


def efficiency_gap(forest: Forest) -> float:
    """Average over trees of root impurity minus weighted leaf impurity;
    equals the sum of global MDI scores for fully developed trees."""
    acc = 0.0
    for tree in forest.trees:
        acc += float(tree.impurity[0]) - tree.leaf_weighted_impurity()
    return acc / forest.n_trees


def distinct_structures(forest: Forest) -> int:
    """Number of structurally distinct trees in the forest."""
    return len({t.structure_key() for t in forest.trees})
