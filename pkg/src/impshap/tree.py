"""Single randomized decision trees with full impurity bookkeeping.

Categorical features use exhaustive splits (one child per category, never
reused on a path); numeric features use binary threshold splits at the
best midpoint between consecutive observed values.  Trees are always fully
developed: recursion stops only at purity or feature exhaustion.

Nodes are stored struct-of-arrays so large forests of small trees stay
compact; `Tree.node(i)` materializes a per-node view when convenient.
"""

import json
import random
from dataclasses import dataclass

import numpy as np

from .data import CATEGORICAL, Dataset
from .errors import EmptyDataset, MissingFeatureValue, NoAdmissibleFeature
from .impurity import ENTROPY, check_kind, impurity_from_counts

LEAF = -1
PURITY_EPS = 1e-12


@dataclass
class TreeNode:
    """Read-only view of one stored node."""

    node_id: int
    feature: int | None  # None at leaves
    kind: str | None  # "exhaustive" or "threshold"
    threshold: float | None
    children: tuple
    impurity: float
    mass: float
    dist: np.ndarray

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


class Tree:
    """A fitted tree: parallel per-node arrays plus build metadata."""

    def __init__(
        self,
        feature,
        threshold,
        children,
        impurity,
        mass,
        dist,
        *,
        k,
        impurity_kind,
        seed,
        n_train,
        feature_kinds,
        feature_arities,
    ):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        width = max((len(c) for c in children), default=0)
        packed = np.full((len(children), max(width, 1)), LEAF, dtype=np.int32)
        for i, c in enumerate(children):
            packed[i, : len(c)] = c
        self.children = packed
        self.impurity = np.asarray(impurity, dtype=np.float64)
        self.mass = np.asarray(mass, dtype=np.float64)
        self.dist = np.asarray(dist, dtype=np.float64)
        for arr in (self.feature, self.threshold, self.children, self.impurity,
                    self.mass, self.dist):
            arr.setflags(write=False)
        self.root = 0
        self.k = k
        self.impurity_kind = impurity_kind
        self.seed = seed
        self.n_train = n_train
        self.feature_kinds = tuple(feature_kinds)
        self.feature_arities = tuple(feature_arities)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_features(self) -> int:
        return len(self.feature_kinds)

    @property
    def n_classes(self) -> int:
        return self.dist.shape[1]

    def node(self, i: int) -> TreeNode:
        f = int(self.feature[i])
        is_leaf = f == LEAF
        kids = tuple(int(c) for c in self.children[i] if c != LEAF)
        return TreeNode(
            node_id=i,
            feature=None if is_leaf else f,
            kind=None
            if is_leaf
            else ("exhaustive" if self.feature_kinds[f] == CATEGORICAL else "threshold"),
            threshold=None if is_leaf or np.isnan(self.threshold[i]) else float(self.threshold[i]),
            children=kids,
            impurity=float(self.impurity[i]),
            mass=float(self.mass[i]),
            dist=self.dist[i],
        )

    def leaf_weighted_impurity(self) -> float:
        """sum over leaves of p(l) * i(l)."""
        leaves = self.feature == LEAF
        return float(self.mass[leaves] @ self.impurity[leaves])

    def structure_key(self) -> bytes:
        """Stable encoding of the split structure (for distinctness checks)."""
        return self.feature.tobytes() + self.children.tobytes() + self.threshold.tobytes()

    def to_json_dict(self) -> dict:
        nodes = []
        for i in range(self.n_nodes):
            view = self.node(i)
            nodes.append(
                {
                    "id": i,
                    "feature": view.feature,
                    "kind": view.kind,
                    "threshold": view.threshold,
                    "children": list(view.children),
                    "impurity": view.impurity,
                    "mass": view.mass,
                    "dist": [float(v) for v in view.dist],
                }
            )
        return {
            "k": self.k,
            "impurity": self.impurity_kind,
            "seed": self.seed,
            "n_train": self.n_train,
            "root": self.root,
            "nodes": nodes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


class _BuildContext:
    """Dataset unpacked into plain Python containers for the hot loops."""

    __slots__ = (
        "cols", "kinds", "arities", "y", "w", "n_classes", "total_weight",
        "n_rows", "n_features",
    )

    def __init__(self, dataset: Dataset):
        if dataset.n_rows == 0:
            raise EmptyDataset("cannot grow a tree from zero rows")
        out_meta = dataset.output_meta
        if out_meta.kind != CATEGORICAL:
            raise ValueError(
                f"output column {out_meta.name!r} must be categorical "
                "(quantize numeric outputs first)"
            )
        keep = slice(None)
        if dataset.weights is not None:
            # zero-weight rows carry no mass and would only distort which
            # categories count as "seen"; they are not training samples
            keep = np.flatnonzero(dataset.weights > 0.0)
            if keep.size == 0:
                raise EmptyDataset("dataset has zero total weight")
        self.cols = [col[keep].tolist() for col in dataset.data[:-1]]
        self.kinds = [c.kind for c in dataset.columns[:-1]]
        self.arities = [c.arity for c in dataset.columns[:-1]]
        self.y = dataset.output[keep].tolist()
        self.w = None if dataset.weights is None else dataset.weights[keep].tolist()
        self.n_classes = out_meta.arity
        self.total_weight = (
            float(len(self.y)) if self.w is None else float(sum(self.w))
        )
        self.n_rows = len(self.y)
        self.n_features = dataset.n_features


def build_tree(dataset: Dataset, k: int, impurity: str = ENTROPY, rng=None) -> Tree:
    """Grow one fully developed randomized tree.

    At every impure node, min(k, #admissible) candidate features are drawn
    uniformly without replacement and the candidate with the largest mean
    impurity decrease splits the node (ties broken towards the lowest
    feature index, then the smallest threshold).  k=1 is the totally
    randomized regime: the drawn feature splits unconditionally.
    """
    ctx = _BuildContext(dataset)
    seed = None
    if rng is None or isinstance(rng, int):
        seed = 0 if rng is None else rng
        rng = random.Random(seed)
    return _build_with_context(ctx, k, impurity, rng, seed)


def _build_with_context(ctx: _BuildContext, k, impurity, rng, seed) -> Tree:
    check_kind(impurity)
    if not 1 <= k <= max(ctx.n_features, 1):
        raise ValueError(f"k must be in 1..{ctx.n_features}, got {k}")
    cols, kinds, arities = ctx.cols, ctx.kinds, ctx.arities
    y, w, n_classes = ctx.y, ctx.w, ctx.n_classes
    total_weight = ctx.total_weight
    categorical = [kd == CATEGORICAL for kd in kinds]

    feat_out, thr_out, child_out = [], [], []
    imp_out, mass_out, dist_out = [], [], []

    def new_node(impv, massv, distv):
        node_id = len(feat_out)
        feat_out.append(LEAF)
        thr_out.append(float("nan"))
        child_out.append(())
        imp_out.append(impv)
        mass_out.append(massv)
        dist_out.append(distv)
        return node_id

    def node_counts(idx):
        counts = [0.0] * n_classes
        if w is None:
            for i in idx:
                counts[y[i]] += 1.0
        else:
            for i in idx:
                counts[y[i]] += w[i]
        return counts

    def admissible_features(idx, used_mask):
        out = []
        for f in range(ctx.n_features):
            if categorical[f]:
                if (used_mask >> f) & 1:
                    continue
            col = cols[f]
            first = col[idx[0]]
            for i in idx:
                if col[i] != first:
                    out.append(f)
                    break
        return out

    def best_threshold(idx, f, parent_imp, counts):
        """Best midpoint split of numeric feature f; returns (gain, thr, parts)."""
        col = cols[f]
        order = sorted(idx, key=col.__getitem__)
        total = sum(counts)
        left = [0.0] * n_classes
        best = None
        pos = 0
        n = len(order)
        while pos < n - 1:
            i = order[pos]
            left[y[i]] += 1.0 if w is None else w[i]
            pos += 1
            v, nxt = col[i], col[order[pos]]
            if v == nxt:
                continue
            right = [counts[c] - left[c] for c in range(n_classes)]
            wl = sum(left)
            wr = total - wl
            gain = parent_imp - (
                wl / total * impurity_from_counts(left, impurity)
                + wr / total * impurity_from_counts(right, impurity)
            )
            thr = (v + nxt) / 2.0
            if best is None or gain > best[0]:
                best = (gain, thr, pos)
        if best is None:
            return None
        gain, thr, cut = best
        return gain, thr, (order[:cut], order[cut:])

    def split_categorical(idx, f):
        parts = [[] for _ in range(arities[f])]
        col = cols[f]
        for i in idx:
            parts[col[i]].append(i)
        return parts

    def categorical_gain(parts, parent_imp, parent_weight):
        acc = 0.0
        for part in parts:
            if part:
                c = node_counts(part)
                acc += sum(c) / parent_weight * impurity_from_counts(c, impurity)
        return parent_imp - acc

    def grow(idx, used_mask, at_root=False):
        counts = node_counts(idx)
        node_weight = sum(counts)
        node_imp = impurity_from_counts(counts, impurity)
        dist = [c / node_weight for c in counts]
        node_id = new_node(node_imp, node_weight / total_weight, dist)
        if node_imp < PURITY_EPS:
            return node_id
        admissible = admissible_features(idx, used_mask)
        if not admissible:
            if at_root:
                raise NoAdmissibleFeature(
                    "no feature can split the root (all columns constant)"
                )
            return node_id
        if len(admissible) <= k:
            candidates = admissible
        elif k == 1:
            candidates = [admissible[rng.randrange(len(admissible))]]
        else:
            candidates = sorted(rng.sample(admissible, k))
        best = None  # (gain, feature, threshold, parts)
        if len(candidates) == 1 and categorical[candidates[0]]:
            f = candidates[0]
            best = (0.0, f, None, split_categorical(idx, f))
        else:
            for f in candidates:  # ascending feature index: ties keep the first
                if categorical[f]:
                    parts = split_categorical(idx, f)
                    gain = categorical_gain(parts, node_imp, node_weight)
                    cand = (gain, f, None, parts)
                else:
                    found = best_threshold(idx, f, node_imp, counts)
                    if found is None:
                        continue
                    gain, thr, parts = found
                    cand = (gain, f, thr, parts)
                if best is None or cand[0] > best[0]:
                    best = cand
        if best is None:
            return node_id
        _, f, thr, parts = best
        feat_out[node_id] = f
        kids = []
        if categorical[f]:
            child_mask = used_mask | (1 << f)
            for part in parts:
                if part:
                    kids.append(grow(part, child_mask))
                else:
                    # category unseen here: zero-mass child carrying the
                    # parent's distribution, so sums over children are exact
                    kids.append(new_node(0.0, 0.0, dist))
        else:
            thr_out[node_id] = thr
            for part in parts:
                kids.append(grow(part, used_mask))
        child_out[node_id] = tuple(kids)
        return node_id

    grow(list(range(ctx.n_rows)), 0, at_root=True)
    return Tree(
        feat_out,
        thr_out,
        child_out,
        imp_out,
        mass_out,
        dist_out,
        k=k,
        impurity_kind=impurity,
        seed=seed,
        n_train=ctx.n_rows,
        feature_kinds=kinds,
        feature_arities=arities,
    )


def tree_mdi(tree: Tree) -> np.ndarray:
    """Per-feature importance: sum of p(t) * impurity decrease over the
    nodes splitting on the feature.  Features never split upon score 0."""
    scores = np.zeros(tree.n_features)
    feature = tree.feature
    mass = tree.mass
    imp = tree.impurity
    children = tree.children
    for t in range(tree.n_nodes):
        f = feature[t]
        if f == LEAF:
            continue
        drop = mass[t] * imp[t]
        for c in children[t]:
            if c == LEAF:
                break
            drop -= mass[c] * imp[c]
        scores[f] += drop
    return scores


def predict(tree: Tree, x):
    """Class distribution and traversed path for one instance.

    Traversal stops early when an exhaustive split routes the instance to
    a zero-mass child (a category unseen at that node during training);
    the distribution of the last visited positive-mass node is returned.
    """
    path = [tree.root]
    node = tree.root
    feature = tree.feature
    while True:
        f = int(feature[node])
        if f == LEAF:
            break
        nxt = _step(tree, node, f, x)
        if nxt is None:
            break
        path.append(nxt)
        node = nxt
    return tree.dist[node], path


def _step(tree: Tree, node: int, f: int, x):
    """Child of `node` followed by instance x, or None on truncation."""
    v = x[f]
    if v is None:
        raise MissingFeatureValue(f"instance lacks a value for feature {f}")
    if tree.feature_kinds[f] == CATEGORICAL:
        c = int(v)
        if not 0 <= c < tree.feature_arities[f]:
            raise MissingFeatureValue(
                f"feature {f}: category {v!r} outside 0..{tree.feature_arities[f] - 1}"
            )
        child = int(tree.children[node][c])
        if tree.mass[child] == 0.0:
            return None
        return child
    side = 0 if float(v) <= tree.threshold[node] else 1
    return int(tree.children[node][side])
