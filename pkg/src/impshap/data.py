"""Datasets: the LED display problem, the worked binary examples, CSV I/O.

Datasets are column stores: one numpy array per column, output column last.
Categorical columns hold nonnegative integer codes below their arity;
numeric columns hold floats and must be quantized before any of the
population machinery can use them.
"""

import csv
import hashlib
from dataclasses import dataclass, replace

import numpy as np

from .errors import ArityOverflow, EmptyDataset, ParseError
from .info_theory import JointDistribution, joint_from_samples

CATEGORICAL = "categorical"
NUMERIC = "numeric"

MAX_ARITY = 64

# Seven-segment encoding of the digits 0..9.  Bit order used throughout:
# (top, top-left, top-right, middle, bottom-left, bottom-right, bottom).
LED_PATTERNS = (
    (1, 1, 1, 0, 1, 1, 1),  # 0
    (0, 0, 1, 0, 0, 1, 0),  # 1
    (1, 0, 1, 1, 1, 0, 1),  # 2
    (1, 0, 1, 1, 0, 1, 1),  # 3
    (0, 1, 1, 1, 0, 1, 0),  # 4
    (1, 1, 0, 1, 0, 1, 1),  # 5
    (1, 1, 0, 1, 1, 1, 1),  # 6
    (1, 0, 1, 0, 0, 1, 0),  # 7
    (1, 1, 1, 1, 1, 1, 1),  # 8
    (1, 1, 1, 1, 0, 1, 1),  # 9
)

LED_SEGMENT_NAMES = (
    "top",
    "top_left",
    "top_right",
    "middle",
    "bottom_left",
    "bottom_right",
    "bottom",
)


@dataclass(frozen=True)
class ColumnMeta:
    name: str
    kind: str  # CATEGORICAL or NUMERIC
    arity: int | None = None
    bin_edges: tuple | None = None  # recorded by quantize
    constant: bool = False


class Dataset:
    """Rectangular sample with per-column metadata and optional row weights."""

    def __init__(self, columns, data, weights=None, name=None):
        columns = list(columns)
        data = [np.asarray(col) for col in data]
        if len(columns) != len(data):
            raise ValueError("column metadata and data arrays disagree in count")
        if len(columns) < 2:
            raise ValueError("need at least one feature column and the output")
        n_rows = {len(col) for col in data}
        if len(n_rows) != 1:
            raise ValueError(f"ragged columns: row counts {sorted(n_rows)}")
        self.n_rows = n_rows.pop()
        checked = []
        for meta, col in zip(columns, data):
            if meta.kind == CATEGORICAL:
                if meta.arity is None or meta.arity < 1:
                    raise ValueError(f"column {meta.name!r} needs a positive arity")
                if meta.arity > MAX_ARITY:
                    raise ArityOverflow(
                        f"column {meta.name!r} declares {meta.arity} categories"
                    )
                col = col.astype(np.int64)
                if self.n_rows and (col.min() < 0 or col.max() >= meta.arity):
                    raise ValueError(
                        f"column {meta.name!r} has codes outside 0..{meta.arity - 1}"
                    )
                meta = replace(
                    meta, constant=self.n_rows > 0 and np.unique(col).size <= 1
                )
            elif meta.kind == NUMERIC:
                col = col.astype(np.float64)
                meta = replace(
                    meta, arity=None, constant=self.n_rows > 0 and np.unique(col).size <= 1
                )
            else:
                raise ValueError(f"unknown column kind {meta.kind!r}")
            col.setflags(write=False)
            checked.append((meta, col))
        self.columns = [m for m, _ in checked]
        self.data = [c for _, c in checked]
        if weights is not None:
            weights = np.asarray(weights, dtype=np.float64)
            if weights.shape != (self.n_rows,):
                raise ValueError("weights must have one entry per row")
            if self.n_rows and weights.min() < 0.0:
                raise ValueError("weights must be nonnegative")
            weights.setflags(write=False)
        self.weights = weights
        self.name = name

    @property
    def n_features(self) -> int:
        return len(self.columns) - 1

    @property
    def output(self) -> np.ndarray:
        return self.data[-1]

    @property
    def output_meta(self) -> ColumnMeta:
        return self.columns[-1]

    @property
    def arities(self) -> tuple:
        return tuple(c.arity for c in self.columns)

    def feature_names(self) -> tuple:
        return tuple(c.name for c in self.columns[:-1])

    def row(self, i: int) -> tuple:
        return tuple(col[i] for col in self.data)

    def instances(self) -> list:
        """Feature tuples of all rows (output dropped)."""
        return [tuple(col[i] for col in self.data[:-1]) for i in range(self.n_rows)]

    def fingerprint(self) -> str:
        """Content hash over schema, rows and weights."""
        h = hashlib.sha256()
        for meta in self.columns:
            h.update(f"{meta.name}|{meta.kind}|{meta.arity}".encode())
        for col in self.data:
            h.update(col.tobytes())
        if self.weights is not None:
            h.update(self.weights.tobytes())
        return h.hexdigest()[:16]

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Dataset(n_rows={self.n_rows}, n_features={self.n_features}{tag})"


def led_population(name: str = "led") -> Dataset:
    """The 10-row noiseless LED population: one row per digit."""
    cols = [
        ColumnMeta(name, CATEGORICAL, arity=2) for name in LED_SEGMENT_NAMES
    ] + [ColumnMeta("digit", CATEGORICAL, arity=10)]
    data = [np.array([LED_PATTERNS[d][s] for d in range(10)]) for s in range(7)]
    data.append(np.arange(10))
    return Dataset(cols, data, name=name)


def led_sampled(n: int, seed: int = 0) -> Dataset:
    """n i.i.d. uniform digits with their exact segment patterns."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    digits = rng.integers(0, 10, size=n)
    cols = [
        ColumnMeta(name, CATEGORICAL, arity=2) for name in LED_SEGMENT_NAMES
    ] + [ColumnMeta("digit", CATEGORICAL, arity=10)]
    patterns = np.array(LED_PATTERNS)
    data = [patterns[digits, s] for s in range(7)] + [digits]
    return Dataset(cols, data, name=f"led-sampled-{n}-seed{seed}")


# Conditional rates P(Y=1 | X1, X2) for the two-output worked example;
# inputs are uniform on {0,1}^2.
_TABLE1_Y1 = {(0, 0): 0.1, (0, 1): 0.5, (1, 0): 0.9, (1, 1): 0.4}
_TABLE1_Y2 = {(0, 0): 0.1, (0, 1): 0.8, (1, 0): 0.7, (1, 1): 0.3}
# Single binary input whose local score at x1=0 is negative.
_TABLE2 = {(0,): 0.5, (1,): 0.0}


def _joint_from_rates(rates, input_arities, name) -> JointDistribution:
    arities = tuple(input_arities) + (2,)
    table = np.zeros(arities)
    n_inputs = float(np.prod(input_arities))
    for combo, rate in rates.items():
        table[combo + (1,)] = rate / n_inputs
        table[combo + (0,)] = (1.0 - rate) / n_inputs
    return JointDistribution(arities, table, name=name)


def example_tables() -> dict:
    """The exact joints of the worked binary examples, by name."""
    return {
        "table1-y1": _joint_from_rates(_TABLE1_Y1, (2, 2), "table1-y1"),
        "table1-y2": _joint_from_rates(_TABLE1_Y2, (2, 2), "table1-y2"),
        "table2": _joint_from_rates(_TABLE2, (2,), "table2"),
    }


def dataset_from_joint(j: JointDistribution, names=None, name=None) -> Dataset:
    """One weighted row per positive-probability cell; the exact population."""
    if names is None:
        names = [f"x{i + 1}" for i in range(j.p)] + ["y"]
    cols = [
        ColumnMeta(n, CATEGORICAL, arity=a) for n, a in zip(names, j.arities)
    ]
    cells = np.argwhere(j.table > 0.0)
    weights = j.table[tuple(cells.T)]
    data = [cells[:, k] for k in range(j.p + 1)]
    return Dataset(cols, data, weights=weights, name=name or j.name)


def expand_to_rows(j: JointDistribution, n: int, names=None, name=None) -> Dataset:
    """Unweighted population dataset of n rows; requires n*P(cell) integral."""
    counts = j.table.reshape(-1) * n
    rounded = np.rint(counts)
    if np.abs(counts - rounded).max() > 1e-9:
        raise ValueError(f"{n} rows cannot realize the joint exactly")
    if names is None:
        names = [f"x{i + 1}" for i in range(j.p)] + ["y"]
    cols = [
        ColumnMeta(nm, CATEGORICAL, arity=a) for nm, a in zip(names, j.arities)
    ]
    configs = np.array(
        np.unravel_index(np.arange(counts.size), j.arities)
    ).T  # (cells, vars)
    reps = rounded.astype(np.int64)
    rows = np.repeat(configs, reps, axis=0)
    data = [rows[:, k] for k in range(j.p + 1)]
    return Dataset(cols, data, name=name or j.name)


def dataset_to_joint(dataset: Dataset) -> JointDistribution:
    """Empirical joint of a fully categorical dataset (weights honoured)."""
    return joint_from_samples(dataset)


def sample_from_joint(j: JointDistribution, n: int, seed: int = 0) -> Dataset:
    """n i.i.d. rows drawn from the joint."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    flat = rng.choice(j.table.size, size=n, p=j.table.reshape(-1))
    configs = np.array(np.unravel_index(flat, j.arities)).T
    names = [f"x{i + 1}" for i in range(j.p)] + ["y"]
    cols = [
        ColumnMeta(nm, CATEGORICAL, arity=a) for nm, a in zip(names, j.arities)
    ]
    data = [configs[:, k] for k in range(j.p + 1)]
    return Dataset(cols, data, name=f"{j.name or 'joint'}-sampled-{n}")


def random_joint(
    seed: int,
    p: int | None = None,
    max_arity: int = 3,
    zero_fraction: float = 0.25,
    append_irrelevant: bool | None = None,
) -> JointDistribution:
    """Small random joint for property tests, deterministic in `seed`.

    A fraction of cells is zeroed to exercise zero-probability contexts;
    optionally an input independent of everything else is appended so the
    null-player paths get exercised too.
    """
    rng = np.random.default_rng(seed)
    if p is None:
        p = int(rng.integers(2, 5))
    arities = [int(rng.integers(2, max_arity + 1)) for _ in range(p)]
    y_arity = int(rng.integers(2, max_arity + 1))
    table = rng.random(tuple(arities) + (y_arity,))
    if zero_fraction > 0.0:
        drop = rng.random(table.shape) < zero_fraction
        # never drop everything
        if drop.all():
            drop.reshape(-1)[0] = False
        table[drop] = 0.0
    table /= table.sum()
    if append_irrelevant is None:
        append_irrelevant = bool(rng.integers(0, 2))
    if append_irrelevant:
        extra = rng.random(2) + 0.1
        extra /= extra.sum()
        table = table[..., None, :] * extra[:, None]
        arities = arities + [2]
    return JointDistribution(
        tuple(arities) + (y_arity,), table, name=f"random-{seed}"
    )


def quantize(dataset: Dataset, column, bins: int) -> Dataset:
    """Equal-width binning of one numeric column over its observed range.

    The replacement column is categorical with `bins` categories and the
    interior edges recorded in its metadata.
    """
    if bins < 2:
        raise ValueError("need at least 2 bins")
    idx = _column_index(dataset, column)
    meta = dataset.columns[idx]
    if meta.kind != NUMERIC:
        raise ValueError(f"column {meta.name!r} is already categorical")
    values = dataset.data[idx]
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        edges = ()
        codes = np.zeros(dataset.n_rows, dtype=np.int64)
    else:
        width = (hi - lo) / bins
        edges = tuple(lo + width * k for k in range(1, bins))
        codes = np.minimum(((values - lo) / width).astype(np.int64), bins - 1)
    new_meta = ColumnMeta(meta.name, CATEGORICAL, arity=bins, bin_edges=edges)
    columns = list(dataset.columns)
    data = list(dataset.data)
    columns[idx] = new_meta
    data[idx] = codes
    return Dataset(columns, data, weights=dataset.weights, name=dataset.name)


def quantize_all(dataset: Dataset, bins: int) -> Dataset:
    """Quantize every numeric column."""
    out = dataset
    for meta in dataset.columns:
        if meta.kind == NUMERIC:
            out = quantize(out, meta.name, bins)
    return out


def _column_index(dataset: Dataset, column) -> int:
    if isinstance(column, (int, np.integer)):
        idx = int(column)
        if not 0 <= idx < len(dataset.columns):
            raise ValueError(f"column index {idx} out of range")
        return idx
    for i, meta in enumerate(dataset.columns):
        if meta.name == column:
            return i
    raise ValueError(f"no column named {column!r}")


def load_csv(path, name=None) -> Dataset:
    """Load a dataset CSV: header row, optional '#kind:' row, data rows.

    Without a kind row, a column is categorical when every value is a
    nonnegative integer with at most MAX_ARITY distinct codes, numeric
    otherwise.  Lines starting with '#' elsewhere are skipped.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    kinds = None
    body_start = 1
    for r, row in enumerate(rows[1:], start=1):
        if row and row[0].startswith("#"):
            if row[0].startswith("#kind:"):
                declared = [row[0][len("#kind:"):].strip()] + [
                    c.strip() for c in row[1:]
                ]
                if len(declared) != len(header):
                    raise ParseError(
                        f"{path}:{r + 1}: kind row has {len(declared)} entries, "
                        f"header has {len(header)}"
                    )
                for c, k in enumerate(declared):
                    if k not in (CATEGORICAL, NUMERIC):
                        raise ParseError(
                            f"{path}:{r + 1}: column {c + 1}: unknown kind {k!r}"
                        )
                kinds = declared
            body_start = r + 1
        else:
            break
    weight_col = None
    if header and header[-1] == "__weight__":
        weight_col = len(header) - 1
        header = header[:-1]
        if kinds is not None:
            kinds = kinds[:weight_col]
    raw = [[] for _ in header]
    weights = [] if weight_col is not None else None
    for r, row in enumerate(rows[body_start:], start=body_start):
        if not row or row[0].startswith("#"):
            continue
        expected = len(header) + (1 if weight_col is not None else 0)
        if len(row) != expected:
            raise ParseError(
                f"{path}:{r + 1}: expected {expected} fields, got {len(row)}"
            )
        for c, cell in enumerate(row[: len(header)]):
            raw[c].append(cell.strip())
        if weight_col is not None:
            weights.append(row[weight_col])
    if not raw or not raw[0]:
        raise EmptyDataset(f"{path}: no data rows")
    columns = []
    data = []
    for c, cells in enumerate(raw):
        kind = kinds[c] if kinds else None
        meta, arr = _parse_column(path, header[c], cells, kind)
        columns.append(meta)
        data.append(arr)
    if weights is not None:
        try:
            weights = np.array([float(w) for w in weights])
        except ValueError as exc:
            raise ParseError(f"{path}: bad weight value: {exc}") from exc
    return Dataset(columns, data, weights=weights, name=name or str(path))


def _parse_column(path, name, cells, kind):
    def parse_all(conv):
        out = []
        for r, cell in enumerate(cells):
            try:
                out.append(conv(cell))
            except ValueError:
                raise ParseError(
                    f"{path}: column {name!r}, data row {r + 1}: "
                    f"cannot parse {cell!r}"
                ) from None
        return out

    if kind == NUMERIC:
        return ColumnMeta(name, NUMERIC), np.array(parse_all(float))
    if kind == CATEGORICAL:
        codes = parse_all(int)
        if any(v < 0 for v in codes):
            raise ParseError(f"{path}: column {name!r}: negative category code")
        arity = max(codes) + 1 if codes else 1
        if arity > MAX_ARITY:
            raise ArityOverflow(
                f"{path}: column {name!r}: {arity} categories exceed {MAX_ARITY}"
            )
        return ColumnMeta(name, CATEGORICAL, arity=arity), np.array(codes)
    # infer
    try:
        codes = [int(c) for c in cells]
        if all(v >= 0 for v in codes) and len(set(codes)) <= MAX_ARITY:
            arity = max(codes) + 1 if codes else 1
            if arity <= MAX_ARITY:
                return ColumnMeta(name, CATEGORICAL, arity=arity), np.array(codes)
    except ValueError:
        pass
    return ColumnMeta(name, NUMERIC), np.array(parse_all(float))


def write_csv(dataset: Dataset, path, provenance=None) -> None:
    """Write a dataset in the format `load_csv` reads back."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [c.name for c in dataset.columns]
        if dataset.weights is not None:
            header.append("__weight__")
        writer.writerow(header)
        kinds = [c.kind for c in dataset.columns]
        if dataset.weights is not None:
            kinds.append(CATEGORICAL)  # placeholder; trimmed by the loader
        writer.writerow([f"#kind: {kinds[0]}"] + kinds[1:])
        if provenance:
            for line in provenance:
                writer.writerow([f"# {line}"])
        for i in range(dataset.n_rows):
            row = []
            for meta, col in zip(dataset.columns, dataset.data):
                v = col[i]
                row.append(int(v) if meta.kind == CATEGORICAL else repr(float(v)))
            if dataset.weights is not None:
                row.append(repr(float(dataset.weights[i])))
            writer.writerow(row)


def load_joint_csv(path, name=None) -> JointDistribution:
    """Load a joint distribution from rows of (config..., probability).

    The header names the input variables, then the output, then a final
    column called `probability`.  Arities are inferred from the largest
    code seen per variable; omitted configurations have probability zero.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 3 or header[-1] != "probability":
        raise ParseError(
            f"{path}: expected header (inputs..., output, probability)"
        )
    n_vars = len(header) - 1
    configs = []
    probs = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(
                f"{path}:{r}: expected {len(header)} fields, got {len(row)}"
            )
        try:
            configs.append(tuple(int(v) for v in row[:n_vars]))
            probs.append(float(row[-1]))
        except ValueError as exc:
            raise ParseError(f"{path}:{r}: {exc}") from exc
    if any(v < 0 for cfg in configs for v in cfg):
        raise ParseError(f"{path}: negative category code")
    arities = tuple(max(cfg[i] for cfg in configs) + 1 for i in range(n_vars))
    table = np.zeros(arities)
    for cfg, prob in zip(configs, probs):
        table[cfg] += prob
    return JointDistribution(arities, table, name=name or str(path))


def write_joint_csv(j: JointDistribution, path, names=None) -> None:
    """Write the positive cells of a joint in the `load_joint_csv` format."""
    if names is None:
        names = [f"x{i + 1}" for i in range(j.p)] + ["y"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + ["probability"])
        for idx in np.argwhere(j.table > 0.0):
            writer.writerow([int(v) for v in idx] + [repr(float(j.table[tuple(idx)]))])


def digits_dataset(n: int | None = None, bins: int = 4, seed: int = 0) -> Dataset:
    """Quantized 8x8 digits images (desk-scale variant).

    Requires scikit-learn for the bundled image data.  Pixels (0..16) are
    quantized to `bins` equal-width categories; a random subset of n rows
    is taken when n is given.
    """
    try:
        from sklearn.datasets import load_digits
    except ImportError as exc:  # pragma: no cover
        raise ImportError(
            "the digits dataset needs scikit-learn (pip install scikit-learn)"
        ) from exc
    bunch = load_digits()
    X, y = bunch.data, bunch.target
    if n is not None:
        rng = np.random.default_rng(seed)
        pick = rng.choice(len(y), size=min(n, len(y)), replace=False)
        pick.sort()
        X, y = X[pick], y[pick]
    cols = [ColumnMeta(f"px{i:02d}", NUMERIC) for i in range(X.shape[1])]
    cols.append(ColumnMeta("digit", CATEGORICAL, arity=10))
    data = [X[:, i] for i in range(X.shape[1])] + [y]
    ds = Dataset(cols, data, name=f"digits-{len(y)}")
    return quantize_all(ds, bins)


def builtin_dataset(name: str, n: int = 200, seed: int = 0) -> Dataset:
    """Resolve a builtin dataset name used by the CLI."""
    tables = example_tables()
    if name == "led":
        return led_population()
    if name == "led-sampled":
        return led_sampled(n, seed)
    if name in ("table1-y1", "table1-y2"):
        return expand_to_rows(tables[name], 40, names=["x1", "x2", "y"], name=name)
    if name == "table2":
        return expand_to_rows(tables[name], 4, names=["x1", "y"], name=name)
    if name == "digits":
        return digits_dataset(n=n, seed=seed)
    raise ValueError(
        f"unknown builtin dataset {name!r}; expected led, led-sampled, "
        "table1-y1, table1-y2, table2 or digits"
    )


def builtin_joint(name: str) -> JointDistribution:
    """Resolve a builtin joint distribution by dataset name."""
    tables = example_tables()
    if name in tables:
        return tables[name]
    if name == "led":
        return dataset_to_joint(led_population())
    raise ValueError(
        f"unknown builtin joint {name!r}; expected led, table1-y1, table1-y2 "
        "or table2"
    )
