"""Dataset ingestion, one-hot bin encoding, single-layer training, the
weight->conductance mapping, and hardware-in-the-loop evaluation.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import cells, crossbar
from .params import MlConfig, SimConfig

DATASET_SPECS = {
    # name: (rows, features, classes)
    "iris": (150, 4, 3),
    "wine": (178, 13, 3),
    "breast_cancer": (569, 30, 2),
    "banknote": (1372, 4, 2),
}


class ParseError(Exception):
    """Malformed dataset file."""


class SchemaError(Exception):
    """Dataset file has the wrong column layout or counts."""


class NonFinite(Exception):
    """Training diverged to non-finite values (bad learning rate)."""


class DegenerateWeights(Exception):
    """All shifted weights are zero; nothing to map."""


class DegenerateFeature(UserWarning):
    """A feature is constant on the training split (zero bin width)."""


@dataclass(frozen=True)
class RawDataset:
    name: str
    features: np.ndarray  # (n, f) float
    labels: np.ndarray    # (n,) int in [0, n_classes)
    n_classes: int


def load_dataset(name: str, path) -> RawDataset:
    """Read one of the four vendored CSV files.

    Layout: a header row, feature columns first, integer class label last.
    Row/feature/class counts are validated against the canonical values.
    """
    if name not in DATASET_SPECS:
        raise SchemaError(f"unknown dataset {name!r}")
    n_rows, n_feat, n_classes = DATASET_SPECS[name]
    rows = []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise ParseError(f"{path}: empty file")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != n_feat + 1:
                    raise SchemaError(
                        f"{path}:{lineno}: expected {n_feat + 1} columns, got {len(row)}")
                try:
                    rows.append([float(x) for x in row])
                except ValueError as exc:
                    raise ParseError(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if len(header) != n_feat + 1:
        raise SchemaError(f"{path}: header has {len(header)} columns, "
                          f"expected {n_feat + 1}")
    if len(rows) != n_rows:
        raise SchemaError(f"{path}: {len(rows)} data rows, expected {n_rows}")
    data = np.array(rows)
    feats = data[:, :-1]
    labels = data[:, -1].astype(int)
    if not np.all((labels >= 0) & (labels < n_classes)):
        raise SchemaError(f"{path}: labels outside [0, {n_classes})")
    if not np.isfinite(feats).all():
        raise ParseError(f"{path}: non-finite feature values")
    return RawDataset(name=name, features=feats, labels=labels,
                      n_classes=n_classes)


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EncodedDataset:
    name: str
    spikes: np.ndarray       # (n, features*bins) binary
    labels: np.ndarray
    n_classes: int
    n_features: int
    bins: int
    bin_edges: np.ndarray    # (features, bins+1), from the training split
    train_idx: np.ndarray
    test_idx: np.ndarray

    @property
    def width(self) -> int:
        return self.n_features * self.bins


def encode(ds: RawDataset, bins: int = 4, split_seed: int = 0,
           train_frac: float = 0.7) -> EncodedDataset:
    """Equal-width one-hot bin encoding with a seeded 70/30 split.

    Bin edges come from the training split only; out-of-range test values
    clamp to the edge bins, so every sample carries exactly n_features
    active bits.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    n, f = ds.features.shape
    rng = np.random.default_rng(split_seed)
    perm = rng.permutation(n)
    n_train = int(round(train_frac * n))
    train_idx, test_idx = np.sort(perm[:n_train]), np.sort(perm[n_train:])
    tr = ds.features[train_idx]
    mn, mx = tr.min(axis=0), tr.max(axis=0)
    width = (mx - mn) / bins
    edges = np.empty((f, bins + 1))
    for j in range(f):
        if width[j] == 0.0:
            warnings.warn(f"{ds.name}: feature {j} constant on the training "
                          f"split; encoded as bin 0", DegenerateFeature)
            edges[j] = mn[j]
        else:
            edges[j] = mn[j] + width[j] * np.arange(bins + 1)
    idx = np.zeros((n, f), dtype=int)
    nz = width > 0
    idx[:, nz] = np.clip(
        np.floor((ds.features[:, nz] - mn[nz]) / width[nz]).astype(int),
        0, bins - 1)
    spikes = np.zeros((n, f * bins), dtype=np.uint8)
    cols = np.arange(f) * bins + idx
    spikes[np.arange(n)[:, None], cols] = 1
    return EncodedDataset(name=ds.name, spikes=spikes, labels=ds.labels.copy(),
                          n_classes=ds.n_classes, n_features=f, bins=bins,
                          bin_edges=edges, train_idx=train_idx, test_idx=test_idx)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

@dataclass
class TrainedModel:
    weights: np.ndarray  # (width, classes)
    bias: np.ndarray     # (classes,)
    lr: float
    epochs: int
    seed: int
    train_accuracy: float = 0.0
    accuracy_trace: list = field(default_factory=list)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def mse_softmax_loss_grad(w, b, x, y_onehot):
    """Mean (over samples) squared error between softmax scores and the
    one-hot labels, with its analytic gradient."""
    n = x.shape[0]
    p = softmax(x @ w + b)
    d = p - y_onehot
    loss = float((d * d).sum() / n)
    # dL/dz through the softmax Jacobian
    g = (2.0 / n) * p * (d - (d * p).sum(axis=1, keepdims=True))
    return loss, x.T @ g, g.sum(axis=0)


def model_scores(model: TrainedModel, spikes: np.ndarray) -> np.ndarray:
    return spikes @ model.weights + model.bias


def model_accuracy(model: TrainedModel, spikes, labels) -> float:
    return float((model_scores(model, spikes).argmax(axis=1) == labels).mean())


def train(enc: EncodedDataset, epochs: int, lr: float, seed: int,
          init_scale: float = 0.1) -> TrainedModel:
    """Full-batch gradient descent; deterministic for a given seed."""
    if epochs < 0 or lr <= 0:
        raise ValueError("epochs must be >= 0 and lr positive")
    x = enc.spikes[enc.train_idx].astype(float)
    labels = enc.labels[enc.train_idx]
    y = np.eye(enc.n_classes)[labels]
    rng = np.random.default_rng(seed)
    w = rng.uniform(-init_scale, init_scale, size=(enc.width, enc.n_classes))
    b = np.zeros(enc.n_classes)
    model = TrainedModel(weights=w, bias=b, lr=lr, epochs=epochs, seed=seed)
    trace_every = max(1, epochs // 20)
    for epoch in range(epochs):
        loss, dw, db = mse_softmax_loss_grad(w, b, x, y)
        if not np.isfinite(loss):
            raise NonFinite(f"loss diverged at epoch {epoch} (lr={lr})")
        w -= lr * dw
        b -= lr * db
        if (epoch + 1) % trace_every == 0 or epoch == epochs - 1:
            acc = float(((x @ w + b).argmax(axis=1) == labels).mean())
            model.accuracy_trace.append((epoch + 1, acc))
    if not (np.isfinite(w).all() and np.isfinite(b).all()):
        raise NonFinite("non-finite parameters after training")
    model.weights, model.bias = w, b
    model.train_accuracy = model_accuracy(model, enc.spikes[enc.train_idx], labels)
    return model


# ---------------------------------------------------------------------------
# weight -> conductance mapping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConductanceMap:
    target_resistances: np.ndarray  # (width, classes) ohm
    conductances: np.ndarray        # (width, classes) S
    bias_g: np.ndarray              # per-column bias, conductance units (S)
    shift: float
    w_low: float
    w_high: float
    g_low: float
    g_high: float


def map_to_conductance(model: TrainedModel, g_low: float = 5e-5,
                       g_high: float = 2e-4) -> ConductanceMap:
    """Affine map of the shifted weights onto [g_low, g_high].

    The weight shift and the float bias are absorbed into per-column bias
    conductances; with a fixed spike count per sample this preserves the
    float model's column ordering exactly under ideal (linear) currents.

    All-equal weights collapse the affine span; every cell then sits at the
    window midpoint and the ordering is carried by the bias currents alone
    (the bias scale falls back to the full window slope per unit weight).
    """
    w = model.weights
    if not np.isfinite(w).all():
        raise DegenerateWeights("non-finite weights")
    if w.size == 0:
        raise DegenerateWeights("empty weight matrix")
    w_low = float(w.min())
    w_high = float(w.max())
    shift = -w_low
    span = w_high + shift
    if span > 0.0:
        kappa = (g_high - g_low) / span
        g = g_low + (w + shift) * kappa
    else:
        kappa = g_high - g_low
        g = np.full_like(w, 0.5 * (g_low + g_high))
    bias_g = kappa * (model.bias - model.bias.min())
    return ConductanceMap(target_resistances=1.0 / g, conductances=g,
                          bias_g=bias_g, shift=shift, w_low=w_low,
                          w_high=w_high, g_low=g_low, g_high=g_high)


def ideal_column_currents(cmap: ConductanceMap, spikes_row: np.ndarray,
                          v_read: float = 0.6) -> np.ndarray:
    active = spikes_row.astype(bool)
    return v_read * (cmap.conductances[active, :].sum(axis=0) + cmap.bias_g)


def build_crossbar(cfg: SimConfig, kind: str, cmap: ConductanceMap,
                   noise: bool = False, seed: int = 0) -> crossbar.Crossbar:
    """Program a crossbar from the map; bias conductances become column
    currents through the kind's realized current-vs-conductance slope so
    they stay commensurate with the cell currents."""
    table = crossbar.read_table(cfg, kind)
    bias_i = cmap.bias_g * table.secant_di_dg()
    return crossbar.program_array(cfg, kind, cmap.target_resistances,
                                  noise=noise, seed=seed, bias_currents=bias_i)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

@dataclass
class EvalMetrics:
    dataset: str
    kind: str
    n: int
    accuracy_pct: float
    tie_rate_pct: float
    mean_energy_pj: float
    confusion: np.ndarray  # rows = true, cols = predicted


def _tie_rng(seed: int, sample_index: int) -> np.random.Generator:
    # per-inference stream derived from (run seed, sample index) so
    # evaluation order cannot change outcomes
    return np.random.default_rng((seed, 104729, sample_index))


def evaluate(xb: crossbar.Crossbar, enc: EncodedDataset, split: str = "test",
             accounting: str = "full", seed: int = 0) -> EvalMetrics:
    """Run inference per sample; random tie-break outcomes are scored as
    ordinary predictions, the tie rate is reported separately."""
    idx = enc.test_idx if split == "test" else enc.train_idx
    conf = np.zeros((enc.n_classes, enc.n_classes), dtype=int)
    ties = 0
    energy = 0.0
    correct = 0
    for k, i in enumerate(idx):
        r = crossbar.infer(xb, enc.spikes[i], _tie_rng(seed, k),
                           accounting=accounting)
        conf[enc.labels[i], r.winner] += 1
        ties += int(r.tie)
        energy += r.energy
        correct += int(r.winner == enc.labels[i])
    n = len(idx)
    return EvalMetrics(dataset=enc.name, kind=xb.kind, n=n,
                       accuracy_pct=100.0 * correct / n,
                       tie_rate_pct=100.0 * ties / n,
                       mean_energy_pj=1e12 * energy / n,
                       confusion=conf)


def evaluate_ideal(cmap: ConductanceMap, enc: EncodedDataset,
                   split: str = "test", v_read: float = 0.6) -> float:
    """Accuracy of the ideal mapped system (linear currents, perfect ADC);
    equals the float model's accuracy by the mapping construction."""
    idx = enc.test_idx if split == "test" else enc.train_idx
    correct = 0
    for i in idx:
        cur = ideal_column_currents(cmap, enc.spikes[i], v_read)
        correct += int(int(np.argmax(cur)) == enc.labels[i])
    return 100.0 * correct / len(idx)


def run_classification(cfg: SimConfig, ds: RawDataset, kind: str, seed: int = 0,
                       noise: bool = False, accounting: str = "full",
                       ml: MlConfig | None = None):
    """End-to-end: encode, train, map, program, evaluate.

    Returns (metrics, model, encoded, crossbar).
    """
    ml = ml or cfg.ml.for_dataset(ds.name)
    s = seed + ml.seed_offset
    enc = encode(ds, bins=ml.bins, split_seed=s, train_frac=ml.train_frac)
    model = train(enc, epochs=ml.epochs, lr=ml.lr, seed=s,
                  init_scale=ml.init_scale)
    cmap = map_to_conductance(model, g_low=ml.g_low_s, g_high=ml.g_high_s)
    xb = build_crossbar(cfg, kind, cmap, noise=noise, seed=s)
    metrics = evaluate(xb, enc, split="test", accounting=accounting, seed=s)
    return metrics, model, enc, xb
