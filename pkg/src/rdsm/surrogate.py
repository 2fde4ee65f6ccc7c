"""Feedforward-network surrogate trained from scratch.

Dense layers with ReLU activations, normal-initialized weights, and an Adam
optimizer on mean-squared loss, all in plain numpy.  Inputs and the scalar
output are min-max scaled from the training rows; the fitted affine maps are
frozen on the model.  Training is deterministic for a fixed seed, including
the train/test split and the per-epoch shuffle order.

Fit quality is reported as MAE%: the mean over held-out rows of
|prediction - truth| / |truth| * 100.  Rows whose target magnitude falls
below 1e-9 of the training output range carry no meaningful relative error
(sparse zero-heavy targets), so they are excluded from the percentage and
counted separately in the report.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import SchemaError

__all__ = [
    "NetworkSpec",
    "TrainReport",
    "SurrogateModel",
    "train_surrogate",
    "gradient_check",
    "sweep_architectures",
    "serialize_model",
    "deserialize_model",
]

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8
_EARLY_STOP_DELTA = 0.05  # MAE percentage points
_EARLY_STOP_PATIENCE = 200  # epochs
_NEAR_ZERO_FRACTION = 1e-9  # of the training output range
_KINK_TOLERANCE = 1e-4  # pre-activation magnitude treated as a ReLU kink

_LOSSES = ("mse",)
_SCALINGS = ("minmax", "identity")


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture and training hyperparameters for one surrogate."""

    input_dim: int
    hidden_layers: tuple[int, ...] = (60, 80)
    learning_rate: float = 0.001
    epochs: int = 2000
    batch_size: int = 32
    seed: int = 0
    split: tuple[float, float] = (0.9, 0.1)  # (train_fraction, test_fraction)
    loss: str = "mse"
    init_std: float = 0.05
    scaling: str = "minmax"  # input scaling mode; "identity" for prescaled inputs

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(w) for w in self.hidden_layers))
        object.__setattr__(self, "split", tuple(float(f) for f in self.split))
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if any(w < 1 for w in self.hidden_layers):
            raise ValueError("hidden layer widths must be >= 1")
        if not self.learning_rate > 0.0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if len(self.split) != 2 or min(self.split) < 0.0:
            raise ValueError("split must be (train_fraction, test_fraction)")
        if abs(sum(self.split) - 1.0) > 1e-12:
            raise ValueError("split fractions must sum to 1")
        if self.loss not in _LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.scaling not in _SCALINGS:
            raise ValueError(f"unknown scaling {self.scaling!r}")
        if not self.init_std > 0.0:
            raise ValueError("init_std must be positive")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_layers, 1)


@dataclass(frozen=True)
class TrainReport:
    """Held-out fit quality and training trace."""

    train_mae_pct: float
    test_mae_pct: float
    n_train: int
    n_test: int
    n_excluded_train: int
    n_excluded_test: int
    zero_variance: bool
    epochs_run: int
    loss_history: tuple[float, ...] = field(repr=False)
    mae_history: tuple[float, ...] = field(repr=False)  # held-out MAE% per epoch, nan when no test rows


class SurrogateModel:
    """Immutable trained network: weights, frozen scaling, spec, and report.

    Forward evaluation is deterministic and safe to share across threads;
    predict() vectorizes over rows.
    """

    def __init__(self, spec, weights, biases, input_lo, input_hi, output_lo, output_hi, report):
        self.spec = spec
        self.weights = tuple(np.array(w, dtype=float) for w in weights)
        self.biases = tuple(np.array(b, dtype=float) for b in biases)
        self.input_lo = np.array(input_lo, dtype=float)
        self.input_hi = np.array(input_hi, dtype=float)
        self.output_lo = float(output_lo)
        self.output_hi = float(output_hi)
        self.report = report
        dims = spec.layer_dims
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[l], dims[l + 1]) or b.shape != (dims[l + 1],):
                raise ValueError(f"layer {l} weights do not match the spec dimensions")
            w.setflags(write=False)
            b.setflags(write=False)
        if self.input_lo.shape != (spec.input_dim,) or self.input_hi.shape != (spec.input_dim,):
            raise ValueError("input scaling does not match input_dim")
        for arr in (self.input_lo, self.input_hi):
            arr.setflags(write=False)

    # -- scaling -----------------------------------------------------------
    def _scale_in(self, x):
        span = self.input_hi - self.input_lo
        return (x - self.input_lo) / np.where(span > 0.0, span, 1.0)

    def _unscale_out(self, y):
        span = self.output_hi - self.output_lo
        return self.output_lo + y * (span if span > 0.0 else 1.0)

    # -- evaluation --------------------------------------------------------
    def _forward_scaled(self, a):
        """Scaled (n, d) inputs to scaled (n,) outputs."""
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ w + b, 0.0)
        return (a @ self.weights[-1] + self.biases[-1])[:, 0]

    def predict(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.spec.input_dim:
            raise ValueError(
                f"input has {x.shape[1]} columns, model expects {self.spec.input_dim}"
            )
        return self._unscale_out(self._forward_scaled(self._scale_in(x)))

    def forward(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] != self.spec.input_dim:
            raise ValueError(
                f"input vector has shape {x.shape}, model expects ({self.spec.input_dim},)"
            )
        return float(self.predict(x[None, :])[0])


def _init_parameters(spec: NetworkSpec, rng: np.random.Generator):
    dims = spec.layer_dims
    weights = [rng.normal(0.0, spec.init_std, size=(dims[l], dims[l + 1])) for l in range(len(dims) - 1)]
    biases = [np.zeros(dims[l + 1]) for l in range(len(dims) - 1)]
    return weights, biases


def _forward_train(weights, biases, a0):
    """Forward pass keeping pre-activations for backprop."""
    activations = [a0]
    pre = []
    a = a0
    for w, b in zip(weights[:-1], biases[:-1]):
        z = a @ w + b
        pre.append(z)
        a = np.maximum(z, 0.0)
        activations.append(a)
    out = a @ weights[-1] + biases[-1]
    return out[:, 0], activations, pre


def _backprop(weights, activations, pre, delta_out):
    """Gradients of a scalar loss given d(loss)/d(raw output) per row."""
    grads_w = [None] * len(weights)
    grads_b = [None] * len(weights)
    delta = delta_out[:, None]
    for l in range(len(weights) - 1, -1, -1):
        grads_w[l] = activations[l].T @ delta
        grads_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ weights[l].T) * (pre[l - 1] > 0.0)
    return grads_w, grads_b


def _mae_pct(y_true, y_pred, scale):
    """Relative MAE in percent, excluding rows with |y| below the near-zero cut.

    Returns (mae_pct, n_excluded); an all-excluded set reports 0.0.
    """
    thresh = _NEAR_ZERO_FRACTION * scale
    keep = np.abs(y_true) >= max(thresh, 0.0) if scale > 0.0 else np.abs(y_true) > 0.0
    n_exc = int(np.size(y_true) - np.count_nonzero(keep))
    if not np.any(keep):
        return 0.0, n_exc
    rel = np.abs(y_pred[keep] - y_true[keep]) / np.abs(y_true[keep])
    return float(np.mean(rel) * 100.0), n_exc


def train_surrogate(spec: NetworkSpec, x, y) -> SurrogateModel:
    """Fit a network to (x, y) rows under the spec's split and schedule.

    Adam with bias-corrected moments on mean-squared loss over min-max
    scaled data.  Training stops early once the held-out MAE% has failed to
    improve by 0.05 points for 200 consecutive epochs, and the weights with
    the best held-out MAE% seen are restored.  A zero-variance target is
    flagged on the report but still trained (the net learns the constant).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape[0] != y.shape[0]:
        raise ValueError("inputs and outputs disagree on the number of rows")
    if x.shape[1] != spec.input_dim:
        raise ValueError(f"inputs have {x.shape[1]} columns, spec expects {spec.input_dim}")
    n = x.shape[0]
    if n < 10:
        raise ValueError(f"need at least 10 rows to fit, got {n}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("training data contains non-finite values")

    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(n)
    n_test = int(round(spec.split[1] * n))
    if spec.split[1] > 0.0:
        n_test = min(max(n_test, 1), n - 1)
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    x_train, y_train = x[train_idx], y[train_idx]
    x_test, y_test = x[test_idx], y[test_idx]

    # scaling mode applies to the inputs; the output min-max is always fitted,
    # so pre-normalized inputs train through the identical scaled problem
    if spec.scaling == "minmax":
        in_lo = x_train.min(axis=0)
        in_hi = x_train.max(axis=0)
    else:
        in_lo = np.zeros(spec.input_dim)
        in_hi = np.ones(spec.input_dim)
    out_lo = float(y_train.min())
    out_hi = float(y_train.max())

    in_span = np.where(in_hi - in_lo > 0.0, in_hi - in_lo, 1.0)
    out_span = out_hi - out_lo if out_hi - out_lo > 0.0 else 1.0
    xs_train = (x_train - in_lo) / in_span
    ys_train = (y_train - out_lo) / out_span
    zero_variance = bool(np.ptp(y_train) == 0.0)
    # near-zero cut uses the raw training range; a constant nonzero target
    # falls back to its magnitude so no rows are spuriously excluded
    mae_scale = float(np.ptp(y_train))
    if mae_scale == 0.0:
        mae_scale = float(np.max(np.abs(y_train)))

    weights, biases = _init_parameters(spec, rng)
    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    t = 0

    xs_test = (x_test - in_lo) / in_span if n_test else x_test

    def eval_mae(ws, bs, xs, y_raw):
        pred = out_lo + _forward_train(ws, bs, xs)[0] * out_span
        return _mae_pct(y_raw, pred, mae_scale)

    best_mae = math.inf
    best_weights = [w.copy() for w in weights]
    best_biases = [b.copy() for b in biases]
    patience_anchor = math.inf
    patience = 0
    loss_history = []
    mae_history = []
    n_train = len(train_idx)
    epochs_run = 0

    for epoch in range(spec.epochs):
        order = rng.permutation(n_train)
        epoch_loss = 0.0
        for start in range(0, n_train, spec.batch_size):
            batch = order[start : start + spec.batch_size]
            xb, yb = xs_train[batch], ys_train[batch]
            pred, acts, pre = _forward_train(weights, biases, xb)
            err = pred - yb
            epoch_loss += float(np.sum(err * err))
            delta = 2.0 * err / len(batch)
            gw, gb = _backprop(weights, acts, pre, delta)
            t += 1
            corr1 = 1.0 - _ADAM_BETA1**t
            corr2 = 1.0 - _ADAM_BETA2**t
            for l in range(len(weights)):
                m_w[l] = _ADAM_BETA1 * m_w[l] + (1.0 - _ADAM_BETA1) * gw[l]
                v_w[l] = _ADAM_BETA2 * v_w[l] + (1.0 - _ADAM_BETA2) * gw[l] ** 2
                weights[l] = weights[l] - spec.learning_rate * (m_w[l] / corr1) / (
                    np.sqrt(v_w[l] / corr2) + _ADAM_EPS
                )
                m_b[l] = _ADAM_BETA1 * m_b[l] + (1.0 - _ADAM_BETA1) * gb[l]
                v_b[l] = _ADAM_BETA2 * v_b[l] + (1.0 - _ADAM_BETA2) * gb[l] ** 2
                biases[l] = biases[l] - spec.learning_rate * (m_b[l] / corr1) / (
                    np.sqrt(v_b[l] / corr2) + _ADAM_EPS
                )
        loss_history.append(epoch_loss / n_train)
        epochs_run = epoch + 1

        if n_test > 0:
            mae = eval_mae(weights, biases, xs_test, y_test)[0]
            mae_history.append(mae)
            if mae < best_mae:
                best_mae = mae
                best_weights = [w.copy() for w in weights]
                best_biases = [b.copy() for b in biases]
            if mae < patience_anchor - _EARLY_STOP_DELTA:
                patience_anchor = mae
                patience = 0
            else:
                patience += 1
                if patience >= _EARLY_STOP_PATIENCE:
                    break
        else:
            mae_history.append(math.nan)

    if n_test > 0:
        weights, biases = best_weights, best_biases

    train_mae, exc_train = eval_mae(weights, biases, xs_train, y_train)
    if n_test > 0:
        test_mae_v, exc_test = eval_mae(weights, biases, xs_test, y_test)
    else:
        test_mae_v, exc_test = math.nan, 0
    report = TrainReport(
        train_mae_pct=train_mae,
        test_mae_pct=test_mae_v,
        n_train=int(n_train),
        n_test=int(n_test),
        n_excluded_train=exc_train,
        n_excluded_test=exc_test,
        zero_variance=zero_variance,
        epochs_run=epochs_run,
        loss_history=tuple(loss_history),
        mae_history=tuple(mae_history),
    )
    return SurrogateModel(spec, weights, biases, in_lo, in_hi, out_lo, out_hi, report)


@dataclass(frozen=True)
class GradientSample:
    """One sampled weight coordinate compared against central differences."""

    layer: int
    row: int
    col: int
    analytic: float
    numeric: float
    rel_deviation: float
    passed: bool
    skipped: bool


def gradient_check(
    model: SurrogateModel,
    x,
    tolerance: float = 1e-4,
    n_samples: int = 20,
    seed: int = 0,
    h: float = 1e-5,
):
    """Compare backprop weight gradients with central finite differences.

    The checked scalar is the scaled network output at the scaled input, so
    step size h acts on scaled quantities as the training loop sees them.
    Coordinates whose perturbation could cross a ReLU kink (any pre-activation
    with magnitude below 1e-4 at or after the weight's layer) are reported
    as skipped rather than compared.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != model.spec.input_dim:
        raise ValueError("gradient check takes a single input vector")
    xs = model._scale_in(x)[None, :]
    weights = [w.copy() for w in model.weights]
    biases = list(model.biases)

    out, acts, pre = _forward_train(weights, biases, xs)
    gw, _ = _backprop(weights, acts, pre, np.ones(1))
    kink_layer = [bool(np.any(np.abs(z) < _KINK_TOLERANCE)) for z in pre]

    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(n_samples):
        l = int(rng.integers(len(weights)))
        i = int(rng.integers(weights[l].shape[0]))
        j = int(rng.integers(weights[l].shape[1]))
        analytic = float(gw[l][i, j])
        skipped = any(kink_layer[l:])
        if skipped:
            samples.append(GradientSample(l, i, j, analytic, math.nan, math.nan, False, True))
            continue
        orig = weights[l][i, j]
        weights[l][i, j] = orig + h
        f_plus = float(_forward_train(weights, biases, xs)[0][0])
        weights[l][i, j] = orig - h
        f_minus = float(_forward_train(weights, biases, xs)[0][0])
        weights[l][i, j] = orig
        numeric = (f_plus - f_minus) / (2.0 * h)
        denom = max(abs(analytic) + abs(numeric), 1e-10)
        rel = abs(analytic - numeric) / denom
        samples.append(GradientSample(l, i, j, analytic, numeric, rel, rel <= tolerance, False))
    return samples


def sweep_architectures(base_spec: NetworkSpec, hidden_options, x, y):
    """Train one model per listed hidden-layer layout; pick the lowest test MAE%.

    Ties keep the earliest listed layout.  Returns (best_model, table) where
    table rows are (hidden_layers, test_mae_pct).
    """
    options = [tuple(int(w) for w in opt) for opt in hidden_options]
    if not options:
        raise ValueError("need at least one architecture to sweep")
    best = None
    table = []
    for opt in options:
        model = train_surrogate(replace(base_spec, hidden_layers=opt), x, y)
        table.append((opt, model.report.test_mae_pct))
        if best is None or model.report.test_mae_pct < best.report.test_mae_pct:
            best = model
    return best, table


# -- serialization ---------------------------------------------------------

_FORMAT = "rdsm-surrogate"
_VERSION = 1

_SPEC_KEYS = {
    "input_dim",
    "hidden_layers",
    "learning_rate",
    "epochs",
    "batch_size",
    "seed",
    "split",
    "loss",
    "init_std",
    "scaling",
}
_REPORT_KEYS = {
    "train_mae_pct",
    "test_mae_pct",
    "n_train",
    "n_test",
    "n_excluded_train",
    "n_excluded_test",
    "zero_variance",
    "epochs_run",
    "loss_history",
    "mae_history",
}
_TOP_KEYS = {
    "format",
    "version",
    "spec",
    "layer_dims",
    "weights",
    "biases",
    "input_lo",
    "input_hi",
    "output_lo",
    "output_hi",
    "report",
}


def _nan_to_none(v):
    return None if isinstance(v, float) and math.isnan(v) else v


def _none_to_nan(v):
    return math.nan if v is None else float(v)


def serialize_model(model: SurrogateModel) -> bytes:
    """Versioned JSON document; floats round-trip bit-exactly."""
    spec = model.spec
    rep = model.report
    doc = {
        "format": _FORMAT,
        "version": _VERSION,
        "spec": {
            "input_dim": spec.input_dim,
            "hidden_layers": list(spec.hidden_layers),
            "learning_rate": spec.learning_rate,
            "epochs": spec.epochs,
            "batch_size": spec.batch_size,
            "seed": spec.seed,
            "split": list(spec.split),
            "loss": spec.loss,
            "init_std": spec.init_std,
            "scaling": spec.scaling,
        },
        "layer_dims": list(spec.layer_dims),
        "weights": [w.reshape(-1).tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "input_lo": model.input_lo.tolist(),
        "input_hi": model.input_hi.tolist(),
        "output_lo": model.output_lo,
        "output_hi": model.output_hi,
        "report": {
            "train_mae_pct": rep.train_mae_pct,
            "test_mae_pct": _nan_to_none(rep.test_mae_pct),
            "n_train": rep.n_train,
            "n_test": rep.n_test,
            "n_excluded_train": rep.n_excluded_train,
            "n_excluded_test": rep.n_excluded_test,
            "zero_variance": rep.zero_variance,
            "epochs_run": rep.epochs_run,
            "loss_history": list(rep.loss_history),
            "mae_history": [_nan_to_none(v) for v in rep.mae_history],
        },
    }
    return json.dumps(doc, allow_nan=False).encode("utf-8")


def _require_keys(mapping, wanted, where):
    if not isinstance(mapping, dict):
        raise SchemaError(f"{where} must be a JSON object")
    unknown = set(mapping) - wanted
    if unknown:
        raise SchemaError(f"unknown field {sorted(unknown)[0]!r} in {where}")
    missing = wanted - set(mapping)
    if missing:
        raise SchemaError(f"missing field {sorted(missing)[0]!r} in {where}")


def deserialize_model(data: bytes | str) -> SurrogateModel:
    """Parse a serialized model, rejecting version or field mismatches."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed surrogate document: {exc}") from None
    _require_keys(doc, _TOP_KEYS, "surrogate document")
    if doc["format"] != _FORMAT:
        raise SchemaError(f"unsupported format {doc['format']!r}")
    if doc["version"] != _VERSION:
        raise SchemaError(f"unsupported version {doc['version']!r}")
    _require_keys(doc["spec"], _SPEC_KEYS, "spec")
    _require_keys(doc["report"], _REPORT_KEYS, "report")
    s = doc["spec"]
    try:
        spec = NetworkSpec(
            input_dim=int(s["input_dim"]),
            hidden_layers=tuple(s["hidden_layers"]),
            learning_rate=float(s["learning_rate"]),
            epochs=int(s["epochs"]),
            batch_size=int(s["batch_size"]),
            seed=int(s["seed"]),
            split=tuple(s["split"]),
            loss=s["loss"],
            init_std=float(s["init_std"]),
            scaling=s["scaling"],
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"invalid spec: {exc}") from None
    dims = list(spec.layer_dims)
    if doc["layer_dims"] != dims:
        raise SchemaError("layer_dims disagree with the spec")
    try:
        weights = [
            np.array(flat, dtype=float).reshape(dims[l], dims[l + 1])
            for l, flat in enumerate(doc["weights"])
        ]
        biases = [np.array(b, dtype=float) for b in doc["biases"]]
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"invalid weight arrays: {exc}") from None
    if len(weights) != len(dims) - 1 or len(biases) != len(dims) - 1:
        raise SchemaError("wrong number of layers in weights or biases")
    r = doc["report"]
    report = TrainReport(
        train_mae_pct=float(r["train_mae_pct"]),
        test_mae_pct=_none_to_nan(r["test_mae_pct"]),
        n_train=int(r["n_train"]),
        n_test=int(r["n_test"]),
        n_excluded_train=int(r["n_excluded_train"]),
        n_excluded_test=int(r["n_excluded_test"]),
        zero_variance=bool(r["zero_variance"]),
        epochs_run=int(r["epochs_run"]),
        loss_history=tuple(float(v) for v in r["loss_history"]),
        mae_history=tuple(_none_to_nan(v) for v in r["mae_history"]),
    )
    try:
        return SurrogateModel(
            spec,
            weights,
            biases,
            doc["input_lo"],
            doc["input_hi"],
            float(doc["output_lo"]),
            float(doc["output_hi"]),
            report,
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"invalid model arrays: {exc}") from None
