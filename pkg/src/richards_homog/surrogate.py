"""Dense feedforward regressors in plain numpy: SELU/ReLU, MSE, Adam, min-max scaling."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772

FORMAT = "rh-dnn"
VERSION = 1

HIDDEN_WIDTHS = {"kappa": 256, "matrix": 448, "rhs": 320}


class ModelFormatError(ValueError):
    """Malformed or inconsistent model file."""


class ModelVersionError(ModelFormatError):
    """Unknown format tag or version."""


def selu(x):
    return np.where(x > 0, SELU_LAMBDA * x, SELU_LAMBDA * SELU_ALPHA * np.expm1(np.minimum(x, 0.0)))


def _selu_grad(x):
    return np.where(x > 0, SELU_LAMBDA, SELU_LAMBDA * SELU_ALPHA * np.exp(np.minimum(x, 0.0)))


def relu(x):
    return np.maximum(x, 0.0)


def _relu_grad(x):
    return (x > 0).astype(float)


_ACT = {"selu": (selu, _selu_grad), "relu": (relu, _relu_grad),
        "linear": (lambda x: x, lambda x: np.ones_like(x))}


@dataclass
class DenseNetwork:
    layer_dims: list[int]
    activations: list[str]
    weights: list[np.ndarray] = field(repr=False)  # layer l maps dims[l] -> dims[l+1], shape (in, out)
    biases: list[np.ndarray] = field(repr=False)

    def params(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def copy(self) -> "DenseNetwork":
        return DenseNetwork(list(self.layer_dims), list(self.activations),
                            [w.copy() for w in self.weights], [b.copy() for b in self.biases])


def default_activations(n_layers: int) -> list[str]:
    return ["selu"] + ["relu"] * (n_layers - 2) + ["linear"]


def init_network(layer_dims, seed: int = 0, std: float = 0.05) -> DenseNetwork:
    """Normal(0, std) weights, zero biases; first hidden layer SELU, then ReLU, linear output."""
    dims = [int(d) for d in layer_dims]
    if len(dims) != 5:
        raise ValueError("expected [input, h1, h2, h3, output]")
    if any(d < 1 for d in dims):
        raise ValueError("layer dimensions must be positive")
    rng = np.random.default_rng(seed)
    weights = [rng.normal(0.0, std, size=(a, b)) for a, b in zip(dims[:-1], dims[1:])]
    biases = [np.zeros(b) for b in dims[1:]]
    return DenseNetwork(dims, default_activations(len(dims) - 1), weights, biases)


def forward(net: DenseNetwork, z: np.ndarray, keep: bool = False):
    """Evaluate the network on one input vector or a batch of rows."""
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != net.layer_dims[0]:
        raise ValueError(f"input has {z.shape[-1]} features, network expects {net.layer_dims[0]}")
    a = z
    pre, post = [], [a]
    for W, b, act in zip(net.weights, net.biases, net.activations):
        s = a @ W + b
        a = _ACT[act][0](s)
        pre.append(s)
        post.append(a)
    return (a, pre, post) if keep else a


def mse_loss(net: DenseNetwork, X, Y) -> float:
    r = forward(net, X) - Y
    return float(np.mean(np.sum(r * r, axis=-1)))


def backward(net: DenseNetwork, X, Y):
    """Gradients of ``mean_over_batch ||y - N(x)||^2``.

    Returns ``(grad_weights, grad_biases, loss)``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    out, pre, post = forward(net, X, keep=True)
    resid = out - Y
    loss = float(np.mean(np.sum(resid * resid, axis=1)))
    delta = 2.0 * resid / X.shape[0]
    gw = [None] * len(net.weights)
    gb = [None] * len(net.biases)
    for l in range(len(net.weights) - 1, -1, -1):
        delta = delta * _ACT[net.activations[l]][1](pre[l])
        gw[l] = post[l].T @ delta
        gb[l] = delta.sum(axis=0)
        if l:
            delta = delta @ net.weights[l].T
    return gw, gb, loss


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] | None = None
    v: list[np.ndarray] | None = None


def adam_step(state: AdamState, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
    """In-place bias-corrected Adam update; returns ``params``."""
    if state.m is None:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError("parameter and gradient shapes differ")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params


@dataclass
class Normalizer:
    """Per-feature min-max scaling onto [-1, 1] for inputs and targets."""

    input_min: np.ndarray
    input_max: np.ndarray
    target_min: np.ndarray
    target_max: np.ndarray

    @classmethod
    def fit(cls, X, Y) -> "Normalizer":
        X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
        return cls(X.min(axis=0), X.max(axis=0), Y.min(axis=0), Y.max(axis=0))

    @classmethod
    def identity(cls, n_in: int, n_out: int) -> "Normalizer":
        return cls(-np.ones(n_in), np.ones(n_in), -np.ones(n_out), np.ones(n_out))

    def normalize_inputs(self, X):
        return normalize(X, self.input_min, self.input_max)

    def normalize_targets(self, Y):
        return normalize(Y, self.target_min, self.target_max)

    def denormalize_targets(self, Y):
        return denormalize(Y, self.target_min, self.target_max)


def normalize(x, lo, hi):
    """``2 (x - lo) / (hi - lo) - 1``; constant features (``hi == lo``) map to 0."""
    x, lo, hi = np.asarray(x, dtype=float), np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    span = hi - lo
    flat = span == 0
    out = 2.0 * (x - lo) / np.where(flat, 1.0, span) - 1.0
    return np.where(flat, 0.0, out)


def denormalize(x, lo, hi):
    x, lo, hi = np.asarray(x, dtype=float), np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    return (x + 1.0) / 2.0 * (hi - lo) + lo


@dataclass
class TrainReport:
    train_rmse: list[float]
    val_rmse: list[float]
    epochs: int
    batch_size: int
    seed: int
    n_train: int
    n_val: int
    normalizer: Normalizer | None = field(default=None, repr=False)


def relative_rmse(pred, target) -> float:
    """Batch relative error ``sqrt(sum ||p - y||^2 / sum ||y||^2)``."""
    pred, target = np.asarray(pred, dtype=float), np.asarray(target, dtype=float)
    den = float(np.sum(target * target))
    if den == 0.0:
        raise ZeroDivisionError("targets are identically zero")
    return math.sqrt(float(np.sum((pred - target) ** 2)) / den)


def split_validation(n: int, fraction: float, rng: np.random.Generator):
    n_val = int(round(n * fraction))
    perm = rng.permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def fit(net: DenseNetwork, inputs, targets, epochs: int, batch_size: int = 64,
        validation_fraction: float = 0.2, seed: int = 0, lr: float = 1e-3,
        normalize_data: bool = True) -> TrainReport:
    """Mini-batch Adam on the MSE loss.

    A seeded permutation holds out ``validation_fraction`` of the samples; the
    min-max normalizer is fitted on the remaining training rows only and kept
    in the report.  RMSE curves are the relative batch errors in target units.
    """
    X = np.asarray(inputs, dtype=float)
    Y = np.asarray(targets, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("empty dataset")
    if X.shape[0] != Y.shape[0]:
        raise ValueError("inputs and targets differ in sample count")
    rng = np.random.default_rng(seed)
    tr, va = split_validation(X.shape[0], validation_fraction, rng)
    if normalize_data:
        norm = Normalizer.fit(X[tr], Y[tr])
    else:
        norm = Normalizer.identity(X.shape[1], Y.shape[1])
    Xn, Yn = norm.normalize_inputs(X), norm.normalize_targets(Y)
    report = TrainReport([], [], epochs, batch_size, seed, len(tr), len(va), norm)
    state = AdamState(lr=lr)
    params = net.params()
    for _ in range(epochs):
        order = tr[rng.permutation(len(tr))]
        for start in range(0, len(order), batch_size):
            idx = order[start:start + batch_size]
            gw, gb, _ = backward(net, Xn[idx], Yn[idx])
            adam_step(state, params, [*gw, *gb])
        report.train_rmse.append(relative_rmse(norm.denormalize_targets(forward(net, Xn[tr])), Y[tr]))
        if len(va):
            report.val_rmse.append(relative_rmse(norm.denormalize_targets(forward(net, Xn[va])), Y[va]))
        else:
            report.val_rmse.append(float("nan"))
    return report


@dataclass
class Surrogate:
    """A trained network with the scaling it was trained under."""

    net: DenseNetwork
    normalizer: Normalizer
    seed: int = 0
    metadata: dict = field(default_factory=dict)

    def predict(self, X) -> np.ndarray:
        return self.normalizer.denormalize_targets(forward(self.net, self.normalizer.normalize_inputs(X)))


def train_surrogate(inputs, targets, kind: str, epochs: int = 300, batch_size: int = 64,
                    seed: int = 0, validation_fraction: float = 0.2, hidden: int | None = None,
                    metadata: dict | None = None) -> tuple[Surrogate, TrainReport]:
    X, Y = np.asarray(inputs, dtype=float), np.asarray(targets, dtype=float)
    width = hidden or HIDDEN_WIDTHS[kind]
    net = init_network([X.shape[1], width, width, width, Y.shape[1]], seed=seed)
    report = fit(net, X, Y, epochs, batch_size, validation_fraction, seed)
    meta = {"kind": kind, "epochs": epochs, "batch_size": batch_size,
            "validation_fraction": validation_fraction, **(metadata or {})}
    return Surrogate(net, report.normalizer, seed, meta), report


def _num(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ModelFormatError(f"cannot serialise non-finite value {x}")
    return f"{x:.17g}"


def _arr(a) -> str:
    return "[" + ",".join(_num(v) for v in np.asarray(a, dtype=float).ravel()) + "]"


def save_model(model: Surrogate, path) -> None:
    net, norm = model.net, model.normalizer
    parts = [
        f'"format": {json.dumps(FORMAT)}',
        f'"version": {VERSION}',
        f'"layer_dims": {json.dumps(net.layer_dims)}',
        f'"activations": {json.dumps(net.activations)}',
        '"weights": [' + ",\n  ".join(_arr(w) for w in net.weights) + "]",
        '"biases": [' + ",\n  ".join(_arr(b) for b in net.biases) + "]",
        '"normalizer": {' + ", ".join(
            f'"{k}": {_arr(getattr(norm, k))}'
            for k in ("input_min", "input_max", "target_min", "target_max")) + "}",
        f'"seed": {int(model.seed)}',
        f'"metadata": {json.dumps(model.metadata, sort_keys=True)}',
    ]
    with open(path, "w") as fh:
        fh.write("{\n" + ",\n".join(parts) + "\n}\n")


def load_model(path) -> Surrogate:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: malformed model file ({exc})") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: top level is not an object")
    if doc.get("format") != FORMAT or doc.get("version") != VERSION:
        raise ModelVersionError(
            f"{path}: expected format {FORMAT!r} version {VERSION}, "
            f"found {doc.get('format')!r} version {doc.get('version')!r}")
    try:
        dims = [int(d) for d in doc["layer_dims"]]
        acts = [str(a) for a in doc["activations"]]
        raw_w, raw_b = doc["weights"], doc["biases"]
        nd = doc["normalizer"]
        norm_arrays = {k: np.asarray(nd[k], dtype=float)
                       for k in ("input_min", "input_max", "target_min", "target_max")}
        seed = int(doc["seed"])
        meta = dict(doc.get("metadata", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: missing or invalid field ({exc})") from exc
    L = len(dims) - 1
    if len(acts) != L or len(raw_w) != L or len(raw_b) != L or any(a not in _ACT for a in acts):
        raise ModelFormatError(f"{path}: layer count or activation tags inconsistent")
    weights, biases = [], []
    for l in range(L):
        w = np.asarray(raw_w[l], dtype=float)
        b = np.asarray(raw_b[l], dtype=float)
        if w.size != dims[l] * dims[l + 1] or b.size != dims[l + 1]:
            raise ModelFormatError(f"{path}: layer {l} parameters do not match layer_dims")
        weights.append(w.reshape(dims[l], dims[l + 1]))
        biases.append(b)
    for k, v in norm_arrays.items():
        want = dims[0] if k.startswith("input") else dims[-1]
        if v.shape != (want,):
            raise ModelFormatError(f"{path}: normalizer {k} has shape {v.shape}, expected ({want},)")
    return Surrogate(DenseNetwork(dims, acts, weights, biases), Normalizer(**norm_arrays), seed, meta)
