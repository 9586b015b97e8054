"""Descriptor-based per-property regressors: least squares and a small MLP."""

from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from polymm.dataset import PolymerRecord
from polymm.descriptors import DESCRIPTOR_NAMES, DescriptorVector
from polymm.metrics import EvalReport, evaluate

CHECKPOINT_MAGIC = b"PMBL"
CHECKPOINT_VERSION = 1


class BaselineError(ValueError):
    code = "BaselineError"


class Diverged(BaselineError):
    code = "Diverged"

    def __init__(self, message: str, config: Mapping[str, object]):
        super().__init__(f"{message}; config={json.dumps(dict(config), sort_keys=True)}")
        self.config = dict(config)


class MissingModel(BaselineError):
    code = "MissingModel"

    def __init__(self, prop: str):
        super().__init__(f"no model for property {prop!r}")
        self.property = prop


class InsufficientData(BaselineError):
    code = "InsufficientData"


@dataclass(frozen=True)
class Standardizer:
    """Per-column z-score; constant columns keep scale 1."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> Standardizer:
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        scale = np.where(std > 0, std, 1.0)
        return cls(mean.copy(), scale.copy())

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale


@dataclass(frozen=True)
class RegressionTask:
    """Train/test design for one property; rows without a truth are already removed."""

    property: str
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    train_keys: tuple[str, ...] = ()
    test_keys: tuple[str, ...] = ()

    @property
    def standardizer(self) -> Standardizer:
        return Standardizer.fit(self.X_train)


def descriptor_matrix(vectors: Sequence[DescriptorVector]) -> np.ndarray:
    return np.array([[float(v[n]) for n in DESCRIPTOR_NAMES] for v in vectors], dtype=np.float64).reshape(
        len(vectors), len(DESCRIPTOR_NAMES)
    )


def build_task(
    prop: str,
    train: Sequence[PolymerRecord],
    test: Sequence[PolymerRecord],
    descriptors: Callable[[str], DescriptorVector],
) -> RegressionTask:
    """Rows carrying ``prop`` and a complete descriptor vector."""

    def rows(records):
        keep = [r for r in records if prop in r.properties and descriptors(r.key).complete]
        X = descriptor_matrix([descriptors(r.key) for r in keep])
        y = np.array([r.properties[prop] for r in keep], dtype=np.float64)
        return X, y, tuple(r.key for r in keep)

    Xtr, ytr, ktr = rows(train)
    Xte, yte, kte = rows(test)
    return RegressionTask(prop, Xtr, ytr, Xte, yte, ktr, kte)


@dataclass(frozen=True)
class LinearModel:
    """Least-squares fit on standardized features.

    ``coef`` and ``intercept`` act on standardized inputs; :meth:`raw_coefficients`
    maps them back to the original feature scale.
    """

    standardizer: Standardizer
    coef: np.ndarray
    intercept: float
    rank: int
    rank_deficient: bool
    # max |X^T r| over the standardized design including the intercept column
    orthogonality: float
    kind: str = "linr"

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.standardizer.transform(X) @ self.coef + self.intercept

    def raw_coefficients(self) -> tuple[np.ndarray, float]:
        w = self.coef / self.standardizer.scale
        return w, float(self.intercept - w @ self.standardizer.mean)

    def config(self) -> dict[str, object]:
        return {"rank": self.rank, "rank_deficient": self.rank_deficient}


def fit_linreg(X: np.ndarray, y: np.ndarray) -> LinearModel:
    """Least squares through an SVD-based solver (minimum norm when rank deficient).

    Raises:
        InsufficientData: fewer rows than columns plus one.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if n < p + 1:
        raise InsufficientData(f"{n} rows for {p} features; need at least {p + 1}")
    st = Standardizer.fit(X)
    Z = st.transform(X)
    design = np.hstack([Z, np.ones((n, 1))])
    beta, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ beta
    ortho = float(np.max(np.abs(design.T @ resid)))
    return LinearModel(st, beta[:p].copy(), float(beta[p]), int(rank), int(rank) < p + 1, ortho)


@dataclass(frozen=True)
class MlpConfig:
    hidden: tuple[int, ...] = (64, 64)
    learning_rate: float = 0.01
    momentum: float = 0.9
    epochs: int = 100
    batch_size: int = 64
    seed: int = 0


def init_params(n_in: int, config: MlpConfig) -> list[np.ndarray]:
    """Glorot-uniform weights and zero biases as ``[W1, b1, W2, b2, ...]``."""
    rng = np.random.default_rng(config.seed)
    sizes = [n_in, *config.hidden, 1]
    params = []
    for a, b in zip(sizes, sizes[1:]):
        limit = math.sqrt(6.0 / (a + b))
        params.append(rng.uniform(-limit, limit, size=(a, b)))
        params.append(np.zeros(b))
    return params


def mlp_forward(params: Sequence[np.ndarray], X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Output vector and the activations needed for backpropagation."""
    acts = [X]
    h = X
    n_layers = len(params) // 2
    for k in range(n_layers):
        z = h @ params[2 * k] + params[2 * k + 1]
        h = np.tanh(z) if k < n_layers - 1 else z
        acts.append(h)
    return h[:, 0], acts


def mlp_loss_grad(params: Sequence[np.ndarray], X: np.ndarray, y: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Mean squared error and its gradient wrt every parameter."""
    out, acts = mlp_forward(params, X)
    n = X.shape[0]
    diff = out - y
    loss = float(diff @ diff / n)
    delta = (2.0 / n) * diff[:, None]
    grads: list[np.ndarray] = [np.empty(0)] * len(params)
    n_layers = len(params) // 2
    for k in reversed(range(n_layers)):
        grads[2 * k] = acts[k].T @ delta
        grads[2 * k + 1] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ params[2 * k].T) * (1.0 - acts[k] ** 2)
    return loss, grads


def mlp_grad_check(
    params: Sequence[np.ndarray], X: np.ndarray, y: np.ndarray, n_entries: int = 5, seed: int = 0, eps: float = 1e-6
) -> float:
    """Max relative error of analytic vs central-difference gradients on random entries."""
    rng = np.random.default_rng(seed)
    params = [p.copy() for p in params]
    _, grads = mlp_loss_grad(params, X, y)
    worst = 0.0
    for _ in range(n_entries):
        k = int(rng.integers(len(params)))
        idx = tuple(int(rng.integers(s)) for s in params[k].shape)
        orig = params[k][idx]
        params[k][idx] = orig + eps
        up, _ = mlp_loss_grad(params, X, y)
        params[k][idx] = orig - eps
        down, _ = mlp_loss_grad(params, X, y)
        params[k][idx] = orig
        numeric = (up - down) / (2 * eps)
        analytic = float(grads[k][idx])
        denom = max(abs(numeric), abs(analytic), 1e-12)
        worst = max(worst, abs(numeric - analytic) / denom)
    return worst


@dataclass(frozen=True)
class MlpModel:
    standardizer: Standardizer
    params: list[np.ndarray]
    y_mean: float
    y_scale: float
    config_: MlpConfig
    losses: list[float] = field(default_factory=list)
    kind: str = "mlp"

    def predict(self, X: np.ndarray) -> np.ndarray:
        out, _ = mlp_forward(self.params, self.standardizer.transform(X))
        return out * self.y_scale + self.y_mean

    def config(self) -> dict[str, object]:
        d = asdict(self.config_)
        d["hidden"] = list(d["hidden"])
        return d


def fit_mlp(X: np.ndarray, y: np.ndarray, config: MlpConfig = MlpConfig()) -> MlpModel:
    """Mini-batch gradient descent with momentum on standardized inputs and targets.

    Raises:
        Diverged: the training loss became non-finite.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(y) == 0:
        raise InsufficientData("no training rows")
    st = Standardizer.fit(X)
    Z = st.transform(X)
    y_mean = float(y.mean())
    y_scale = float(y.std()) or 1.0
    t = (y - y_mean) / y_scale
    params = init_params(X.shape[1], config)
    velocity = [np.zeros_like(p) for p in params]
    rng = np.random.default_rng(config.seed + 1)
    losses = []
    n = len(t)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = mlp_loss_grad(params, Z[idx], t[idx])
            if not math.isfinite(loss):
                raise Diverged("non-finite training loss", asdict(config))
            for k in range(len(params)):
                velocity[k] = config.momentum * velocity[k] - config.learning_rate * grads[k]
                params[k] = params[k] + velocity[k]
        epoch_loss, _ = mlp_loss_grad(params, Z, t)
        if not math.isfinite(epoch_loss):
            raise Diverged("non-finite training loss", asdict(config))
        losses.append(epoch_loss)
    return MlpModel(st, params, y_mean, y_scale, config, losses)


@dataclass(frozen=True)
class ConstantModel:
    """Predicts one value everywhere; used as a reference baseline."""

    value: float
    kind: str = "const"

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.full(np.asarray(X).shape[0], self.value)

    def config(self) -> dict[str, object]:
        return {"value": self.value}


def evaluate_group(
    test: Sequence[PolymerRecord],
    models: Mapping[str, object],
    descriptors: Callable[[str], DescriptorVector],
    label: str = "",
) -> EvalReport:
    """Score one model per property on the test records.

    Test polymers without a complete descriptor vector are left out and noted.

    Raises:
        MissingModel: a property present in the test truths has no model.
    """
    usable = [r for r in test if descriptors(r.key).complete]
    for r in usable:
        for prop in r.properties:
            if prop not in models:
                raise MissingModel(prop)
    X = descriptor_matrix([descriptors(r.key) for r in usable])
    predictions = {prop: models[prop].predict(X) for prop in sorted({p for r in usable for p in r.properties})}
    preds = [{prop: float(predictions[prop][i]) for prop in r.properties} for i, r in enumerate(usable)]
    truths = [dict(r.properties) for r in usable]
    report = evaluate(preds, truths, label)
    dropped = len(test) - len(usable)
    if dropped:
        report.notes.append(f"{dropped} test polymer(s) skipped for incomplete descriptors")
    return report


# checkpoints


def _arrays(model) -> dict[str, np.ndarray]:
    if model.kind == "linr":
        return {
            "mean": model.standardizer.mean,
            "scale": model.standardizer.scale,
            "coef": model.coef,
            "intercept": np.array([model.intercept]),
        }
    if model.kind == "mlp":
        out = {"mean": model.standardizer.mean, "scale": model.standardizer.scale,
               "target": np.array([model.y_mean, model.y_scale])}
        for k, p in enumerate(model.params):
            out[f"p{k}"] = p
        return out
    if model.kind == "const":
        return {"value": np.array([model.value])}
    raise BaselineError(f"unknown model kind {model.kind!r}")


def save_checkpoint(model, path: str | os.PathLike, prop: str) -> None:
    """Binary checkpoint: magic, version, JSON header with config and shapes, float64 arrays."""
    arrays = _arrays(model)
    header = {
        "kind": model.kind,
        "property": prop,
        "config": model.config(),
        "features": list(DESCRIPTOR_NAMES),
        "arrays": [[name, list(a.shape)] for name, a in arrays.items()],
    }
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC + struct.pack("<II", CHECKPOINT_VERSION, len(head)) + head)
        for a in arrays.values():
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_checkpoint(path: str | os.PathLike):
    """Inverse of :func:`save_checkpoint`; returns ``(model, header)``."""
    data = Path(path).read_bytes()
    if data[:4] != CHECKPOINT_MAGIC:
        raise BaselineError(f"{path}: not a baseline checkpoint")
    version, n_head = struct.unpack("<II", data[4:12])
    if version != CHECKPOINT_VERSION:
        raise BaselineError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(data[12:12 + n_head])
    offset = 12 + n_head
    arrays = {}
    for name, shape in header["arrays"]:
        count = int(np.prod(shape)) if shape else 1
        arrays[name] = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
        offset += 8 * count
    kind = header["kind"]
    if kind == "linr":
        st = Standardizer(arrays["mean"], arrays["scale"])
        cfg = header["config"]
        model = LinearModel(st, arrays["coef"], float(arrays["intercept"][0]), cfg["rank"], cfg["rank_deficient"], 0.0)
    elif kind == "mlp":
        st = Standardizer(arrays["mean"], arrays["scale"])
        cfg = dict(header["config"])
        cfg["hidden"] = tuple(cfg["hidden"])
        params = [arrays[f"p{k}"] for k in range(2 * (len(cfg["hidden"]) + 1))]
        model = MlpModel(st, params, float(arrays["target"][0]), float(arrays["target"][1]), MlpConfig(**cfg))
    elif kind == "const":
        model = ConstantModel(float(arrays["value"][0]))
    else:
        raise BaselineError(f"{path}: unknown model kind {kind!r}")
    return model, header
