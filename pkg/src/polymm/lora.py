"""Low-rank adapters: parameter accounting, forward/merge, gradients and a toy fine-tune."""

from __future__ import annotations

import hashlib
import math
import os
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

CHECKPOINT_MAGIC = b"LORA"
CHECKPOINT_VERSION = 1


class LoraError(ValueError):
    code = "LoraError"


class DimensionMismatch(LoraError):
    code = "DimensionMismatch"


class Diverged(LoraError):
    code = "Diverged"


def param_count(d: int, k: int, r: int) -> int:
    """Trainable parameters of a rank-``r`` adapter on a ``d x k`` matrix.

    >>> param_count(10, 6, 2)
    32
    """
    if d < 1 or k < 1:
        raise LoraError("dimensions must be positive")
    if r < 1:
        raise LoraError("rank must be at least 1")
    return r * (d + k)


def checksum(a: np.ndarray) -> str:
    """SHA-256 of an array's dtype, shape and raw bytes."""
    h = hashlib.sha256()
    h.update(str(a.dtype).encode() + str(a.shape).encode())
    h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()


@dataclass
class LoraAdapter:
    """Frozen ``W0`` (d x k) plus trainable ``A`` (r x k) and ``B`` (d x r).

    The effective weight is ``W0 + (alpha / r) * B @ A``.
    """

    W0: np.ndarray
    A: np.ndarray
    B: np.ndarray
    alpha: float

    def __post_init__(self) -> None:
        # private read-only copy so the frozen base cannot be modified in place
        self.W0 = np.array(self.W0, dtype=np.float64)
        self.A = np.asarray(self.A, dtype=np.float64)
        self.B = np.asarray(self.B, dtype=np.float64)
        if self.W0.ndim != 2 or self.A.ndim != 2 or self.B.ndim != 2:
            raise DimensionMismatch("W0, A and B must be matrices")
        d, k = self.W0.shape
        r = self.A.shape[0]
        if self.A.shape != (r, k) or self.B.shape != (d, r):
            raise DimensionMismatch(
                f"W0 {self.W0.shape}, A {self.A.shape}, B {self.B.shape} do not form a rank-{r} adapter"
            )
        if r < 1:
            raise LoraError("rank must be at least 1")
        if self.alpha <= 0:
            raise LoraError("alpha must be positive")
        self.W0.setflags(write=False)

    @classmethod
    def init(cls, W0: np.ndarray, rank: int, alpha: float, rng: np.random.Generator) -> LoraAdapter:
        """``A`` uniform in +-1/sqrt(k), ``B`` zero, so the adapter starts as the identity update."""
        d, k = W0.shape
        bound = 1.0 / math.sqrt(k)
        return cls(W0, rng.uniform(-bound, bound, size=(rank, k)), np.zeros((d, rank)), alpha)

    @property
    def rank(self) -> int:
        return self.A.shape[0]

    @property
    def scale(self) -> float:
        return self.alpha / self.rank

    @property
    def n_trainable(self) -> int:
        return self.A.size + self.B.size

    def forward(self, x: np.ndarray) -> np.ndarray:
        """``W0 x + (alpha/r) B (A x)`` for a vector or a batch of row vectors."""
        x = np.asarray(x, dtype=np.float64)
        k = self.W0.shape[1]
        if x.shape[-1] != k or x.ndim not in (1, 2):
            raise DimensionMismatch(f"input of shape {x.shape} for a layer with {k} inputs")
        if x.ndim == 1:
            return self.W0 @ x + self.scale * (self.B @ (self.A @ x))
        return x @ self.W0.T + self.scale * ((x @ self.A.T) @ self.B.T)

    def delta(self) -> np.ndarray:
        return self.scale * (self.B @ self.A)

    def merge(self) -> np.ndarray:
        """Dense ``W0 + delta``; a new array, the adapter is unchanged."""
        return self.W0 + self.delta()

    def grads(self, x: np.ndarray, grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gradients wrt ``A`` and ``B`` given dL/dy for a batch ``x`` (n x k)."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        g = np.atleast_2d(np.asarray(grad_out, dtype=np.float64))
        ax = x @ self.A.T
        grad_b = self.scale * g.T @ ax
        grad_a = self.scale * (g @ self.B).T @ x
        return grad_a, grad_b


LossFn = Callable[[np.ndarray], tuple[float, np.ndarray]]


def quadratic_loss(target: np.ndarray) -> LossFn:
    """``0.5 * ||y - target||^2`` and its gradient."""
    target = np.asarray(target, dtype=np.float64)

    def loss(y: np.ndarray) -> tuple[float, np.ndarray]:
        diff = y - target
        return 0.5 * float(np.sum(diff * diff)), diff

    return loss


def grad_check(
    adapter: LoraAdapter, loss: LossFn, x: np.ndarray, n_entries: int = 20, seed: int = 0, eps: float = 1e-6
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Entries are drawn from ``A`` and ``B`` alternately, ``n_entries`` in total.
    Pairs that are both below 1e-12 in magnitude count as exact.
    """
    rng = np.random.default_rng(seed)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    _, g = loss(adapter.forward(x))
    grad_a, grad_b = adapter.grads(x, g)
    worst = 0.0
    for n in range(n_entries):
        mat, grad = (adapter.A, grad_a) if n % 2 == 0 else (adapter.B, grad_b)
        idx = tuple(int(rng.integers(s)) for s in mat.shape)
        orig = mat[idx]
        mat[idx] = orig + eps
        up, _ = loss(adapter.forward(x))
        mat[idx] = orig - eps
        down, _ = loss(adapter.forward(x))
        mat[idx] = orig
        numeric = (up - down) / (2 * eps)
        analytic = float(grad[idx])
        denom = max(abs(numeric), abs(analytic))
        if denom < 1e-12:
            continue
        worst = max(worst, abs(numeric - analytic) / denom)
    return worst


# toy attention fine-tune


@dataclass(frozen=True)
class ToyConfig:
    rank: int = 16
    alpha: float = 16.0
    learning_rate: float = 1e-4
    weight_decay: float = 0.01
    steps: int = 200
    d_model: int = 64
    seq_len: int = 8
    n_sequences: int = 64
    # rank and entry scale of the planted update on the query and value projections
    target_rank: int = 2
    target_scale: float = 0.01
    seed: int = 0


@dataclass(frozen=True)
class ToyDataset:
    X: np.ndarray
    Y: np.ndarray
    Wq: np.ndarray
    Wk: np.ndarray
    Wv: np.ndarray
    Wo: np.ndarray


def make_toy_dataset(config: ToyConfig) -> ToyDataset:
    """Inputs and teacher outputs of an attention block whose Q and V carry a planted low-rank update."""
    rng = np.random.default_rng(config.seed)
    m = config.d_model
    w = lambda: rng.normal(0.0, 1.0 / math.sqrt(m), size=(m, m))  # noqa: E731
    Wq, Wk, Wv, Wo = w(), w(), w(), w()
    X = rng.normal(size=(config.n_sequences, config.seq_len, m))

    def planted() -> np.ndarray:
        U = rng.normal(size=(m, config.target_rank))
        V = rng.normal(size=(config.target_rank, m))
        return config.target_scale * U @ V

    teacher_q, teacher_v = Wq + planted(), Wv + planted()
    Y, _ = _attention(X, teacher_q, Wk, teacher_v, Wo)
    return ToyDataset(X, Y, Wq, Wk, Wv, Wo)


def _attention(X, Wq, Wk, Wv, Wo):
    m = X.shape[-1]
    Q = X @ Wq.T
    K = X @ Wk.T
    V = X @ Wv.T
    S = Q @ np.swapaxes(K, -1, -2) / math.sqrt(m)
    S = S - S.max(axis=-1, keepdims=True)
    P = np.exp(S)
    P = P / P.sum(axis=-1, keepdims=True)
    H = P @ V
    return H @ Wo.T, (Q, K, V, P, H)


def _toy_loss_grads(data: ToyDataset, q: LoraAdapter, v: LoraAdapter):
    X = data.X
    m = X.shape[-1]
    Y, (Q, K, V, P, H) = _attention(X, q.merge(), data.Wk, v.merge(), data.Wo)
    diff = Y - data.Y
    loss = float(np.mean(diff * diff))
    dY = 2.0 * diff / diff.size
    dH = dY @ data.Wo
    dP = dH @ np.swapaxes(V, -1, -2)
    dV = np.swapaxes(P, -1, -2) @ dH
    dS = P * (dP - np.sum(dP * P, axis=-1, keepdims=True))
    dQ = dS @ K / math.sqrt(m)
    flat_x = X.reshape(-1, m)
    ga_q, gb_q = q.grads(flat_x, dQ.reshape(-1, m))
    ga_v, gb_v = v.grads(flat_x, dV.reshape(-1, m))
    return loss, (ga_q, gb_q, ga_v, gb_v)


@dataclass
class _AdamW:
    lr: float
    weight_decay: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    state: list = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if not self.state:
            self.state = [(np.zeros_like(p), np.zeros_like(p)) for p in params]
        self.t += 1
        c1 = 1 - self.beta1**self.t
        c2 = 1 - self.beta2**self.t
        for k, (p, g) in enumerate(zip(params, grads)):
            m, v = self.state[k]
            m = self.beta1 * m + (1 - self.beta1) * g
            v = self.beta2 * v + (1 - self.beta2) * g * g
            self.state[k] = (m, v)
            p -= self.lr * (m / c1 / (np.sqrt(v / c2) + self.eps) + self.weight_decay * p)


@dataclass(frozen=True)
class TrainingTrace:
    losses: list[float]
    w0_checksum_before: str
    w0_checksum_after: str
    config: dict
    trainable_parameters: int
    frozen_parameters: int

    @property
    def frozen_intact(self) -> bool:
        return self.w0_checksum_before == self.w0_checksum_after

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "losses": self.losses,
            "initial_loss": self.losses[0],
            "final_loss": self.losses[-1],
            "trainable_parameters": self.trainable_parameters,
            "frozen_parameters": self.frozen_parameters,
            "w0_checksum_before": self.w0_checksum_before,
            "w0_checksum_after": self.w0_checksum_after,
            "frozen_intact": self.frozen_intact,
        }


def toy_finetune(config: ToyConfig = ToyConfig(), data: ToyDataset | None = None):
    """Train LoRA adapters on Q and V of a frozen attention block with AdamW.

    Returns ``(trace, (q_adapter, v_adapter))``; ``trace.losses[0]`` is the
    loss before the first step, so the trace has ``steps + 1`` entries.

    Raises:
        Diverged: the loss became non-finite.
    """
    data = data or make_toy_dataset(config)
    rng = np.random.default_rng(config.seed + 1)
    q = LoraAdapter.init(data.Wq, config.rank, config.alpha, rng)
    v = LoraAdapter.init(data.Wv, config.rank, config.alpha, rng)
    frozen = [data.Wq, data.Wk, data.Wv, data.Wo, q.W0, v.W0]
    before = checksum(np.stack([q.W0, v.W0]))
    opt = _AdamW(config.learning_rate, config.weight_decay)
    losses = []
    for _ in range(config.steps):
        loss, (ga_q, gb_q, ga_v, gb_v) = _toy_loss_grads(data, q, v)
        if not math.isfinite(loss):
            raise Diverged(f"loss became {loss} after {len(losses)} steps")
        losses.append(loss)
        opt.step([q.A, q.B, v.A, v.B], [ga_q, gb_q, ga_v, gb_v])
    final, _ = _toy_loss_grads(data, q, v)
    if not math.isfinite(final):
        raise Diverged(f"loss became {final} after {config.steps} steps")
    losses.append(final)
    after = checksum(np.stack([q.W0, v.W0]))
    trace = TrainingTrace(
        losses,
        before,
        after,
        asdict(config),
        q.n_trainable + v.n_trainable,
        sum(w.size for w in frozen[:4]),
    )
    return trace, (q, v)


# checkpoints


def save_adapter(adapter: LoraAdapter, path: str | os.PathLike) -> None:
    """Header ``(d, k, r, alpha)`` followed by row-major float64 ``A`` then ``B``."""
    d, k = adapter.W0.shape
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC + struct.pack("<IQQQd", CHECKPOINT_VERSION, d, k, adapter.rank, adapter.alpha))
        fh.write(np.ascontiguousarray(adapter.A, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(adapter.B, dtype="<f8").tobytes())


def load_adapter(path: str | os.PathLike, W0: np.ndarray) -> LoraAdapter:
    data = Path(path).read_bytes()
    if data[:4] != CHECKPOINT_MAGIC:
        raise LoraError(f"{path}: not an adapter checkpoint")
    head = struct.calcsize("<IQQQd")
    version, d, k, r, alpha = struct.unpack("<IQQQd", data[4:4 + head])
    if version != CHECKPOINT_VERSION:
        raise LoraError(f"{path}: unsupported version {version}")
    if W0.shape != (d, k):
        raise DimensionMismatch(f"checkpoint is for {d}x{k}, got W0 {W0.shape}")
    off = 4 + head
    A = np.frombuffer(data, dtype="<f8", count=r * k, offset=off).reshape(r, k).copy()
    B = np.frombuffer(data, dtype="<f8", count=d * r, offset=off + 8 * r * k).reshape(d, r).copy()
    return LoraAdapter(W0, A, B, alpha)
