"""ReLU multilayer perceptron with hand-derived gradients and SGD training.

The network is a uniform-width stack: input p -> width W repeated for the
hidden depth D -> scalar output, ReLU between affine maps, final layer
un-activated.  Parameter size is S = W(p+1) + (W^2+W)(D-1) + W + 1.

The training objective is the inverse-probability-weighted negative
log-likelihood

    L = -(1/m) sum_i [ y_i/w1 * log psi(g(x_i)) + (1-y_i)/w0 * log(1-psi(g(x_i))) ]

computed via softplus log-forms, so it stays finite for |g| up to 1e4 and
beyond.  Gradients are exact (backpropagation written out by hand; ReLU
subgradient at 0 is taken as 0).

Internals operate on raw lists of weight/bias arrays; the public operations
wrap them in the :class:`Network` value type.  BLAS is pinned to one thread
inside :func:`train` — the matrices here are small enough that threading
slows them down, and replication-level parallelism owns the cores.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .data import CaseControlSample, Dataset
from .errors import DivergenceError, DomainError

__all__ = [
    "Architecture",
    "Network",
    "Gradients",
    "TrainConfig",
    "init_network",
    "forward",
    "forward_batch",
    "weighted_loss",
    "gradient",
    "train",
    "network_to_dict",
    "network_from_dict",
    "save_network",
    "load_network",
]


@dataclass(frozen=True)
class Architecture:
    """Layer dimensions: input p, D hidden layers of uniform width W, scalar out."""

    input_dim: int
    depth: int
    width: int

    def __post_init__(self):
        if self.input_dim < 1 or self.depth < 1 or self.width < 1:
            raise DomainError("architecture dimensions must be positive")

    @property
    def size(self) -> int:
        """Total parameter count S = W(p+1) + (W^2+W)(D-1) + W + 1."""
        p, d, w = self.input_dim, self.depth, self.width
        return w * (p + 1) + (w * w + w) * (d - 1) + w + 1

    def layer_shapes(self) -> list[tuple[int, int]]:
        p, d, w = self.input_dim, self.depth, self.width
        return [(w, p)] + [(w, w)] * (d - 1) + [(1, w)]


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Network:
    """Weight matrices W_0..W_D and bias vectors b_0..b_D of the MLP."""

    architecture: Architecture
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        shapes = self.architecture.layer_shapes()
        if len(self.weights) != len(shapes) or len(self.biases) != len(shapes):
            raise DomainError(f"expected {len(shapes)} layers")
        Ws, bs = [], []
        for i, (W, b, shape) in enumerate(zip(self.weights, self.biases, shapes)):
            W = _freeze(W)
            b = _freeze(b)
            if W.shape != shape:
                raise DomainError(f"layer {i}: weight shape {W.shape} != {shape}")
            if b.shape != (shape[0],):
                raise DomainError(f"layer {i}: bias shape {b.shape} != ({shape[0]},)")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise DomainError(f"layer {i}: non-finite parameters")
            Ws.append(W)
            bs.append(b)
        object.__setattr__(self, "weights", tuple(Ws))
        object.__setattr__(self, "biases", tuple(bs))

    def raw_params(self) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """Writable copies of the parameter arrays, for optimizer internals."""
        return [W.copy() for W in self.weights], [b.copy() for b in self.biases]


@dataclass(frozen=True)
class Gradients:
    """Same shapes as the network parameters they differentiate."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class TrainConfig:
    """SGD hyperparameters; batch_size 0 means full batch."""

    learning_rate: float = 0.01
    max_epochs: int = 10_000
    batch_size: int = 64
    early_stop_tol: float = 1e-6
    early_stop_patience: int = 100
    seed: int = 0
    output_clamp: float | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise DomainError("learning_rate must be positive")
        if self.max_epochs < 0 or self.batch_size < 0:
            raise DomainError("max_epochs and batch_size must be nonnegative")
        if self.output_clamp is not None and self.output_clamp <= 0:
            raise DomainError("output_clamp must be positive when set")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "max_epochs": self.max_epochs,
            "batch_size": self.batch_size,
            "early_stop_tol": self.early_stop_tol,
            "early_stop_patience": self.early_stop_patience,
            "seed": self.seed,
            "output_clamp": self.output_clamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def init_network(arch: Architecture, seed: int) -> Network:
    """He-initialized network: W ~ N(0, 2/fan_in), biases zero."""
    rng = np.random.default_rng(seed)
    Ws, bs = [], []
    for out_dim, in_dim in arch.layer_shapes():
        Ws.append(rng.normal(0.0, np.sqrt(2.0 / in_dim), size=(out_dim, in_dim)))
        bs.append(np.zeros(out_dim))
    return Network(architecture=arch, weights=tuple(Ws), biases=tuple(bs))


def _forward_raw(Ws, bs, X, clamp):
    """Batch forward returning (g, pre-activations, layer inputs)."""
    depth = len(Ws) - 1
    a = X
    acts = [X]
    pres = []
    for i in range(depth):
        z = a @ Ws[i].T + bs[i]
        pres.append(z)
        a = np.maximum(z, 0.0)
        acts.append(a)
    g = (a @ Ws[depth].T).ravel() + bs[depth][0]
    if clamp is not None:
        g = np.clip(g, -clamp, clamp)
    return g, pres, acts


def _loss_from_g(g, y, w1, w0):
    # softplus(-g) = -log psi(g); softplus(g) = -log(1 - psi(g))
    case_term = np.logaddexp(0.0, -g[y == 1]).sum() / w1
    control_term = np.logaddexp(0.0, g[y == 0]).sum() / w0
    return (case_term + control_term) / g.shape[0]


def _loss_raw(Ws, bs, X, y, w1, w0, clamp):
    g, _, _ = _forward_raw(Ws, bs, X, clamp)
    return _loss_from_g(g, y, w1, w0)


def _sigmoid_vec(g):
    out = np.empty_like(g)
    pos = g >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-g[pos]))
    e = np.exp(g[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _gradient_raw(Ws, bs, X, y, w1, w0, clamp):
    """Loss and exact parameter gradients for one batch."""
    depth = len(Ws) - 1
    m = X.shape[0]
    a = X
    acts = [X]
    pres = []
    for i in range(depth):
        z = a @ Ws[i].T + bs[i]
        pres.append(z)
        a = np.maximum(z, 0.0)
        acts.append(a)
    g_raw = (a @ Ws[depth].T).ravel() + bs[depth][0]
    if clamp is not None:
        g = np.clip(g_raw, -clamp, clamp)
    else:
        g = g_raw
    loss = _loss_from_g(g, y, w1, w0)

    psi = _sigmoid_vec(g)
    # dL/dg_i = (1/m) [ y_i (psi-1)/w1 + (1-y_i) psi/w0 ]
    residual = np.where(y == 1, (psi - 1.0) / w1, psi / w0) / m
    if clamp is not None:
        residual = np.where(np.abs(g_raw) <= clamp, residual, 0.0)

    gWs = [None] * (depth + 1)
    gbs = [None] * (depth + 1)
    delta = residual[:, None]
    gWs[depth] = delta.T @ acts[depth]
    gbs[depth] = delta.sum(axis=0)
    back = delta @ Ws[depth]
    for i in range(depth - 1, -1, -1):
        back = back * (pres[i] > 0)  # ReLU subgradient at 0 taken as 0
        gWs[i] = back.T @ acts[i]
        gbs[i] = back.sum(axis=0)
        if i > 0:
            back = back @ Ws[i]
    return loss, gWs, gbs


def _rows(batch: CaseControlSample | Dataset) -> tuple[np.ndarray, np.ndarray]:
    # mini-batches may be single-class, so a plain Dataset is accepted too
    data = batch.data if isinstance(batch, CaseControlSample) else batch
    return data.X, data.y


def forward_batch(net: Network, X: np.ndarray, clamp: float | None = None) -> np.ndarray:
    """Network values g(x) for every row of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != net.architecture.input_dim:
        raise DomainError(
            f"expected (n, {net.architecture.input_dim}) inputs, got shape {X.shape}"
        )
    g, _, _ = _forward_raw(list(net.weights), list(net.biases), X, clamp)
    return g


def forward(net: Network, x, clamp: float | None = None) -> float:
    """Network value at a single covariate vector."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(forward_batch(net, x.reshape(1, -1), clamp)[0])


def weighted_loss(
    net: Network,
    batch: CaseControlSample | Dataset,
    w1: float,
    w0: float,
    clamp: float | None = None,
) -> float:
    """The weighted negative log-likelihood over the batch."""
    X, y = _rows(batch)
    return float(_loss_raw(list(net.weights), list(net.biases), X, y, w1, w0, clamp))


def gradient(
    net: Network,
    batch: CaseControlSample | Dataset,
    w1: float,
    w0: float,
    clamp: float | None = None,
) -> tuple[float, Gradients]:
    """Loss and its exact gradient with respect to every weight and bias."""
    X, y = _rows(batch)
    if X.shape[0] == 0:
        raise DomainError("gradient needs a nonempty batch")
    loss, gWs, gbs = _gradient_raw(list(net.weights), list(net.biases), X, y, w1, w0, clamp)
    return float(loss), Gradients(weights=tuple(gWs), biases=tuple(gbs))


def train(
    net: Network,
    train_set: CaseControlSample | Dataset,
    w1: float,
    w0: float,
    config: TrainConfig,
    monitor: CaseControlSample | Dataset | None = None,
) -> tuple[Network, list[tuple[int, float, float]]]:
    """Mini-batch SGD with early stopping on the monitored loss.

    Each epoch reshuffles the rows (seeded by config.seed), visits batches of
    config.batch_size (0 = full batch) and applies plain gradient-descent
    steps.  The monitored loss is evaluated at the end of each epoch on the
    monitor set if given, else on the full training set; training stops at
    max_epochs or once the monitored loss has improved by less than
    early_stop_tol for early_stop_patience consecutive epochs.  Returns the
    parameters with the best monitored loss seen (the initial ones count) and
    a history of (epoch, mean batch loss, monitored loss).
    """
    X, y = _rows(train_set)
    if X.shape[0] == 0:
        raise DomainError("train needs a nonempty training set")
    if config.max_epochs == 0:
        return net, []

    n = X.shape[0]
    batch = config.batch_size if config.batch_size > 0 else n
    clamp = config.output_clamp
    mX, my = _rows(monitor) if monitor is not None else (X, y)

    rng = np.random.default_rng(config.seed)
    Ws, bs = net.raw_params()
    lr = config.learning_rate

    history: list[tuple[int, float, float]] = []
    # overflow en route to a non-finite loss is handled by the explicit
    # divergence check, so the elementwise warnings carry no information
    with threadpool_limits(limits=1, user_api="blas"), np.errstate(over="ignore", invalid="ignore"):
        best_loss = _loss_raw(Ws, bs, mX, my, w1, w0, clamp)
        best_Ws = [W.copy() for W in Ws]
        best_bs = [b.copy() for b in bs]
        stall = 0
        for epoch in range(1, config.max_epochs + 1):
            perm = rng.permutation(n)
            batch_losses = 0.0
            n_batches = 0
            for start in range(0, n, batch):
                idx = perm[start : start + batch]
                loss, gWs, gbs = _gradient_raw(Ws, bs, X[idx], y[idx], w1, w0, clamp)
                if not np.isfinite(loss):
                    raise DivergenceError(f"divergence at epoch {epoch}", epoch=epoch)
                for i in range(len(Ws)):
                    Ws[i] -= lr * gWs[i]
                    bs[i] -= lr * gbs[i]
                batch_losses += loss
                n_batches += 1
            train_loss = batch_losses / n_batches
            monitor_loss = _loss_raw(Ws, bs, mX, my, w1, w0, clamp)
            if not np.isfinite(monitor_loss):
                raise DivergenceError(f"divergence at epoch {epoch}", epoch=epoch)
            history.append((epoch, float(train_loss), float(monitor_loss)))

            improvement = best_loss - monitor_loss
            if monitor_loss < best_loss:
                best_loss = monitor_loss
                best_Ws = [W.copy() for W in Ws]
                best_bs = [b.copy() for b in bs]
            if improvement < config.early_stop_tol:
                stall += 1
                if stall >= config.early_stop_patience:
                    break
            else:
                stall = 0

    trained = Network(
        architecture=net.architecture, weights=tuple(best_Ws), biases=tuple(best_bs)
    )
    return trained, history


def network_to_dict(net: Network) -> dict:
    arch = net.architecture
    return {
        "arch": {"p": arch.input_dim, "depth": arch.depth, "width": arch.width},
        "weights": [W.tolist() for W in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }


def network_from_dict(d: dict) -> Network:
    arch = Architecture(
        input_dim=int(d["arch"]["p"]), depth=int(d["arch"]["depth"]), width=int(d["arch"]["width"])
    )
    return Network(
        architecture=arch,
        weights=tuple(np.array(W, dtype=float) for W in d["weights"]),
        biases=tuple(np.array(b, dtype=float) for b in d["biases"]),
    )


def save_network(net: Network, path) -> None:
    """JSON serialization; floats print at full precision and round-trip bit-exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(network_to_dict(net), fh)


def load_network(path) -> Network:
    with open(path, "r", encoding="utf-8") as fh:
        return network_from_dict(json.load(fh))
