"""Fully connected network: [Linear -> BatchNorm -> SiLU] x L, then Linear.

Forward and backward passes are written out by hand in numpy. Training uses
minibatch Adam with decoupled weight decay on the weight matrices only.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import Exhausted, WidthMismatch
from ..seeding import derive_seed, philox

BN_EPS = 1e-5
BN_MOMENTUM = 0.9
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
PREDICT_CHUNK = 1 << 16


@dataclass(frozen=True)
class MlpConfig:
    hidden_layers: int = 5
    hidden_width: int = 20
    batch_size: int = 1024
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    max_epochs: int = 20

    variant = "mlp"

    def __post_init__(self):
        for name in ("hidden_layers", "hidden_width", "batch_size", "max_epochs"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")

    @property
    def budget(self):
        return self.max_epochs


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def init_params(input_dim, hidden_layers, width, rng):
    """Fan-in scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    params = {}
    fan_in = input_dim
    for k in range(hidden_layers):
        bound = 1.0 / np.sqrt(fan_in)
        params[f"W{k}"] = rng.uniform(-bound, bound, size=(fan_in, width))
        params[f"b{k}"] = rng.uniform(-bound, bound, size=width)
        params[f"gamma{k}"] = np.ones(width)
        params[f"beta{k}"] = np.zeros(width)
        fan_in = width
    bound = 1.0 / np.sqrt(fan_in)
    params["Wout"] = rng.uniform(-bound, bound, size=(fan_in, 1))
    params["bout"] = rng.uniform(-bound, bound, size=1)
    return params


def n_hidden(params):
    return sum(1 for k in params if k.startswith("gamma"))


def forward_train(params, x):
    """Forward pass with batch statistics; returns (output, cache)."""
    cache = []
    a = x
    for k in range(n_hidden(params)):
        z = a @ params[f"W{k}"] + params[f"b{k}"]
        mu = z.mean(axis=0)
        var = z.var(axis=0)
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        zhat = (z - mu) * inv_std
        u = params[f"gamma{k}"] * zhat + params[f"beta{k}"]
        s = sigmoid(u)
        cache.append((a, zhat, inv_std, u, s, mu, var))
        a = u * s
    out = (a @ params["Wout"] + params["bout"])[:, 0]
    return out, (cache, a)


def backward(params, cache, dout):
    """Gradients of a loss with respect to every parameter, given dL/d(output)."""
    layers, a_last = cache
    grads = {}
    dout = dout[:, None]
    grads["Wout"] = a_last.T @ dout
    grads["bout"] = dout.sum(axis=0)
    da = dout @ params["Wout"].T
    for k in reversed(range(len(layers))):
        a_in, zhat, inv_std, u, s, _, _ = layers[k]
        du = da * (s * (1.0 + u * (1.0 - s)))
        grads[f"gamma{k}"] = (du * zhat).sum(axis=0)
        grads[f"beta{k}"] = du.sum(axis=0)
        dzhat = du * params[f"gamma{k}"]
        m = dzhat.shape[0]
        dz = (inv_std / m) * (m * dzhat - dzhat.sum(axis=0) - zhat * (dzhat * zhat).sum(axis=0))
        grads[f"W{k}"] = a_in.T @ dz
        grads[f"b{k}"] = dz.sum(axis=0)
        da = dz @ params[f"W{k}"].T
    return grads


def mse_loss_and_grad(params, x, t):
    out, cache = forward_train(params, x)
    r = out - t
    loss = float(np.mean(r * r))
    grads = backward(params, cache, 2.0 * r / r.size)
    return loss, grads, cache


@dataclass(frozen=True)
class MlpModel:
    params: dict
    running_mean: tuple
    running_var: tuple
    input_dim: int

    variant = "mlp"

    def predict(self, features):
        x = np.asarray(features, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise WidthMismatch(f"expected {self.input_dim} feature columns, got {x.shape}")
        out = np.empty(x.shape[0])
        for start in range(0, x.shape[0], PREDICT_CHUNK):
            out[start:start + PREDICT_CHUNK] = self._predict_chunk(x[start:start + PREDICT_CHUNK])
        return out

    def _predict_chunk(self, a):
        p = self.params
        for k in range(len(self.running_mean)):
            z = a @ p[f"W{k}"] + p[f"b{k}"]
            u = p[f"gamma{k}"] * (z - self.running_mean[k]) / np.sqrt(self.running_var[k] + BN_EPS) + p[f"beta{k}"]
            a = u * sigmoid(u)
        return (a @ p["Wout"] + p["bout"])[:, 0]

    def to_arrays(self):
        arrays = {f"param/{k}": v for k, v in self.params.items()}
        for k, (m, v) in enumerate(zip(self.running_mean, self.running_var)):
            arrays[f"running_mean/{k}"] = m
            arrays[f"running_var/{k}"] = v
        meta = {"hidden_layers": len(self.running_mean), "input_dim": self.input_dim}
        return meta, arrays

    @classmethod
    def from_arrays(cls, meta, arrays):
        params = {k[len("param/"):]: v for k, v in arrays.items() if k.startswith("param/")}
        L = int(meta["hidden_layers"])
        return cls(
            params,
            tuple(arrays[f"running_mean/{k}"] for k in range(L)),
            tuple(arrays[f"running_var/{k}"] for k in range(L)),
            int(meta["input_dim"]),
        )


class MlpTrainer:
    """One epoch of shuffled minibatch AdamW per ``train_round`` call.

    Running batch-norm statistics start from the first minibatch's statistics
    and are then averaged with momentum ``BN_MOMENTUM``.
    """

    def __init__(self, config, design, seed=0):
        self.config = config
        self.x = np.asarray(design.features, dtype=float)
        self.t = np.asarray(design.targets, dtype=float)
        self.input_dim = self.x.shape[1]
        init_rng = philox(derive_seed(seed, "mlp-init"))
        self.shuffle_rng = philox(derive_seed(seed, "mlp-shuffle"))
        self.params = init_params(self.input_dim, config.hidden_layers, config.hidden_width, init_rng)
        self.adam_m = {k: np.zeros_like(v) for k, v in self.params.items()}
        self.adam_v = {k: np.zeros_like(v) for k, v in self.params.items()}
        self.step = 0
        self.epochs = 0
        self.running_mean = None
        self.running_var = None
        self._eval_sets = {}

    @property
    def rounds(self):
        return self.epochs

    @property
    def exhausted(self):
        return self.epochs >= self.config.max_epochs

    def train_round(self):
        if self.exhausted:
            raise Exhausted(f"epoch budget of {self.config.max_epochs} is spent")
        order = self.shuffle_rng.permutation(self.x.shape[0])
        bs = self.config.batch_size
        for start in range(0, order.size, bs):
            idx = order[start:start + bs]
            if idx.size < 2:
                continue  # batch norm needs at least two rows
            self._step(self.x[idx], self.t[idx])
        self.epochs += 1
        return self

    def _step(self, xb, tb):
        cfg = self.config
        _, grads, (layers, _) = mse_loss_and_grad(self.params, xb, tb)
        self._update_running(layers)
        self.step += 1
        c1 = 1.0 - ADAM_BETA1 ** self.step
        c2 = 1.0 - ADAM_BETA2 ** self.step
        for k, p in self.params.items():
            g = grads[k]
            m = self.adam_m[k]
            v = self.adam_v[k]
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            if k[0] == "W":
                p *= 1.0 - cfg.learning_rate * cfg.weight_decay
            p -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)

    def _update_running(self, layers):
        if self.running_mean is None:
            self.running_mean = [lay[5].copy() for lay in layers]
            self.running_var = [lay[6].copy() for lay in layers]
            return
        for k, lay in enumerate(layers):
            self.running_mean[k] = BN_MOMENTUM * self.running_mean[k] + (1 - BN_MOMENTUM) * lay[5]
            self.running_var[k] = BN_MOMENTUM * self.running_var[k] + (1 - BN_MOMENTUM) * lay[6]

    def model(self):
        if self.running_mean is None:
            # untrained: use statistics of the full training set
            _, (layers, _) = forward_train(self.params, self.x)
            rm = [lay[5] for lay in layers]
            rv = [lay[6] for lay in layers]
        else:
            rm, rv = self.running_mean, self.running_var
        params = {k: v.copy() for k, v in self.params.items()}
        return MlpModel(params, tuple(m.copy() for m in rm), tuple(v.copy() for v in rv), self.input_dim)

    def training_mse(self):
        r = self.model().predict(self.x) - self.t
        return float(np.dot(r, r) / r.size)

    def add_eval_set(self, name, features):
        x = np.asarray(features, dtype=float)
        if x.shape[1] != self.input_dim:
            raise WidthMismatch(f"expected {self.input_dim} feature columns, got {x.shape[1]}")
        self._eval_sets[name] = x

    def eval_predictions(self, name):
        return self.model().predict(self._eval_sets[name])
