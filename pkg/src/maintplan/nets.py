"""Small differentiable-network engine used by both planners.

This is a fixed-topology tape, not a general autodiff system: the only
primitives are affine layers, ReLU, tanh squashing, diagonal-Gaussian log
densities, elementwise minimum and squared error, which is exactly what
the actor/critic losses need.  Everything is float64 numpy and every
backward pass is hand-derived and verified against central finite
differences in the test suite.

Networks:

* ``Mlp``            - ReLU trunk plus one or more affine heads, returning
                       a cache for the backward pass (which also yields the
                       gradient w.r.t. the input, needed to chain policies).
* ``GaussianPolicy`` - mean/log-std heads, tanh-squashed reparameterized
                       sampling with the change-of-variables log-density
                       correction ``-log(1 - tanh(u)^2 + 1e-6)``.
* ``QNetwork``       - scalar or vector Q head.
* ``Adam``           - standard Adam (beta1=0.9, beta2=0.999, eps=1e-8)
                       updating parameters in place.

Initialization is uniform +-1/sqrt(fan_in) per layer, with head layers
scaled by 1e-2 so freshly built policies start near-uniform.  Log standard
deviations are clamped to [-20, 2]; the clamp passes zero gradient outside
the window.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass

import numpy as np

from .fileio import atomic_write_bytes

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
#: Stabilizer inside the tanh change-of-variables correction.
TANH_EPS = 1e-6
_LOG_2PI = math.log(2.0 * math.pi)

CHECKPOINT_VERSION = 1


def _init_affine(rng: np.random.Generator, fan_in: int, fan_out: int,
                 scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    bound = scale / math.sqrt(fan_in)
    w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
    b = rng.uniform(-bound, bound, size=fan_out)
    return w, b


class Mlp:
    """ReLU trunk with affine output heads and exact analytic gradients."""

    def __init__(self, in_dim: int, hidden: tuple[int, ...], head_dims: tuple[int, ...],
                 rng: np.random.Generator, head_scale: float = 1e-2):
        self.in_dim = in_dim
        self.hidden = tuple(hidden)
        self.head_dims = tuple(head_dims)
        self.trunk: list[tuple[np.ndarray, np.ndarray]] = []
        d = in_dim
        for width in self.hidden:
            self.trunk.append(_init_affine(rng, d, width))
            d = width
        self.heads = [_init_affine(rng, d, hd, scale=head_scale)
                      for hd in self.head_dims]

    # -- parameter plumbing -------------------------------------------------

    def tensors(self) -> list[np.ndarray]:
        """All parameter arrays, trunk first then heads, (w, b) pairs."""
        out = []
        for w, b in self.trunk + self.heads:
            out.append(w)
            out.append(b)
        return out

    def load_tensors(self, arrays: list[np.ndarray]) -> None:
        own = self.tensors()
        if len(arrays) != len(own):
            raise ValueError(f"expected {len(own)} tensors, got {len(arrays)}")
        for dst, src in zip(own, arrays):
            if dst.shape != src.shape:
                raise ValueError(f"shape mismatch: {dst.shape} vs {src.shape}")
            dst[...] = src

    def copy(self) -> "Mlp":
        dup = Mlp.__new__(Mlp)
        dup.in_dim = self.in_dim
        dup.hidden = self.hidden
        dup.head_dims = self.head_dims
        dup.trunk = [(w.copy(), b.copy()) for w, b in self.trunk]
        dup.heads = [(w.copy(), b.copy()) for w, b in self.heads]
        return dup

    # -- forward / backward -------------------------------------------------

    def forward(self, x: np.ndarray) -> tuple[list[np.ndarray], tuple]:
        """Run the network on a (B, in_dim) batch.

        Returns the list of head outputs and the cache consumed by
        ``backward``.
        """
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(f"input shape {x.shape} does not match (B, {self.in_dim})")
        activations = [x]
        pre = []
        h = x
        for w, b in self.trunk:
            z = h @ w + b
            pre.append(z)
            h = np.maximum(z, 0.0)
            activations.append(h)
        outputs = [h @ w + b for w, b in self.heads]
        return outputs, (activations, pre)

    def backward(self, cache: tuple, head_grads: list[np.ndarray | None]
                 ) -> tuple[list[np.ndarray], np.ndarray]:
        """Backpropagate head adjoints through the tape.

        Returns (parameter gradients aligned with ``tensors()``, gradient
        w.r.t. the input batch).
        """
        activations, pre = cache
        h = activations[-1]
        grad_h = np.zeros_like(h)
        head_param_grads = []
        for (w, _), g in zip(self.heads, head_grads):
            if g is None:
                head_param_grads.append(np.zeros_like(w))
                head_param_grads.append(np.zeros(w.shape[1]))
                continue
            head_param_grads.append(h.T @ g)
            head_param_grads.append(g.sum(axis=0))
            grad_h = grad_h + g @ w.T
        trunk_param_grads: list[np.ndarray] = []
        for layer in range(len(self.trunk) - 1, -1, -1):
            w, _ = self.trunk[layer]
            gz = grad_h * (pre[layer] > 0.0)   # ReLU derivative is 0 at exactly 0
            trunk_param_grads.insert(0, gz.sum(axis=0))
            trunk_param_grads.insert(0, activations[layer].T @ gz)
            grad_h = gz @ w.T
        return trunk_param_grads + head_param_grads, grad_h


class Adam:
    """Adam optimizer mutating the given parameter arrays in place."""

    def __init__(self, tensors: list[np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.tensors = tensors
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(t) for t in tensors]
        self.v = [np.zeros_like(t) for t in tensors]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.tensors, grads, self.m, self.v):
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass(frozen=True)
class SquashedSample:
    pre_tanh: np.ndarray   # (B, d) u = mean + sigma * noise
    action: np.ndarray     # (B, d) tanh(u), strictly inside (-1, 1)
    log_prob: np.ndarray   # (B,) summed over dimensions


def sample_squashed(mean: np.ndarray, log_std: np.ndarray,
                    noise: np.ndarray) -> SquashedSample:
    """Reparameterized tanh-squashed Gaussian sample with its log density.

    log_prob sums, over dimensions, the Gaussian log density at the
    pre-squash sample minus log(1 - tanh(u)^2 + 1e-6).
    """
    sigma = np.exp(log_std)
    u = mean + sigma * noise
    action = np.tanh(u)
    per_dim = (-0.5 * noise * noise - log_std - 0.5 * _LOG_2PI
               - np.log(1.0 - action * action + TANH_EPS))
    return SquashedSample(pre_tanh=u, action=action,
                          log_prob=per_dim.sum(axis=1))


def squashed_backward(sample: SquashedSample, log_std: np.ndarray,
                      noise: np.ndarray, grad_action: np.ndarray,
                      grad_log_prob: np.ndarray
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Adjoints of (action, log_prob) w.r.t. the head outputs (mean, log_std).

    grad_action is (B, d); grad_log_prob is (B,) and broadcasts into every
    dimension because log_prob is a sum.
    """
    a = sample.action
    sigma = np.exp(log_std)
    one_m_a2 = 1.0 - a * a
    # d/du of -log(1 - tanh(u)^2 + eps)
    t_corr = 2.0 * a * one_m_a2 / (one_m_a2 + TANH_EPS)
    glp = grad_log_prob[:, None]
    grad_u = grad_action * one_m_a2 + glp * t_corr
    grad_mean = grad_u
    grad_log_std = grad_u * sigma * noise - glp
    return grad_mean, grad_log_std


class GaussianPolicy:
    """Stochastic policy: MLP trunk, mean/log-std heads, tanh squashing."""

    def __init__(self, obs_dim: int, act_dim: int, hidden: tuple[int, ...],
                 rng: np.random.Generator):
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.net = Mlp(obs_dim, hidden, (act_dim, act_dim), rng)

    def heads(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, tuple]:
        """Mean and clamped log-std for a batch, plus the backward cache."""
        (mean, log_std_raw), mlp_cache = self.net.forward(x)
        log_std = np.clip(log_std_raw, LOG_STD_MIN, LOG_STD_MAX)
        in_window = (log_std_raw > LOG_STD_MIN) & (log_std_raw < LOG_STD_MAX)
        return mean, log_std, (mlp_cache, in_window)

    def sample(self, x: np.ndarray, noise: np.ndarray
               ) -> tuple[SquashedSample, tuple]:
        mean, log_std, head_cache = self.heads(x)
        s = sample_squashed(mean, log_std, noise)
        return s, (head_cache, s, log_std, noise)

    def mean_action(self, x: np.ndarray) -> tuple[SquashedSample, tuple]:
        """Deterministic mode: the squashed mean (the noise=0 sample)."""
        mean, _, _ = self.heads(x)
        return self.sample(x, np.zeros_like(mean))

    def backward(self, cache: tuple, grad_action: np.ndarray,
                 grad_log_prob: np.ndarray
                 ) -> tuple[list[np.ndarray], np.ndarray]:
        """Parameter gradients and input gradient for sampled-action losses."""
        (mlp_cache, in_window), s, log_std, noise = cache
        grad_mean, grad_log_std = squashed_backward(
            s, log_std, noise, grad_action, grad_log_prob)
        grad_log_std = grad_log_std * in_window   # clamp blocks gradient outside
        return self.net.backward(mlp_cache, [grad_mean, grad_log_std])

    def tensors(self) -> list[np.ndarray]:
        return self.net.tensors()


class QNetwork:
    """Q-value head over a state(-action) input; scalar or one per action."""

    def __init__(self, in_dim: int, out_dim: int, hidden: tuple[int, ...],
                 rng: np.random.Generator):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.net = Mlp(in_dim, hidden, (out_dim,), rng)

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        (q,), cache = self.net.forward(x)
        return q, cache

    def backward(self, cache: tuple, grad_q: np.ndarray
                 ) -> tuple[list[np.ndarray], np.ndarray]:
        return self.net.backward(cache, [grad_q])

    def tensors(self) -> list[np.ndarray]:
        return self.net.tensors()

    def copy(self) -> "QNetwork":
        dup = QNetwork.__new__(QNetwork)
        dup.in_dim = self.in_dim
        dup.out_dim = self.out_dim
        dup.net = self.net.copy()
        return dup


def polyak_update(target_tensors: list[np.ndarray],
                  source_tensors: list[np.ndarray], tau: float) -> None:
    """target <- tau * source + (1 - tau) * target, in place."""
    for tgt, src in zip(target_tensors, source_tensors):
        tgt *= 1.0 - tau
        tgt += tau * src


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path: str | os.PathLike, arrays: dict[str, np.ndarray]) -> None:
    """Dump named float64 tensors; loading round-trips bit-exactly."""
    payload = dict(arrays)
    payload["__format_version__"] = np.array(CHECKPOINT_VERSION)
    buf = io.BytesIO()
    np.savez(buf, **payload)
    atomic_write_bytes(path, buf.getvalue())


def load_checkpoint(path: str | os.PathLike) -> dict[str, np.ndarray]:
    with np.load(path) as data:
        version = int(data["__format_version__"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        return {k: data[k] for k in data.files if k != "__format_version__"}


def finite_difference_gradients(loss_fn, tensors: list[np.ndarray],
                                step: float = 1e-5) -> list[np.ndarray]:
    """Central-difference gradients of a scalar closure; slow, for checks."""
    grads = []
    for arr in tensors:
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gf = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = loss_fn()
            flat[i] = orig - step
            lo = loss_fn()
            flat[i] = orig
            gf[i] = (hi - lo) / (2.0 * step)
        grads.append(g)
    return grads
