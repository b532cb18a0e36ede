"""Feed-forward network mapping position to a moment vector.

The network is evaluated together with its exact x-derivative by
propagating (value, tangent) pairs through the layers; parameter
gradients of losses built from outputs and x-derivatives are obtained by
reverse accumulation through that paired computation.  All arithmetic is
plain float64 numpy, so results are bit-reproducible for a fixed seed.
"""

from __future__ import annotations

import json

import numpy as np

_ACTIVATIONS = ("relu", "tanh")


def _act(kind, z):
    if kind == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _act_prime(kind, z):
    if kind == "relu":
        # subgradient at 0 fixed to 0
        return (z > 0.0).astype(float)
    t = np.tanh(z)
    return 1.0 - t * t


def _act_second(kind, z):
    if kind == "relu":
        return np.zeros_like(z)
    t = np.tanh(z)
    return -2.0 * t * (1.0 - t * t)


class MlpNetwork:
    """Fully connected network with scalar input and N+1 outputs.

    Layers apply an affine map to the (optionally window-normalized)
    input, with the activation between consecutive affine maps and a
    linear output layer.  Weight matrices have shape (out, in).
    """

    def __init__(self, weights, biases, activation, input_window=None,
                 seed=None, output_scale=None):
        if activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        self.activation = activation
        self.input_window = input_window
        self.seed = seed
        sizes = [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]
        self.layer_sizes = tuple(sizes)
        for w, b, nin, nout in zip(self.weights, self.biases, sizes, sizes[1:]):
            if w.shape != (nout, nin) or b.shape != (nout,):
                raise ValueError("inconsistent layer shapes")
        if output_scale is not None:
            output_scale = np.asarray(output_scale, dtype=float)
            if output_scale.shape != (sizes[-1],):
                raise ValueError("output_scale length must match the output width")
        self.output_scale = output_scale

    # -- construction -------------------------------------------------

    @classmethod
    def init(cls, layer_sizes, activation, seed, input_window=None,
             output_scale=None):
        """Seeded initialization: Glorot-uniform for tanh, He-uniform for relu."""
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for nin, nout in zip(layer_sizes, layer_sizes[1:]):
            if activation == "tanh":
                limit = np.sqrt(6.0 / (nin + nout))
            else:
                limit = np.sqrt(6.0 / nin)
            weights.append(rng.uniform(-limit, limit, size=(nout, nin)))
            biases.append(np.zeros(nout))
        return cls(weights, biases, activation, input_window, seed, output_scale)

    @property
    def n_params(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    # -- parameter vector ----------------------------------------------

    def flatten(self):
        """All parameters as one vector, layer-major (W then b per layer)."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def with_params(self, flat):
        """Copy of the network with parameters taken from a flat vector."""
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.n_params,):
            raise ValueError("parameter vector length mismatch")
        weights, biases, pos = [], [], 0
        for w, b in zip(self.weights, self.biases):
            weights.append(flat[pos:pos + w.size].reshape(w.shape).copy())
            pos += w.size
            biases.append(flat[pos:pos + b.size].copy())
            pos += b.size
        return MlpNetwork(weights, biases, self.activation,
                          self.input_window, self.seed, self.output_scale)

    # -- evaluation -----------------------------------------------------

    def _normalize(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.input_window is None:
            return x[:, None], 1.0
        lo, hi = self.input_window
        scale = 2.0 / (hi - lo)
        return ((x - lo) * scale - 1.0)[:, None], scale

    def forward(self, x):
        """Moment vector(s) at position(s) x; shape (N+1,) or (n, N+1)."""
        scalar = np.ndim(x) == 0
        a, _ = self._normalize(x)
        last = len(self.weights) - 1
        for m, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.T + b
            a = z if m == last else _act(self.activation, z)
        if self.output_scale is not None:
            a = a * self.output_scale
        return a[0] if scalar else a

    def forward_with_x_derivative(self, x):
        """Values and exact d/dx of every output; same leading shape as x."""
        y, dy, _ = self._forward_tangent(x)
        if np.ndim(x) == 0:
            return y[0], dy[0]
        return y, dy

    def _forward_tangent(self, x):
        a, scale = self._normalize(x)
        adot = np.full_like(a, scale)
        cache = []
        last = len(self.weights) - 1
        for m, (w, b) in enumerate(zip(self.weights, self.biases)):
            a_in, adot_in = a, adot
            z = a @ w.T + b
            zdot = adot @ w.T
            if m == last:
                a, adot = z, zdot
                cache.append((a_in, adot_in, None))
            else:
                a = _act(self.activation, z)
                adot = _act_prime(self.activation, z) * zdot
                cache.append((a_in, adot_in, (z, zdot)))
        if self.output_scale is not None:
            a = a * self.output_scale
            adot = adot * self.output_scale
        return a, adot, cache

    def loss_gradient(self, x, loss_fn):
        """Value and exact parameter gradient of a pointwise loss.

        Parameters
        ----------
        x : array_like
            Evaluation points.
        loss_fn : callable
            Maps (y, dy) with shapes (n, N+1) to a triple
            (value, dL/dy, dL/ddy).

        Returns
        -------
        (float, ndarray)
            Loss value and its gradient in flat parameter order.
        """
        y, dy, cache = self._forward_tangent(x)
        value, gy, gdy = loss_fn(y, dy)
        return value, self._backprop(cache, np.asarray(gy, dtype=float),
                                     np.asarray(gdy, dtype=float))

    def _backprop(self, cache, bar_a, bar_adot):
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.weights)
        kind = self.activation
        if self.output_scale is not None:
            bar_a = bar_a * self.output_scale
            bar_adot = bar_adot * self.output_scale
        for m in range(len(self.weights) - 1, -1, -1):
            a_in, adot_in, zpair = cache[m]
            if zpair is not None:
                z, zdot = zpair
                sp = _act_prime(kind, z)
                bar_z = bar_a * sp + bar_adot * _act_second(kind, z) * zdot
                bar_zdot = bar_adot * sp
            else:
                bar_z, bar_zdot = bar_a, bar_adot
            grads_w[m] = bar_z.T @ a_in + bar_zdot.T @ adot_in
            grads_b[m] = bar_z.sum(axis=0)
            if m > 0:
                w = self.weights[m]
                bar_a = bar_z @ w
                bar_adot = bar_zdot @ w
        parts = []
        for gw, gb in zip(grads_w, grads_b):
            parts.append(gw.ravel())
            parts.append(gb)
        return np.concatenate(parts)

    # -- checkpointing ----------------------------------------------------

    def to_checkpoint(self):
        """JSON-serializable checkpoint with architecture header."""
        return {
            "layer_sizes": list(self.layer_sizes),
            "activation": self.activation,
            "seed": self.seed,
            "input_window": list(self.input_window) if self.input_window else None,
            "output_scale": (self.output_scale.tolist()
                             if self.output_scale is not None else None),
            "params": self.flatten().tolist(),
        }

    @classmethod
    def from_checkpoint(cls, data):
        window = tuple(data["input_window"]) if data["input_window"] else None
        scale = data.get("output_scale")
        net = cls.init(tuple(data["layer_sizes"]), data["activation"],
                       data["seed"], window,
                       np.array(scale) if scale is not None else None)
        return net.with_params(np.array(data["params"]))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_checkpoint(), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_checkpoint(json.load(fh))
