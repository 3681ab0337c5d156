# Actor-critic networks with analytic gradients and their file format.
#
# Copyright (C) 2024  The slcim authors
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 2 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.
#

__all__ = ["PolicyParams", "PolicyError", "PolicyFileError", "ShapeMismatchError",
           "policy_forward", "value_forward", "save_params", "load_params"]

import struct

import numpy as np

STATE_DIM = 2
DEFAULT_HIDDEN = 64

# parameter file layout, all little-endian:
#   magic, version, action count, hidden width, layer count,
#   (rows, cols) of every weight matrix, then every layer's weights
#   and bias as row-major float64
MAGIC = b"SLCIMPOL"
VERSION = 1
_HEADER = struct.Struct("<8sIIII")
_SHAPE = struct.Struct("<II")


class PolicyError(ValueError):
    """Invalid policy parameters or input."""
    pass


class PolicyFileError(PolicyError):
    """The parameter file is corrupt or of an unknown version."""
    pass


class ShapeMismatchError(PolicyFileError):
    """The parameter file was written for a different action space."""
    pass


class PolicyParams(object):
    """Weights of the actor (state -> action logits) and the critic (state -> value).

    Both are fully connected networks with two tanh hidden layers. Every
    layer is a (W, b) pair with W of shape (inputs, outputs).
    """

    def __init__(self, actor, critic):
        """
        :param actor: layers ending with |actions| outputs
        :type actor: list of (numpy.ndarray, numpy.ndarray)

        :param critic: layers ending with a single output
        :type critic: list of (numpy.ndarray, numpy.ndarray)
        """
        self.actor = [(np.asarray(W, dtype=float), np.asarray(b, dtype=float)) for W, b in actor]
        self.critic = [(np.asarray(W, dtype=float), np.asarray(b, dtype=float)) for W, b in critic]
        if not self.actor or not self.critic:
            raise PolicyError("Actor and critic need at least one layer")
        for W, b in self.actor + self.critic:
            if W.ndim != 2 or b.shape != (W.shape[1],):
                raise PolicyError("Layer shapes %s/%s do not match" % (W.shape, b.shape))
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise PolicyError("Policy parameters must be finite")
        for net in (self.actor, self.critic):
            for (W1, _b1), (W2, _b2) in zip(net, net[1:]):
                if W1.shape[1] != W2.shape[0]:
                    raise PolicyError("Layer with %d outputs feeds a layer with %d inputs"
                                      % (W1.shape[1], W2.shape[0]))
        if self.actor[0][0].shape[0] != self.critic[0][0].shape[0]:
            raise PolicyError("Actor and critic read states of different sizes")
        if self.critic[-1][0].shape[1] != 1:
            raise PolicyError("The critic must have a single output")

    @classmethod
    def initialize(cls, n_actions, hidden=DEFAULT_HIDDEN, rng_seed=0, state_dim=STATE_DIM):
        """Random weights scaled by fan-in; the actor head starts almost uniform."""
        rng = np.random.default_rng(rng_seed)

        def layers(sizes, head_scale):
            result = []
            for n, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
                W = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out))
                if n == len(sizes) - 2:
                    W *= head_scale
                result.append((W, np.zeros(fan_out)))
            return result

        return cls(layers([state_dim, hidden, hidden, n_actions], 0.01),
                   layers([state_dim, hidden, hidden, 1], 1.0))

    @property
    def n_actions(self):
        return self.actor[-1][0].shape[1]

    @property
    def hidden(self):
        return self.actor[0][0].shape[1]

    def layers(self):
        return self.actor + self.critic

    def copy(self):
        return PolicyParams([(W.copy(), b.copy()) for W, b in self.actor],
                            [(W.copy(), b.copy()) for W, b in self.critic])

    def __eq__(self, other):
        if not isinstance(other, PolicyParams) or len(self.layers()) != len(other.layers()):
            return False
        return all(np.array_equal(W1, W2) and np.array_equal(b1, b2)
                   for (W1, b1), (W2, b2) in zip(self.layers(), other.layers()))

    def __repr__(self):
        return "PolicyParams(actions=%d, hidden=%d)" % (self.n_actions, self.hidden)


def mlp_forward(layers, x):
    """Return the linear output and the inputs of every layer."""
    inputs = [x]
    h = x
    for W, b in layers[:-1]:
        h = np.tanh(h @ W + b)
        inputs.append(h)
    W, b = layers[-1]
    return h @ W + b, inputs


def mlp_backward(layers, inputs, grad_out):
    """Gradients of every (W, b) given the gradient of the linear output."""
    grads = [None] * len(layers)
    delta = grad_out
    for n in range(len(layers) - 1, -1, -1):
        W, _b = layers[n]
        grads[n] = (inputs[n].T @ delta, delta.sum(axis=0))
        if n:
            # inputs[n] is the tanh output of the layer below
            delta = (delta @ W.T) * (1.0 - inputs[n] ** 2)
    return grads


def log_softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _as_states(state):
    x = np.asarray(state, dtype=float)
    if not np.all(np.isfinite(x)):
        raise PolicyError("Policy input must be finite, got %r" % (state,))
    return np.atleast_2d(x)


def policy_forward(params, state):
    """Action probabilities for one state (or a batch of states)."""
    x = _as_states(state)
    logits, _inputs = mlp_forward(params.actor, x)
    probs = np.exp(log_softmax(logits))
    return probs[0] if np.ndim(state) == 1 else probs


def value_forward(params, state):
    """Critic estimate for one state (or a batch of states)."""
    x = _as_states(state)
    values, _inputs = mlp_forward(params.critic, x)
    return float(values[0, 0]) if np.ndim(state) == 1 else values[:, 0]


def save_params(params, path):
    """Write `params` in the versioned little-endian format."""
    layers = params.layers()
    chunks = [_HEADER.pack(MAGIC, VERSION, params.n_actions, params.hidden, len(layers))]
    chunks += [_SHAPE.pack(*W.shape) for W, _b in layers]
    for W, b in layers:
        chunks.append(np.ascontiguousarray(W, dtype="<f8").tobytes())
        chunks.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    with open(path, "wb") as f:
        f.write(b"".join(chunks))


def _take(data, offset, size, what):
    if offset + size > len(data):
        raise PolicyFileError("Parameter file is truncated while reading %s" % what)
    return data[offset:offset + size], offset + size


def load_params(path, expected_actions=None):
    """Read parameters written by save_params().

    :param expected_actions: size of the action space the caller needs
    :type expected_actions: int

    :raises ShapeMismatchError: when the file holds a different action space
    :raises PolicyFileError: when the file is corrupt
    """
    with open(path, "rb") as f:
        data = f.read()

    chunk, offset = _take(data, 0, _HEADER.size, "the header")
    magic, version, n_actions, _hidden, n_layers = _HEADER.unpack(chunk)
    if magic != MAGIC:
        raise PolicyFileError("%s is not a policy parameter file" % path)
    if version != VERSION:
        raise PolicyFileError("Unsupported policy file version %d" % version)
    if expected_actions is not None and n_actions != expected_actions:
        raise ShapeMismatchError("%s holds a policy over %d actions, expected %d"
                                 % (path, n_actions, expected_actions))
    if n_layers == 0 or n_layers % 2:
        raise PolicyFileError("Invalid layer count %d in %s" % (n_layers, path))

    shapes = []
    for _i in range(n_layers):
        chunk, offset = _take(data, offset, _SHAPE.size, "the layer shapes")
        shapes.append(_SHAPE.unpack(chunk))
    for half in (shapes[:n_layers // 2], shapes[n_layers // 2:]):
        for (_rows, cols), (rows, _cols) in zip(half, half[1:]):
            if cols != rows:
                raise ShapeMismatchError("%s chains a layer with %d outputs into one with %d inputs"
                                         % (path, cols, rows))
    if shapes and shapes[0][0] != shapes[n_layers // 2][0]:
        raise ShapeMismatchError("Actor and critic of %s read states of different sizes" % path)

    layers = []
    for rows, cols in shapes:
        chunk, offset = _take(data, offset, 8 * rows * cols, "weights")
        W = np.frombuffer(chunk, dtype="<f8").reshape(rows, cols).astype(float)
        chunk, offset = _take(data, offset, 8 * cols, "biases")
        layers.append((W, np.frombuffer(chunk, dtype="<f8").astype(float)))
    if offset != len(data):
        raise PolicyFileError("Trailing bytes after the parameters in %s" % path)

    params = PolicyParams(layers[:n_layers // 2], layers[n_layers // 2:])
    if params.n_actions != n_actions:
        raise PolicyFileError("Header announces %d actions but the actor has %d"
                              % (n_actions, params.n_actions))
    return params
