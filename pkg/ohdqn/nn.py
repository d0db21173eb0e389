#
# This file is part of ohdqn, a DQN with option heads for the game of Catch.
# Copyright (C) 2026 ohdqn developers.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program. If not, see <https://www.gnu.org/licenses/gpl-3.0.html>.
#

"""Minimal differentiable compute for the DQN family used by ohdqn.

This module implements, with NumPy and in 64-bit floating point, the
forward and backward passes of a small convolutional Q-network made of a
shared trunk and one or more fully connected heads:

    ======  ==================================================================
    Layer   Specification
    ======  ==================================================================
    1       32 5x5 convolution, 2x2 stride, 1x1 zero-padding, ReLU
    2       32 5x5 convolution, 2x2 stride, ReLU
    3       ``hidden_units`` fully connected, ReLU (one per head)
    4       ``n_outputs`` fully connected (one per head)
    ======  ==================================================================

Errors are propagated through exactly one head at a time, the remaining
heads receive zero gradients and are left untouched by :func:`adam_step`.


As an example, a standard network with 32 hidden units maps a batch of
stacked frames to one Q-value tensor per head:

    .. doctest::

        >>> import numpy as np
        >>> from ohdqn.nn import Architecture, forward, init_network
        >>> params = init_network(Architecture(hidden_units=32), seed=7)
        >>> params['head0/hidden/weight'].shape
        (512, 32)
        >>> outputs, cache = forward(params, np.zeros((2, 4, 24, 24)))
        >>> [q.shape for q in outputs]
        [(2, 3)]
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

logger = logging.getLogger(__name__)

#: int: Spatial size of every convolution kernel.
KERNEL_SIZE = 5

#: int: Stride of every convolution.
STRIDE = 2


class ShapeError(ValueError):
    """Raised when a tensor does not have the shape a layer expects."""


class StaleCacheError(RuntimeError):
    """Raised when a forward cache does not belong to the given parameters."""


@dataclass(frozen=True)
class LayerSpec:
    """Describe one layer of the network.

    Attributes:
        kind (str): ``conv`` or ``fc``.
        units (int): Output channels (``conv``) or output units (``fc``).
        kernel (int): Kernel extent, both spatial dimensions.
        stride (int): Stride, both spatial dimensions.
        padding (int): Zero-padding added to each border.
        activation (str): ``relu`` or ``none``.
    """

    kind: str
    units: int
    kernel: int = KERNEL_SIZE
    stride: int = STRIDE
    padding: int = 0
    activation: str = 'relu'

    def output_size(self, size):
        """Return the spatial output extent of a convolution for an input extent."""
        return (size + 2 * self.padding - self.kernel) // self.stride + 1


@dataclass(frozen=True)
class Architecture:
    """Topology of a network: a two-layer convolutional trunk and identical heads.

    Attributes:
        in_channels (int): Number of stacked input frames.
        frame_size (int): Height and width of a frame.
        conv_channels (int): Filters of both convolutions.
        hidden_units (int): Units of the hidden layer of each head.
        head_count (int): Number of heads sharing the trunk.
        n_outputs (int): Units of the output layer of each head.
    """

    in_channels: int = 4
    frame_size: int = 24
    conv_channels: int = 32
    hidden_units: int = 32
    head_count: int = 1
    n_outputs: int = 3

    @property
    def layers(self):
        """Return the :class:`LayerSpec` of the trunk and of a single head."""
        return (
            LayerSpec('conv', self.conv_channels, padding=1),
            LayerSpec('conv', self.conv_channels),
            LayerSpec('fc', self.hidden_units),
            LayerSpec('fc', self.n_outputs, activation='none'),
        )

    @property
    def conv_sizes(self):
        """Return the spatial extents after the first and second convolutions."""
        conv1, conv2 = self.layers[:2]
        size1 = conv1.output_size(self.frame_size)
        size2 = conv2.output_size(size1)
        return size1, size2

    @property
    def flat_size(self):
        """Return the number of trunk features fed to each head."""
        return self.conv_channels * self.conv_sizes[1] ** 2

    @property
    def input_shape(self):
        """Return the shape of a single observation."""
        return self.in_channels, self.frame_size, self.frame_size

    def shapes(self):
        """Return an ordered mapping from tensor name to shape."""
        k = KERNEL_SIZE
        shapes = {
            'conv1/weight': (self.conv_channels, self.in_channels, k, k),
            'conv1/bias': (self.conv_channels,),
            'conv2/weight': (self.conv_channels, self.conv_channels, k, k),
            'conv2/bias': (self.conv_channels,),
        }
        for head in range(self.head_count):
            shapes[f'head{head}/hidden/weight'] = (self.flat_size, self.hidden_units)
            shapes[f'head{head}/hidden/bias'] = (self.hidden_units,)
            shapes[f'head{head}/output/weight'] = (self.hidden_units, self.n_outputs)
            shapes[f'head{head}/output/bias'] = (self.n_outputs,)
        return shapes

    def validate(self):
        """Check that the topology can be built.

        Raises:
            ValueError: If a head count, width or size is not positive, or the
                convolutions collapse the frame.
        """
        if self.head_count < 1:
            raise ValueError(f'head_count must be >= 1, got {self.head_count}.')
        for name in ('in_channels', 'frame_size', 'conv_channels', 'hidden_units', 'n_outputs'):
            if getattr(self, name) < 1:
                raise ValueError(f'{name} must be >= 1, got {getattr(self, name)}.')
        if self.conv_sizes[1] < 1:
            raise ValueError(f'frame_size {self.frame_size} is too small for the trunk.')


@dataclass(frozen=True)
class OptimConfig:
    """Adam and gradient clipping settings.

    Attributes:
        learning_rate (float): Adam step size.
        beta1 (float): Decay of the first moment estimate.
        beta2 (float): Decay of the second moment estimate.
        epsilon (float): Stability constant added to the denominator.
        max_grad_norm (float): Bound on the global L2 norm of the gradients.
    """

    learning_rate: float = 2.5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    max_grad_norm: float = 10.0


def head_prefix(head):
    """Return the tensor name prefix of a head."""
    return f'head{head}/'


def _is_trunk(name):
    return name.startswith('conv')


class NetworkParams:
    """Parameter tensors of a network together with their Adam state.

    Two instances with the same architecture play the roles of the online
    parameters and of the delayed target parameters.
    """

    def __init__(self, tensors, architecture=None):
        """Create a parameter set.

        Args:
            tensors (dict): Mapping from tensor name to ``float64`` array.
            architecture (Architecture, optional): The topology the tensors
                follow. May be omitted for free-form parameter sets.
        """
        #: Architecture: The topology, if any.
        self.architecture = architecture

        #: dict: Parameter tensors, keyed by name.
        self.tensors = {name: np.array(value, dtype=np.float64) for name, value in tensors.items()}

        #: dict: Adam first moment estimates.
        self.first_moment = {name: np.zeros_like(t) for name, t in self.tensors.items()}

        #: dict: Adam second moment estimates.
        self.second_moment = {name: np.zeros_like(t) for name, t in self.tensors.items()}

        #: dict: Adam step count of each tensor.
        self.step_count = {name: 0 for name in self.tensors}

        #: int: Bumped whenever the tensors change, used to detect stale caches.
        self.version = 0

    @property
    def head_count(self):
        """Return the number of heads."""
        if self.architecture is None:
            return 0
        return self.architecture.head_count

    @property
    def names(self):
        """Return the tensor names in their canonical order."""
        return list(self.tensors)

    def head_names(self, head):
        """Return the tensor names of a head."""
        prefix = head_prefix(head)
        return [name for name in self.tensors if name.startswith(prefix)]

    def trunk_names(self):
        """Return the tensor names of the shared convolutional trunk."""
        return [name for name in self.tensors if _is_trunk(name)]

    def parameter_count(self, names=None):
        """Return the number of scalar parameters in the given tensors (all by default)."""
        names = self.names if names is None else names
        return int(sum(self.tensors[name].size for name in names))

    def copy(self):
        """Return a deep copy, Adam state included."""
        other = NetworkParams(self.tensors, self.architecture)
        other.first_moment = {k: v.copy() for k, v in self.first_moment.items()}
        other.second_moment = {k: v.copy() for k, v in self.second_moment.items()}
        other.step_count = dict(self.step_count)
        return other

    def is_finite(self):
        """Return True if every parameter tensor is finite."""
        return all(np.all(np.isfinite(t)) for t in self.tensors.values())

    def __getitem__(self, name):
        """Return the tensor with the given name."""
        return self.tensors[name]

    def __iter__(self):
        """Iterate over tensor names."""
        return iter(self.tensors)

    def __len__(self):
        """Return the number of tensors."""
        return len(self.tensors)

    def __repr__(self):
        """Return the parameter set representation."""
        return f'NetworkParams(architecture={self.architecture!r}, ' \
               f'parameters={self.parameter_count()})'


class Gradients(dict):
    """Gradient tensors keyed by parameter name.

    The ``active`` set names the tensors an update is allowed to touch;
    tensors outside of it carry exact zeros.
    """

    def __init__(self, tensors, active=None):
        """Create a gradient set.

        Args:
            tensors (dict): Mapping from tensor name to array.
            active (iterable, optional): Names of the tensors that received
                a gradient. Defaults to every tensor.
        """
        super(Gradients, self).__init__(tensors)

        #: frozenset: Names of the tensors that take part in the update.
        self.active = frozenset(self) if active is None else frozenset(active)

    def global_norm(self):
        """Return the L2 norm over all gradient tensors."""
        return float(np.sqrt(sum(float(np.sum(g * g)) for g in self.values())))

    def scaled(self, factor):
        """Return a copy with every tensor multiplied by ``factor``."""
        return Gradients({name: g * factor for name, g in self.items()}, self.active)


@dataclass
class ForwardCache:
    """Activations recorded by :func:`forward` and consumed by :func:`backward`."""

    params_id: int
    version: int
    batch: np.ndarray
    cols1: np.ndarray
    conv1: np.ndarray
    cols2: np.ndarray
    conv2: np.ndarray
    flat: np.ndarray
    hidden: List[np.ndarray]


def init_network(variant, seed):
    """Create deterministic network parameters.

    Weights are drawn uniformly in ``[-b, b]`` with ``b = sqrt(1 / fan_in)``;
    biases start at zero.

    Args:
        variant: An :class:`ohdqn.agent.AgentVariant` (or anything exposing
            an ``architecture()`` method) or an :class:`Architecture`.
        seed (int): Any integer; the same seed yields bit-identical tensors.

    Returns:
        NetworkParams: The initialized parameters.

    Raises:
        ValueError: If the capacity is unsupported or the head count is < 1.
    """
    architecture = variant if isinstance(variant, Architecture) else variant.architecture()
    architecture.validate()

    rng = np.random.default_rng(int(seed) % 2 ** 64)

    tensors = {}
    for name, shape in architecture.shapes().items():
        if name.endswith('/bias'):
            tensors[name] = np.zeros(shape)
            continue
        fan_in = int(np.prod(shape[1:])) if len(shape) == 4 else shape[0]
        bound = np.sqrt(1.0 / fan_in)
        tensors[name] = rng.uniform(-bound, bound, size=shape)

    return NetworkParams(tensors, architecture)


def _im2col(x, kernel, stride, padding):
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(x, (kernel, kernel), axis=(2, 3))[:, :, ::stride, ::stride]
    b, c, ho, wo = windows.shape[:4]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(b * ho * wo, c * kernel * kernel)
    return cols, ho, wo


def _col2im(dcols, x_shape, kernel, stride, padding, ho, wo):
    b, c, h, w = x_shape
    dcols = dcols.reshape(b, ho, wo, c, kernel, kernel)
    dx = np.zeros((b, c, h + 2 * padding, w + 2 * padding))
    for i in range(kernel):
        for j in range(kernel):
            dx[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += \
                dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    if padding:
        dx = dx[:, :, padding:-padding, padding:-padding]
    return dx


def _conv_forward(x, weight, bias, spec):
    cols, ho, wo = _im2col(x, spec.kernel, spec.stride, spec.padding)
    out = cols @ weight.reshape(weight.shape[0], -1).T + bias
    out = out.reshape(x.shape[0], ho, wo, weight.shape[0]).transpose(0, 3, 1, 2)
    return out, cols


def _conv_backward(dout, cols, weight):
    filters = weight.shape[0]
    dout = dout.transpose(0, 2, 3, 1).reshape(-1, filters)
    dweight = (dout.T @ cols).reshape(weight.shape)
    dbias = dout.sum(axis=0)
    dcols = dout @ weight.reshape(filters, -1)
    return dweight, dbias, dcols


def _relu(x):
    return np.maximum(x, 0.0)


def forward(params, batch):
    """Compute the Q-values of every head for a batch of observations.

    Args:
        params (NetworkParams): The network parameters.
        batch (numpy.ndarray): Observations shaped ``B x C x H x W`` with
            values in ``[0, 1]``.

    Returns:
        tuple: A list with one ``B x n_outputs`` array per head, and the
        :class:`ForwardCache` needed by :func:`backward`.

    Raises:
        ShapeError: If the batch does not match the network input.
    """
    architecture = params.architecture
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 4 or batch.shape[1:] != architecture.input_shape:
        raise ShapeError(f'expected a batch of shape (B, {", ".join(map(str, architecture.input_shape))}), '
                         f'got {batch.shape}.')

    conv1_spec, conv2_spec = architecture.layers[:2]

    conv1, cols1 = _conv_forward(batch, params['conv1/weight'], params['conv1/bias'], conv1_spec)
    conv1 = _relu(conv1)

    conv2, cols2 = _conv_forward(conv1, params['conv2/weight'], params['conv2/bias'], conv2_spec)
    conv2 = _relu(conv2)

    flat = conv2.reshape(batch.shape[0], -1)

    outputs, hidden = [], []
    for head in range(architecture.head_count):
        prefix = head_prefix(head)
        h = _relu(flat @ params[prefix + 'hidden/weight'] + params[prefix + 'hidden/bias'])
        outputs.append(h @ params[prefix + 'output/weight'] + params[prefix + 'output/bias'])
        hidden.append(h)

    cache = ForwardCache(params_id=id(params), version=params.version, batch=batch,
                         cols1=cols1, conv1=conv1, cols2=cols2, conv2=conv2,
                         flat=flat, hidden=hidden)

    return outputs, cache


def backward(params, cache, head, grad_output):
    """Backpropagate an output gradient through one head and the trunk.

    Args:
        params (NetworkParams): The parameters used by the forward pass.
        cache (ForwardCache): The cache returned by :func:`forward`.
        head (int): The head the gradient flows through.
        grad_output (numpy.ndarray): Gradient w.r.t. the head output, ``B x n_outputs``.

    Returns:
        Gradients: Gradients of every tensor; tensors of the other heads are zero.

    Raises:
        StaleCacheError: If the cache was produced by other parameters or
            before the parameters changed.
        ShapeError: If ``grad_output`` does not match the head output.
        ValueError: If ``head`` is out of range.
    """
    if cache.params_id != id(params) or cache.version != params.version:
        raise StaleCacheError('forward cache does not match the current parameters.')
    if not 0 <= head < params.head_count:
        raise ValueError(f'head {head} out of range for {params.head_count} head(s).')

    architecture = params.architecture
    grad_output = np.asarray(grad_output, dtype=np.float64)
    expected = (cache.batch.shape[0], architecture.n_outputs)
    if grad_output.shape != expected:
        raise ShapeError(f'expected an output gradient of shape {expected}, got {grad_output.shape}.')

    grads = {name: np.zeros_like(t) for name, t in params.tensors.items()}
    prefix = head_prefix(head)

    hidden = cache.hidden[head]
    grads[prefix + 'output/weight'] = hidden.T @ grad_output
    grads[prefix + 'output/bias'] = grad_output.sum(axis=0)

    dhidden = (grad_output @ params[prefix + 'output/weight'].T) * (hidden > 0)
    grads[prefix + 'hidden/weight'] = cache.flat.T @ dhidden
    grads[prefix + 'hidden/bias'] = dhidden.sum(axis=0)

    dconv2 = (dhidden @ params[prefix + 'hidden/weight'].T).reshape(cache.conv2.shape)
    dconv2 = dconv2 * (cache.conv2 > 0)

    conv1_spec, conv2_spec = architecture.layers[:2]
    dweight, dbias, dcols = _conv_backward(dconv2, cache.cols2, params['conv2/weight'])
    grads['conv2/weight'], grads['conv2/bias'] = dweight, dbias

    dconv1 = _col2im(dcols, cache.conv1.shape, conv2_spec.kernel, conv2_spec.stride,
                     conv2_spec.padding, *cache.conv2.shape[2:])
    dconv1 = dconv1 * (cache.conv1 > 0)

    dweight, dbias, _ = _conv_backward(dconv1, cache.cols1, params['conv1/weight'])
    grads['conv1/weight'], grads['conv1/bias'] = dweight, dbias

    return Gradients(grads, active=params.trunk_names() + params.head_names(head))


def clip_global_norm(grads, max_norm):
    """Rescale gradients so that their global L2 norm does not exceed ``max_norm``.

    Args:
        grads (Gradients): The gradients.
        max_norm (float): The bound, must be positive.

    Returns:
        Gradients: ``grads`` itself when within the bound, a rescaled copy otherwise.
    """
    if max_norm <= 0:
        raise ValueError(f'max_norm must be positive, got {max_norm}.')

    norm = grads.global_norm()
    if norm <= max_norm:
        return grads

    logger.debug('clipping gradients: norm %.4g > %.4g', norm, max_norm)
    return grads.scaled(max_norm / norm)


def adam_step(params, grads, config):
    """Apply one Adam update with bias correction to the active tensors.

    Each tensor keeps its own step count, so heads updated on alternate
    steps get their own bias correction. Tensors outside ``grads.active``
    are left bit-unchanged, moments included.

    Args:
        params (NetworkParams): Parameters updated in place.
        grads (Gradients): Gradients matching ``params``.
        config (OptimConfig): Adam settings.

    Returns:
        NetworkParams: ``params``.

    Raises:
        ValueError: If a gradient is missing, mis-shaped or not finite.
    """
    active = getattr(grads, 'active', frozenset(grads))

    for name in params.names:
        if name not in active:
            continue
        if name not in grads:
            raise ValueError(f'missing gradient for tensor "{name}".')

        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != params[name].shape:
            raise ShapeError(f'gradient of "{name}" has shape {g.shape}, expected {params[name].shape}.')
        if not np.all(np.isfinite(g)):
            raise ValueError(f'non-finite gradient for tensor "{name}".')

        params.step_count[name] += 1
        t = params.step_count[name]

        m = params.first_moment[name]
        v = params.second_moment[name]
        m *= config.beta1
        m += (1.0 - config.beta1) * g
        v *= config.beta2
        v += (1.0 - config.beta2) * g * g

        m_hat = m / (1.0 - config.beta1 ** t)
        v_hat = v / (1.0 - config.beta2 ** t)

        params.tensors[name] -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)

    params.version += 1

    return params


def sync_target(online, target):
    """Copy the online parameters into the target parameters.

    The Adam state of both parameter sets is left untouched.

    Args:
        online (NetworkParams): Source parameters.
        target (NetworkParams): Destination parameters, updated in place.

    Returns:
        NetworkParams: ``target``.

    Raises:
        ValueError: If both parameter sets do not share the same topology.
    """
    if online.architecture != target.architecture or online.names != target.names:
        raise ValueError('cannot synchronize networks with different topologies.')

    for name in online.names:
        if online[name].shape != target[name].shape:
            raise ValueError(f'tensor "{name}" differs in shape between online and target.')
        np.copyto(target.tensors[name], online[name])

    target.version += 1

    return target


def softmax(logits):
    """Return the row-wise softmax of a ``B x K`` array."""
    shifted = logits - np.max(logits, axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def softmax_xent(logits, labels):
    """Mean softmax cross-entropy and its gradient w.r.t. the logits.

    Args:
        logits (numpy.ndarray): ``B x K`` scores.
        labels (sequence): ``B`` class indices in ``[0, K)``.

    Returns:
        tuple: The mean loss and the ``B x K`` gradient ``(softmax - onehot) / B``.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    b, k = logits.shape
    if labels.shape != (b,) or np.any(labels < 0) or np.any(labels >= k):
        raise ValueError(f'labels must be {b} indices in [0, {k}).')

    shifted = logits - np.max(logits, axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))

    rows = np.arange(b)
    loss = float(-log_probs[rows, labels].mean())

    grad = np.exp(log_probs)
    grad[rows, labels] -= 1.0
    grad /= b

    return loss, grad
