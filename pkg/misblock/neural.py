# -*- coding: utf-8 -*-

# * Copyright (c) 2024. Authors: see NOTICE file.
# *
# * Licensed under the Apache License, Version 2.0 (the "License");
# * you may not use this file except in compliance with the License.
# * You may obtain a copy of the License at
# *
# *      http://www.apache.org/licenses/LICENSE-2.0
# *
# * Unless required by applicable law or agreed to in writing, software
# * distributed under the License is distributed on an "AS IS" BASIS,
# * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# * See the License for the specific language governing permissions and
# * limitations under the License.

"""Graph-convolutional model with a hand-written backward pass.

Forward pass, for L graph-convolution layers:

    H(0) = F
    H(l+1) = relu(A_hat H(l) W(l))

followed by either a per-node classifier head, sigmoid(H(L) W_out), or a
graph value head, mean_nodes(H(L) W_out).
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from json.decoder import JSONDecodeError
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from misblock.errors import ConfigurationError, ContractViolation, ModelLoadError
from misblock.models._utilities.seeding import make_rng
from misblock.models.network import Network

if TYPE_CHECKING:
    from misblock.training import Transition

logger = logging.getLogger("misblock.neural")

INPUT_SIZE = 3
HIDDEN_SIZE = 128
NUM_LAYERS = 3
BCE_CLAMP = 1e-7
CHECKPOINT_FORMAT = "misblock-gcn"

Output = Union[np.ndarray, float]


class Head(Enum):
    CLASSIFIER = "classifier"
    VALUE = "value"


class GcnModel:
    def __init__(
        self,
        layer_weights: Sequence[np.ndarray],
        head_weight: np.ndarray,
        head: Union[Head, str],
    ) -> None:
        """
        Parameters
        ----------
        layer_weights: list
            Weight matrices W(0) (input x hidden) ... W(L-1) (hidden x hidden).
        head_weight: ndarray
            Output weights (hidden x 1).
        head: Head|str
            Classifier (per-node probabilities) or value (one scalar per graph).
        """
        if len(layer_weights) == 0:
            raise ConfigurationError("A GCN needs at least one layer.")
        weights = [np.array(w, dtype=np.float64) for w in layer_weights]
        head_weight = np.array(head_weight, dtype=np.float64)

        for i, w in enumerate(weights):
            if w.ndim != 2:
                raise ConfigurationError(f"Layer {i} weights must be a matrix.")
            if i > 0 and w.shape[0] != weights[i - 1].shape[1]:
                raise ConfigurationError(
                    f"Layer {i} expects {w.shape[0]} inputs, "
                    f"layer {i - 1} produces {weights[i - 1].shape[1]}."
                )
        if head_weight.shape != (weights[-1].shape[1], 1):
            raise ConfigurationError(
                f"Head weights must have shape ({weights[-1].shape[1]}, 1), "
                f"got {head_weight.shape}."
            )
        if not all(np.all(np.isfinite(p)) for p in weights + [head_weight]):
            raise ConfigurationError("Model weights must be finite.")

        self._layer_weights = weights
        self._head_weight = head_weight
        self._head = Head(head)
        self._version = 0

    @classmethod
    def initialize(
        cls,
        head: Union[Head, str],
        input_size: int = INPUT_SIZE,
        hidden_size: int = HIDDEN_SIZE,
        num_layers: int = NUM_LAYERS,
        seed: int = 0,
    ) -> "GcnModel":
        """Glorot-uniform weights drawn from a seeded stream."""
        rng = make_rng(seed, "weights")
        sizes = [input_size] + [hidden_size] * num_layers + [1]
        params = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        return cls(params[:-1], params[-1], head)

    @classmethod
    def zeros(
        cls,
        head: Union[Head, str],
        input_size: int = INPUT_SIZE,
        hidden_size: int = HIDDEN_SIZE,
        num_layers: int = NUM_LAYERS,
    ) -> "GcnModel":
        sizes = [input_size] + [hidden_size] * num_layers
        layers = [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
        return cls(layers, np.zeros((hidden_size, 1)), head)

    @property
    def head(self) -> Head:
        return self._head

    @property
    def input_size(self) -> int:
        return self._layer_weights[0].shape[0]

    @property
    def hidden_size(self) -> int:
        return self._layer_weights[-1].shape[1]

    @property
    def num_layers(self) -> int:
        return len(self._layer_weights)

    @property
    def layer_weights(self) -> List[np.ndarray]:
        return self._layer_weights

    @property
    def head_weight(self) -> np.ndarray:
        return self._head_weight

    @property
    def version(self) -> int:
        """Incremented on every parameter update; forward caches of older
        versions are stale."""
        return self._version

    def parameters(self) -> List[np.ndarray]:
        return self._layer_weights + [self._head_weight]

    def set_parameters(self, params: Sequence[np.ndarray]) -> None:
        current = self.parameters()
        if len(params) != len(current) or any(
            np.shape(p) != c.shape for p, c in zip(params, current)
        ):
            raise ConfigurationError("Parameter shapes do not match the model.")
        self._layer_weights = [np.array(p, dtype=np.float64) for p in params[:-1]]
        self._head_weight = np.array(params[-1], dtype=np.float64)
        self._version += 1

    def copy(self) -> "GcnModel":
        return GcnModel(self._layer_weights, self._head_weight, self._head)

    def checksum(self) -> str:
        digest = hashlib.sha256()
        for p in self.parameters():
            digest.update(np.ascontiguousarray(p).tobytes())
        return digest.hexdigest()

    def require(self, head: Head, input_size: int = INPUT_SIZE) -> "GcnModel":
        if self._head != head:
            raise ConfigurationError(
                f"Expected a {head.value} model, got a {self._head.value} model."
            )
        if self.input_size != input_size:
            raise ConfigurationError(
                f"Expected a model with input width {input_size}, got {self.input_size}."
            )
        return self

    def predict(self, features: np.ndarray, norm_adj: np.ndarray) -> Output:
        return gcn_forward(self, features, norm_adj)[0]

    def __str__(self) -> str:
        return (
            f"[gcn] {self._head.value} : {self.input_size} -> "
            f"{self.num_layers} x {self.hidden_size} -> 1"
        )


@dataclass
class ForwardCache:
    model_id: int
    version: int
    norm_adj: np.ndarray
    aggregated: List[np.ndarray] = field(default_factory=list)
    pre_activations: List[np.ndarray] = field(default_factory=list)
    hidden: Optional[np.ndarray] = None
    output: Optional[Output] = None


def normalize_adjacency(network: Network) -> np.ndarray:
    """Symmetric normalization D^-1/2 (A + I) D^-1/2 of the 0/1 adjacency.
    The matrix is cached on the network and read-only."""
    return network.normalized_adjacency


def gcn_forward(
    model: GcnModel,
    features: np.ndarray,
    norm_adj: np.ndarray,
) -> Tuple[Output, ForwardCache]:
    """Run the model on one graph.

    Returns
    -------
    forward: tuple
        The outputs (per-node probabilities of shape (N,) for a classifier,
        a float for a value model) and the cache needed by `gcn_backward`.
    """
    n = norm_adj.shape[0]
    if norm_adj.shape != (n, n):
        raise ConfigurationError(f"Adjacency must be square, got {norm_adj.shape}.")
    if features.shape != (n, model.input_size):
        raise ConfigurationError(
            f"Features must have shape ({n}, {model.input_size}), got {features.shape}."
        )

    cache = ForwardCache(id(model), model.version, norm_adj)
    h = features
    for w in model.layer_weights:
        aggregated = norm_adj @ h
        z = aggregated @ w
        cache.aggregated.append(aggregated)
        cache.pre_activations.append(z)
        h = np.maximum(z, 0.0)
    cache.hidden = h

    output: Output
    if model.head == Head.CLASSIFIER:
        output = expit((h @ model.head_weight)[:, 0])
    else:
        output = float(h.mean(axis=0) @ model.head_weight[:, 0])
    cache.output = output
    return output, cache


def gcn_backward(
    model: GcnModel,
    cache: ForwardCache,
    output_grad: Output,
) -> List[np.ndarray]:
    """Gradients of a scalar loss with respect to every model parameter,
    given its gradient with respect to the outputs of the forward pass.

    The relu subgradient at 0 is 0.

    Raises
    ------
    ContractViolation:
        When the cache does not come from the current parameters of `model`.
    """
    if cache.model_id != id(model) or cache.version != model.version:
        raise ContractViolation("Stale forward cache: the model changed since the forward pass.")

    h = cache.hidden
    n = h.shape[0]
    if model.head == Head.CLASSIFIER:
        output = cache.output
        grad_logits = np.asarray(output_grad, dtype=np.float64) * output * (1.0 - output)
        grad_head = h.T @ grad_logits[:, None]
        grad_h = grad_logits[:, None] @ model.head_weight.T
    else:
        grad = float(output_grad)
        grad_head = grad * h.mean(axis=0)[:, None]
        grad_h = np.full((n, 1), grad / n) @ model.head_weight.T

    grad_layers: List[np.ndarray] = [np.empty(0)] * model.num_layers
    for layer in reversed(range(model.num_layers)):
        grad_z = grad_h * (cache.pre_activations[layer] > 0)
        grad_layers[layer] = cache.aggregated[layer].T @ grad_z
        grad_h = cache.norm_adj.T @ (grad_z @ model.layer_weights[layer].T)

    return grad_layers + [grad_head]


def bce_loss(outputs: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean binary cross-entropy and its gradient with respect to the outputs.

    Outputs are clamped into [1e-7, 1 - 1e-7] before taking logs.
    """
    o = np.asarray(outputs, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if o.shape != t.shape:
        raise ConfigurationError(f"Outputs {o.shape} and target {t.shape} differ in length.")

    clamped = np.clip(o, BCE_CLAMP, 1.0 - BCE_CLAMP)
    loss = -float(np.mean(t * np.log(clamped) + (1.0 - t) * np.log(1.0 - clamped)))
    grad = (-t / clamped + (1.0 - t) / (1.0 - clamped)) / o.size
    return loss, grad


def td_loss(
    batch: Sequence["Transition"],
    model: GcnModel,
    target_model: GcnModel,
) -> Tuple[float, List[np.ndarray]]:
    """Mean squared temporal-difference error of a value model.

    Targets are r for terminal transitions and r + V_target(s') otherwise
    (no discount). Gradients flow through `model` only.
    """
    if len(batch) == 0:
        raise ConfigurationError("Cannot compute a TD loss on an empty batch.")

    grads = [np.zeros_like(p) for p in model.parameters()]
    total = 0.0
    for transition in batch:
        value, cache = gcn_forward(model, transition.features, transition.adjacency)
        target = transition.reward
        if not transition.terminal:
            target += gcn_forward(target_model, transition.next_features, transition.adjacency)[0]
        error = target - value
        total += error * error
        for acc, grad in zip(grads, gcn_backward(model, cache, -2.0 * error / len(batch))):
            acc += grad
    return total / len(batch), grads


@dataclass
class AdamState:
    m: List[np.ndarray]
    v: List[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_parameters(cls, params: Sequence[np.ndarray], **hyperparameters: Any) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            **hyperparameters,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "m": [x.tolist() for x in self.m],
            "v": [x.tolist() for x in self.v],
        }


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
) -> List[np.ndarray]:
    """One bias-corrected Adam update. Moments in `state` are updated in place,
    the new parameters are returned."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ConfigurationError("Parameters, gradients and moments differ in count.")
    for p, g, m in zip(params, grads, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise ConfigurationError(
                f"Shape mismatch between parameter {p.shape}, "
                f"gradient {g.shape} and moment {m.shape}."
            )

    state.t += 1
    correction1 = 1.0 - state.beta1**state.t
    correction2 = 1.0 - state.beta2**state.t
    updated = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g
        m_hat = state.m[i] / correction1
        v_hat = state.v[i] / correction2
        updated.append(p - lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return updated


def model_to_dict(model: GcnModel, adam_state: Optional[AdamState] = None) -> Dict[str, Any]:
    attributes: Dict[str, Any] = {
        "format": CHECKPOINT_FORMAT,
        "head": model.head.value,
        "dims": {
            "input_size": model.input_size,
            "hidden_size": model.hidden_size,
            "num_layers": model.num_layers,
        },
        "weights": [w.tolist() for w in model.layer_weights],
        "head_weight": model.head_weight.tolist(),
        "checksum": model.checksum(),
    }
    if adam_state is not None:
        attributes["adam"] = adam_state.to_dict()
    return attributes


def save_model(path: str, model: GcnModel, adam_state: Optional[AdamState] = None) -> None:
    with open(path, "w", encoding="utf8") as fh:
        json.dump(model_to_dict(model, adam_state), fh)
    logger.debug("Saved %s to %s", model, path)


def _read_checkpoint(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf8") as fh:
            attributes = json.load(fh)
    except OSError as e:
        raise ModelLoadError(f"Cannot read checkpoint {path}: {e.strerror}") from e
    except JSONDecodeError as e:
        raise ModelLoadError(f"Checkpoint {path} is not valid JSON ({e.msg}).") from e
    if not isinstance(attributes, dict) or attributes.get("format") != CHECKPOINT_FORMAT:
        raise ModelLoadError(f"{path} is not a {CHECKPOINT_FORMAT} checkpoint.")
    return attributes


def load_model(path: str, head: Optional[Union[Head, str]] = None) -> GcnModel:
    """Load a checkpoint written by `save_model`.

    Raises
    ------
    ModelLoadError:
        When the file is unreadable, the weights do not match the declared
        dimensions or the stored checksum, or the head differs from `head`.
    """
    attributes = _read_checkpoint(path)
    try:
        kind = Head(attributes["head"])
        dims = attributes["dims"]
        if not isinstance(dims, dict):
            raise TypeError("'dims' is not an object")
        input_size, hidden_size, num_layers = (
            int(dims[key]) for key in ("input_size", "hidden_size", "num_layers")
        )
        layers = [np.array(w, dtype=np.float64) for w in attributes["weights"]]
        head_weight = np.array(attributes["head_weight"], dtype=np.float64)
        checksum = str(attributes["checksum"])
    except (KeyError, TypeError, ValueError) as e:
        raise ModelLoadError(f"Malformed checkpoint {path}: {e!r}") from e

    if head is not None and Head(head) != kind:
        raise ModelLoadError(
            f"Head mismatch: {path} holds a {kind.value} model, "
            f"a {Head(head).value} model was expected."
        )

    expected = [input_size] + [hidden_size] * num_layers
    shapes = [w.shape for w in layers]
    if shapes != list(zip(expected[:-1], expected[1:])) or head_weight.shape != (hidden_size, 1):
        raise ModelLoadError(
            f"Weights of {path} do not match the declared dimensions {dims}."
        )

    try:
        model = GcnModel(layers, head_weight, kind)
    except ConfigurationError as e:
        raise ModelLoadError(f"Invalid checkpoint {path}: {e}") from e
    if model.checksum() != checksum:
        raise ModelLoadError(f"Checksum mismatch: the weights of {path} were altered.")
    return model


def load_adam_state(path: str) -> Optional[AdamState]:
    attributes = _read_checkpoint(path).get("adam")
    if attributes is None:
        return None
    try:
        return AdamState(
            m=[np.array(x, dtype=np.float64) for x in attributes["m"]],
            v=[np.array(x, dtype=np.float64) for x in attributes["v"]],
            t=int(attributes["t"]),
            beta1=float(attributes["beta1"]),
            beta2=float(attributes["beta2"]),
            eps=float(attributes["eps"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelLoadError(f"Malformed optimizer state in {path}: {e!r}") from e
