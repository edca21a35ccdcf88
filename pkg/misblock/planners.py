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

"""Blocker-selection strategies.

Every planner picks at most `budget` nodes out of the candidate set of the
current state. Score ties always go to the lower node id.
"""

import logging
from enum import Enum
from typing import FrozenSet, Optional, Sequence, Union

import numpy as np

from misblock.dynamics import DEFAULT_SELF_WEIGHT, apply_blocking, candidate_set
from misblock.errors import ConfigurationError
from misblock.features import NUM_FEATURES, effective_degree, feature_matrix
from misblock.neural import GcnModel, Head, load_model, normalize_adjacency
from misblock.oracle import label_blocker_set
from misblock.models.scenario import NetworkState, Propagation

logger = logging.getLogger("misblock.planners")


class PlannerKind(Enum):
    RANDOM = "random"
    MAX_DEGREE_STATIC = "maxdeg-static"
    MAX_DEGREE_DYNAMIC = "maxdeg-dyn"
    ORACLE_EXACT = "oracle"
    VALUE_GREEDY = "rl"
    TOPK_CLASSIFIER = "sl"

    @property
    def needs_model(self) -> bool:
        return self in (PlannerKind.VALUE_GREEDY, PlannerKind.TOPK_CLASSIFIER)


def top_scored(candidates: Sequence[int], scores: Sequence[float], budget: int) -> FrozenSet[int]:
    """The `budget` candidates with the highest scores, lower id first on ties."""
    ranked = sorted(zip(candidates, scores), key=lambda pair: (-pair[1], pair[0]))
    return frozenset(int(node) for node, _ in ranked[:budget])


def _check_budget(budget: int) -> None:
    if budget < 1:
        raise ConfigurationError(f"budget must be >= 1, got {budget}.")


def plan_random(state: NetworkState, budget: int, rng: np.random.Generator) -> FrozenSet[int]:
    _check_budget(budget)
    candidates = candidate_set(state)
    size = min(budget, len(candidates))
    if size == 0:
        return frozenset()
    return frozenset(int(i) for i in rng.choice(candidates, size=size, replace=False))


def plan_max_degree_static(
    state: NetworkState,
    budget: int,
    initial_degrees: Optional[np.ndarray] = None,
) -> FrozenSet[int]:
    """Highest full degree in the initial graph.

    Parameters
    ----------
    initial_degrees: ndarray|None
        Degree table captured at the start of the episode, defaults to the
        degrees of the state network.
    """
    _check_budget(budget)
    if initial_degrees is None:
        initial_degrees = state.network.degrees
    candidates = candidate_set(state)
    return top_scored(candidates, [initial_degrees[i] for i in candidates], budget)


def plan_max_degree_dynamic(state: NetworkState, budget: int) -> FrozenSet[int]:
    """Highest number of susceptible neighbors in the current state."""
    _check_budget(budget)
    candidates = candidate_set(state)
    return top_scored(candidates, [effective_degree(state, i) for i in candidates], budget)


def plan_value_greedy(
    state: NetworkState,
    budget: int,
    value_model: GcnModel,
    source_trust: float = 1.0,
) -> FrozenSet[int]:
    """Score the state reached by blocking each candidate alone with the
    value head and keep the `budget` highest values.

    Rewards are penalties, a higher value means less predicted infection.
    """
    _check_budget(budget)
    value_model.require(Head.VALUE, NUM_FEATURES)
    candidates = candidate_set(state)
    if len(candidates) <= budget:
        return frozenset(candidates)

    norm_adj = normalize_adjacency(state.network)
    scores = [
        value_model.predict(feature_matrix(apply_blocking(state, [node], source_trust)), norm_adj)
        for node in candidates
    ]
    return top_scored(candidates, scores, budget)


def plan_topk_classifier(
    state: NetworkState,
    budget: int,
    classifier_model: GcnModel,
) -> FrozenSet[int]:
    """Top blocking probabilities of the classifier, restricted to the candidates."""
    _check_budget(budget)
    classifier_model.require(Head.CLASSIFIER, NUM_FEATURES)
    candidates = candidate_set(state)
    if not candidates:
        return frozenset()

    probabilities = classifier_model.predict(feature_matrix(state), normalize_adjacency(state.network))
    return top_scored(candidates, [probabilities[i] for i in candidates], budget)


class Planner:
    """Common interface: `begin_episode` is called once with the initial state,
    then `plan` once per timestep. Planners never mutate states or models."""

    kind: PlannerKind

    def begin_episode(self, state: NetworkState) -> None:
        pass

    def plan(self, state: NetworkState, budget: int, rng: np.random.Generator) -> FrozenSet[int]:
        raise NotImplementedError()

    def __str__(self) -> str:
        return self.kind.value


class RandomPlanner(Planner):
    kind = PlannerKind.RANDOM

    def plan(self, state: NetworkState, budget: int, rng: np.random.Generator) -> FrozenSet[int]:
        return plan_random(state, budget, rng)


class MaxDegreeStaticPlanner(Planner):
    kind = PlannerKind.MAX_DEGREE_STATIC

    def __init__(self) -> None:
        self._initial_degrees: Optional[np.ndarray] = None

    def begin_episode(self, state: NetworkState) -> None:
        self._initial_degrees = state.network.degrees.copy()

    def plan(self, state: NetworkState, budget: int, rng: np.random.Generator) -> FrozenSet[int]:
        return plan_max_degree_static(state, budget, self._initial_degrees)


class MaxDegreeDynamicPlanner(Planner):
    kind = PlannerKind.MAX_DEGREE_DYNAMIC

    def plan(self, state: NetworkState, budget: int, rng: np.random.Generator) -> FrozenSet[int]:
        return plan_max_degree_dynamic(state, budget)


class OracleExactPlanner(Planner):
    """Ranking algorithm restricted to the candidate set, sequential picks
    when the exact enumeration is too large."""

    kind = PlannerKind.ORACLE_EXACT

    def __init__(
        self,
        propagation: Union[Propagation, str] = Propagation.DISCRETE_SWITCH,
        horizon: Optional[int] = None,
        self_weight: float = DEFAULT_SELF_WEIGHT,
    ) -> None:
        self.propagation = Propagation(propagation)
        self.horizon = horizon
        self.self_weight = self_weight

    def plan(self, state: NetworkState, budget: int, rng: np.random.Generator) -> FrozenSet[int]:
        _check_budget(budget)
        candidates = candidate_set(state)
        if not candidates:
            return frozenset()
        result, _ = label_blocker_set(
            state,
            budget,
            self.propagation,
            self.horizon,
            restrict_to=candidates,
            self_weight=self.self_weight,
        )
        return result.best_set


class ValueGreedyPlanner(Planner):
    kind = PlannerKind.VALUE_GREEDY

    def __init__(self, model: GcnModel, source_trust: float = 1.0) -> None:
        self.model = model.require(Head.VALUE, NUM_FEATURES)
        self.source_trust = source_trust

    def plan(self, state: NetworkState, budget: int, rng: np.random.Generator) -> FrozenSet[int]:
        return plan_value_greedy(state, budget, self.model, self.source_trust)


class TopKClassifierPlanner(Planner):
    kind = PlannerKind.TOPK_CLASSIFIER

    def __init__(self, model: GcnModel) -> None:
        self.model = model.require(Head.CLASSIFIER, NUM_FEATURES)

    def plan(self, state: NetworkState, budget: int, rng: np.random.Generator) -> FrozenSet[int]:
        return plan_topk_classifier(state, budget, self.model)


def make_planner(
    kind: Union[PlannerKind, str],
    model: Optional[Union[GcnModel, str]] = None,
    propagation: Union[Propagation, str] = Propagation.DISCRETE_SWITCH,
    source_trust: float = 1.0,
    horizon: Optional[int] = None,
    self_weight: float = DEFAULT_SELF_WEIGHT,
) -> Planner:
    """Build a planner from its CLI name.

    Parameters
    ----------
    kind: PlannerKind|str
        One of random, maxdeg-static, maxdeg-dyn, oracle, rl, sl.
    model: GcnModel|str|None
        Model or checkpoint path, required by rl and sl.
    """
    kind = PlannerKind(kind)
    if kind.needs_model:
        if model is None:
            raise ConfigurationError(f"Planner '{kind.value}' needs a model checkpoint.")
        head = Head.VALUE if kind == PlannerKind.VALUE_GREEDY else Head.CLASSIFIER
        if isinstance(model, str):
            model = load_model(model, head=head)
        if kind == PlannerKind.VALUE_GREEDY:
            return ValueGreedyPlanner(model, source_trust)
        return TopKClassifierPlanner(model)

    if kind == PlannerKind.RANDOM:
        return RandomPlanner()
    if kind == PlannerKind.MAX_DEGREE_STATIC:
        return MaxDegreeStaticPlanner()
    if kind == PlannerKind.MAX_DEGREE_DYNAMIC:
        return MaxDegreeDynamicPlanner()
    return OracleExactPlanner(propagation, horizon, self_weight)
