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

"""One-timestep environment transition and full-episode rollout.

A timestep runs three phases in order: the trusted source influences the
new and pending blockers, misinformation propagates from the nodes that
were infected at the start of the step, then statuses and counters are
recomputed.
"""

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, FrozenSet, Iterable, List, Optional, Tuple, Union

import numpy as np

from misblock.errors import ConfigurationError, ContractViolation
from misblock.models._utilities.seeding import make_rng
from misblock.models.scenario import (
    BLOCKED_THRESHOLD,
    INFECTED_THRESHOLD,
    NetworkState,
    Propagation,
    Scenario,
    Status,
)

if TYPE_CHECKING:
    from misblock.planners import Planner

logger = logging.getLogger("misblock.dynamics")

DEFAULT_SELF_WEIGHT = 1.0


def default_max_steps(num_nodes: int) -> int:
    return 4 * num_nodes


@dataclass(frozen=True)
class StepConfig:
    propagation: Propagation = Propagation.LINEAR_ADJUST
    source_trust: float = 1.0
    # trust of a node in its own opinion, DeGroot only
    self_weight: float = DEFAULT_SELF_WEIGHT

    def __post_init__(self) -> None:
        if not 0.0 < self.source_trust <= 1.0:
            raise ConfigurationError(f"source_trust must lie in (0, 1], got {self.source_trust}.")
        if self.self_weight < 0:
            raise ConfigurationError(f"self_weight must be non-negative, got {self.self_weight}.")

    @classmethod
    def from_scenario(
        cls,
        scenario: Scenario,
        self_weight: float = DEFAULT_SELF_WEIGHT,
    ) -> "StepConfig":
        return cls(scenario.propagation, scenario.source_trust, self_weight)


@dataclass(frozen=True)
class StepOutcome:
    next_state: NetworkState
    newly_infected: FrozenSet[int]
    candidate_count_before: int
    candidate_count_after: int
    infection_rate_before: float
    infection_rate_after: float
    terminal: bool


@dataclass
class Trajectory:
    initial_infection_rate: float
    steps: List[Tuple[FrozenSet[int], StepOutcome]] = field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.steps)

    @property
    def final_infection_rate(self) -> float:
        if not self.steps:
            return self.initial_infection_rate
        return self.steps[-1][1].infection_rate_after

    @property
    def final_state(self) -> Optional[NetworkState]:
        if not self.steps:
            return None
        return self.steps[-1][1].next_state

    @property
    def terminal(self) -> bool:
        return bool(self.steps) and self.steps[-1][1].terminal


def node_status(state: NetworkState, node: int) -> Status:
    return state.status(node)


def candidate_set(state: NetworkState) -> List[int]:
    return state.candidates()


def infection_rate(state: NetworkState) -> float:
    return float(np.count_nonzero(state.infected_mask())) / state.num_nodes


def apply_blocking(
    state: NetworkState,
    blockers: Iterable[int],
    source_trust: float,
) -> NetworkState:
    """Designate new blockers and apply one step of trusted-source influence
    (opinion 1, trust `source_trust`) to every active blocker.

    Nodes crossing the blocked threshold leave the active set.

    Raises
    ------
    ContractViolation:
        When a blocker is not a candidate node.
    """
    blockers = frozenset(int(b) for b in blockers)
    outside = blockers.difference(candidate_set(state))
    if outside:
        raise ContractViolation(f"Blockers {sorted(outside)} are not candidate nodes.")

    active = sorted(state.active_blockers | blockers)
    if not active:
        return state

    opinions = state.opinions.copy()
    index = np.array(active)
    opinions[index] = np.clip(opinions[index] + source_trust * (1.0 - opinions[index]), -1.0, 1.0)
    pending = [node for node in active if opinions[node] <= BLOCKED_THRESHOLD]
    return state.replace(opinions=opinions, active_blockers=pending)


def _propagate_linear(state: NetworkState) -> np.ndarray:
    network = state.network
    opinions = state.opinions.copy()
    susceptible = state.susceptible_mask()
    updated = np.zeros(state.num_nodes, dtype=bool)

    # sources are the nodes infected at the start of the step
    for source in np.flatnonzero(state.infected_mask()):
        for node in network.neighbors(source):
            if not susceptible[node] or updated[node]:
                continue
            trust = network.trust_between(node, source)
            opinions[node] = min(
                1.0, max(-1.0, opinions[node] + trust * (opinions[source] - opinions[node]))
            )
            updated[node] = True
    return opinions


def _propagate_degroot(state: NetworkState, self_weight: float) -> np.ndarray:
    opinions = state.opinions
    weights = np.array(state.network.trust_matrix, dtype=np.float64)
    weights[:, state.blocked_mask()] = 0.0
    np.fill_diagonal(weights, self_weight)

    totals = weights.sum(axis=1)
    rows = state.susceptible_mask() & (totals > 0)

    updated = opinions.copy()
    updated[rows] = (weights[rows] @ opinions) / totals[rows]
    return np.clip(updated, -1.0, 1.0)


def propagate_step(
    state: NetworkState,
    propagation: Union[Propagation, str],
    self_weight: float = DEFAULT_SELF_WEIGHT,
) -> Tuple[NetworkState, FrozenSet[int]]:
    """Spread misinformation for one timestep.

    Switch/linear: every susceptible neighbor of an infected node receives at
    most one update x_i + mu_ik (x_k - x_i), infected nodes taken by ascending
    id. DeGroot: every susceptible node synchronously takes the row-normalized
    trust-weighted average of itself and its non-blocked neighbors.

    Returns
    -------
    next: tuple
        The new state (time unchanged) and the set of newly infected nodes.
    """
    propagation = Propagation(propagation)
    if propagation == Propagation.DEGROOT:
        opinions = _propagate_degroot(state, self_weight)
    else:
        opinions = _propagate_linear(state)

    infected_before = state.infected_mask()
    infected_after = opinions < INFECTED_THRESHOLD
    newly_infected = frozenset(int(i) for i in np.flatnonzero(infected_after & ~infected_before))
    pending = [node for node in state.active_blockers if not infected_after[node]]
    return state.replace(opinions=opinions, active_blockers=pending), newly_infected


def step(
    state: NetworkState,
    blockers: Iterable[int],
    config: StepConfig,
) -> StepOutcome:
    candidate_count_before = len(candidate_set(state))
    rate_before = infection_rate(state)

    blocked = apply_blocking(state, blockers, config.source_trust)
    propagated, newly_infected = propagate_step(blocked, config.propagation, config.self_weight)
    next_state = propagated.replace(time=state.time + 1)

    candidate_count_after = len(candidate_set(next_state))
    return StepOutcome(
        next_state=next_state,
        newly_infected=newly_infected,
        candidate_count_before=candidate_count_before,
        candidate_count_after=candidate_count_after,
        infection_rate_before=rate_before,
        infection_rate_after=infection_rate(next_state),
        terminal=candidate_count_after == 0,
    )


def run_episode(
    scenario: Scenario,
    planner: "Planner",
    budget: int,
    max_steps: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    self_weight: float = DEFAULT_SELF_WEIGHT,
) -> Trajectory:
    """Roll out an episode, asking the planner for at most `budget` blockers
    per step, until no candidate node remains or the state time reaches
    `max_steps`.

    Raises
    ------
    ContractViolation:
        When the planner returns too many nodes or nodes outside the
        candidate set.
    """
    if budget < 1:
        raise ConfigurationError(f"budget must be >= 1, got {budget}.")
    if max_steps is None:
        max_steps = default_max_steps(scenario.state.num_nodes)
    if max_steps < 1:
        raise ConfigurationError(f"max_steps must be >= 1, got {max_steps}.")
    if rng is None:
        rng = make_rng(scenario.seed, "episode")

    config = StepConfig.from_scenario(scenario, self_weight)
    state = scenario.state
    trajectory = Trajectory(initial_infection_rate=infection_rate(state))
    planner.begin_episode(state)

    while state.time < max_steps:
        candidates = candidate_set(state)
        if not candidates:
            break

        blockers = frozenset(int(b) for b in planner.plan(state, budget, rng))
        if len(blockers) > budget or not blockers.issubset(candidates):
            raise ContractViolation(
                f"Planner {planner} returned {sorted(blockers)} at t={state.time}, "
                f"expected at most {budget} of {candidates}."
            )

        outcome = step(state, blockers, config)
        trajectory.steps.append((blockers, outcome))
        logger.debug(
            "t=%d blockers=%s rate=%.4f candidates=%d",
            outcome.next_state.time,
            sorted(blockers),
            outcome.infection_rate_after,
            outcome.candidate_count_after,
        )
        state = outcome.next_state
        if outcome.terminal:
            break

    return trajectory
