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

"""Rewards, experience replay, and the two trainers: the supervised one fits
a classifier on ranking-algorithm labels, the reinforcement one fits a value
network on replayed transitions with a frozen target network."""

import json
import logging
import math
import os
import time
from collections import deque
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any, Deque, Dict, FrozenSet, Iterator, List, Optional, Sequence

import numpy as np
from tqdm import trange

from misblock.dynamics import (
    DEFAULT_SELF_WEIGHT,
    StepConfig,
    StepOutcome,
    candidate_set,
    default_max_steps,
    infection_rate,
    run_episode,
    step,
)
from misblock.errors import (
    ConfigurationError,
    ContractViolation,
    GenerationError,
    UnderfullBufferError,
)
from misblock.features import feature_matrix
from misblock.models._utilities.parallel import WorkerError, generic_parallel
from misblock.models._utilities.seeding import derive_seed, make_rng
from misblock.models.network import Topology
from misblock.models.scenario import Case, NetworkState, Propagation, Scenario, generate_scenario
from misblock.neural import (
    AdamState,
    GcnModel,
    Head,
    adam_step,
    bce_loss,
    gcn_backward,
    gcn_forward,
    normalize_adjacency,
    save_model,
    td_loss,
)
from misblock.oracle import label_blocker_set
from misblock.planners import ValueGreedyPlanner, plan_random, plan_value_greedy

logger = logging.getLogger("misblock.training")

REPLAY_CAPACITY = 50_000
SCENARIO_ATTEMPTS = 100


class RewardKind(Enum):
    R0 = "r0"  # change of the infection rate
    R1 = "r1"  # candidate count
    R2 = "r2"  # R1 + R0
    R3 = "r3"  # speed of resolution, terminal only
    R4 = "r4"  # infection rate
    R5 = "r5"  # candidate count plus a terminal time penalty


@dataclass(frozen=True)
class EpisodeContext:
    t: int
    max_steps: int
    terminal: bool


def reward(kind: RewardKind, outcome: StepOutcome, context: EpisodeContext) -> float:
    """Reward of one environment step. Every reward is a penalty except R3.

    Parameters
    ----------
    kind: RewardKind
    outcome: StepOutcome
        Outcome of the step being scored.
    context: EpisodeContext
        Time reached after the step, episode horizon and whether the step
        ended the episode.
    """
    kind = RewardKind(kind)
    r0 = -(outcome.infection_rate_after - outcome.infection_rate_before)
    r1 = -float(outcome.candidate_count_after)
    time_fraction = context.t / context.max_steps

    if kind == RewardKind.R0:
        return r0
    if kind == RewardKind.R1:
        return r1
    if kind == RewardKind.R2:
        return r1 + r0
    if kind == RewardKind.R3:
        return 1.0 - time_fraction if context.terminal else 0.0
    if kind == RewardKind.R4:
        return -outcome.infection_rate_after
    return r1 - time_fraction if context.terminal else r1


@dataclass(frozen=True, eq=False)
class Transition:
    features: np.ndarray
    adjacency: np.ndarray
    blockers: FrozenSet[int]
    reward: float
    next_features: np.ndarray
    terminal: bool


class ReplayBuffer:
    """Bounded experience replay memory, the oldest transitions are evicted first."""

    def __init__(self, capacity: int = REPLAY_CAPACITY, seed: int = 0) -> None:
        if capacity < 1:
            raise ConfigurationError(f"Replay capacity must be >= 1, got {capacity}.")
        self._memory: Deque[Transition] = deque(maxlen=capacity)
        self._rng = make_rng(seed, "replay")

    @property
    def capacity(self) -> int:
        return self._memory.maxlen or 0

    def push(self, transition: Transition) -> None:
        self._memory.append(transition)

    def sample(self, m: int) -> List[Transition]:
        """Uniform sample of `m` distinct transitions.

        Raises
        ------
        UnderfullBufferError:
            When the buffer holds fewer than `m` transitions.
        """
        if m > len(self._memory):
            raise UnderfullBufferError(len(self._memory), m)
        indices = self._rng.choice(len(self._memory), size=m, replace=False)
        return [self._memory[i] for i in indices]

    def __len__(self) -> int:
        return len(self._memory)

    def __iter__(self) -> Iterator[Transition]:
        return iter(self._memory)


def buffer_push(buffer: ReplayBuffer, transition: Transition) -> None:
    buffer.push(transition)


def buffer_sample(buffer: ReplayBuffer, m: int) -> List[Transition]:
    return buffer.sample(m)


@dataclass(frozen=True)
class EpsilonSchedule:
    start: float = 1.0
    end: float = 0.1


def epsilon_at(schedule: EpsilonSchedule, global_step: int, total_steps: int) -> float:
    """Linear interpolation from `schedule.start` at step 0 to `schedule.end`
    at `total_steps`, constant afterwards."""
    if total_steps <= 0 or global_step >= total_steps:
        return schedule.end
    return schedule.start + (schedule.end - schedule.start) * global_step / total_steps


@dataclass
class TrainConfig:
    """Parameters shared by both trainers.

    The supervised trainer reads `episodes` as its number of epochs and
    ignores the replay and exploration settings.
    """

    case: Case = Case.CASE1
    propagation: Propagation = Propagation.DISCRETE_SWITCH
    n_nodes: int = 10
    num_infected: int = 1
    budget: int = 1
    reward_kind: RewardKind = RewardKind.R1
    episodes: int = 300
    states_per_episode: int = 200
    batch_size: int = 100
    lr: float = 5e-4
    target_update_interval: int = 200
    epsilon_start: float = 1.0
    epsilon_end: float = 0.1
    # global timesteps to anneal over, default episodes * max(1, n_nodes // 2)
    epsilon_decay_steps: Optional[int] = None
    seed: int = 0
    max_steps: Optional[int] = None
    replay_capacity: int = REPLAY_CAPACITY
    validation_size: int = 50
    topology: Topology = Topology.WATTS_STROGATZ
    k: int = 3
    p: float = 0.4
    source_trust: float = 1.0
    self_weight: float = DEFAULT_SELF_WEIGHT
    hidden_size: int = 128
    num_layers: int = 3
    n_workers: int = 1

    def __post_init__(self) -> None:
        self.case = Case(self.case)
        self.propagation = Propagation(self.propagation)
        self.reward_kind = RewardKind(self.reward_kind)
        self.topology = Topology(self.topology)

    @classmethod
    def for_supervised(cls, **overrides: Any) -> "TrainConfig":
        """Defaults of the supervised trainer: 1000 epochs of 25-node graphs, lr 1e-3."""
        parameters: Dict[str, Any] = {"n_nodes": 25, "episodes": 1000, "lr": 1e-3}
        parameters.update(overrides)
        return cls(**parameters)

    def validate(self) -> "TrainConfig":
        counts = {
            "n_nodes": self.n_nodes,
            "num_infected": self.num_infected,
            "budget": self.budget,
            "episodes": self.episodes,
            "states_per_episode": self.states_per_episode,
            "batch_size": self.batch_size,
            "target_update_interval": self.target_update_interval,
            "replay_capacity": self.replay_capacity,
            "hidden_size": self.hidden_size,
            "num_layers": self.num_layers,
        }
        for name, value in counts.items():
            if value < 1:
                raise ConfigurationError(f"{name} must be positive, got {value}.")
        if self.num_infected >= self.n_nodes:
            raise ConfigurationError("num_infected must be smaller than n_nodes.")
        if self.lr <= 0:
            raise ConfigurationError(f"lr must be positive, got {self.lr}.")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            raise ConfigurationError("Epsilon must decrease within [0, 1].")
        if self.max_steps is not None and self.max_steps < 1:
            raise ConfigurationError(f"max_steps must be >= 1, got {self.max_steps}.")
        if self.validation_size < 0:
            raise ConfigurationError("validation_size must be non-negative.")
        if self.propagation == Propagation.DEGROOT and self.case != Case.CASE3:
            raise ConfigurationError("DeGroot propagation requires Case-3.")
        return self

    @property
    def horizon(self) -> int:
        return self.max_steps if self.max_steps is not None else default_max_steps(self.n_nodes)

    @property
    def decay_steps(self) -> int:
        if self.epsilon_decay_steps is not None:
            return self.epsilon_decay_steps
        return self.episodes * max(1, self.n_nodes // 2)

    @property
    def epsilon_schedule(self) -> EpsilonSchedule:
        return EpsilonSchedule(self.epsilon_start, self.epsilon_end)

    def to_dict(self) -> Dict[str, Any]:
        return {
            key: value.value if isinstance(value, Enum) else value
            for key, value in asdict(self).items()
        }


@dataclass
class TrainingResult:
    model: GcnModel
    final_model: GcnModel
    config: TrainConfig
    target_model: Optional[GcnModel] = None
    loss_log: List[float] = field(default_factory=list)
    reward_log: List[float] = field(default_factory=list)
    infection_log: List[float] = field(default_factory=list)
    validation_log: List[float] = field(default_factory=list)
    durations: List[float] = field(default_factory=list)
    label_fallbacks: int = 0
    best_episode: Optional[int] = None

    @property
    def wall_time(self) -> float:
        return float(sum(self.durations))

    def to_manifest(self) -> Dict[str, Any]:
        return {
            "head": self.model.head.value,
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "loss_log": self.loss_log,
            "reward_log": self.reward_log,
            "infection_log": self.infection_log,
            "validation_log": self.validation_log,
            "durations": self.durations,
            "wall_time": self.wall_time,
            "label_fallbacks": self.label_fallbacks,
            "best_episode": self.best_episode,
        }


def manifest_path(checkpoint_path: str) -> str:
    root, _ = os.path.splitext(checkpoint_path)
    return root + ".manifest.json"


def save_training_run(result: TrainingResult, checkpoint_path: str) -> str:
    """Write the retained model and, beside it, the run manifest. Returns the
    manifest path."""
    save_model(checkpoint_path, result.model)
    path = manifest_path(checkpoint_path)
    with open(path, "w", encoding="utf8") as fh:
        json.dump(result.to_manifest(), fh, indent=2)
    logger.info("Saved model to %s and run manifest to %s", checkpoint_path, path)
    return path


def fresh_scenario(config: TrainConfig, *keys: Any) -> Scenario:
    """A seeded random scenario with at least one candidate node."""
    for attempt in range(SCENARIO_ATTEMPTS):
        scenario = generate_scenario(
            config.case,
            config.propagation,
            config.n_nodes,
            config.num_infected,
            seed=derive_seed(config.seed, *keys, attempt),
            topology=config.topology,
            source_trust=config.source_trust,
            k=config.k,
            p=config.p,
        )
        if candidate_set(scenario.state):
            return scenario
    raise GenerationError(
        "candidates", f"No scenario with candidate nodes after {SCENARIO_ATTEMPTS} attempts."
    )


def _mean(values: Sequence[float]) -> float:
    return float(np.mean(values)) if len(values) > 0 else math.nan


def _initial_model(config: TrainConfig, head: Head, model: Optional[GcnModel]) -> GcnModel:
    if model is None:
        return GcnModel.initialize(
            head,
            hidden_size=config.hidden_size,
            num_layers=config.num_layers,
            seed=derive_seed(config.seed, "weights"),
        )
    return model.require(head)


def train_sl(
    config: TrainConfig,
    model: Optional[GcnModel] = None,
    scenarios: Optional[Sequence[Scenario]] = None,
    progress: bool = False,
) -> TrainingResult:
    """Fit a classifier on ranking-algorithm labels.

    Each epoch plays one scenario (fresh, or taken in turn from `scenarios`)
    until no candidate remains: at every state the blocker set minimizing
    the projected infection labels the nodes, the model takes one Adam step
    on the BCE loss, and the environment advances with the labelled nodes
    that are candidates.

    Returns
    -------
    result: TrainingResult
        The trained classifier, the mean loss and final infection rate of
        every epoch, and the number of labels computed sequentially because
        the exact enumeration was too large.
    """
    config.validate()
    model = _initial_model(config, Head.CLASSIFIER, model)
    adam = AdamState.for_parameters(model.parameters())
    result = TrainingResult(model=model, final_model=model, config=config)

    for epoch in trange(config.episodes, desc="sl", disable=not progress):
        start = time.perf_counter()
        if scenarios:
            scenario = scenarios[epoch % len(scenarios)]
        else:
            scenario = fresh_scenario(config, "sl", epoch)
        step_config = StepConfig.from_scenario(scenario, config.self_weight)
        norm_adj = normalize_adjacency(scenario.network)
        horizon = default_max_steps(scenario.state.num_nodes)
        if config.max_steps is not None:
            horizon = config.max_steps

        state = scenario.state
        losses: List[float] = []
        for _ in range(horizon):
            candidates = candidate_set(state)
            if not candidates:
                break
            labels, fell_back = label_blocker_set(
                state, config.budget, scenario.propagation, self_weight=config.self_weight
            )
            result.label_fallbacks += int(fell_back)

            outputs, cache = gcn_forward(model, feature_matrix(state), norm_adj)
            loss, output_grad = bce_loss(outputs, labels.target)
            grads = gcn_backward(model, cache, output_grad)
            model.set_parameters(adam_step(model.parameters(), grads, adam, config.lr))
            losses.append(loss)

            blockers = sorted(labels.best_set.intersection(candidates))[: config.budget]
            if not blockers:
                restricted, _ = label_blocker_set(
                    state,
                    config.budget,
                    scenario.propagation,
                    restrict_to=candidates,
                    self_weight=config.self_weight,
                )
                blockers = sorted(restricted.best_set)
            state = step(state, blockers, step_config).next_state

        result.loss_log.append(_mean(losses))
        result.infection_log.append(infection_rate(state))
        result.durations.append(time.perf_counter() - start)
        logger.info(
            "Epoch %d: loss=%.6f steps=%d rate=%.4f (%.2fs)",
            epoch,
            result.loss_log[-1],
            len(losses),
            result.infection_log[-1],
            result.durations[-1],
        )

    if result.label_fallbacks:
        logger.warning(
            "%d labels were computed sequentially (exact enumeration too large).",
            result.label_fallbacks,
        )
    return result


def validation_scenarios(config: TrainConfig) -> List[Scenario]:
    """Held-out scenarios used to keep the best model, regenerated from seed + 1."""
    shifted = replace(config, seed=config.seed + 1)
    return [fresh_scenario(shifted, "validation", i) for i in range(config.validation_size)]


def validation_rate(model: GcnModel, scenarios: Sequence[Scenario], config: TrainConfig) -> float:
    planner = ValueGreedyPlanner(model, config.source_trust)
    rates = [
        run_episode(
            scenario,
            planner,
            config.budget,
            max_steps=config.max_steps,
            rng=make_rng(config.seed, "validation", i),
            self_weight=config.self_weight,
        ).final_infection_rate
        for i, scenario in enumerate(scenarios)
    ]
    return float(np.mean(rates))


def train_rl(
    config: TrainConfig,
    model: Optional[GcnModel] = None,
    progress: bool = False,
) -> TrainingResult:
    """Fit a value network with experience replay.

    Every episode spawns `states_per_episode` fresh environments stepped in
    lockstep. At each timestep every live environment blocks a random
    candidate subset with probability epsilon, the value-greedy choice
    otherwise, and stores one transition. Once the buffer holds a batch, one
    Adam step is taken on the TD loss per timestep. The target network is
    synchronized every `target_update_interval` stored transitions.

    Raises
    ------
    ContractViolation:
        When an environment step fails, with the episode, environment index
        and timestep.
    """
    config.validate()
    model = _initial_model(config, Head.VALUE, model)
    target_model = model.copy()
    adam = AdamState.for_parameters(model.parameters())
    buffer = ReplayBuffer(config.replay_capacity, seed=derive_seed(config.seed, "replay"))
    schedule = config.epsilon_schedule
    horizon = config.horizon

    validation = validation_scenarios(config)
    best_rate = math.inf
    best_model = model.copy()
    result = TrainingResult(model=best_model, final_model=model, config=config)

    global_step = 0
    since_sync = 0
    for episode in trange(config.episodes, desc="rl", disable=not progress):
        start = time.perf_counter()
        scenarios = [
            fresh_scenario(config, "rl", episode, env) for env in range(config.states_per_episode)
        ]
        states: List[NetworkState] = [scenario.state for scenario in scenarios]
        rngs = [make_rng(config.seed, "rl-env", episode, env) for env in range(len(scenarios))]
        live = list(range(len(scenarios)))
        rewards: List[float] = []
        losses: List[float] = []

        for t in range(horizon):
            if not live:
                break
            epsilon = epsilon_at(schedule, global_step, config.decay_steps)

            def advance(env: int) -> Transition:
                state, rng = states[env], rngs[env]
                if rng.random() < epsilon:
                    blockers = plan_random(state, config.budget, rng)
                else:
                    blockers = plan_value_greedy(state, config.budget, model, config.source_trust)
                outcome = step(
                    state, blockers, StepConfig.from_scenario(scenarios[env], config.self_weight)
                )
                context = EpisodeContext(outcome.next_state.time, horizon, outcome.terminal)
                states[env] = outcome.next_state
                return Transition(
                    features=feature_matrix(state),
                    adjacency=normalize_adjacency(state.network),
                    blockers=blockers,
                    reward=reward(config.reward_kind, outcome, context),
                    next_features=feature_matrix(outcome.next_state),
                    terminal=outcome.terminal,
                )

            try:
                transitions = generic_parallel(live, advance, n_workers=config.n_workers)
            except WorkerError as e:
                raise ContractViolation(
                    f"Episode {episode}, environment {live[e.index]}, step {t}: {e.error}"
                ) from e.error

            for transition in transitions:
                buffer.push(transition)
                rewards.append(transition.reward)
            live = [env for env, tr in zip(live, transitions) if not tr.terminal]
            global_step += 1
            since_sync += len(transitions)

            if len(buffer) >= config.batch_size:
                loss, grads = td_loss(buffer.sample(config.batch_size), model, target_model)
                model.set_parameters(adam_step(model.parameters(), grads, adam, config.lr))
                losses.append(loss)

            if since_sync >= config.target_update_interval:
                target_model = model.copy()
                since_sync = 0

        result.reward_log.append(_mean(rewards))
        result.loss_log.append(_mean(losses))
        result.infection_log.append(float(np.mean([infection_rate(s) for s in states])))

        if validation:
            rate = validation_rate(model, validation, config)
            result.validation_log.append(rate)
            if rate < best_rate:
                best_rate = rate
                best_model = model.copy()
                result.best_episode = episode

        result.durations.append(time.perf_counter() - start)
        logger.info(
            "Episode %d: reward=%.4f loss=%.6f rate=%.4f epsilon=%.3f buffer=%d (%.2fs)",
            episode,
            result.reward_log[-1],
            result.loss_log[-1],
            result.infection_log[-1],
            epsilon_at(schedule, global_step, config.decay_steps),
            len(buffer),
            result.durations[-1],
        )

    result.model = best_model if validation else model.copy()
    result.target_model = target_model
    return result
