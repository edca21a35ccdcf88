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

import logging
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import numpy as np

from misblock.errors import ConfigurationError, DataError, DecodeError, GenerationError
from misblock.models._utilities.seeding import make_rng
from misblock.models.model import Model
from misblock.models.network import (
    Network,
    Topology,
    decode_edges,
    decode_num_nodes,
    decode_topology,
    generate_network,
)

logger = logging.getLogger("misblock.scenario")

INFECTED_THRESHOLD = -0.95
BLOCKED_THRESHOLD = 0.95
DEGREE_TARGET_RETRIES = 10_000


class Status(Enum):
    INFECTED = "infected"
    BLOCKED = "blocked"
    SUSCEPTIBLE = "susceptible"


class Case(Enum):
    CASE1 = 1  # binary opinions, binary trust
    CASE2 = 2  # floating opinions, binary trust
    CASE3 = 3  # floating opinions, floating trust


class Propagation(Enum):
    DISCRETE_SWITCH = "switch"
    LINEAR_ADJUST = "linear"
    DEGROOT = "degroot"


def classify(opinion: float) -> Status:
    if opinion < INFECTED_THRESHOLD:
        return Status.INFECTED
    if opinion > BLOCKED_THRESHOLD:
        return Status.BLOCKED
    return Status.SUSCEPTIBLE


class NetworkState:
    """Opinions of every node of a network at a given time, plus the nodes
    still receiving trusted-source influence.

    States are values: the opinion vector is read-only and every transition
    builds a new state.
    """

    def __init__(
        self,
        network: Network,
        opinions: Iterable[float],
        active_blockers: Iterable[int] = (),
        time: int = 0,
    ) -> None:
        values = np.array(opinions, dtype=np.float64)
        if values.shape != (network.num_nodes,):
            raise ConfigurationError(
                f"Expected {network.num_nodes} opinions, got shape {values.shape}."
            )
        if not np.all(np.isfinite(values)) or np.any(np.abs(values) > 1.0):
            raise ConfigurationError("Opinions must lie in [-1, 1].")
        if time < 0:
            raise ConfigurationError(f"Time must be non-negative, got {time}.")
        values.flags.writeable = False

        self._network = network
        self._opinions = values
        self._active_blockers = frozenset(int(i) for i in active_blockers)
        self._time = int(time)

        infected = self.infected_mask()
        for node in self._active_blockers:
            if not 0 <= node < network.num_nodes:
                raise ConfigurationError(f"Active blocker {node} is out of range.")
            if infected[node]:
                raise ConfigurationError(f"Active blocker {node} is infected.")

    @property
    def network(self) -> Network:
        return self._network

    @property
    def opinions(self) -> np.ndarray:
        return self._opinions

    @property
    def active_blockers(self) -> FrozenSet[int]:
        return self._active_blockers

    @property
    def time(self) -> int:
        return self._time

    @property
    def num_nodes(self) -> int:
        return self._network.num_nodes

    def infected_mask(self) -> np.ndarray:
        return self._opinions < INFECTED_THRESHOLD

    def blocked_mask(self) -> np.ndarray:
        return self._opinions > BLOCKED_THRESHOLD

    def susceptible_mask(self) -> np.ndarray:
        return ~(self.infected_mask() | self.blocked_mask())

    def status(self, node: int) -> Status:
        return classify(float(self._opinions[node]))

    def candidates(self) -> List[int]:
        """Susceptible nodes adjacent to an infected node, ascending."""
        infected = self.infected_mask()
        susceptible = self.susceptible_mask()
        return [
            i
            for i in range(self.num_nodes)
            if susceptible[i] and any(infected[k] for k in self._network.neighbors(i))
        ]

    def replace(
        self,
        opinions: Optional[Iterable[float]] = None,
        active_blockers: Optional[Iterable[int]] = None,
        time: Optional[int] = None,
    ) -> "NetworkState":
        return NetworkState(
            self._network,
            self._opinions if opinions is None else opinions,
            self._active_blockers if active_blockers is None else active_blockers,
            self._time if time is None else time,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NetworkState):
            return NotImplemented
        return (
            self._network == other._network
            and np.array_equal(self._opinions, other._opinions)
            and self._active_blockers == other._active_blockers
            and self._time == other._time
        )

    def __hash__(self) -> int:
        return hash((self._opinions.tobytes(), self._active_blockers, self._time))

    def __str__(self) -> str:
        return (
            f"[state] t={self._time} : {int(self.infected_mask().sum())} infected, "
            f"{int(self.blocked_mask().sum())} blocked / {self.num_nodes}"
        )


def _scenario_problem(
    state: NetworkState,
    case: Case,
    propagation: Propagation,
    source_trust: float,
) -> Optional[Tuple[str, str]]:
    """The (field, message) of the first broken scenario invariant, if any."""
    if not 0.0 < source_trust <= 1.0:
        return "source_trust", "source trust out of range"
    if propagation == Propagation.DEGROOT and case != Case.CASE3:
        return "propagation", "DeGroot propagation requires Case-3"
    if case == Case.CASE1 and not np.all(np.isin(state.opinions, (-1.0, 0.0, 1.0))):
        return "opinions", "Case-1 opinions must be -1, 0 or 1"
    if case != Case.CASE3 and not state.network.has_binary_trust():
        return "edges", f"{case.name} requires binary trust"
    return None


class Scenario(Model):
    def __init__(
        self,
        state: NetworkState,
        case: Union[Case, int],
        propagation: Union[Propagation, str],
        source_trust: float = 1.0,
        seed: int = 0,
    ) -> None:
        """
        Parameters
        ----------
        state: NetworkState
            Initial state of the episode.
        case: Case|int
            Opinion/trust regime.
        propagation: Propagation|str
            Misinformation propagation model.
        source_trust: float
            Trust of the nodes in the accurate source, in (0, 1].
        seed: int
            Seed the scenario was generated from.
        """
        self.state = state
        self.case = Case(case)
        self.propagation = Propagation(propagation)
        self.source_trust = float(source_trust)
        self.seed = int(seed)

        problem = _scenario_problem(state, self.case, self.propagation, self.source_trust)
        if problem is not None:
            field, message = problem
            raise ConfigurationError(f"{field}: {message}")

    @property
    def network(self) -> Network:
        return self.state.network

    def to_dict(self) -> Dict[str, Any]:
        attributes = self.state.network.to_dict()
        attributes.update(
            {
                "opinions": [float(x) for x in self.state.opinions],
                "case": self.case.value,
                "propagation": self.propagation.value,
                "source_trust": self.source_trust,
                "seed": self.seed,
                "time": self.state.time,
                "active_blockers": sorted(self.state.active_blockers),
            }
        )
        return attributes

    @classmethod
    def from_dict(cls, attributes: Dict[str, Any]) -> "Scenario":
        num_nodes = decode_num_nodes(attributes.get("num_nodes"))
        edges, trust = decode_edges(attributes.get("edges"), num_nodes)
        topology = decode_topology(attributes.get("topology", Topology.IMPORTED.value))
        network = Network(num_nodes, edges, trust, topology)

        opinions = attributes.get("opinions")
        if not isinstance(opinions, list) or len(opinions) != num_nodes:
            raise DecodeError("opinions", f"expected a list of {num_nodes} numbers")
        for i, x in enumerate(opinions):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise DecodeError(f"opinions[{i}]", "expected a number")
            if not -1.0 <= x <= 1.0:
                raise DecodeError(f"opinions[{i}]", "opinion out of range")

        try:
            case = Case(attributes.get("case"))
        except ValueError as e:
            raise DecodeError("case", f"unknown case {attributes.get('case')!r}") from e
        try:
            propagation = Propagation(attributes.get("propagation"))
        except ValueError as e:
            raise DecodeError(
                "propagation", f"unknown propagation {attributes.get('propagation')!r}"
            ) from e

        source_trust = attributes.get("source_trust")
        if isinstance(source_trust, bool) or not isinstance(source_trust, (int, float)):
            raise DecodeError("source_trust", "expected a number")
        seed = attributes.get("seed")
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise DecodeError("seed", "expected an integer")
        time = attributes.get("time", 0)
        if isinstance(time, bool) or not isinstance(time, int) or time < 0:
            raise DecodeError("time", "expected a non-negative integer")

        active = attributes.get("active_blockers", [])
        if not isinstance(active, list):
            raise DecodeError("active_blockers", "expected a list of node ids")
        for node in active:
            if isinstance(node, bool) or not isinstance(node, int):
                raise DecodeError("active_blockers", "node ids must be integers")
            if not 0 <= node < num_nodes:
                raise DecodeError("active_blockers", "node id out of range")
            if opinions[node] < INFECTED_THRESHOLD:
                raise DecodeError("active_blockers", f"node {node} is infected")

        state = NetworkState(network, opinions, active, time)
        problem = _scenario_problem(state, case, propagation, float(source_trust))
        if problem is not None:
            raise DecodeError(*problem)
        return cls(state, case, propagation, source_trust, seed)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.state == other.state
            and self.case == other.case
            and self.propagation == other.propagation
            and self.source_trust == other.source_trust
            and self.seed == other.seed
        )

    def __hash__(self) -> int:
        return hash((self.state, self.case, self.seed))

    def __str__(self) -> str:
        return (
            f"[{self.callback_identifier}] {self.case.name}/{self.propagation.value} "
            f"seed={self.seed} : {self.state}"
        )


def init_state(
    network: Network,
    case: Union[Case, int],
    num_infected: int,
    opinion_low: float = -0.5,
    opinion_high: float = 0.6,
    degree_target: Optional[int] = None,
    seed: int = 0,
    max_retries: int = DEGREE_TARGET_RETRIES,
) -> NetworkState:
    """Draw an initial state: `num_infected` nodes at -1, the others uniform
    in [opinion_low, opinion_high] (0 in Case-1).

    When `degree_target` is given, the infected set is resampled until the
    candidate set holds exactly `degree_target` nodes.

    Raises
    ------
    ConfigurationError:
        When the parameters are invalid.
    GenerationError:
        When `degree_target` is not reached within `max_retries` resamples.
    """
    case = Case(case)
    n = network.num_nodes
    if not 1 <= num_infected < n:
        raise ConfigurationError(f"num_infected must lie in [1, {n - 1}], got {num_infected}.")
    if opinion_low > opinion_high:
        raise ConfigurationError("opinion_low must not exceed opinion_high.")
    for bound in (opinion_low, opinion_high):
        if not INFECTED_THRESHOLD < bound <= BLOCKED_THRESHOLD:
            raise ConfigurationError(f"Opinion bound {bound} must lie in (-0.95, 0.95].")
    if degree_target is not None and degree_target < 0:
        raise ConfigurationError(f"degree_target must be non-negative, got {degree_target}.")

    rng = make_rng(seed, "init")
    opinions = rng.uniform(opinion_low, opinion_high, size=n)
    if case == Case.CASE1:
        opinions[:] = 0.0

    for _ in range(max_retries + 1):
        infected = set(int(i) for i in rng.choice(n, size=num_infected, replace=False))
        if degree_target is None:
            break
        frontier = {
            v for u in infected for v in network.neighbors(u) if v not in infected
        }
        if len(frontier) == degree_target:
            break
    else:
        raise GenerationError(
            "degree_target",
            f"No infected set of size {num_infected} has {degree_target} candidate "
            f"nodes after {max_retries} resamples.",
        )

    opinions[sorted(infected)] = -1.0
    return NetworkState(network, opinions)


def generate_scenario(
    case: Union[Case, int],
    propagation: Union[Propagation, str],
    n_nodes: int,
    num_infected: int,
    seed: int = 0,
    topology: Union[Topology, str] = Topology.WATTS_STROGATZ,
    degree_target: Optional[int] = None,
    opinion_low: float = -0.5,
    opinion_high: float = 0.6,
    source_trust: float = 1.0,
    **network_parameters: Any,
) -> Scenario:
    """Generate a network and an initial state in one go.

    Case-3 networks get floating trust, the others binary trust. Extra keyword
    arguments are forwarded to `generate_network`.
    """
    case = Case(case)
    network = generate_network(
        topology,
        n_nodes,
        seed=seed,
        floating_trust=case == Case.CASE3,
        **network_parameters,
    )
    state = init_state(
        network,
        case,
        num_infected,
        opinion_low,
        opinion_high,
        degree_target=degree_target,
        seed=seed,
    )
    return Scenario(state, case, propagation, source_trust, seed)


def write_scenario(path: str, scenario: Scenario) -> None:
    with open(path, "w", encoding="utf8") as fh:
        fh.write(scenario.to_json(indent=2))
        fh.write("\n")


def read_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf8") as fh:
            content = fh.read()
    except OSError as e:
        raise DataError(f"Cannot read scenario file {path}: {e.strerror}") from e
    return Scenario.from_json(content)
