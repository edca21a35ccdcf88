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

from typing import FrozenSet, Iterable, List, Sequence

import numpy as np
import pytest

from misblock.models import (
    Case,
    Network,
    NetworkState,
    Propagation,
    Scenario,
    Topology,
    generate_network,
)
from misblock.planners import Planner, PlannerKind


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption(
        "--runslow",
        action="store_true",
        default=False,
        help="Run the training and statistical checks (minutes).",
    )


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "slow: long-running learning-signal checks")


def pytest_collection_modifyitems(config: pytest.Config, items: List[pytest.Item]) -> None:
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def path_network(n: int, trust: float = 1.0) -> Network:
    edges = [(i, i + 1) for i in range(n - 1)]
    return Network(n, edges, {e: trust for e in edges})


def star_network(leaves: int) -> Network:
    return Network(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def case1_state(network: Network, infected: Iterable[int], blocked: Iterable[int] = ()) -> NetworkState:
    opinions = [0.0] * network.num_nodes
    for i in infected:
        opinions[i] = -1.0
    for i in blocked:
        opinions[i] = 1.0
    return NetworkState(network, opinions)


def case1_scenario(
    network: Network,
    infected: Sequence[int],
    propagation: Propagation = Propagation.DISCRETE_SWITCH,
    seed: int = 0,
) -> Scenario:
    return Scenario(case1_state(network, infected), Case.CASE1, propagation, 1.0, seed)


class ScriptedPlanner(Planner):
    """Returns the given blocker sets in order, then nothing."""

    kind = PlannerKind.RANDOM

    def __init__(self, *picks: Iterable[int]) -> None:
        self.picks = [frozenset(p) for p in picks]
        self.calls = 0

    def plan(self, state: NetworkState, budget: int, rng: np.random.Generator) -> FrozenSet[int]:
        self.calls += 1
        if self.calls <= len(self.picks):
            return self.picks[self.calls - 1]
        return frozenset()


@pytest.fixture
def path5() -> Network:
    return path_network(5)


@pytest.fixture
def star4() -> Network:
    return star_network(4)


@pytest.fixture
def small_world() -> Network:
    return generate_network(Topology.WATTS_STROGATZ, 10, seed=7, k=3, p=0.4)
