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

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from misblock.dynamics import candidate_set, default_max_steps, infection_rate, propagate_step
from misblock.errors import ConfigurationError, OracleComplexityError
from misblock.models._utilities.parallel import generic_chunk_parallel
from misblock.models.scenario import NetworkState, Propagation

logger = logging.getLogger("misblock.oracle")

MAX_COMBINATIONS = 10**6


@dataclass(frozen=True, eq=False)
class RankingResult:
    best_set: FrozenSet[int]
    min_rate: float
    target: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {
            "best_set": sorted(self.best_set),
            "min_rate": self.min_rate,
            "target": [int(t) for t in self.target],
        }


def _reachable_rate(state: NetworkState) -> float:
    """Fraction of nodes infected or reachable from an infected node without
    crossing a blocked node."""
    infected = np.flatnonzero(state.infected_mask())
    if infected.size == 0:
        return 0.0
    blocked = state.blocked_mask()
    view = nx.subgraph_view(state.network.graph, filter_node=lambda i: not blocked[i])
    reached = set()
    for source in infected:
        if source not in reached:
            reached |= nx.node_connected_component(view, int(source))
    return len(reached) / state.num_nodes


def project_final_infection(
    state: NetworkState,
    propagation: Union[Propagation, str],
    horizon: Optional[int] = None,
    self_weight: float = 1.0,
) -> float:
    """Infection rate the state ends with when no further intervention happens.

    Switch: exact reachability projection. Linear/DeGroot: simulate without
    interventions until no candidate remains or `horizon` steps elapsed
    (default 4.N).
    """
    propagation = Propagation(propagation)
    if horizon is None:
        horizon = default_max_steps(state.num_nodes)
    if horizon < 1:
        raise ConfigurationError(f"horizon must be >= 1, got {horizon}.")

    if propagation == Propagation.DISCRETE_SWITCH:
        return _reachable_rate(state)

    # pending blockers get no more trusted influence in the projection
    current = state.replace(active_blockers=())
    for _ in range(horizon):
        if not candidate_set(current):
            break
        current, _ = propagate_step(current, propagation, self_weight)
    return infection_rate(current)


def _with_blocked(state: NetworkState, nodes: Iterable[int]) -> NetworkState:
    opinions = state.opinions.copy()
    opinions[list(nodes)] = 1.0
    return state.replace(opinions=opinions, active_blockers=state.active_blockers.difference(nodes))


def _search_space(state: NetworkState, restrict_to: Optional[Iterable[int]]) -> List[int]:
    susceptible = state.susceptible_mask()
    space = [int(i) for i in np.flatnonzero(susceptible)]
    if restrict_to is not None:
        allowed = set(restrict_to)
        space = [i for i in space if i in allowed]
    return space


def optimal_blocker_set(
    state: NetworkState,
    budget: int,
    propagation: Union[Propagation, str],
    horizon: Optional[int] = None,
    restrict_to: Optional[Iterable[int]] = None,
    max_combinations: int = MAX_COMBINATIONS,
    n_workers: int = 1,
    self_weight: float = 1.0,
) -> RankingResult:
    """Ranking algorithm: brute-force the blocker subset minimizing the
    projected final infection rate.

    Subsets of size min(budget, |M|) of the susceptible nodes M (optionally
    restricted) are enumerated in lexicographic order; the first one that
    strictly improves the running minimum wins.

    Parameters
    ----------
    state: NetworkState
    budget: int
        Maximum size K of the subset.
    propagation: Propagation|str
        Propagation model used by the projection.
    horizon: int
        Projection horizon of the continuous models (default 4.N).
    restrict_to: iterable|None
        Only consider these nodes (e.g. the candidate set).
    max_combinations: int
        Complexity guard.
    n_workers: int
        Threads evaluating chunks of subsets. The reduction keeps the
        lexicographic-first minimum whatever the number of workers.

    Raises
    ------
    OracleComplexityError:
        When C(|M|, K) exceeds `max_combinations`.
    """
    if budget < 1:
        raise ConfigurationError(f"budget must be >= 1, got {budget}.")

    n = state.num_nodes
    space = _search_space(state, restrict_to)
    size = min(budget, len(space))
    if size == 0:
        rate = project_final_infection(state, propagation, horizon, self_weight)
        return RankingResult(frozenset(), rate, np.zeros(n, dtype=np.int64))

    n_subsets = math.comb(len(space), size)
    if n_subsets > max_combinations:
        raise OracleComplexityError(n_subsets, max_combinations)

    subsets = list(itertools.combinations(space, size))

    def evaluate(chunk: Sequence[Tuple[int, ...]]) -> Tuple[float, int]:
        best_rate, best_index = math.inf, -1
        for index, subset in enumerate(chunk):
            rate = project_final_infection(
                _with_blocked(state, subset), propagation, horizon, self_weight
            )
            if rate < best_rate:
                best_rate, best_index = rate, index
        return best_rate, best_index

    chunk_size = max(1, math.ceil(len(subsets) / max(1, n_workers)))
    results = generic_chunk_parallel(subsets, evaluate, chunk_size=chunk_size, n_workers=n_workers)

    best_rate, best_subset = math.inf, subsets[0]
    for (start, _), (rate, index) in results:
        if rate < best_rate:
            best_rate, best_subset = rate, subsets[start + index]

    target = np.zeros(n, dtype=np.int64)
    target[list(best_subset)] = 1
    return RankingResult(frozenset(best_subset), best_rate, target)


def sequential_blocker_set(
    state: NetworkState,
    budget: int,
    propagation: Union[Propagation, str],
    horizon: Optional[int] = None,
    restrict_to: Optional[Iterable[int]] = None,
    self_weight: float = 1.0,
) -> RankingResult:
    """Greedy labels: pick `budget` nodes one at a time with the single-node
    ranking algorithm, each pick assuming the previous ones are blocked."""
    current = state
    chosen: List[int] = []
    allowed = None if restrict_to is None else set(restrict_to)
    for _ in range(budget):
        result = optimal_blocker_set(
            current, 1, propagation, horizon, allowed, self_weight=self_weight
        )
        if not result.best_set:
            break
        chosen.extend(result.best_set)
        current = _with_blocked(current, result.best_set)

    rate = project_final_infection(current, propagation, horizon, self_weight)
    target = np.zeros(state.num_nodes, dtype=np.int64)
    target[chosen] = 1
    return RankingResult(frozenset(chosen), rate, target)


def label_blocker_set(
    state: NetworkState,
    budget: int,
    propagation: Union[Propagation, str],
    horizon: Optional[int] = None,
    restrict_to: Optional[Iterable[int]] = None,
    self_weight: float = 1.0,
) -> Tuple[RankingResult, bool]:
    """Exact ranking when tractable, sequential labels otherwise.

    Returns
    -------
    labels: tuple
        The result and whether the complexity guard forced the fallback.
    """
    try:
        return (
            optimal_blocker_set(
                state, budget, propagation, horizon, restrict_to, self_weight=self_weight
            ),
            False,
        )
    except OracleComplexityError as e:
        logger.warning("%s Falling back to sequential labels.", e)
        return (
            sequential_blocker_set(state, budget, propagation, horizon, restrict_to, self_weight),
            True,
        )
