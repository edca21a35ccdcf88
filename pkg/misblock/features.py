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

from typing import Dict

import networkx as nx
import numpy as np

from misblock.models.scenario import NetworkState

NUM_FEATURES = 3


def effective_degree(state: NetworkState, node: int) -> int:
    """Number of susceptible neighbors of a node."""
    susceptible = state.susceptible_mask()
    return sum(1 for k in state.network.neighbors(node) if susceptible[k])


def infected_distances(state: NetworkState) -> np.ndarray:
    """Shortest hop count from every node to the nearest infected node,
    through non-blocked nodes only. Blocked and unreachable nodes get N."""
    n = state.num_nodes
    distances = np.full(n, n, dtype=np.int64)
    sources = [int(i) for i in np.flatnonzero(state.infected_mask())]
    if not sources:
        return distances

    blocked = state.blocked_mask()
    view = nx.subgraph_view(state.network.graph, filter_node=lambda i: not blocked[i])
    lengths: Dict[int, float] = nx.multi_source_dijkstra_path_length(view, sources)
    for node, length in lengths.items():
        distances[node] = int(length)
    return distances


def min_distance_to_infected(state: NetworkState, node: int) -> int:
    return int(infected_distances(state)[node])


def feature_matrix(state: NetworkState) -> np.ndarray:
    """N x 3 matrix: opinion, effective degree, distance to the nearest
    infected node (N when unreachable or blocked). Values are used raw."""
    susceptible = state.susceptible_mask().astype(np.float64)
    features = np.empty((state.num_nodes, NUM_FEATURES), dtype=np.float64)
    features[:, 0] = state.opinions
    features[:, 1] = state.network.adjacency @ susceptible
    features[:, 2] = infected_distances(state)
    return features
