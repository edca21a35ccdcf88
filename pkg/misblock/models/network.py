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
from collections import deque
from enum import Enum
from types import MappingProxyType
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple, Union

import networkx as nx
import numpy as np

from misblock.errors import ConfigurationError, DecodeError, ParseError
from misblock.models._utilities.seeding import make_rng
from misblock.models.model import Model

logger = logging.getLogger("misblock.network")

Edge = Tuple[int, int]

# Case-3 trust is drawn uniformly on [FLOATING_TRUST_LOW, 1]
FLOATING_TRUST_LOW = 0.3


class Topology(Enum):
    WATTS_STROGATZ = "watts-strogatz"
    ERDOS_RENYI = "erdos-renyi"
    TREE = "tree"
    IMPORTED = "imported"


def _edge_key(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class Network(Model):
    """Immutable undirected network with a mutual trust value on every edge.

    Only edges with a positive trust take part in the dynamics: they form
    `graph`, `neighbors` and `adjacency`. Zero-trust edges are kept for
    serialization.
    """

    def __init__(
        self,
        num_nodes: int,
        edges: Iterable[Edge],
        trust: Optional[Mapping[Edge, float]] = None,
        topology: Topology = Topology.IMPORTED,
    ) -> None:
        if not isinstance(num_nodes, (int, np.integer)) or num_nodes < 1:
            raise ConfigurationError(f"num_nodes must be a positive integer, got {num_nodes}.")
        num_nodes = int(num_nodes)

        keys: Dict[Edge, float] = {}
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ConfigurationError(f"Self-loop on node {u} is not allowed.")
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise ConfigurationError(f"Edge ({u}, {v}) has an endpoint out of range.")
            key = _edge_key(u, v)
            if key in keys:
                raise ConfigurationError(f"Edge {key} appears more than once.")
            value = 1.0 if trust is None else trust.get(key, trust.get((key[1], key[0])))
            if value is None:
                raise ConfigurationError(f"Edge {key} has no trust value.")
            value = float(value)
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"Trust of edge {key} is out of range: {value}.")
            keys[key] = value

        self._num_nodes = num_nodes
        self._edges: Tuple[Edge, ...] = tuple(sorted(keys))
        self._trust = MappingProxyType({edge: keys[edge] for edge in self._edges})
        self._topology = Topology(topology)

        graph = nx.Graph()
        graph.add_nodes_from(range(num_nodes))
        graph.add_edges_from(
            (u, v, {"trust": value}) for (u, v), value in self._trust.items() if value > 0
        )
        self._graph = nx.freeze(graph)

        trust_matrix = np.zeros((num_nodes, num_nodes), dtype=np.float64)
        for (u, v), value in self._trust.items():
            trust_matrix[u, v] = trust_matrix[v, u] = value
        trust_matrix.flags.writeable = False
        self._trust_matrix = trust_matrix

        adjacency = (trust_matrix > 0).astype(np.float64)
        adjacency.flags.writeable = False
        self._adjacency = adjacency

        self._neighbors = tuple(
            tuple(sorted(self._graph.neighbors(i))) for i in range(num_nodes)
        )
        degrees = np.array([len(n) for n in self._neighbors], dtype=np.int64)
        degrees.flags.writeable = False
        self._degrees = degrees
        self._normalized_adjacency: Optional[np.ndarray] = None

    @property
    def num_nodes(self) -> int:
        return self._num_nodes

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return self._edges

    @property
    def trust(self) -> Mapping[Edge, float]:
        return self._trust

    @property
    def topology(self) -> Topology:
        return self._topology

    @property
    def graph(self) -> nx.Graph:
        """Frozen networkx view of the positive-trust edges."""
        return self._graph

    @property
    def trust_matrix(self) -> np.ndarray:
        return self._trust_matrix

    @property
    def adjacency(self) -> np.ndarray:
        return self._adjacency

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees

    @property
    def normalized_adjacency(self) -> np.ndarray:
        """Symmetric normalization D^-1/2 (A + I) D^-1/2 of `adjacency`, computed once."""
        if self._normalized_adjacency is None:
            augmented = self._adjacency + np.eye(self._num_nodes)
            inv_sqrt = 1.0 / np.sqrt(augmented.sum(axis=1))
            normalized = augmented * inv_sqrt[:, None] * inv_sqrt[None, :]
            normalized.flags.writeable = False
            self._normalized_adjacency = normalized
        return self._normalized_adjacency

    def neighbors(self, node: int) -> Tuple[int, ...]:
        return self._neighbors[node]

    def degree(self, node: int) -> int:
        return int(self._degrees[node])

    def trust_between(self, u: int, v: int) -> float:
        return float(self._trust_matrix[u, v])

    def has_binary_trust(self) -> bool:
        return all(value in (0.0, 1.0) for value in self._trust.values())

    def to_networkx(self) -> nx.Graph:
        """A mutable copy of the network, zero-trust edges included."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self._num_nodes))
        graph.add_edges_from((u, v, {"trust": t}) for (u, v), t in self._trust.items())
        return graph

    @classmethod
    def from_networkx(
        cls,
        graph: nx.Graph,
        topology: Topology = Topology.IMPORTED,
        default_trust: float = 1.0,
    ) -> "Network":
        """Build a network from a graph whose nodes are labelled 0..N-1.

        Edges without a `trust` attribute get `default_trust`.
        """
        edges = list(graph.edges())
        trust = {
            _edge_key(u, v): data.get("trust", default_trust)
            for u, v, data in graph.edges(data=True)
        }
        return cls(graph.number_of_nodes(), edges, trust, topology)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "num_nodes": self._num_nodes,
            "edges": [[u, v, t] for (u, v), t in self._trust.items()],
            "topology": self._topology.value,
        }

    @classmethod
    def from_dict(cls, attributes: Dict[str, Any]) -> "Network":
        num_nodes = decode_num_nodes(attributes.get("num_nodes"))
        edges, trust = decode_edges(attributes.get("edges"), num_nodes)
        topology = decode_topology(attributes.get("topology", Topology.IMPORTED.value))
        return cls(num_nodes, edges, trust, topology)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self._num_nodes == other._num_nodes
            and self._edges == other._edges
            and dict(self._trust) == dict(other._trust)
            and self._topology == other._topology
        )

    def __hash__(self) -> int:
        return hash((self._num_nodes, self._edges))

    def __str__(self) -> str:
        return (
            f"[{self.callback_identifier}] {self._topology.value} : "
            f"{self._num_nodes} nodes, {len(self._edges)} edges"
        )


def decode_num_nodes(value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise DecodeError("num_nodes", f"expected a positive integer, got {value!r}")
    return value


def decode_edges(value: Any, num_nodes: int) -> Tuple[List[Edge], Dict[Edge, float]]:
    if not isinstance(value, list):
        raise DecodeError("edges", "expected a list of [u, v, trust] triples")

    edges: List[Edge] = []
    trust: Dict[Edge, float] = {}
    for i, item in enumerate(value):
        if not isinstance(item, list) or len(item) != 3:
            raise DecodeError(f"edges[{i}]", "expected a [u, v, trust] triple")
        u, v, t = item
        if any(isinstance(x, bool) or not isinstance(x, int) for x in (u, v)):
            raise DecodeError(f"edges[{i}]", "endpoints must be integers")
        if not (0 <= u < num_nodes and 0 <= v < num_nodes):
            raise DecodeError(f"edges[{i}]", "endpoint out of range")
        if u == v:
            raise DecodeError(f"edges[{i}]", "self-loop")
        if isinstance(t, bool) or not isinstance(t, (int, float)):
            raise DecodeError(f"edges[{i}].trust", "expected a number")
        if not 0.0 <= t <= 1.0:
            raise DecodeError(f"edges[{i}].trust", "trust out of range")
        key = _edge_key(u, v)
        if key in trust:
            raise DecodeError(f"edges[{i}]", "duplicate edge")
        edges.append(key)
        trust[key] = float(t)
    return edges, trust


def decode_topology(value: Any) -> Topology:
    try:
        return Topology(value)
    except ValueError as e:
        raise DecodeError("topology", f"unknown topology {value!r}") from e


def _forward_counts(n_edges: int, n: int) -> np.ndarray:
    """Number of clockwise lattice neighbors of every node so that the ring
    holds `n_edges` edges overall."""
    divide, remain = divmod(n_edges, n)
    counts = np.full(n, divide, dtype=int)
    counts[:remain] += 1
    return counts


def _watts_strogatz(n: int, k: int, p: float, rng: np.random.Generator) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(range(n))

    counts = _forward_counts(int(round(k * n / 2)), n)
    lattice = [
        (u, (u + offset) % n) for u in range(n) for offset in range(1, counts[u] + 1)
    ]
    graph.add_edges_from(lattice)

    # rewire each lattice edge from its source endpoint
    for u, v in lattice:
        if rng.random() >= p or not graph.has_edge(u, v):
            continue
        targets = [w for w in range(n) if w != u and not graph.has_edge(u, w)]
        if not targets:
            continue
        w = targets[int(rng.integers(len(targets)))]
        graph.remove_edge(u, v)
        graph.add_edge(u, w)
    return graph


def _erdos_renyi(n: int, branching: float, rng: np.random.Generator) -> nx.Graph:
    probability = min(1.0, branching / (n - 1))
    return nx.gnp_random_graph(n, probability, seed=int(rng.integers(2**31)))


def _tree(n: int, max_branching: int, rng: np.random.Generator) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    frontier = deque([0])
    next_node = 1
    while next_node < n:
        parent = frontier.popleft()
        for _ in range(int(rng.integers(1, max_branching + 1))):
            if next_node >= n:
                break
            graph.add_edge(parent, next_node)
            frontier.append(next_node)
            next_node += 1
    return graph


def generate_network(
    topology: Union[Topology, str],
    n: int,
    seed: int = 0,
    k: int = 3,
    p: float = 0.4,
    branching: float = 4.0,
    max_branching: int = 4,
    floating_trust: bool = False,
    trust_low: float = FLOATING_TRUST_LOW,
) -> Network:
    """Generate a random network.

    Parameters
    ----------
    topology: Topology|str
        Watts-Strogatz, Erdos-Renyi or Tree.
    n: int
        Number of nodes.
    seed: int
        Master seed. Topology and trust use independent sub-streams so the
        topology does not depend on `floating_trust`.
    k: int
        Watts-Strogatz mean degree. The ring holds round(k.n/2) edges; with an
        odd k the extra clockwise neighbor goes to the lowest node ids.
    p: float
        Watts-Strogatz rewiring probability.
    branching: float
        Erdos-Renyi expected degree (edge probability branching/(n-1)).
    max_branching: int
        Tree branching factor, sampled per parent in [1, max_branching].
    floating_trust: bool
        False for binary trust (all 1), True for trust uniform on [trust_low, 1].

    Returns
    -------
    network: Network
    """
    topology = Topology(topology)
    if n < 2:
        raise ConfigurationError(f"A network needs at least 2 nodes, got {n}.")
    if not 0.0 < trust_low <= 1.0:
        raise ConfigurationError(f"trust_low must lie in (0, 1], got {trust_low}.")

    topology_rng = make_rng(seed, "topology")
    trust_rng = make_rng(seed, "trust")

    if topology == Topology.WATTS_STROGATZ:
        if k < 1 or n <= k:
            raise ConfigurationError(f"Watts-Strogatz requires 1 <= k < n (k={k}, n={n}).")
        if not 0.0 <= p <= 1.0:
            raise ConfigurationError(f"Rewiring probability must lie in [0, 1], got {p}.")
        graph = _watts_strogatz(n, k, p, topology_rng)
    elif topology == Topology.ERDOS_RENYI:
        if branching <= 0:
            raise ConfigurationError(f"Branching factor must be positive, got {branching}.")
        graph = _erdos_renyi(n, branching, topology_rng)
    elif topology == Topology.TREE:
        if max_branching < 1:
            raise ConfigurationError(f"Tree branching must be >= 1, got {max_branching}.")
        graph = _tree(n, max_branching, topology_rng)
    else:
        raise ConfigurationError("Imported networks are not generated, use import_edge_list.")

    edges = sorted(_edge_key(u, v) for u, v in graph.edges())
    if floating_trust:
        values = trust_rng.uniform(trust_low, 1.0, size=len(edges))
        trust = {edge: float(value) for edge, value in zip(edges, values)}
    else:
        trust = {edge: 1.0 for edge in edges}

    network = Network(n, edges, trust, topology)
    logger.debug("Generated %s", network)
    return network


def import_edge_list(path: str, default_trust: float = 1.0) -> Network:
    """Read a whitespace-separated edge list ('u v' per line, '#' comments).

    Node ids are compacted to 0..N-1 in order of first appearance, duplicate
    and reversed pairs are merged and self-loops are dropped. Extra columns
    are ignored.
    """
    if not 0.0 <= default_trust <= 1.0:
        raise ConfigurationError(f"Trust must lie in [0, 1], got {default_trust}.")

    ids: Dict[int, int] = {}
    edges: Dict[Edge, None] = {}
    with open(path, "r", encoding="utf8") as fh:
        for line_number, line in enumerate(fh, start=1):
            tokens = line.split("#", 1)[0].split()
            if not tokens:
                continue
            if len(tokens) < 2:
                raise ParseError(line_number, "expected a 'u v' pair")
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError as e:
                raise ParseError(line_number, f"non-integer token in {tokens[:2]}") from e

            u = ids.setdefault(u, len(ids))
            v = ids.setdefault(v, len(ids))
            if u == v:
                logger.warning("Dropping self-loop on line %d of %s", line_number, path)
                continue
            edges[_edge_key(u, v)] = None

    if not ids:
        raise ParseError(0, "the edge list is empty")
    return Network(
        len(ids),
        list(edges),
        {edge: default_trust for edge in edges},
        Topology.IMPORTED,
    )
