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

from pathlib import Path

import networkx as nx
import numpy as np
import pytest

from misblock.errors import ConfigurationError, ParseError
from misblock.models import Network, Topology, generate_network, import_edge_list
from misblock.models.network import FLOATING_TRUST_LOW


class TestNetwork:
    def test_edges_are_normalized(self) -> None:
        network = Network(3, [(2, 1), (0, 1)])
        assert network.edges == ((0, 1), (1, 2))
        assert network.neighbors(1) == (0, 2)
        assert network.degree(1) == 2
        assert network.trust_between(2, 1) == 1.0
        assert network.has_binary_trust()

    def test_zero_trust_edges_are_not_neighbors(self) -> None:
        network = Network(3, [(0, 1), (1, 2)], {(0, 1): 1.0, (1, 2): 0.0})
        assert network.neighbors(2) == ()
        assert network.adjacency[1, 2] == 0.0
        assert len(network.edges) == 2

    @pytest.mark.parametrize(
        "edges, trust",
        [
            ([(1, 1)], None),
            ([(0, 1), (1, 0)], None),
            ([(0, 3)], None),
            ([(0, 1)], {(0, 1): 1.5}),
            ([(0, 1)], {(1, 2): 1.0}),
        ],
    )
    def test_invalid_networks(self, edges, trust) -> None:  # type: ignore
        with pytest.raises(ConfigurationError):
            Network(3, edges, trust)

    def test_matrices_are_read_only(self, path5: Network) -> None:
        with pytest.raises(ValueError):
            path5.adjacency[0, 1] = 0.0
        with pytest.raises(ValueError):
            path5.trust_matrix[0, 1] = 0.0

    def test_networkx_roundtrip(self, small_world: Network) -> None:
        graph = small_world.to_networkx()
        assert graph.number_of_edges() == len(small_world.edges)
        again = Network.from_networkx(graph, Topology.WATTS_STROGATZ)
        assert again == small_world

    def test_dict_roundtrip(self) -> None:
        network = generate_network(Topology.ERDOS_RENYI, 12, seed=4, floating_trust=True)
        assert Network.from_json(network.to_json()) == network


class TestGenerateNetwork:
    def test_ring_without_rewiring(self) -> None:
        network = generate_network(Topology.WATTS_STROGATZ, 10, seed=0, k=2, p=0.0)
        assert len(network.edges) == 10
        assert all(network.degree(i) == 2 for i in range(10))

    def test_even_k_edge_count(self) -> None:
        network = generate_network(Topology.WATTS_STROGATZ, 10, seed=0, k=4, p=0.0)
        assert len(network.edges) == 20

    def test_odd_k_keeps_mean_degree(self) -> None:
        network = generate_network(Topology.WATTS_STROGATZ, 10, seed=0, k=3, p=0.0)
        assert len(network.edges) == 15
        assert np.mean(network.degrees) == 3.0

    def test_rewiring_keeps_edge_count(self) -> None:
        for seed in range(20):
            network = generate_network(Topology.WATTS_STROGATZ, 10, seed=seed, k=3, p=0.4)
            assert len(network.edges) == 15

    def test_determinism(self) -> None:
        first = generate_network(Topology.WATTS_STROGATZ, 10, seed=7, k=3, p=0.4)
        second = generate_network(Topology.WATTS_STROGATZ, 10, seed=7, k=3, p=0.4)
        assert first.edges == second.edges

    def test_seeds_differ(self) -> None:
        edge_sets = {
            generate_network(Topology.WATTS_STROGATZ, 10, seed=seed, k=3, p=0.4).edges
            for seed in range(100)
        }
        assert len(edge_sets) >= 95

    def test_tree(self) -> None:
        network = generate_network(Topology.TREE, 10, seed=3, max_branching=4)
        assert len(network.edges) == 9
        assert nx.is_tree(network.graph)

    def test_erdos_renyi_is_deterministic(self) -> None:
        first = generate_network(Topology.ERDOS_RENYI, 30, seed=5, branching=4)
        second = generate_network(Topology.ERDOS_RENYI, 30, seed=5, branching=4)
        assert first == second

    def test_floating_trust(self) -> None:
        binary = generate_network(Topology.WATTS_STROGATZ, 10, seed=2)
        floating = generate_network(Topology.WATTS_STROGATZ, 10, seed=2, floating_trust=True)
        assert binary.edges == floating.edges
        assert all(FLOATING_TRUST_LOW <= t <= 1.0 for t in floating.trust.values())
        assert not floating.has_binary_trust()

    @pytest.mark.parametrize(
        "topology, n, parameters",
        [
            (Topology.WATTS_STROGATZ, 1, {}),
            (Topology.WATTS_STROGATZ, 3, {"k": 3}),
            (Topology.WATTS_STROGATZ, 10, {"p": 1.5}),
            (Topology.TREE, 10, {"max_branching": 0}),
            (Topology.IMPORTED, 10, {}),
        ],
    )
    def test_invalid_parameters(self, topology, n, parameters) -> None:  # type: ignore
        with pytest.raises(ConfigurationError):
            generate_network(topology, n, **parameters)


class TestImportEdgeList:
    def write(self, tmp_path: Path, content: str) -> str:
        path = tmp_path / "edges.txt"
        path.write_text(content, encoding="utf8")
        return str(path)

    def test_simple(self, tmp_path: Path) -> None:
        network = import_edge_list(self.write(tmp_path, "0 1\n1 2\n"))
        assert network.num_nodes == 3
        assert len(network.edges) == 2
        assert network.topology == Topology.IMPORTED

    def test_reversed_pairs_are_merged(self, tmp_path: Path) -> None:
        network = import_edge_list(self.write(tmp_path, "0 1\n1 0\n"))
        assert len(network.edges) == 1

    def test_ids_are_compacted_in_order(self, tmp_path: Path) -> None:
        network = import_edge_list(self.write(tmp_path, "# comment\n5 7\n7 9  # tail\n"))
        assert network.num_nodes == 3
        assert network.edges == ((0, 1), (1, 2))

    def test_default_trust(self, tmp_path: Path) -> None:
        network = import_edge_list(self.write(tmp_path, "0 1\n"), default_trust=0.5)
        assert network.trust_between(0, 1) == 0.5

    def test_non_integer_token(self, tmp_path: Path) -> None:
        with pytest.raises(ParseError) as info:
            import_edge_list(self.write(tmp_path, "0 1\n1 x\n"))
        assert info.value.line == 2

    def test_karate_club(self, tmp_path: Path) -> None:
        lines = "".join(f"{u} {v}\n" for u, v in nx.karate_club_graph().edges())
        network = import_edge_list(self.write(tmp_path, lines))
        assert network.num_nodes == 34
        assert len(network.edges) == 78
