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

import numpy as np
import pytest

from misblock.dynamics import apply_blocking, run_episode
from misblock.errors import ConfigurationError, ModelLoadError
from misblock.models import Case, Network, Propagation, generate_scenario
from misblock.models._utilities import make_rng
from misblock.neural import GcnModel, Head, save_model
from misblock.oracle import project_final_infection
from misblock.planners import (
    MaxDegreeDynamicPlanner,
    MaxDegreeStaticPlanner,
    OracleExactPlanner,
    PlannerKind,
    RandomPlanner,
    TopKClassifierPlanner,
    ValueGreedyPlanner,
    make_planner,
    plan_max_degree_dynamic,
    plan_max_degree_static,
    plan_random,
    plan_topk_classifier,
    plan_value_greedy,
    top_scored,
)
from tests.conftest import case1_scenario, case1_state

SMALL = {"hidden_size": 8, "num_layers": 2}


def hub_network() -> Network:
    """Infected node 0 reaches 1, 2 and 3; node 2 is a hub, node 3 has one extra leaf."""
    return Network(9, [(0, 1), (0, 2), (0, 3), (2, 4), (2, 5), (2, 6), (3, 7), (4, 8)])


class TestTopScored:
    def test_ties_go_to_lower_id(self) -> None:
        assert top_scored([5, 2, 9], [1.0, 1.0, 1.0], 2) == frozenset({2, 5})

    def test_highest_scores(self) -> None:
        assert top_scored([1, 2, 3], [0.1, 0.9, 0.5], 2) == frozenset({2, 3})


class TestBaselines:
    def test_random_subset_of_candidates(self) -> None:
        state = case1_state(hub_network(), [0])
        rng = make_rng(0)
        for _ in range(50):
            picks = plan_random(state, 2, rng)
            assert len(picks) == 2
            assert picks <= {1, 2, 3}

    def test_random_with_large_budget(self) -> None:
        state = case1_state(hub_network(), [0])
        assert plan_random(state, 10, make_rng(0)) == frozenset({1, 2, 3})

    def test_max_degree_static(self) -> None:
        state = case1_state(hub_network(), [0])
        assert plan_max_degree_static(state, 1) == frozenset({2})
        assert plan_max_degree_static(state, 2) == frozenset({2, 3})

    def test_static_uses_initial_degrees(self) -> None:
        network = hub_network()
        planner = MaxDegreeStaticPlanner()
        planner.begin_episode(case1_state(network, [0]))
        # later state where the hub's neighbors are blocked
        later = case1_state(network, [0], blocked=[4, 5, 6])
        assert planner.plan(later, 1, make_rng(0)) == frozenset({2})

    def test_max_degree_dynamic(self) -> None:
        network = hub_network()
        later = case1_state(network, [0], blocked=[4, 5, 6])
        # hub now has no susceptible neighbor, node 3 still has one
        assert plan_max_degree_dynamic(later, 1) == frozenset({3})
        assert MaxDegreeDynamicPlanner().plan(later, 1, make_rng(0)) == frozenset({3})

    def test_invalid_budget(self) -> None:
        state = case1_state(hub_network(), [0])
        with pytest.raises(ConfigurationError):
            plan_max_degree_dynamic(state, 0)

    def test_no_candidates(self, path5: Network) -> None:
        state = case1_state(path5, [0], blocked=[1])
        assert plan_random(state, 1, make_rng(0)) == frozenset()
        assert plan_max_degree_static(state, 1) == frozenset()


class TestOracleExactPlanner:
    def test_blocks_the_hub(self) -> None:
        planner = OracleExactPlanner(Propagation.DISCRETE_SWITCH)
        assert planner.plan(case1_state(hub_network(), [0]), 1, make_rng(0)) == frozenset({2})

    def test_pick_minimizes_projection(self) -> None:
        for seed in range(10):
            scenario = generate_scenario(Case.CASE1, Propagation.DISCRETE_SWITCH, 10, 1, seed=seed)
            state = scenario.state
            pick = OracleExactPlanner().plan(state, 1, make_rng(0))
            best = project_final_infection(apply_blocking(state, pick, 1.0), "switch")
            for node in state.candidates():
                blocked = apply_blocking(state, [node], 1.0)
                assert best <= project_final_infection(blocked, "switch")


class TestLearnedPlanners:
    def test_value_greedy_picks_one_candidate(self) -> None:
        model = GcnModel.initialize(Head.VALUE, seed=0, **SMALL)
        state = case1_state(hub_network(), [0])
        picks = plan_value_greedy(state, 1, model)
        assert len(picks) == 1
        assert picks <= {1, 2, 3}

    def test_value_greedy_takes_all_when_budget_covers(self) -> None:
        model = GcnModel.zeros(Head.VALUE, **SMALL)
        assert plan_value_greedy(case1_state(hub_network(), [0]), 3, model) == frozenset({1, 2, 3})

    def test_zero_value_model_ties_to_lowest_ids(self) -> None:
        model = GcnModel.zeros(Head.VALUE, **SMALL)
        assert plan_value_greedy(case1_state(hub_network(), [0]), 2, model) == frozenset({1, 2})

    def test_topk_classifier(self) -> None:
        model = GcnModel.zeros(Head.CLASSIFIER, **SMALL)
        state = case1_state(hub_network(), [0])
        assert plan_topk_classifier(state, 2, model) == frozenset({1, 2})

    def test_head_is_checked(self) -> None:
        with pytest.raises(ConfigurationError):
            ValueGreedyPlanner(GcnModel.zeros(Head.CLASSIFIER, **SMALL))
        with pytest.raises(ConfigurationError):
            TopKClassifierPlanner(GcnModel.zeros(Head.VALUE, **SMALL))

    def test_learned_episode_is_deterministic(self) -> None:
        scenario = generate_scenario(Case.CASE2, Propagation.LINEAR_ADJUST, 10, 1, seed=4)
        planner = ValueGreedyPlanner(GcnModel.initialize(Head.VALUE, seed=1, **SMALL))
        first = run_episode(scenario, planner, 1)
        second = run_episode(scenario, planner, 1)
        assert [b for b, _ in first.steps] == [b for b, _ in second.steps]


class TestMakePlanner:
    @pytest.mark.parametrize(
        "kind, expected",
        [
            ("random", RandomPlanner),
            ("maxdeg-static", MaxDegreeStaticPlanner),
            ("maxdeg-dyn", MaxDegreeDynamicPlanner),
            ("oracle", OracleExactPlanner),
        ],
    )
    def test_baselines(self, kind: str, expected: type) -> None:
        planner = make_planner(kind)
        assert isinstance(planner, expected)
        assert str(planner) == kind

    def test_learned_planner_needs_model(self) -> None:
        with pytest.raises(ConfigurationError):
            make_planner(PlannerKind.VALUE_GREEDY)

    def test_loads_checkpoint(self, tmp_path: Path) -> None:
        path = str(tmp_path / "sl.json")
        save_model(path, GcnModel.zeros(Head.CLASSIFIER, **SMALL))
        assert isinstance(make_planner("sl", path), TopKClassifierPlanner)
        with pytest.raises(ModelLoadError):
            make_planner("rl", path)

    def test_oracle_keeps_propagation(self) -> None:
        planner = make_planner("oracle", propagation="linear", horizon=7)
        assert isinstance(planner, OracleExactPlanner)
        assert planner.propagation == Propagation.LINEAR_ADJUST
        assert planner.horizon == 7

    def test_unknown_kind(self) -> None:
        with pytest.raises(ValueError):
            make_planner("greedy")

    def test_baseline_episode(self) -> None:
        scenario = case1_scenario(hub_network(), [0])
        trajectory = run_episode(scenario, make_planner("maxdeg-static"), 1, rng=make_rng(0))
        assert trajectory.steps[0][0] == frozenset({2})
        assert np.isclose(trajectory.final_infection_rate, trajectory.final_state.infected_mask().mean())
