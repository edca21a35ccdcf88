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

import json
import os
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from misblock.errors import ConfigurationError, DataError, EvaluationFailed, ModelLoadError
from misblock.harness import (
    RAW_COLUMNS,
    RECORD_COLUMNS,
    DatasetSpec,
    DatasetVersion,
    aggregate,
    compare_rewards,
    dataset_degree,
    evaluate,
    generate_dataset,
    summarize_training,
    write_episodes,
    write_records,
)
from misblock.models import Network, ScenarioCollection
from misblock.neural import GcnModel, Head, save_model
from tests.conftest import ScriptedPlanner, case1_scenario, path_network

SMALL = {"hidden_size": 8, "num_layers": 2}


def path_dataset(count: int = 3) -> ScenarioCollection:
    return ScenarioCollection([case1_scenario(path_network(5), [0], seed=s) for s in range(count)])


def episodes_frame() -> pd.DataFrame:
    return pd.DataFrame(
        [
            ["rl", 1, 10, 1, None, 0, 0.2, 3, False],
            ["rl", 1, 10, 1, None, 1, 0.4, 5, False],
            ["rl", 1, 10, 1, None, 2, float("nan"), 0, True],
            ["random", 1, 10, 1, None, 0, 0.6, 2, False],
        ],
        columns=RAW_COLUMNS,
    )


class TestDatasetSpec:
    def test_v1_paths(self) -> None:
        spec = DatasetSpec(sizes=(10, 25), infected_counts=(1, 2), out="data")
        assert spec.paths() == [
            "data/case1/v1/n10/d1.jsonl",
            "data/case1/v1/n10/d2.jsonl",
            "data/case1/v1/n25/d1.jsonl",
            "data/case1/v1/n25/d2.jsonl",
        ]

    def test_v2_paths(self) -> None:
        spec = DatasetSpec(version=2, sizes=(10,), degree_targets=(1, 2), case=2, out="data")
        assert spec.paths() == ["data/case2/v2/n10/deg1.jsonl", "data/case2/v2/n10/deg2.jsonl"]
        assert spec.version == DatasetVersion.V2

    @pytest.mark.parametrize(
        "overrides",
        [
            {"sizes": ()},
            {"sizes": (3,), "infected_counts": (3,)},
            {"states_per_config": 0},
            {"version": 2, "degree_targets": (-1,)},
            {"propagation": "degroot"},
        ],
    )
    def test_invalid(self, overrides: dict) -> None:
        with pytest.raises(ConfigurationError):
            DatasetSpec(**overrides).validate()

    def test_dataset_degree(self) -> None:
        assert dataset_degree("out/case1/v2/n10/deg3.jsonl") == 3
        assert dataset_degree("out/case1/v1/n10/d3.jsonl") is None


class TestGenerateDataset:
    def test_v1_counts(self, tmp_path: Path) -> None:
        spec = DatasetSpec(sizes=(10,), states_per_config=4, out=str(tmp_path))
        paths = generate_dataset(spec)

        assert len(paths) == 3
        for count, path in zip((1, 2, 3), paths):
            collection = ScenarioCollection.load(path)
            assert len(collection) == 4
            assert all(int(s.state.infected_mask().sum()) == count for s in collection)

    def test_v2_counts(self, tmp_path: Path) -> None:
        spec = DatasetSpec(
            version=2, sizes=(10, 12, 14), states_per_config=2, topology="tree", out=str(tmp_path)
        )
        paths = generate_dataset(spec)

        assert len(paths) == 12
        for path in paths:
            degree = dataset_degree(path)
            for scenario in ScenarioCollection.load(path):
                assert len(scenario.state.candidates()) == degree
                assert 1 <= int(scenario.state.infected_mask().sum()) <= 3

    def test_byte_identical_reruns(self, tmp_path: Path) -> None:
        first = DatasetSpec(sizes=(10,), states_per_config=3, case=2, out=str(tmp_path / "a"))
        second = DatasetSpec(
            sizes=(10,), states_per_config=3, case=2, out=str(tmp_path / "b"), n_workers=3
        )
        for a, b in zip(generate_dataset(first), generate_dataset(second)):
            with open(a, "rb") as fa, open(b, "rb") as fb:
                assert fa.read() == fb.read()


class TestEvaluate:
    def test_records(self) -> None:
        evaluation = evaluate(path_dataset(), ["random", "maxdeg-dyn", "oracle"], [1, 2])

        assert len(evaluation.records) == 6
        assert len(evaluation.episodes) == 18
        assert [r.planner for r in evaluation.records] == ["random"] * 2 + ["maxdeg-dyn"] * 2 + [
            "oracle"
        ] * 2
        oracle = evaluation.records[4]
        assert oracle.budget == 1
        assert oracle.mean_infection_rate == pytest.approx(0.2)
        assert oracle.std == pytest.approx(0.0)
        assert oracle.mean_steps == 1.0
        assert oracle.degree_target is None

    def test_dataset_file(self, tmp_path: Path) -> None:
        path = str(tmp_path / "deg1.jsonl")
        path_dataset().save(path)
        evaluation = evaluate(path, ["maxdeg-static"], [1], planner_ids=["static"])
        record = evaluation.records[0]
        assert record.degree_target == 1
        assert record.planner == "static"
        assert record.episodes == 3

    def test_seeded(self) -> None:
        first = evaluate(path_dataset(), ["random"], [1], seed=4)
        second = evaluate(path_dataset(), ["random"], [1], seed=4, n_workers=3)
        pd.testing.assert_frame_equal(first.episodes, second.episodes)

    def test_learned_planner_from_model(self) -> None:
        models = {"sl": GcnModel.zeros(Head.CLASSIFIER, **SMALL)}
        evaluation = evaluate(path_dataset(), ["sl"], [1], models=models)
        assert evaluation.records[0].mean_infection_rate == pytest.approx(0.2)

    def test_missing_model(self) -> None:
        with pytest.raises(ConfigurationError):
            evaluate(path_dataset(), ["rl"], [1])

    def test_empty_dataset(self) -> None:
        with pytest.raises(DataError):
            evaluate(ScenarioCollection(), ["random"], [1])

    def test_invalid_budget(self) -> None:
        with pytest.raises(ConfigurationError):
            evaluate(path_dataset(), ["random"], [0])

    def test_contract_failures(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setattr(
            "misblock.harness.make_planner", lambda *args, **kwargs: ScriptedPlanner([3])
        )
        with pytest.raises(EvaluationFailed) as info:
            evaluate(path_dataset(), ["random"], [1])
        assert (info.value.failures, info.value.total) == (3, 3)


class TestAggregate:
    def test_statistics(self) -> None:
        frame = episodes_frame()
        copy = frame.copy()
        records = aggregate(frame)

        pd.testing.assert_frame_equal(frame, copy)
        assert [r.planner for r in records] == ["rl", "random"]
        rl = records[0]
        assert rl.episodes == 2
        assert rl.failures == 1
        assert rl.mean_infection_rate == pytest.approx(0.3)
        assert rl.std == pytest.approx(0.1)
        assert rl.mean_steps == pytest.approx(4.0)

    def test_write_records(self, tmp_path: Path) -> None:
        path = write_records(aggregate(episodes_frame()), str(tmp_path / "out" / "records.csv"))
        table = pd.read_csv(path)
        assert list(table.columns) == RECORD_COLUMNS
        assert len(table) == 2

    def test_write_episodes_truncates(self, tmp_path: Path) -> None:
        path = write_episodes(episodes_frame(), str(tmp_path / "raw.csv"), limit=2)
        assert len(pd.read_csv(path)) == 2


class TestCompareRewards:
    def checkpoints(self, tmp_path: Path) -> dict:
        paths = {}
        for i, name in enumerate(["r0", "r1", "r2", "r3", "r4", "r5"]):
            path = str(tmp_path / f"{name}.json")
            save_model(path, GcnModel.initialize(Head.VALUE, seed=i, **SMALL))
            paths[name] = path
        return paths

    def test_table(self, tmp_path: Path) -> None:
        table = compare_rewards(self.checkpoints(tmp_path), path_dataset(2), [1, 2, 3])

        assert len(table) == 18
        assert table["budget"].tolist() == [1] * 6 + [2] * 6 + [3] * 6
        assert table["reward"].tolist()[:6] == ["r0", "r1", "r2", "r3", "r4", "r5"]
        assert np.all(table["mean_rate"].between(0.0, 1.0))

    def test_missing_checkpoint(self, tmp_path: Path) -> None:
        with pytest.raises(ModelLoadError):
            compare_rewards({"r1": str(tmp_path / "missing.json")}, path_dataset(1), [1])


class TestSummarizeTraining:
    def test_padded_columns(self) -> None:
        table = summarize_training(
            {"loss_log": [0.5, 0.25], "infection_log": [0.4, 0.3, 0.2], "durations": [1.0, 1.0, 1.0]}
        )
        assert list(table.columns) == [
            "episode",
            "loss",
            "reward",
            "infection_rate",
            "validation_rate",
            "duration",
        ]
        assert table["episode"].tolist() == [0, 1, 2]
        assert np.isnan(table["loss"].iloc[2])
        assert table["reward"].isna().all()

    def test_manifest_file(self, tmp_path: Path) -> None:
        path = tmp_path / "run.manifest.json"
        path.write_text(json.dumps({"reward_log": [-1.0]}), encoding="utf8")
        assert summarize_training(str(path))["reward"].tolist() == [-1.0]

    def test_unreadable_manifest(self, tmp_path: Path) -> None:
        path = tmp_path / "broken.json"
        path.write_text("{", encoding="utf8")
        with pytest.raises(DataError):
            summarize_training(str(path))
        with pytest.raises(DataError):
            summarize_training(os.path.join(str(tmp_path), "missing.json"))


class TestOracleOnStar:
    def test_budgets(self, star4: Network) -> None:
        dataset = ScenarioCollection([case1_scenario(star4, [0])])
        evaluation = evaluate(dataset, ["oracle"], [1, 4])
        assert [r.mean_infection_rate for r in evaluation.records] == pytest.approx([0.2 + 0.6, 0.2])
