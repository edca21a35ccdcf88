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
from pathlib import Path
from typing import Any, Dict, List

import pandas as pd
import pytest

from misblock.cli import _parameter_name_synonyms, main
from misblock.harness import RECORD_COLUMNS
from misblock.models import ScenarioCollection, read_scenario, write_scenario
from tests.conftest import ScriptedPlanner, case1_scenario, path_network

QUIET = ["-l", "ERROR"]
TINY_MODEL = ["--hidden", "8", "--layers", "2"]


def run_json(capsys: pytest.CaptureFixture, argv: List[str]) -> Dict[str, Any]:
    capsys.readouterr()
    assert main(QUIET + argv) == 0
    return json.loads(capsys.readouterr().out)


@pytest.fixture
def path_scenario(tmp_path: Path) -> str:
    path = str(tmp_path / "path.json")
    write_scenario(path, case1_scenario(path_network(5), [0]))
    return path


class TestSynonyms:
    def test_known_name(self) -> None:
        assert _parameter_name_synonyms("nodes") == ["--nodes", "--n_nodes", "--num_nodes"]

    def test_unknown_name(self) -> None:
        assert _parameter_name_synonyms("budget") == ["--budget"]


class TestGenGraph:
    def test_writes_scenario(self, tmp_path: Path) -> None:
        out = str(tmp_path / "graphs" / "s.json")
        argv = ["gen-graph", "--case", "2", "--n_nodes", "12", "--infected", "2", "--seed", "3"]
        assert main(QUIET + argv + ["--out", out]) == 0

        scenario = read_scenario(out)
        assert scenario.network.num_nodes == 12
        assert int(scenario.state.infected_mask().sum()) == 2
        assert scenario.seed == 3

    def test_edge_list(self, tmp_path: Path) -> None:
        edges = tmp_path / "edges.txt"
        edges.write_text("0 1\n1 2\n2 3\n", encoding="utf8")
        out = str(tmp_path / "s.json")
        assert main(QUIET + ["gen-graph", "--edge-list", str(edges), "--out", out]) == 0
        assert read_scenario(out).network.num_nodes == 4

    def test_degroot_needs_case3(self, tmp_path: Path) -> None:
        argv = ["gen-graph", "--case", "1", "--propagation", "degroot"]
        assert main(QUIET + argv + ["--out", str(tmp_path / "s.json")]) == 2

    def test_bad_edge_list(self, tmp_path: Path) -> None:
        edges = tmp_path / "edges.txt"
        edges.write_text("0 1\nzero one\n", encoding="utf8")
        argv = ["gen-graph", "--edge-list", str(edges), "--out", str(tmp_path / "s.json")]
        assert main(QUIET + argv) == 3


class TestSimulate:
    def test_oracle_episode(self, capsys: pytest.CaptureFixture, path_scenario: str) -> None:
        document = run_json(capsys, ["simulate", "--scenario", path_scenario, "--planner", "oracle"])
        assert document["planner"] == "oracle"
        assert document["initial_rate"] == pytest.approx(0.2)
        assert document["final_rate"] == pytest.approx(0.2)
        assert document["blockers"] == [[1]]
        assert document["steps"] == 1

    def test_missing_scenario(self, tmp_path: Path) -> None:
        assert main(QUIET + ["simulate", "--scenario", str(tmp_path / "missing.json")]) == 3

    def test_malformed_scenario(self, tmp_path: Path) -> None:
        path = tmp_path / "bad.json"
        path.write_text('{"opinions": "x"}', encoding="utf8")
        assert main(QUIET + ["simulate", "--scenario", str(path)]) == 3

    def test_learned_planner_without_model(self, path_scenario: str) -> None:
        assert main(QUIET + ["simulate", "--scenario", path_scenario, "--planner", "rl"]) == 2

    def test_contract_violation(
        self, monkeypatch: pytest.MonkeyPatch, path_scenario: str
    ) -> None:
        monkeypatch.setattr(
            "misblock.cli.make_planner", lambda *args, **kwargs: ScriptedPlanner([3])
        )
        assert main(QUIET + ["simulate", "--scenario", path_scenario]) == 4


class TestOracle:
    def test_best_set(self, capsys: pytest.CaptureFixture, path_scenario: str) -> None:
        document = run_json(capsys, ["oracle", "--scenario", path_scenario, "--budget", "2"])
        assert document["best_set"] == [1]
        assert document["min_rate"] == pytest.approx(0.2)

    def test_complexity_guard(self, path_scenario: str) -> None:
        argv = ["oracle", "--scenario", path_scenario, "--max-combinations", "0"]
        assert main(QUIET + argv) == 2


class TestDatasetAndEvaluate:
    def test_pipeline(self, tmp_path: Path) -> None:
        root = str(tmp_path / "datasets")
        argv = ["gen-dataset", "--sizes", "10", "--states", "2", "--out", root]
        assert main(QUIET + argv) == 0
        dataset = str(tmp_path / "datasets" / "case1" / "v1" / "n10" / "d1.jsonl")
        assert len(ScenarioCollection.load(dataset)) == 2

        out = str(tmp_path / "results" / "records.csv")
        raw = str(tmp_path / "results" / "raw.csv")
        argv = [
            "evaluate", "--dataset", dataset, "--planner", "random", "maxdeg-dyn",
            "--budget", "1", "2", "--out", out, "--raw", raw,
        ]
        assert main(QUIET + argv) == 0

        records = pd.read_csv(out)
        assert list(records.columns) == RECORD_COLUMNS
        assert len(records) == 4
        assert len(pd.read_csv(raw)) == 8

    def test_ambiguous_model(self, tmp_path: Path) -> None:
        dataset = str(tmp_path / "d1.jsonl")
        ScenarioCollection([case1_scenario(path_network(5), [0])]).save(dataset)
        argv = [
            "evaluate", "--dataset", dataset, "--planner", "rl", "sl",
            "--model", "m.json", "--out", str(tmp_path / "r.csv"),
        ]
        assert main(QUIET + argv) == 2

    def test_missing_dataset(self, tmp_path: Path) -> None:
        argv = ["evaluate", "--dataset", str(tmp_path / "none.jsonl"), "--out", str(tmp_path / "r.csv")]
        assert main(QUIET + argv) == 3


class TestTraining:
    def test_train_sl(self, tmp_path: Path) -> None:
        model = str(tmp_path / "models" / "sl.json")
        curve = str(tmp_path / "sl.csv")
        argv = ["train-sl", "--nodes", "8", "--episodes", "2", "--model", model, "--curve", curve]
        assert main(QUIET + argv + TINY_MODEL) == 0

        assert (tmp_path / "models" / "sl.manifest.json").exists()
        assert len(pd.read_csv(curve)) == 2

    def test_train_rl_then_evaluate(self, tmp_path: Path) -> None:
        model = str(tmp_path / "rl.json")
        argv = [
            "train-rl", "--nodes", "8", "--episodes", "2", "--states", "4", "--batch-size", "2",
            "--target-update", "2", "--validation-size", "1", "--reward", "r0", "--model", model,
        ]
        assert main(QUIET + argv + TINY_MODEL) == 0
        manifest = json.loads((tmp_path / "rl.manifest.json").read_text(encoding="utf8"))
        assert len(manifest["loss_log"]) == 2

        dataset = str(tmp_path / "d1.jsonl")
        ScenarioCollection([case1_scenario(path_network(5), [0])]).save(dataset)
        out = str(tmp_path / "table.csv")
        argv = ["compare-rewards", "--checkpoint", f"r0={model}", "--dataset", dataset, "--budget", "1"]
        assert main(QUIET + argv + ["--out", out]) == 0
        assert len(pd.read_csv(out)) == 1

    def test_invalid_config(self, tmp_path: Path) -> None:
        argv = ["train-rl", "--nodes", "8", "--episodes", "0", "--model", str(tmp_path / "m.json")]
        assert main(QUIET + argv) == 2

    def test_bad_checkpoint_argument(self, tmp_path: Path) -> None:
        argv = [
            "compare-rewards", "--checkpoint", "r9=x.json", "--dataset", "d.jsonl",
            "--out", str(tmp_path / "t.csv"),
        ]
        assert main(QUIET + argv) == 2
