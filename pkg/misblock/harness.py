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

"""Dataset generation, batch evaluation of planners and result tables."""

import json
import logging
import os
import re
from dataclasses import dataclass, field
from enum import Enum
from json.decoder import JSONDecodeError
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from misblock.dynamics import DEFAULT_SELF_WEIGHT, run_episode
from misblock.errors import (
    ConfigurationError,
    ContractViolation,
    DataError,
    EvaluationFailed,
    GenerationError,
    ModelLoadError,
)
from misblock.models._utilities.parallel import generic_parallel, makedirs
from misblock.models._utilities.pattern_matching import resolve_pattern
from misblock.models._utilities.seeding import derive_seed, make_rng
from misblock.models.collection import ScenarioCollection
from misblock.models.network import Topology
from misblock.models.scenario import Case, Propagation, Scenario, generate_scenario
from misblock.neural import GcnModel, Head, load_model
from misblock.planners import PlannerKind, make_planner
from misblock.training import RewardKind

logger = logging.getLogger("misblock.harness")

DATASET_PATTERN = "{out}/case{case}/v{version}/n{n}/{prefix}{k}.jsonl"
RECORD_COLUMNS = [
    "planner",
    "case",
    "n",
    "budget",
    "degree",
    "episodes",
    "mean_rate",
    "std_rate",
    "mean_steps",
]
RAW_COLUMNS = [
    "planner",
    "case",
    "n",
    "budget",
    "degree",
    "scenario",
    "final_rate",
    "steps",
    "failed",
]
MAX_RAW_ROWS = 10**6
FAILURE_TOLERANCE = 0.01
RESEED_ATTEMPTS = 100


class DatasetVersion(Enum):
    V1 = 1  # one file per infected count
    V2 = 2  # one file per degree target, infected count drawn in 1-3


@dataclass
class DatasetSpec:
    version: DatasetVersion = DatasetVersion.V1
    sizes: Tuple[int, ...] = (10, 25, 50)
    infected_counts: Tuple[int, ...] = (1, 2, 3)
    degree_targets: Tuple[int, ...] = (1, 2, 3, 4)
    states_per_config: int = 1000
    opinion_low: float = -0.5
    opinion_high: float = 0.6
    case: Case = Case.CASE1
    propagation: Propagation = Propagation.DISCRETE_SWITCH
    seed: int = 0
    topology: Topology = Topology.WATTS_STROGATZ
    k: int = 3
    p: float = 0.4
    source_trust: float = 1.0
    out: str = "datasets"
    n_workers: int = 1

    def __post_init__(self) -> None:
        self.version = DatasetVersion(self.version)
        self.case = Case(self.case)
        self.propagation = Propagation(self.propagation)
        self.topology = Topology(self.topology)
        self.sizes = tuple(self.sizes)
        self.infected_counts = tuple(self.infected_counts)
        self.degree_targets = tuple(self.degree_targets)

    def validate(self) -> "DatasetSpec":
        if not self.sizes or any(n < 2 for n in self.sizes):
            raise ConfigurationError(f"Invalid network sizes {self.sizes}.")
        if self.states_per_config < 1:
            raise ConfigurationError("states_per_config must be positive.")
        if self.version == DatasetVersion.V1:
            if not self.infected_counts or any(c < 1 for c in self.infected_counts):
                raise ConfigurationError(f"Invalid infected counts {self.infected_counts}.")
            if max(self.infected_counts) >= min(self.sizes):
                raise ConfigurationError("Infected counts must be smaller than every size.")
        elif not self.degree_targets or any(d < 0 for d in self.degree_targets):
            raise ConfigurationError(f"Invalid degree targets {self.degree_targets}.")
        if self.opinion_low > self.opinion_high:
            raise ConfigurationError("opinion_low must not exceed opinion_high.")
        if self.propagation == Propagation.DEGROOT and self.case != Case.CASE3:
            raise ConfigurationError("DeGroot propagation requires Case-3.")
        return self

    @property
    def prefix(self) -> str:
        return "d" if self.version == DatasetVersion.V1 else "deg"

    @property
    def keys(self) -> Tuple[int, ...]:
        """Infected counts (V1) or degree targets (V2) naming the files."""
        if self.version == DatasetVersion.V1:
            return self.infected_counts
        return self.degree_targets

    def paths(self) -> List[str]:
        """Dataset files in generation order: sizes first, then keys."""
        return resolve_pattern(
            DATASET_PATTERN,
            {
                "out": self.out,
                "case": self.case.value,
                "version": self.version.value,
                "n": self.sizes,
                "prefix": self.prefix,
                "k": self.keys,
            },
        )


def _dataset_scenario(spec: DatasetSpec, n: int, key: int, index: int) -> Scenario:
    """The `index`-th scenario of the file (n, key). A degree target that
    cannot be met is logged and the scenario redrawn from the next seed."""
    for attempt in range(RESEED_ATTEMPTS):
        seed = derive_seed(spec.seed, spec.version.value, spec.case.value, n, key, index, attempt)
        if spec.version == DatasetVersion.V1:
            num_infected, degree_target = key, None
        else:
            num_infected = int(make_rng(seed, "infected").integers(1, 4))
            num_infected, degree_target = min(num_infected, n - 1), key
        try:
            return generate_scenario(
                spec.case,
                spec.propagation,
                n,
                num_infected,
                seed=seed,
                topology=spec.topology,
                degree_target=degree_target,
                opinion_low=spec.opinion_low,
                opinion_high=spec.opinion_high,
                source_trust=spec.source_trust,
                k=spec.k,
                p=spec.p,
            )
        except GenerationError as e:
            logger.warning(
                "Scenario %d of n=%d %s%d: %s Reseeding (attempt %d).",
                index,
                n,
                spec.prefix,
                key,
                e,
                attempt + 1,
            )
    raise GenerationError(
        "degree_target",
        f"Scenario {index} of n={n} {spec.prefix}{key} failed after {RESEED_ATTEMPTS} seeds.",
    )


def generate_dataset(spec: DatasetSpec, progress: bool = False) -> List[str]:
    """Write one JSON-lines file of `states_per_config` scenarios per
    (size, infected count) for V1 or per (size, degree target) for V2.

    Returns
    -------
    paths: list
        The written files.
    """
    spec.validate()
    combinations = [(n, key) for n in spec.sizes for key in spec.keys]
    written = []
    for (n, key), path in tqdm(
        list(zip(combinations, spec.paths())), desc="datasets", disable=not progress
    ):
        scenarios = generic_parallel(
            range(spec.states_per_config),
            lambda i, _n=n, _key=key: _dataset_scenario(spec, _n, _key, i),
            n_workers=spec.n_workers,
        )
        written.append(ScenarioCollection(scenarios).save(path))
        logger.info("Wrote %d scenarios to %s", len(scenarios), path)
    return written


@dataclass
class EvalRecord:
    planner: str
    case: int
    n_nodes: int
    budget: int
    degree_target: Optional[int]
    episodes: int
    mean_infection_rate: float
    std: float
    mean_steps: float
    failures: int = 0

    def to_row(self) -> Dict[str, Any]:
        return {
            "planner": self.planner,
            "case": self.case,
            "n": self.n_nodes,
            "budget": self.budget,
            "degree": self.degree_target,
            "episodes": self.episodes,
            "mean_rate": self.mean_infection_rate,
            "std_rate": self.std,
            "mean_steps": self.mean_steps,
        }


@dataclass
class Evaluation:
    records: List[EvalRecord]
    episodes: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=RAW_COLUMNS))


def dataset_degree(path: str) -> Optional[int]:
    """Degree target encoded in a V2 file name (deg<k>.jsonl), None otherwise."""
    match = re.fullmatch(r"deg(\d+)\.jsonl", os.path.basename(path))
    return int(match.group(1)) if match else None


def aggregate(episodes: pd.DataFrame) -> List[EvalRecord]:
    """Per-cell statistics of a per-episode table, failed episodes excluded.
    Cells keep the order of their first episode."""
    records = []
    keys = ["planner", "case", "n", "budget", "degree"]
    for cell, frame in episodes.groupby(keys, sort=False, dropna=False):
        planner, case, n, budget, degree = cell
        cell_ok = frame[~frame["failed"].astype(bool)]
        rates = cell_ok["final_rate"].to_numpy(dtype=np.float64)
        steps = cell_ok["steps"].to_numpy(dtype=np.float64)
        records.append(
            EvalRecord(
                planner=str(planner),
                case=int(case),
                n_nodes=int(n),
                budget=int(budget),
                degree_target=None if pd.isna(degree) else int(degree),
                episodes=len(rates),
                mean_infection_rate=float(rates.mean()) if len(rates) else float("nan"),
                std=float(rates.std()) if len(rates) else float("nan"),
                mean_steps=float(steps.mean()) if len(steps) else float("nan"),
                failures=len(frame) - len(rates),
            )
        )
    return records


def records_frame(records: Sequence[EvalRecord]) -> pd.DataFrame:
    frame = pd.DataFrame([r.to_row() for r in records], columns=RECORD_COLUMNS)
    frame["degree"] = frame["degree"].astype("Int64")
    return frame


def write_records(records: Sequence[EvalRecord], path: str) -> str:
    makedirs(os.path.dirname(path) or ".")
    records_frame(records).to_csv(path, index=False)
    logger.info("Wrote %d evaluation cells to %s", len(records), path)
    return path


def write_episodes(episodes: pd.DataFrame, path: str, limit: int = MAX_RAW_ROWS) -> str:
    """Write the per-episode table, keeping at most `limit` rows."""
    if len(episodes) > limit:
        logger.warning(
            "Per-episode output truncated to %d of %d rows.", limit, len(episodes)
        )
        episodes = episodes.iloc[:limit]
    makedirs(os.path.dirname(path) or ".")
    frame = episodes.copy()
    frame["degree"] = frame["degree"].astype("Int64")
    frame.to_csv(path, index=False)
    return path


def _load_models(
    planners: Sequence[PlannerKind],
    models: Mapping[str, Union[str, GcnModel]],
) -> Dict[PlannerKind, GcnModel]:
    loaded = {}
    for kind in planners:
        if not kind.needs_model:
            continue
        model = models.get(kind.value)
        if model is None:
            raise ConfigurationError(f"Planner '{kind.value}' needs a model checkpoint.")
        head = Head.VALUE if kind == PlannerKind.VALUE_GREEDY else Head.CLASSIFIER
        loaded[kind] = load_model(model, head=head) if isinstance(model, str) else model
    return loaded


def evaluate(
    dataset: Union[str, ScenarioCollection],
    planners: Sequence[Union[PlannerKind, str]],
    budgets: Sequence[int],
    max_steps: Optional[int] = None,
    models: Optional[Mapping[str, Union[str, GcnModel]]] = None,
    seed: int = 0,
    degree_target: Optional[int] = None,
    self_weight: float = DEFAULT_SELF_WEIGHT,
    n_workers: int = 1,
    planner_ids: Optional[Sequence[str]] = None,
    progress: bool = False,
) -> Evaluation:
    """Run every planner with every budget on every scenario of a dataset.

    Parameters
    ----------
    dataset: str|ScenarioCollection
        A JSON-lines dataset file (every line is validated before anything
        runs) or an already loaded collection.
    planners: list
        Planner kinds (random, maxdeg-static, maxdeg-dyn, oracle, rl, sl).
    budgets: list
        Blockers per timestep.
    models: dict
        Checkpoint path (or model) per learned planner name ('rl', 'sl').
    seed: int
        Master seed. The episode stream derives from (seed, scenario index,
        planner id, budget).
    degree_target: int|None
        Degree column of the records, read from a deg<k>.jsonl file name
        when not given.
    planner_ids: list|None
        Names of the planners in the records, defaults to the kind names.

    Returns
    -------
    evaluation: Evaluation
        One record per (planner, budget) and the per-episode table.

    Raises
    ------
    EvaluationFailed:
        When more than 1% of the episodes broke a contract.
    """
    if isinstance(dataset, str):
        if degree_target is None:
            degree_target = dataset_degree(dataset)
        dataset = ScenarioCollection.load(dataset)
    if len(dataset) == 0:
        raise DataError("The dataset holds no scenario.")
    if not budgets or any(b < 1 for b in budgets):
        raise ConfigurationError(f"Budgets must be positive, got {budgets}.")

    kinds = [PlannerKind(p) for p in planners]
    ids = list(planner_ids) if planner_ids is not None else [k.value for k in kinds]
    if len(ids) != len(kinds):
        raise ConfigurationError("One planner id is needed per planner.")
    loaded = _load_models(kinds, models or {})

    rows: List[Dict[str, Any]] = []
    cells = [(kind, pid, budget) for kind, pid in zip(kinds, ids) for budget in budgets]
    for kind, pid, budget in tqdm(cells, desc="evaluate", disable=not progress):

        def run_one(index: int) -> Dict[str, Any]:
            scenario = dataset[index]
            planner = make_planner(
                kind,
                loaded.get(kind),
                propagation=scenario.propagation,
                source_trust=scenario.source_trust,
                self_weight=self_weight,
            )
            row = {
                "planner": pid,
                "case": scenario.case.value,
                "n": scenario.state.num_nodes,
                "budget": budget,
                "degree": degree_target,
                "scenario": index,
                "final_rate": float("nan"),
                "steps": 0,
                "failed": False,
            }
            try:
                trajectory = run_episode(
                    scenario,
                    planner,
                    budget,
                    max_steps=max_steps,
                    rng=make_rng(seed, index, pid, budget),
                    self_weight=self_weight,
                )
            except ContractViolation as e:
                logger.warning("Planner %s, budget %d, scenario %d: %s", pid, budget, index, e)
                row["failed"] = True
                return row
            row["final_rate"] = trajectory.final_infection_rate
            row["steps"] = trajectory.length
            return row

        rows.extend(generic_parallel(range(len(dataset)), run_one, n_workers=n_workers))

    episodes = pd.DataFrame(rows, columns=RAW_COLUMNS)
    records = aggregate(episodes)
    for record in records:
        logger.info(
            "%s budget=%d: mean=%.4f std=%.4f steps=%.2f (%d episodes)",
            record.planner,
            record.budget,
            record.mean_infection_rate,
            record.std,
            record.mean_steps,
            record.episodes,
        )

    failures = int(episodes["failed"].sum())
    if failures > FAILURE_TOLERANCE * len(episodes):
        raise EvaluationFailed(failures, len(episodes))
    return Evaluation(records, episodes)


def compare_rewards(
    checkpoints: Mapping[Union[RewardKind, str], str],
    dataset: Union[str, ScenarioCollection],
    budgets: Sequence[int],
    max_steps: Optional[int] = None,
    seed: int = 0,
    n_workers: int = 1,
    progress: bool = False,
) -> pd.DataFrame:
    """Evaluate one value-network checkpoint per reward kind on the same
    dataset, one row per (budget, reward).

    Raises
    ------
    ModelLoadError:
        When a checkpoint file does not exist.
    """
    kinds = sorted((RewardKind(k) for k in checkpoints), key=lambda k: k.value)
    by_kind = {RewardKind(k): path for k, path in checkpoints.items()}
    for kind in kinds:
        if not os.path.isfile(by_kind[kind]):
            raise ModelLoadError(f"Missing checkpoint for reward {kind.value}: {by_kind[kind]}")

    if isinstance(dataset, str):
        degree = dataset_degree(dataset)
        dataset = ScenarioCollection.load(dataset)
    else:
        degree = None

    rows = []
    for kind in kinds:
        evaluation = evaluate(
            dataset,
            [PlannerKind.VALUE_GREEDY],
            budgets,
            max_steps=max_steps,
            models={PlannerKind.VALUE_GREEDY.value: by_kind[kind]},
            seed=seed,
            degree_target=degree,
            n_workers=n_workers,
            progress=progress,
        )
        for record in evaluation.records:
            row = record.to_row()
            row["reward"] = kind.value
            rows.append(row)

    table = pd.DataFrame(rows, columns=["budget", "reward"] + RECORD_COLUMNS[:3] + RECORD_COLUMNS[4:])
    table = table.sort_values(["budget", "reward"], kind="mergesort").reset_index(drop=True)
    table["degree"] = table["degree"].astype("Int64")
    _check_reward_ordering(table)
    return table


def _check_reward_ordering(table: pd.DataFrame) -> None:
    """At budget 1 the model trained on r3 is expected to end with a mean
    infection rate no lower than the one trained on r1. Logged, never raised."""
    at_one = table[table["budget"] == 1].set_index("reward")["mean_rate"]
    r1, r3 = RewardKind.R1.value, RewardKind.R3.value
    if r1 in at_one and r3 in at_one and at_one[r3] < at_one[r1]:
        logger.warning(
            "Reward ordering: r3 mean rate %.4f is below r1 mean rate %.4f at budget 1.",
            at_one[r3],
            at_one[r1],
        )


def summarize_training(manifest: Union[str, Mapping[str, Any]]) -> pd.DataFrame:
    """Learning-curve table (one row per epoch or episode) of a run manifest."""
    if isinstance(manifest, str):
        try:
            with open(manifest, "r", encoding="utf8") as fh:
                manifest = json.load(fh)
        except OSError as e:
            raise DataError(f"Cannot read run manifest: {e.strerror}") from e
        except JSONDecodeError as e:
            raise DataError(f"Run manifest is not valid JSON ({e.msg}).") from e

    columns = {
        "loss": manifest.get("loss_log", []),
        "reward": manifest.get("reward_log", []),
        "infection_rate": manifest.get("infection_log", []),
        "validation_rate": manifest.get("validation_log", []),
        "duration": manifest.get("durations", []),
    }
    length = max(len(values) for values in columns.values())
    table = pd.DataFrame({"episode": range(length)})
    for name, values in columns.items():
        padded = list(values) + [float("nan")] * (length - len(values))
        table[name] = pd.Series(padded, dtype=np.float64)
    return table

