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

"""Command-line entry point: `misblock <command> [options]`.

Exit codes: 0 success, 1 other error, 2 configuration error, 3 data error,
4 contract violation.
"""

import json
import logging
import os
import sys
from argparse import ArgumentParser, Namespace
from typing import Any, Callable, Dict, List, Optional

import pandas as pd

from misblock.dynamics import run_episode
from misblock.errors import ConfigurationError, MisblockError
from misblock.harness import (
    DatasetSpec,
    compare_rewards,
    evaluate,
    generate_dataset,
    summarize_training,
    write_episodes,
    write_records,
)
from misblock.models._utilities.parallel import WorkerError, makedirs
from misblock.models._utilities.seeding import make_rng
from misblock.models.network import Topology, import_edge_list
from misblock.models.scenario import (
    Propagation,
    Scenario,
    generate_scenario,
    init_state,
    read_scenario,
    write_scenario,
)
from misblock.oracle import MAX_COMBINATIONS, optimal_blocker_set
from misblock.planners import PlannerKind, make_planner
from misblock.training import RewardKind, TrainConfig, save_training_run, train_rl, train_sl

logger = logging.getLogger("misblock.cli")

LOG_FORMAT = "[%(asctime)s][%(levelname)s] %(message)s"


def _parameter_name_synonyms(name: str, prefix: str = "--") -> List[str]:
    """For a given parameter name, returns all the possible usual synonyms
    (and the parameter itself), prefixed with `prefix`.

    If a parameter has no known synonym, only the prefixed name is returned.
    """
    synonyms = [
        ["nodes", "n_nodes", "num_nodes"],
        ["infected", "num_infected"],
        ["source-trust", "source_trust"],
        ["max-steps", "max_steps"],
        ["degree-target", "degree_target"],
        ["edge-list", "edge_list"],
        ["max-combinations", "max_combinations"],
        ["target-update", "target_update", "target_update_interval"],
        ["batch-size", "batch_size"],
        ["states", "states_per_episode", "states_per_config"],
        ["validation-size", "validation_size"],
        ["rl-model", "rl_model"],
        ["sl-model", "sl_model"],
    ]
    synonyms_dict = {
        params[i]: params[:i] + params[(i + 1) :]
        for params in synonyms
        for i in range(len(params))
    }

    if name not in synonyms_dict:
        return [prefix + name]

    return [prefix + n for n in ([name] + synonyms_dict[name])]


def _add_logging_args(parser: ArgumentParser) -> None:
    parser.add_argument(
        "--verbose",
        dest="verbose",
        type=int,
        default=logging.INFO,
        help="The verbosity level (as an integer value).",
    )
    parser.add_argument(
        "-l",
        "--log_level",
        dest="log_level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="The logging level (as a string value), overrides --verbose.",
    )


def _add_scenario_args(parser: ArgumentParser) -> None:
    parser.add_argument("--case", type=int, choices=[1, 2, 3], default=1)
    parser.add_argument(
        "--propagation",
        choices=[p.value for p in Propagation],
        default=Propagation.DISCRETE_SWITCH.value,
    )
    parser.add_argument(*_parameter_name_synonyms("nodes"), dest="nodes", type=int, default=10)
    parser.add_argument(
        *_parameter_name_synonyms("infected"), dest="infected", type=int, default=1
    )
    parser.add_argument(
        *_parameter_name_synonyms("source-trust"), dest="source_trust", type=float, default=1.0
    )
    parser.add_argument(
        "--topology", choices=[t.value for t in Topology if t != Topology.IMPORTED],
        default=Topology.WATTS_STROGATZ.value,
    )
    parser.add_argument("--k", type=int, default=3, help="Watts-Strogatz mean degree.")
    parser.add_argument("--p", type=float, default=0.4, help="Watts-Strogatz rewiring probability.")
    parser.add_argument("--seed", type=int, default=0)


def _add_training_args(parser: ArgumentParser, supervised: bool) -> None:
    _add_scenario_args(parser)
    defaults = TrainConfig.for_supervised() if supervised else TrainConfig()
    parser.add_argument("--budget", type=int, default=defaults.budget)
    parser.add_argument("--episodes", type=int, default=defaults.episodes)
    parser.add_argument("--lr", type=float, default=defaults.lr)
    parser.add_argument(*_parameter_name_synonyms("max-steps"), dest="max_steps", type=int)
    parser.add_argument("--hidden", type=int, default=defaults.hidden_size)
    parser.add_argument("--layers", type=int, default=defaults.num_layers)
    parser.add_argument("--model", required=True, help="Checkpoint path to write.")
    if supervised:
        parser.set_defaults(nodes=defaults.n_nodes)
        return
    parser.add_argument(
        "--reward", choices=[r.value for r in RewardKind], default=defaults.reward_kind.value
    )
    parser.add_argument(
        *_parameter_name_synonyms("states"), dest="states", type=int,
        default=defaults.states_per_episode,
    )
    parser.add_argument(
        *_parameter_name_synonyms("batch-size"), dest="batch_size", type=int,
        default=defaults.batch_size,
    )
    parser.add_argument(
        *_parameter_name_synonyms("target-update"), dest="target_update", type=int,
        default=defaults.target_update_interval,
    )
    parser.add_argument(
        *_parameter_name_synonyms("validation-size"), dest="validation_size", type=int,
        default=defaults.validation_size,
    )
    parser.add_argument("--workers", type=int, default=1)


def _train_config(params: Namespace, supervised: bool) -> TrainConfig:
    parameters: Dict[str, Any] = {
        "case": params.case,
        "propagation": params.propagation,
        "n_nodes": params.nodes,
        "num_infected": params.infected,
        "budget": params.budget,
        "episodes": params.episodes,
        "lr": params.lr,
        "seed": params.seed,
        "max_steps": params.max_steps,
        "topology": params.topology,
        "k": params.k,
        "p": params.p,
        "source_trust": params.source_trust,
        "hidden_size": params.hidden,
        "num_layers": params.layers,
    }
    if supervised:
        return TrainConfig.for_supervised(**parameters).validate()
    parameters.update(
        reward_kind=params.reward,
        states_per_episode=params.states,
        batch_size=params.batch_size,
        target_update_interval=params.target_update,
        validation_size=params.validation_size,
        n_workers=params.workers,
    )
    return TrainConfig(**parameters).validate()


def _write_json(document: Any) -> None:
    sys.stdout.write(json.dumps(document, indent=2))
    sys.stdout.write("\n")


def _cmd_gen_graph(params: Namespace) -> None:
    if params.edge_list is not None:
        network = import_edge_list(params.edge_list)
        state = init_state(
            network,
            params.case,
            params.infected,
            degree_target=params.degree_target,
            seed=params.seed,
        )
        scenario = Scenario(state, params.case, params.propagation, params.source_trust, params.seed)
    else:
        scenario = generate_scenario(
            params.case,
            params.propagation,
            params.nodes,
            params.infected,
            seed=params.seed,
            topology=params.topology,
            degree_target=params.degree_target,
            source_trust=params.source_trust,
            k=params.k,
            p=params.p,
        )
    makedirs(os.path.dirname(params.out) or ".")
    write_scenario(params.out, scenario)
    logger.info("Wrote %s to %s", scenario, params.out)


def _cmd_gen_dataset(params: Namespace) -> None:
    spec = DatasetSpec(
        version=params.version,
        sizes=tuple(params.sizes),
        states_per_config=params.states,
        case=params.case,
        propagation=params.propagation,
        seed=params.seed,
        topology=params.topology,
        k=params.k,
        p=params.p,
        source_trust=params.source_trust,
        out=params.out,
        n_workers=params.workers,
    )
    for path in generate_dataset(spec, progress=params.progress):
        logger.info("Dataset file: %s", path)


def _cmd_train(params: Namespace, supervised: bool) -> None:
    config = _train_config(params, supervised)
    trainer = train_sl if supervised else train_rl
    result = trainer(config, progress=params.progress)
    makedirs(os.path.dirname(params.model) or ".")
    manifest = save_training_run(result, params.model)
    if params.curve is not None:
        summarize_training(manifest).to_csv(params.curve, index=False)
        logger.info("Wrote learning curve to %s", params.curve)


def _cmd_simulate(params: Namespace) -> None:
    scenario = read_scenario(params.scenario)
    planner = make_planner(
        params.planner,
        params.model,
        propagation=scenario.propagation,
        source_trust=scenario.source_trust,
    )
    trajectory = run_episode(
        scenario,
        planner,
        params.budget,
        max_steps=params.max_steps,
        rng=make_rng(params.seed, "simulate"),
    )
    _write_json(
        {
            "planner": str(planner),
            "budget": params.budget,
            "initial_rate": trajectory.initial_infection_rate,
            "final_rate": trajectory.final_infection_rate,
            "steps": trajectory.length,
            "terminal": trajectory.terminal,
            "blockers": [sorted(blockers) for blockers, _ in trajectory.steps],
            "rates": [outcome.infection_rate_after for _, outcome in trajectory.steps],
        }
    )


def _cmd_oracle(params: Namespace) -> None:
    scenario = read_scenario(params.scenario)
    result = optimal_blocker_set(
        scenario.state,
        params.budget,
        scenario.propagation,
        horizon=params.max_steps,
        max_combinations=params.max_combinations,
        n_workers=params.workers,
    )
    _write_json(result.to_dict())


def _learned_models(params: Namespace) -> Dict[str, str]:
    models = {}
    learned = [p for p in params.planners if PlannerKind(p).needs_model]
    if params.model is not None:
        if len(learned) > 1:
            raise ConfigurationError("Use --rl-model and --sl-model to evaluate both learned planners.")
        models.update({p: params.model for p in learned})
    if params.rl_model is not None:
        models[PlannerKind.VALUE_GREEDY.value] = params.rl_model
    if params.sl_model is not None:
        models[PlannerKind.TOPK_CLASSIFIER.value] = params.sl_model
    return models


def _cmd_evaluate(params: Namespace) -> None:
    models = _learned_models(params)
    records, frames = [], []
    for dataset in params.datasets:
        evaluation = evaluate(
            dataset,
            params.planners,
            params.budgets,
            max_steps=params.max_steps,
            models=models,
            seed=params.seed,
            n_workers=params.workers,
            progress=params.progress,
        )
        records.extend(evaluation.records)
        frames.append(evaluation.episodes)
    write_records(records, params.out)
    if params.raw is not None:
        write_episodes(pd.concat(frames, ignore_index=True), params.raw)


def _parse_checkpoints(values: List[str]) -> Dict[str, str]:
    checkpoints = {}
    for value in values:
        kind, sep, path = value.partition("=")
        if not sep or kind.lower() not in {r.value for r in RewardKind}:
            raise ConfigurationError(f"Expected <reward>=<path>, got '{value}'.")
        checkpoints[kind.lower()] = path
    return checkpoints


def _cmd_compare_rewards(params: Namespace) -> None:
    table = compare_rewards(
        _parse_checkpoints(params.checkpoints),
        params.dataset,
        params.budgets,
        max_steps=params.max_steps,
        seed=params.seed,
        n_workers=params.workers,
        progress=params.progress,
    )
    makedirs(os.path.dirname(params.out) or ".")
    table.to_csv(params.out, index=False)
    logger.info("Wrote %d rows to %s", len(table), params.out)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="misblock", description="Misinformation blocking toolkit.")
    _add_logging_args(parser)
    parser.add_argument("--progress", action="store_true", help="Show progress bars.")
    commands = parser.add_subparsers(dest="command", required=True)

    gen_graph = commands.add_parser("gen-graph", help="Generate one scenario.")
    _add_scenario_args(gen_graph)
    gen_graph.add_argument(*_parameter_name_synonyms("degree-target"), dest="degree_target", type=int)
    gen_graph.add_argument(
        *_parameter_name_synonyms("edge-list"), dest="edge_list",
        help="Build the network from an edge-list file instead of generating it.",
    )
    gen_graph.add_argument("--out", required=True, help="Scenario file to write.")
    gen_graph.set_defaults(func=_cmd_gen_graph)

    gen_dataset = commands.add_parser("gen-dataset", help="Generate a v1 or v2 dataset.")
    _add_scenario_args(gen_dataset)
    gen_dataset.add_argument("--version", type=int, choices=[1, 2], default=1)
    gen_dataset.add_argument("--sizes", type=int, nargs="+", default=[10, 25, 50])
    gen_dataset.add_argument(*_parameter_name_synonyms("states"), dest="states", type=int, default=1000)
    gen_dataset.add_argument("--workers", type=int, default=1)
    gen_dataset.add_argument("--out", default="datasets", help="Root directory of the dataset.")
    gen_dataset.set_defaults(func=_cmd_gen_dataset)

    for name, supervised in (("train-sl", True), ("train-rl", False)):
        train = commands.add_parser(name, help=f"Train a {'classifier' if supervised else 'value network'}.")
        _add_training_args(train, supervised)
        train.add_argument("--curve", help="Learning-curve CSV to write.")
        train.set_defaults(func=lambda p, _s=supervised: _cmd_train(p, _s))

    simulate = commands.add_parser("simulate", help="Run one episode on a scenario file.")
    simulate.add_argument("--scenario", required=True)
    simulate.add_argument("--planner", choices=[k.value for k in PlannerKind], default="random")
    simulate.add_argument("--model")
    simulate.add_argument("--budget", type=int, default=1)
    simulate.add_argument(*_parameter_name_synonyms("max-steps"), dest="max_steps", type=int)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.set_defaults(func=_cmd_simulate)

    oracle = commands.add_parser("oracle", help="Best blocker set of a scenario file.")
    oracle.add_argument("--scenario", required=True)
    oracle.add_argument("--budget", type=int, default=1)
    oracle.add_argument(*_parameter_name_synonyms("max-steps"), dest="max_steps", type=int)
    oracle.add_argument(
        *_parameter_name_synonyms("max-combinations"), dest="max_combinations", type=int,
        default=MAX_COMBINATIONS,
    )
    oracle.add_argument("--workers", type=int, default=1)
    oracle.set_defaults(func=_cmd_oracle)

    evaluation = commands.add_parser("evaluate", help="Evaluate planners on dataset files.")
    evaluation.add_argument("--dataset", dest="datasets", nargs="+", required=True)
    evaluation.add_argument(
        "--planner", dest="planners", nargs="+", choices=[k.value for k in PlannerKind],
        default=["random"],
    )
    evaluation.add_argument("--budget", dest="budgets", type=int, nargs="+", default=[1, 2, 3])
    evaluation.add_argument("--model")
    evaluation.add_argument(*_parameter_name_synonyms("rl-model"), dest="rl_model")
    evaluation.add_argument(*_parameter_name_synonyms("sl-model"), dest="sl_model")
    evaluation.add_argument(*_parameter_name_synonyms("max-steps"), dest="max_steps", type=int)
    evaluation.add_argument("--seed", type=int, default=0)
    evaluation.add_argument("--workers", type=int, default=1)
    evaluation.add_argument("--out", required=True, help="Aggregated CSV to write.")
    evaluation.add_argument("--raw", help="Per-episode CSV to write.")
    evaluation.set_defaults(func=_cmd_evaluate)

    rewards = commands.add_parser("compare-rewards", help="Compare value networks per reward.")
    rewards.add_argument(
        "--checkpoint", dest="checkpoints", action="append", required=True,
        help="<reward>=<path>, once per reward kind.",
    )
    rewards.add_argument("--dataset", required=True)
    rewards.add_argument("--budget", dest="budgets", type=int, nargs="+", default=[1, 2, 3])
    rewards.add_argument(*_parameter_name_synonyms("max-steps"), dest="max_steps", type=int)
    rewards.add_argument("--seed", type=int, default=0)
    rewards.add_argument("--workers", type=int, default=1)
    rewards.add_argument("--out", required=True)
    rewards.set_defaults(func=_cmd_compare_rewards)
    return parser


def configure_logging(params: Namespace) -> None:
    log_level = params.verbose
    if params.log_level is not None:
        log_level = logging.getLevelName(params.log_level)
    logging.basicConfig(stream=sys.stdout, format=LOG_FORMAT)
    logging.getLogger("misblock").setLevel(log_level)


def main(argv: Optional[List[str]] = None) -> int:
    params = build_parser().parse_args(argv)
    configure_logging(params)
    command: Callable[[Namespace], None] = params.func
    try:
        command(params)
    except WorkerError as e:
        if isinstance(e.error, MisblockError):
            logger.error("%s", e.error)
            return e.error.exit_code
        raise
    except MisblockError as e:
        logger.error("%s", e)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
