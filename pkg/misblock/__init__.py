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

from .dynamics import StepConfig, StepOutcome, Trajectory, run_episode, step
from .errors import (
    ConfigurationError,
    ContractViolation,
    DataError,
    MisblockError,
)
from .models import Case, Network, NetworkState, Propagation, Scenario, Topology
from .neural import GcnModel, Head, load_model, save_model
from .oracle import RankingResult, optimal_blocker_set
from .planners import Planner, PlannerKind, make_planner

__version__ = "0.1.0"
