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


from .collection import ScenarioCollection
from .model import Model
from .network import Network, Topology, generate_network, import_edge_list
from .scenario import (
    BLOCKED_THRESHOLD,
    INFECTED_THRESHOLD,
    Case,
    NetworkState,
    Propagation,
    Scenario,
    Status,
    classify,
    generate_scenario,
    init_state,
    read_scenario,
    write_scenario,
)
