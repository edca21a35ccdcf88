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

import itertools
import re
from collections.abc import Mapping
from typing import Any, Dict, List, Tuple


def is_iterable(obj: Any) -> bool:
    """Portable way to check that an object is iterable"""
    try:
        iter(obj)
        return True
    except TypeError:
        return False


def _lookup(attr_source: Any, name: str) -> Any:
    if isinstance(attr_source, Mapping):
        return attr_source.get(name, "_")
    return getattr(attr_source, name, "_")


def resolve_pattern(pattern: str, attr_source: Any) -> List[str]:
    """Resolve a string pattern using values from an attribute source.
    If one attribute is an iterable (and not a string) the pattern is
    resolved once for each value, and once for each combination when several
    attributes are iterable (the first placeholder varies slowest).

    Parameters
    ----------
    pattern: str
        A string pattern such as '{out}/case{case}/n{n}/d{k}.jsonl'.
    attr_source: object|Mapping
        An object with attributes (or a mapping with keys) matching the
        names of the placeholders in the pattern. Missing ones resolve to '_'.

    Returns
    -------
    resolved: list
        The list of resolved patterns
    """
    names: List[str] = []
    for match in re.findall(r"{([^\}]+)}", pattern):
        if match not in names:
            names.append(match)

    choices: List[Tuple[Any, ...]] = []
    for name in names:
        values = _lookup(attr_source, name)
        if isinstance(values, str) or not is_iterable(values):
            values = [values]
        choices.append(tuple(values))

    resolved = []
    for combination in itertools.product(*choices):
        params: Dict[str, Any] = dict(zip(names, combination))
        resolved.append(pattern.format(**params))
    return resolved
