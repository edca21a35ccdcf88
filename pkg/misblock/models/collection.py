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

import os
from collections.abc import MutableSequence
from typing import Any, Iterable, List, Optional, Union

from misblock.errors import DataError, DecodeError
from misblock.models._utilities.parallel import makedirs
from misblock.models.scenario import Scenario


class ScenarioCollection(MutableSequence):
    """An ordered list of scenarios, stored on disk as JSON lines
    (one scenario per line)."""

    def __init__(
        self,
        scenarios: Optional[Iterable[Scenario]] = None,
        path: Optional[str] = None,
    ) -> None:
        self._data: List[Scenario] = []
        self.path = path
        if scenarios is not None:
            self.extend(scenarios)

    @classmethod
    def load(cls, path: str) -> "ScenarioCollection":
        """Read and validate every line of a dataset file.

        Raises
        ------
        DecodeError:
            When a line is not a valid scenario; the field names the line.
        """
        try:
            with open(path, "r", encoding="utf8") as fh:
                lines = fh.readlines()
        except OSError as e:
            raise DataError(f"Cannot read dataset {path}: {e.strerror}") from e
        return cls(path=path).populate(lines)

    def populate(self, lines: Iterable[str]) -> "ScenarioCollection":
        data = []
        for number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                data.append(Scenario.from_json(line))
            except DecodeError as e:
                raise DecodeError(f"line {number}.{e.field}", str(e)) from e
        self._data = data
        return self

    def to_jsonl(self) -> str:
        return "".join(f"{scenario.to_json()}\n" for scenario in self._data)

    def save(self, path: Optional[str] = None) -> str:
        path = path or self.path
        if path is None:
            raise ValueError("Cannot save a collection with no path.")
        makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w", encoding="utf8") as fh:
            fh.write(self.to_jsonl())
        self.path = path
        return path

    def __str__(self) -> str:
        return f"[scenario collection] {len(self)} scenarios"

    # Collection
    def __len__(self) -> int:
        return len(self._data)

    def __getitem__(self, item: Union[int, slice]) -> Any:
        return self._data[item]

    def __setitem__(self, index: Union[int, slice], value: Any) -> None:
        if not isinstance(value, Scenario):
            raise TypeError(
                f"Value of type {value.__class__.__name__} "
                f"not allowed in {self.__class__.__name__}."
            )
        self._data[index] = value

    def __delitem__(self, index: Union[int, slice]) -> None:
        del self._data[index]

    def insert(self, index: int, value: Any) -> None:
        if not isinstance(value, Scenario):
            raise TypeError(
                f"Value of type {value.__class__.__name__} "
                f"not allowed in {self.__class__.__name__}."
            )
        self._data.insert(index, value)
