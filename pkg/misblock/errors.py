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

from typing import Optional


class MisblockError(Exception):
    """Base class of every error raised by the package."""

    exit_code = 1


class ConfigurationError(MisblockError, ValueError):
    """Invalid parameters, incompatible options or mismatching model shapes."""

    exit_code = 2


class OracleComplexityError(ConfigurationError):
    """The ranking algorithm refuses an enumeration that is too large."""

    def __init__(self, n_subsets: int, limit: int) -> None:
        self.n_subsets = n_subsets
        self.limit = limit
        super().__init__(
            f"Refusing to enumerate {n_subsets} blocker subsets (limit is {limit}). "
            f"Use a smaller budget or sequential labels."
        )


class DataError(MisblockError):
    """A file or a generated artifact does not hold valid data."""

    exit_code = 3


class DecodeError(DataError):
    def __init__(self, field: str, message: str) -> None:
        """
        Parameters
        ----------
        field: str
            Name of the offending field of the decoded document.
        message: str
            Description of the problem.
        """
        self.field = field
        super().__init__(f"{field}: {message}")


class ParseError(DataError):
    def __init__(self, line: int, message: str) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}")


class GenerationError(DataError):
    def __init__(self, constraint: str, message: Optional[str] = None) -> None:
        self.constraint = constraint
        super().__init__(message or f"Could not satisfy constraint '{constraint}'.")


class ModelLoadError(DataError):
    """A model checkpoint cannot be loaded."""


class ContractViolation(MisblockError):
    """A caller (typically a planner) broke the contract of an operation."""

    exit_code = 4


class EvaluationFailed(ContractViolation):
    def __init__(self, failures: int, total: int) -> None:
        self.failures = failures
        self.total = total
        super().__init__(
            f"{failures} of {total} episodes failed, above the 1% tolerance."
        )


class UnderfullBufferError(MisblockError):
    def __init__(self, size: int, requested: int) -> None:
        self.size = size
        self.requested = requested
        super().__init__(
            f"Cannot sample {requested} transitions from a buffer holding {size}."
        )
