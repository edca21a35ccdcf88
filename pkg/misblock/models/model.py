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
from json.decoder import JSONDecodeError
from typing import Any, Dict, Type, TypeVar

from misblock.errors import DecodeError

M = TypeVar("M", bound="Model")


class Model:
    """Base class of the value types that have a JSON representation.

    Subclasses implement `to_dict` and `from_dict`; the JSON plumbing and the
    decoding errors are shared.
    """

    def to_dict(self) -> Dict[str, Any]:
        raise NotImplementedError

    @classmethod
    def from_dict(cls: Type[M], attributes: Dict[str, Any]) -> M:
        raise NotImplementedError

    def to_json(self, **dump_parameters: Any) -> str:
        return json.dumps(self.to_dict(), **dump_parameters)

    @classmethod
    def from_json(cls: Type[M], content: str) -> M:
        try:
            attributes = json.loads(content)
        except JSONDecodeError as e:
            raise DecodeError("document", f"malformed JSON ({e.msg})") from e
        if not isinstance(attributes, dict):
            raise DecodeError("document", "expected a JSON object")
        return cls.from_dict(attributes)

    @property
    def callback_identifier(self) -> str:
        return self.__class__.__name__.lower()

    def __str__(self) -> str:
        return f"[{self.callback_identifier}]"
