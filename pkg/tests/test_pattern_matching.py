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

from collections import namedtuple
from typing import Type

from misblock.models._utilities.pattern_matching import resolve_pattern


class TestPatternMatching:
    def get_dataset_type(self) -> Type:
        return namedtuple("dataset", ["out", "case", "n", "k"])

    def test_no_iterable_pattern(self) -> None:
        spec = self.get_dataset_type()(out="data", case=1, n=10, k=2)
        resolved = resolve_pattern("{out}/case{case}/n{n}/d{k}.jsonl", spec)

        assert resolved == ["data/case1/n10/d2.jsonl"]

    def test_single_iterable_pattern(self) -> None:
        spec = self.get_dataset_type()(out="data", case=1, n=10, k=[1, 2, 3])
        resolved = resolve_pattern("{out}/n{n}/d{k}.jsonl", spec)

        assert resolved == ["data/n10/d1.jsonl", "data/n10/d2.jsonl", "data/n10/d3.jsonl"]

    def test_product_order(self) -> None:
        spec = self.get_dataset_type()(out="data", case=1, n=[10, 20], k=[1, 2])
        resolved = resolve_pattern("n{n}/d{k}", spec)

        assert resolved == ["n10/d1", "n10/d2", "n20/d1", "n20/d2"]

    def test_mapping_source_and_missing_name(self) -> None:
        resolved = resolve_pattern("{out}/{missing}", {"out": "data"})

        assert resolved == ["data/_"]

    def test_string_is_not_iterated(self) -> None:
        spec = self.get_dataset_type()(out="abc", case=1, n=10, k=1)
        assert resolve_pattern("{out}", spec) == ["abc"]

    def test_no_placeholder(self) -> None:
        spec = self.get_dataset_type()(out="data", case=1, n=[10, 20], k=1)
        resolved = resolve_pattern("no_placeholder", spec)

        assert resolved == ["no_placeholder"]
