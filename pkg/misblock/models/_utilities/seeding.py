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

import zlib
from typing import List, Union

import numpy as np

Key = Union[int, str]

_UINT64 = (1 << 64) - 1


def _entropy(seed: int, keys: tuple) -> List[int]:
    entropy = [seed & _UINT64]
    for key in keys:
        if isinstance(key, str):
            key = zlib.crc32(key.encode("utf-8"))
        entropy.append(int(key) & _UINT64)
    return entropy


def seed_sequence(seed: int, *keys: Key) -> np.random.SeedSequence:
    """Seed sequence of the stream identified by a master seed and a path of keys.

    Parameters
    ----------
    seed: int
        The master seed (any 64-bit integer, negative values are wrapped).
    keys: int|str
        Identifiers of the sub-stream (episode index, planner id, ...).
        Strings are hashed with CRC32 so that the mapping is stable across runs.

    Returns
    -------
    sequence: SeedSequence
    """
    return np.random.SeedSequence(_entropy(seed, keys))


def make_rng(seed: int, *keys: Key) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, *keys))


def derive_seed(seed: int, *keys: Key) -> int:
    """A non-negative 63-bit seed derived from a master seed and keys."""
    state = seed_sequence(seed, *keys).generate_state(1, dtype=np.uint64)
    return int(state[0]) >> 1
