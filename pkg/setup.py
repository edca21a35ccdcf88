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

from setuptools import setup

with open("README.md", "r", encoding="utf8") as fh:
    long_description = fh.read()

setup(
    name="misblock",
    version="0.1.0",
    description="Learned and exact blocker selection against misinformation on opinion networks.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=[
        "misblock",
        "misblock.models",
        "misblock.models._utilities",
    ],
    classifiers=[
        "License :: OSI Approved :: Apache Software License",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.22",
        "networkx>=2.8",
        "pandas>=1.4",
        "scipy>=1.8",
        "tqdm>=4.62",
    ],
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["misblock=misblock.cli:main"]},
    license="LICENSE",
)
