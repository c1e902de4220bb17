#!/usr/bin/env python3
# Copyright 2026 The condsim Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the binary golden files with nothing but the struct module.

These files are produced independently of the C++ writers, so reading them
back in the engine checks byte-level format conformance in both directions.
Run from this directory: python3 make_golden.py
"""

import json
import math
import os
import struct

HERE = os.path.dirname(os.path.abspath(__file__))


def embedding_bytes(rows):
    count, dim = len(rows), len(rows[0])
    out = b"CLAYEMB1" + struct.pack("<III", 1, count, dim)
    for row in rows:
        out += struct.pack("<%df" % dim, *row)
    return out


def subspace_bytes(mu, basis_columns, names, sigma):
    dim, k = len(mu), len(basis_columns)
    out = b"CLAYSUB1" + struct.pack("<IIII", 1, dim, k, len(names))
    for name in names:
        raw = name.encode("utf-8")
        out += struct.pack("<I", len(raw)) + raw
    out += struct.pack("<%dd" % dim, *mu)
    for col in basis_columns:
        out += struct.pack("<%dd" % dim, *col)
    out += struct.pack("<I", len(sigma)) + struct.pack("<%dd" % len(sigma), *sigma)
    return out


def unit(v):
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def write(name, data):
    path = os.path.join(HERE, name)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode) as f:
        f.write(data)


TINY_ROWS = [
    [0.6, 0.8, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.5, 0.5, 0.5, 0.5],
]

EXPORT_IMAGES = [unit([1.0, 0.1 * i, 0.05 * i * i, -0.2]) for i in range(4)]
EXPORT_PROMPTS = [unit([0.9, 0.2, 0.1 * j, 0.3 - 0.1 * j]) for j in range(3)]


def main():
    write("tiny_embeddings.emb", embedding_bytes(TINY_ROWS))
    write(
        "tiny_subspace.sub",
        subspace_bytes(
            mu=[1.0, 0.0, 0.0, 0.0],
            basis_columns=[[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
            names=["color", "shape"],
            sigma=[2.0, 1.0, 0.5],
        ),
    )
    manifest = {
        "items": [
            {"id": "img_%d" % i, "labels": {"flower": ["rose", "tulip"][i % 2]}}
            for i in range(len(EXPORT_IMAGES))
        ],
        "attributes": [{"name": "flower", "values": ["rose", "tulip"]}],
        "source": "golden export, struct writer",
    }
    write("export/images.emb", embedding_bytes(EXPORT_IMAGES))
    write("export/manifest.json", json.dumps(manifest, indent=2) + "\n")
    write("export/prompts/flower.emb", embedding_bytes(EXPORT_PROMPTS))
    write(
        "export/prompts/flower.txt",
        "".join("a photo of a flower #%d\n" % j for j in range(len(EXPORT_PROMPTS))),
    )


if __name__ == "__main__":
    main()
