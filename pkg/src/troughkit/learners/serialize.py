"""Versioned flat key-value text format for fitted-model handoff.

One `key=value` pair per line after a magic header.  Values are strings;
float arrays are comma-joined reprs, so a write/read round trip is exact.
"""

from __future__ import annotations

import numpy as np

MAGIC = "troughkit-model v1"


def encode_floats(arr) -> str:
    return ",".join(repr(float(v)) for v in np.asarray(arr).ravel())


def decode_floats(text: str) -> np.ndarray:
    if text == "":
        return np.array([])
    return np.array([float(tok) for tok in text.split(",")])


def write_kv(path, items: dict) -> None:
    with open(path, "w") as fh:
        fh.write(MAGIC + "\n")
        for key in items:
            value = items[key]
            if "\n" in key or "=" in key:
                raise ValueError(f"illegal key {key!r}")
            fh.write(f"{key}={value}\n")


def read_kv(path) -> dict:
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != MAGIC:
            raise ValueError(f"{path}: not a model file (header {header!r})")
        items = {}
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            key, _, value = line.partition("=")
            items[key] = value
    return items
