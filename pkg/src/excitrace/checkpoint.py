"""Plain-text parameter checkpoints with bit-exact float round trips.

Layout: ``#``-prefixed header lines holding JSON values, then one line per
state with its parameters as ``float.hex`` tokens.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = "# excitrace checkpoint v1"


@dataclass
class Checkpoint:
    params: np.ndarray  # shape (ns, n_params)
    family: dict
    seed: list
    config_text: str
    extra: dict

    @property
    def ns(self):
        return self.params.shape[0]


def write_checkpoint(path, params, family, seed, config_text, extra=None):
    params = np.atleast_2d(np.asarray(params, dtype=np.float64))
    lines = [
        MAGIC,
        "# family: " + json.dumps(family, sort_keys=True),
        "# seed: " + json.dumps(list(seed)),
        "# shape: " + json.dumps(list(params.shape)),
        "# config: " + json.dumps(config_text),
        "# extra: " + json.dumps(extra or {}, sort_keys=True),
    ]
    lines += [" ".join(float(v).hex() for v in row) for row in params]
    Path(path).write_text("\n".join(lines) + "\n")


def read_checkpoint(path):
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or lines[0] != MAGIC:
        raise ValueError(f"{path} is not a checkpoint file")
    header = {}
    body = []
    for line in lines[1:]:
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            header[key] = json.loads(value)
        elif line.strip():
            body.append([float.fromhex(tok) for tok in line.split()])
    for key in ("family", "seed", "shape", "config"):
        if key not in header:
            raise ValueError(f"checkpoint {path} lacks the {key!r} header")
    params = np.array(body, dtype=np.float64).reshape(header["shape"])
    return Checkpoint(params, header["family"], header["seed"], header["config"], header.get("extra", {}))
