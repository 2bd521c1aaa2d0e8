"""Checkpoint files: a compressed numeric container with embedded config.

Layout: one array per parameter under its dotted name, plus three metadata
entries — `__config__` (JSON), `__vocab_digest__`, and `__step__`. Loading
reproduces forward outputs bit-for-bit because parameters are stored as
float64 without conversion.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .autodiff import parameter
from .config import ModelConfig
from .network import Seq2SeqModel


class CheckpointError(ValueError):
    pass


def save_checkpoint(model: Seq2SeqModel, path: str | Path, vocab_digest: str = "") -> None:
    arrays = {name: p.data for name, p in model.params.items()}
    arrays["__config__"] = np.frombuffer(json.dumps(model.config.to_json()).encode(), dtype=np.uint8)
    arrays["__vocab_digest__"] = np.frombuffer(vocab_digest.encode(), dtype=np.uint8)
    arrays["__step__"] = np.asarray([model.step_counter], dtype=np.int64)
    np.savez_compressed(path, **arrays)


def load_checkpoint(path: str | Path) -> tuple[Seq2SeqModel, str]:
    with np.load(path) as data:
        if "__config__" not in data:
            raise CheckpointError(f"{path}: not a model checkpoint")
        config = ModelConfig.from_json(json.loads(bytes(data["__config__"]).decode()))
        vocab_digest = bytes(data["__vocab_digest__"]).decode()
        model = Seq2SeqModel(config, seed=0)
        for name in model.params:
            if name not in data:
                raise CheckpointError(f"{path}: missing parameter {name}")
            model.params[name] = parameter(data[name])
        model.step_counter = int(data["__step__"][0])
    return model, vocab_digest
