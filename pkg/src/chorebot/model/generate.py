"""Greedy autoregressive decoding with banned-token masking.

Banned ids are driven to -inf before every argmax, so they can never be
emitted regardless of their logits. An optional per-step constraint callback
turns the same mechanism into structure-constrained decoding (used when
re-trying malformed routing output).
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional

import numpy as np

from ..grammar import BOS, EOS, STOP, Vocabulary
from .config import EncodedBatch
from .network import Seq2SeqModel


class AllTokensBanned(RuntimeError):
    pass


Constraint = Callable[[int, list[int]], Optional[Iterable[int]]]


def generate(
    model: Seq2SeqModel,
    vocab: Vocabulary,
    batch: EncodedBatch,
    banned_ids: Iterable[int] = (),
    max_len: int = 24,
    constraint: Optional[Constraint] = None,
) -> str:
    """Decode greedily until the stop sentinel, end-of-sequence, or max_len."""
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    banned = sorted(set(banned_ids))
    bos_id = vocab.sentinel_id(BOS)
    eos_id = vocab.sentinel_id(EOS)
    stop_id = vocab.sentinel_id(STOP)

    enc_out, enc_mask = model.encode(batch)
    out_ids: list[int] = []
    for _ in range(max_len):
        dec_in = np.asarray([[bos_id] + out_ids], dtype=np.int64)
        logits = model.decode(enc_out, enc_mask, dec_in).data[0, -1].copy()
        if banned:
            logits[banned] = -np.inf
        if constraint is not None:
            allowed = constraint(len(out_ids), out_ids)
            if allowed is not None:
                keep = np.full_like(logits, -np.inf)
                allowed_ids = [i for i in allowed]
                keep[allowed_ids] = logits[allowed_ids]
                logits = keep
        if not np.isfinite(logits).any():
            raise AllTokensBanned("every vocabulary token is banned at this step")
        next_id = int(np.argmax(logits))
        out_ids.append(next_id)
        if next_id in (eos_id, stop_id):
            break
    if len(out_ids) > 1 and out_ids[-1] == eos_id:
        out_ids = out_ids[:-1]  # eos terminates decoding but is not output text
    return vocab.decode(out_ids)


def generate_batch(
    model: Seq2SeqModel,
    vocab: Vocabulary,
    batch: EncodedBatch,
    banned_ids: Iterable[int] = (),
    max_len: int = 24,
) -> list[str]:
    """Greedy decoding over a whole batch at once (evaluation fast path).

    Produces exactly what per-sample `generate` would, row by row.
    """
    banned = sorted(set(banned_ids))
    bos_id = vocab.sentinel_id(BOS)
    eos_id = vocab.sentinel_id(EOS)
    stop_id = vocab.sentinel_id(STOP)

    b = batch.batch_size
    enc_out, enc_mask = model.encode(batch)
    rows = np.full((b, 1), bos_id, dtype=np.int64)
    done = np.zeros(b, dtype=bool)
    outputs: list[list[int]] = [[] for _ in range(b)]
    for _ in range(max_len):
        logits = model.decode(enc_out, enc_mask, rows).data[:, -1, :].copy()
        if banned:
            logits[:, banned] = -np.inf
        if not np.isfinite(logits).any(axis=1).all():
            raise AllTokensBanned("every vocabulary token is banned at this step")
        next_ids = logits.argmax(axis=1)
        for i in range(b):
            if not done[i]:
                outputs[i].append(int(next_ids[i]))
                if next_ids[i] in (eos_id, stop_id):
                    done[i] = True
        rows = np.concatenate([rows, next_ids[:, None]], axis=1)
        if done.all():
            break
    return [vocab.decode(ids[:-1] if len(ids) > 1 and ids[-1] == eos_id else ids) for ids in outputs]
