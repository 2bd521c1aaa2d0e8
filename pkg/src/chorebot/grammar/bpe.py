"""Byte-level BPE vocabulary with atomic reserved sentinel tokens.

Text is split on reserved tokens first; the remainder is byte-level BPE over
whitespace-delimited pre-tokens (a single leading space attaches to the
following word). Reserved tokens occupy fixed low ids, then the 256 byte
tokens, then one id per merge, so ids are stable across save/load.
"""

from __future__ import annotations

import hashlib
import re
from collections import Counter, defaultdict
from pathlib import Path
from typing import Iterable

from .sentinels import ALL_SENTINELS

_PRETOKEN_RE = re.compile(r" ?\S+|\s+")

DEFAULT_TARGET_SIZE = 2048
PAPER_TARGET_SIZE = 10_000


class VocabularyError(ValueError):
    pass


class Vocabulary:
    def __init__(self, merges: list[tuple[bytes, bytes]], reserved: tuple[str, ...] = ALL_SENTINELS):
        self.reserved = tuple(reserved)
        self.merges = list(merges)
        self._tokens: list[object] = list(self.reserved) + [bytes([b]) for b in range(256)]
        for left, right in self.merges:
            self._tokens.append(left + right)
        self.token_to_id: dict[object, int] = {tok: i for i, tok in enumerate(self._tokens)}
        if len(self.token_to_id) != len(self._tokens):
            raise VocabularyError("duplicate tokens in vocabulary")
        self._merge_rank = {pair: r for r, pair in enumerate(self.merges)}
        self._splitter = re.compile(
            "(" + "|".join(re.escape(t) for t in sorted(self.reserved, key=len, reverse=True)) + ")"
        )
        self._cache: dict[str, tuple[int, ...]] = {}

    # -- basic properties ---------------------------------------------------

    def __len__(self) -> int:
        return len(self._tokens)

    @property
    def size(self) -> int:
        return len(self._tokens)

    def sentinel_id(self, token: str) -> int:
        if token not in self.token_to_id or not isinstance(token, str):
            raise KeyError(f"not a reserved token: {token!r}")
        return self.token_to_id[token]

    @property
    def reserved_ids(self) -> frozenset[int]:
        return frozenset(self.token_to_id[t] for t in self.reserved)

    def token_text(self, token_id: int) -> str:
        tok = self._tokens[token_id]
        if isinstance(tok, str):
            return tok
        return tok.decode("utf-8", errors="replace")

    # -- encode / decode ----------------------------------------------------

    def encode(self, text: str) -> list[int]:
        ids: list[int] = []
        for part in self._splitter.split(text):
            if not part:
                continue
            if part in self.token_to_id and isinstance(part, str):
                ids.append(self.token_to_id[part])
                continue
            for unit in _PRETOKEN_RE.findall(part):
                ids.extend(self._encode_unit(unit))
        return ids

    def _encode_unit(self, unit: str) -> tuple[int, ...]:
        cached = self._cache.get(unit)
        if cached is not None:
            return cached
        parts = [bytes([b]) for b in unit.encode("utf-8")]
        while len(parts) > 1:
            best_rank = None
            best_index = -1
            for i in range(len(parts) - 1):
                rank = self._merge_rank.get((parts[i], parts[i + 1]))
                if rank is not None and (best_rank is None or rank < best_rank):
                    best_rank, best_index = rank, i
            if best_rank is None:
                break
            parts[best_index: best_index + 2] = [parts[best_index] + parts[best_index + 1]]
        ids = tuple(self.token_to_id[p] for p in parts)
        if len(self._cache) < 65536:
            self._cache[unit] = ids
        return ids

    def decode(self, ids: Iterable[int]) -> str:
        out: list[str] = []
        buffer = bytearray()
        for i in ids:
            tok = self._tokens[i]
            if isinstance(tok, str):
                if buffer:
                    out.append(buffer.decode("utf-8", errors="replace"))
                    buffer = bytearray()
                out.append(tok)
            else:
                buffer.extend(tok)
        if buffer:
            out.append(buffer.decode("utf-8", errors="replace"))
        return "".join(out)

    # -- persistence ----------------------------------------------------------

    def dumps(self) -> str:
        lines = ["#bpe-v1", "#reserved"]
        lines.extend(self.reserved)
        lines.append("#merges")
        for left, right in self.merges:
            lines.append(f"{left.hex()} {right.hex()}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "Vocabulary":
        lines = text.splitlines()
        if not lines or lines[0] != "#bpe-v1":
            raise VocabularyError("missing #bpe-v1 header")
        if lines[1] != "#reserved":
            raise VocabularyError("expected #reserved section")
        reserved: list[str] = []
        i = 2
        while i < len(lines) and lines[i] != "#merges":
            reserved.append(lines[i])
            i += 1
        if i == len(lines):
            raise VocabularyError("expected #merges section")
        merges: list[tuple[bytes, bytes]] = []
        for line in lines[i + 1:]:
            if not line.strip():
                continue
            left_hex, right_hex = line.split()
            merges.append((bytes.fromhex(left_hex), bytes.fromhex(right_hex)))
        return cls(merges, tuple(reserved))

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.loads(Path(path).read_text())

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()[:16]


def train_bpe(
    corpus: Iterable[str],
    target_size: int = DEFAULT_TARGET_SIZE,
    reserved: tuple[str, ...] = ALL_SENTINELS,
) -> Vocabulary:
    """Greedy highest-frequency pair merging until the vocabulary reaches
    `target_size`. Reserved tokens never participate in merges.

    Ties break on the lexicographically smallest pair so training is
    deterministic for a given corpus.
    """
    base = len(reserved) + 256
    if target_size < base:
        raise VocabularyError(f"target size {target_size} below base alphabet + reserved ({base})")

    splitter = re.compile("|".join(re.escape(t) for t in sorted(reserved, key=len, reverse=True)))
    unit_counts: Counter[str] = Counter()
    empty = True
    for line in corpus:
        empty = False
        for part in splitter.split(line):
            for unit in _PRETOKEN_RE.findall(part):
                unit_counts[unit] += 1
    if empty:
        raise VocabularyError("empty corpus")

    units: list[list[bytes]] = []
    counts: list[int] = []
    for unit, n in sorted(unit_counts.items()):
        units.append([bytes([b]) for b in unit.encode("utf-8")])
        counts.append(n)

    pair_counts: Counter[tuple[bytes, bytes]] = Counter()
    pair_units: defaultdict[tuple[bytes, bytes], set[int]] = defaultdict(set)
    for ui, parts in enumerate(units):
        for a, b in zip(parts, parts[1:]):
            pair_counts[(a, b)] += counts[ui]
            pair_units[(a, b)].add(ui)

    merges: list[tuple[bytes, bytes]] = []
    while base + len(merges) < target_size and pair_counts:
        best = max(pair_counts.items(), key=lambda kv: (kv[1], kv[0]))[0]
        merges.append(best)
        merged = best[0] + best[1]
        for ui in list(pair_units[best]):
            parts = units[ui]
            n = counts[ui]
            for a, b in zip(parts, parts[1:]):
                pair_counts[(a, b)] -= n
                if pair_counts[(a, b)] <= 0:
                    del pair_counts[(a, b)]
                pair_units[(a, b)].discard(ui)
            i = 0
            while i < len(parts) - 1:
                if parts[i] == best[0] and parts[i + 1] == best[1]:
                    parts[i: i + 2] = [merged]
                else:
                    i += 1
            for a, b in zip(parts, parts[1:]):
                pair_counts[(a, b)] += n
                pair_units[(a, b)].add(ui)
    return Vocabulary(merges, reserved)
