"""Tokenization and vocabulary shared by the encoders, decoder, and metrics.

Convention: text is lowercased and split into maximal runs of [a-z0-9_];
everything else (whitespace, punctuation) separates tokens and is dropped.
"""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[a-z0-9_]+")

PAD = "[pad]"
UNK = "[unk]"
CLS = "[cls]"
DECODE = "[decode]"
ENCODE = "[encode]"
EOS = "[eos]"

SPECIALS = (PAD, UNK, CLS, DECODE, ENCODE, EOS)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class Vocab:
    """Token <-> id table with fixed special tokens at the front."""

    def __init__(self, tokens: list[str]):
        self.tokens = list(SPECIALS) + [t for t in tokens if t not in SPECIALS]
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        self._ids = {t: i for i, t in enumerate(self.tokens)}
        self.pad_id = self._ids[PAD]
        self.unk_id = self._ids[UNK]
        self.cls_id = self._ids[CLS]
        self.decode_id = self._ids[DECODE]
        self.encode_id = self._ids[ENCODE]
        self.eos_id = self._ids[EOS]

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def encode(self, text: str) -> list[int]:
        return [self._ids.get(t, self.unk_id) for t in tokenize(text)]

    def decode(self, ids: list[int]) -> str:
        words = []
        for i in ids:
            if not 0 <= i < len(self.tokens):
                raise ValueError(f"token id {i} out of range for vocab of {len(self.tokens)}")
            t = self.tokens[i]
            if t not in SPECIALS:
                words.append(t)
        return " ".join(words)

    @classmethod
    def build(cls, texts) -> "Vocab":
        seen: dict[str, None] = {}
        for text in texts:
            for t in tokenize(text):
                seen.setdefault(t)
        return cls(sorted(seen))

    @classmethod
    def from_file(cls, path) -> "Vocab":
        with open(path) as f:
            tokens = [line.rstrip("\n") for line in f if line.strip()]
        if tokens[: len(SPECIALS)] != list(SPECIALS):
            raise ValueError(f"{path}: vocabulary must start with {SPECIALS}")
        return cls(tokens[len(SPECIALS) :])

    def to_file(self, path) -> None:
        with open(path, "w") as f:
            for t in self.tokens:
                f.write(t + "\n")
