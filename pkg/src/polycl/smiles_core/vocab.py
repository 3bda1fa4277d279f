"""Token vocabulary and corpus file IO.

Vocabulary file format: UTF-8 text, one token surface form per line, LF
line endings; the line number is the token id.  Ids 0-4 are reserved for
[PAD], [CLS], [SEP], [MASK], [UNK] in that order.  Corpus file format:
one polymer-SMILES per line, lines beginning with '#' ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from ..errors import DataError, UnknownTokenIdError
from .tokens import SPECIAL_TOKENS, UNK, Token, TokenSequence, tokenize

PAD_ID, CLS_ID, SEP_ID, MASK_ID, UNK_ID = range(5)

_SPECIAL_TEXTS = tuple(t.text for t in SPECIAL_TOKENS)
_SPECIAL_BY_TEXT = {t.text: t for t in SPECIAL_TOKENS}


@dataclass
class Vocabulary:
    """Bidirectional token-id table; ``tokens[i]`` is the surface form of
    id ``i``.  Unknown surface forms encode to UNK_ID."""

    tokens: list[str]
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if tuple(self.tokens[:5]) != _SPECIAL_TEXTS:
            raise DataError(
                "vocabulary must start with "
                + ", ".join(_SPECIAL_TEXTS)
                + " at ids 0-4"
            )
        if len(set(self.tokens)) != len(self.tokens):
            raise DataError("vocabulary contains duplicate tokens")
        self._index = {text: i for i, text in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, text: str) -> bool:
        return text in self._index

    def id_of(self, token: Token | str) -> int:
        text = token.text if isinstance(token, Token) else token
        return self._index.get(text, UNK_ID)

    def encode(self, seq: TokenSequence) -> list[int]:
        return [self.id_of(tok) for tok in seq]

    def surface(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.tokens):
            raise UnknownTokenIdError(
                f"token id {token_id} outside vocabulary of size {len(self.tokens)}"
            )
        return self.tokens[token_id]

    @classmethod
    def from_corpus(cls, corpus: Iterable[str]) -> "Vocabulary":
        """Vocabulary over every token surface form occurring in ``corpus``,
        ids assigned in sorted order starting at 5."""
        seen: set[str] = set()
        for text in corpus:
            seen.update(tok.text for tok in tokenize(text))
        return cls(list(_SPECIAL_TEXTS) + sorted(seen - set(_SPECIAL_TEXTS)))

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        text = Path(path).read_text(encoding="utf-8")
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if any(line == "" for line in lines):
            raise DataError(f"vocabulary file {path} contains a blank line")
        return cls(lines)


def token_from_surface(text: str) -> Token:
    """Token object for a vocabulary surface form (inverse of ``tok.text``)."""
    special = _SPECIAL_BY_TEXT.get(text)
    if special is not None:
        return special
    seq = tokenize(text)
    if len(seq) != 1:
        raise DataError(f"surface form {text!r} is not a single token")
    return seq[0]


def read_corpus(path: str | Path) -> list[str]:
    """Polymer-SMILES strings from a corpus file, one per line.

    Lines beginning with '#' and blank lines are skipped.  Strings are
    returned verbatim; parsing and validation happen downstream.
    """
    out: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            out.append(line)
    return out
