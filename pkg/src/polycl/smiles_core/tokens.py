"""Polymer-SMILES token layer: lexing, tokenize/detokenize, special tokens.

The lexer is longest-match regular lexing over an explicit token table (see
docs/token_grammar.md).  Supported surface forms:

- organic-subset atoms  B C N O P S F Cl Br I  and aromatic  b c n o p s
- bracket atoms ``[...]`` (isotope, element, chirality, H count, charge),
  always one token per bracket
- the attachment point ``[*]``, one token
- bond symbols  - = # : / \\
- branches ``(`` ``)``
- ring closures ``0``-``9`` and ``%nn``

Anything else is rejected with a byte offset; there is no silent acceptance.
Special tokens (PAD/CLS/SEP/MASK/UNK) are never produced by :func:`tokenize`;
they exist for the encoder's input preparation and for masking augmentation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from ..errors import SmilesSyntaxError


class TokenKind(Enum):
    ATOM = "atom"
    BOND = "bond"
    BRANCH_OPEN = "branch_open"
    BRANCH_CLOSE = "branch_close"
    RING = "ring"
    ATTACHMENT = "attachment"
    SPECIAL = "special"


@dataclass(frozen=True)
class Token:
    """One lexical token; ``text`` is its exact surface form."""

    kind: TokenKind
    text: str

    def __repr__(self) -> str:  # compact in test failures
        return f"Token({self.text!r})"


# A token sequence is an immutable tuple so augmented views can be compared
# and reconstructed bit-exactly.
TokenSequence = tuple[Token, ...]

PAD = Token(TokenKind.SPECIAL, "[PAD]")
CLS = Token(TokenKind.SPECIAL, "[CLS]")
SEP = Token(TokenKind.SPECIAL, "[SEP]")
MASK = Token(TokenKind.SPECIAL, "[MASK]")
UNK = Token(TokenKind.SPECIAL, "[UNK]")

#: Reserved vocabulary entries, ids 0..4 in this order.
SPECIAL_TOKENS: TokenSequence = (PAD, CLS, SEP, MASK, UNK)

ORGANIC_SUBSET = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
AROMATIC_ORGANIC = ("b", "c", "n", "o", "p", "s")
BOND_CHARS = "-=#:/\\"

# Longest-match token table; order matters ([*] before generic brackets,
# Cl/Br before C/B, %nn before bare digits).
_TOKEN_RE = re.compile(
    r"(?P<attach>\[\*\])"
    r"|(?P<bracket>\[[^\[\]]*\])"
    r"|(?P<atom>Cl|Br|[BCNOPSFI]|[bcnops])"
    r"|(?P<ring>%\d\d|\d)"
    r"|(?P<bond>[-=#:/\\])"
    r"|(?P<open>\()"
    r"|(?P<close>\))"
)

# Shape of a bracket-atom interior: isotope, element symbol, chirality,
# hydrogen count, charge.  Element validity is checked by the parser.
BRACKET_RE = re.compile(
    r"^(?P<isotope>\d+)?"
    r"(?P<symbol>[A-Z][a-z]?|[a-z])"
    r"(?P<chiral>@@?)?"
    r"(?P<hcount>H\d*)?"
    r"(?P<charge>\+\+|--|[+-]\d*)?$"
)

_KIND_BY_GROUP = {
    "attach": TokenKind.ATTACHMENT,
    "bracket": TokenKind.ATOM,
    "atom": TokenKind.ATOM,
    "ring": TokenKind.RING,
    "bond": TokenKind.BOND,
    "open": TokenKind.BRANCH_OPEN,
    "close": TokenKind.BRANCH_CLOSE,
}


def lex(text: str) -> list[tuple[Token, int]]:
    """Lex ``text`` into ``(token, byte offset)`` pairs.

    Raises SmilesSyntaxError on empty input, whitespace, or any character
    not covered by the token table.
    """
    if not text:
        raise SmilesSyntaxError("empty polymer-SMILES", 0)
    out: list[tuple[Token, int]] = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch.isspace():
            raise SmilesSyntaxError("whitespace is not allowed", pos)
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if ch == "[":
                raise SmilesSyntaxError("unclosed bracket atom", pos)
            raise SmilesSyntaxError(f"unexpected character {ch!r}", pos)
        group = m.lastgroup
        surface = m.group()
        if group == "bracket" and BRACKET_RE.match(surface[1:-1]) is None:
            raise SmilesSyntaxError(f"malformed bracket atom {surface!r}", pos)
        out.append((Token(_KIND_BY_GROUP[group], surface), pos))
        pos = m.end()
    return out


def tokenize(text: str) -> TokenSequence:
    """Split a polymer-SMILES string into tokens.

    Concatenating the token texts reproduces the input exactly.
    """
    return tuple(tok for tok, _ in lex(text))


def detokenize(seq: TokenSequence) -> str:
    """Inverse of :func:`tokenize`; MASK renders as the literal ``[MASK]``.

    Special tokens other than MASK have no surface form in a SMILES string
    and are rejected.
    """
    for tok in seq:
        if tok.kind is TokenKind.SPECIAL and tok != MASK:
            raise ValueError(f"cannot detokenize special token {tok.text}")
    return "".join(tok.text for tok in seq)


def ring_number(tok: Token) -> int:
    """Ring-closure index of a RING token (``7`` or ``%23``)."""
    return int(tok.text[1:]) if tok.text.startswith("%") else int(tok.text)
