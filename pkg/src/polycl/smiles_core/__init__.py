"""Polymer-SMILES parsing, canonicalization, enumeration, and tokenization."""

from .canonical import EXACT_TIEBREAK_LIMIT, enumerate_random, write_canonical
from .graph import Atom, Bond, BondOrder, PolymerGraph, default_order, parse
from .tokens import (
    CLS,
    MASK,
    PAD,
    SEP,
    SPECIAL_TOKENS,
    UNK,
    Token,
    TokenKind,
    TokenSequence,
    detokenize,
    lex,
    ring_number,
    tokenize,
)
from .vocab import (
    CLS_ID,
    MASK_ID,
    PAD_ID,
    SEP_ID,
    UNK_ID,
    Vocabulary,
    read_corpus,
    token_from_surface,
)

__all__ = [
    "Atom",
    "Bond",
    "BondOrder",
    "CLS",
    "CLS_ID",
    "EXACT_TIEBREAK_LIMIT",
    "MASK",
    "MASK_ID",
    "PAD",
    "PAD_ID",
    "PolymerGraph",
    "SEP",
    "SEP_ID",
    "SPECIAL_TOKENS",
    "Token",
    "TokenKind",
    "TokenSequence",
    "UNK",
    "UNK_ID",
    "Vocabulary",
    "default_order",
    "detokenize",
    "enumerate_random",
    "lex",
    "parse",
    "read_corpus",
    "ring_number",
    "token_from_surface",
    "tokenize",
    "write_canonical",
]
