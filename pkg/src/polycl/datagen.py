"""Deterministic toy polymer generator for tests and desk-scale runs.

Repeat units are assembled recursively from backbone motifs (vinyl chains,
esters, amides, ethers, phenylene and cyclohexylene rings, gem-disubstituted
carbons) with small side groups, always terminated by "[*]" at both ends.
Everything is a pure function of its seed; corpora are deduplicated by
canonical form so molecules are pairwise non-isomorphic.

Property targets are a fixed linear rule over interpretable composition
features plus seeded Gaussian noise, so a learned regressor has real signal
to recover and tests can reason about the generating process.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .smiles_core import PolymerGraph, parse, write_canonical

_SIDE_GROUPS = (
    "C", "CC", "Cl", "F", "Br", "O", "OC", "N", "C#N",
    "c1ccccc1", "C(=O)OC", "C(C)C",
)

_CHAIN_MOTIFS = ("C", "CC", "O", "C=C", "C(=O)O", "C(=O)N", "CO")


def _ring_token(d: int) -> str:
    return str(d) if d <= 9 else f"%{d:02d}"


def _grow(rng: random.Random, rest: str, next_ring: int) -> tuple[str, int]:
    """One growth step; returns (text, next free ring digit).

    Ring digits are unique within a molecule, so a ring-bearing side group
    or wrap can never close against an enclosing ring's open digit.
    """
    kind = rng.randrange(8)
    if kind <= 1:
        return rng.choice(_CHAIN_MOTIFS) + rest, next_ring
    if kind <= 5:
        side = rng.choice(_SIDE_GROUPS)
        if "1" in side:
            side = side.replace("1", _ring_token(next_ring))
            next_ring += 1
        if kind <= 3:
            return f"C({side})" + rest, next_ring
        if kind == 4:
            return f"CC({side})" + rest, next_ring
        return f"C(C)({side})" + rest, next_ring
    digit = _ring_token(next_ring)
    next_ring += 1
    if kind == 6:
        # explicit single bond: an undecorated bond between two aromatic
        # atoms would read as aromatic and overvalence a biphenyl linkage
        return f"c{digit}ccc(-{rest})cc{digit}", next_ring
    return f"C{digit}CCC({rest})CC{digit}", next_ring


def make_repeat_unit(seed: int, min_units: int = 1, max_units: int = 4) -> str:
    """One random polymer repeat unit with exactly two attachment points."""
    rng = random.Random(seed)
    rest = "[*]"
    next_ring = 1
    for _ in range(rng.randint(min_units, max_units)):
        rest, next_ring = _grow(rng, rest, next_ring)
    return "[*]" + rest


def make_corpus(n: int, seed: int, min_units: int = 1, max_units: int = 4) -> list[str]:
    """``n`` pairwise non-isomorphic repeat units, deterministic in ``seed``."""
    rng = random.Random(seed)
    out: list[str] = []
    seen: set[str] = set()
    attempts = 0
    while len(out) < n:
        attempts += 1
        if attempts > 200 * n:
            raise RuntimeError(f"could not generate {n} distinct repeat units")
        text = make_repeat_unit(rng.getrandbits(63), min_units, max_units)
        canon = write_canonical(parse(text))
        if canon in seen:
            continue
        seen.add(canon)
        out.append(text)
    return out


def composition_features(g: PolymerGraph) -> list[float]:
    """Interpretable per-molecule features driving the synthetic targets:
    heavy-atom count, aromatic count, halogen count, oxygen+nitrogen count,
    ring count (cyclomatic number), and double/triple bond count."""
    halogens = sum(a.element in ("F", "Cl", "Br", "I") for a in g.atoms)
    aromatic = sum(a.aromatic for a in g.atoms)
    hetero = sum(a.element.upper() in ("O", "N") for a in g.atoms)
    heavy = sum(not a.is_attachment for a in g.atoms)
    rings = g.n_bonds - g.n_atoms + 1
    multi = sum(b.order.value in (2, 3) for b in g.bonds)
    return [float(heavy), float(aromatic), float(halogens), float(hetero),
            float(rings), float(multi)]


# Fixed generating rule: weights, intercept, and a mild nonlinearity so the
# target is learnable but not a trivial linear readout of token counts.
_TARGET_WEIGHTS = (0.35, 0.8, -1.1, 1.4, 2.0, 0.6)
_TARGET_BIAS = 3.0


def target_value(g: PolymerGraph) -> float:
    feats = composition_features(g)
    linear = _TARGET_BIAS + sum(w * f for w, f in zip(_TARGET_WEIGHTS, feats))
    return linear + 0.5 * math.tanh(feats[0] / 8.0)


@dataclass(frozen=True)
class PropertyExample:
    smiles: str
    value: float


def make_property_dataset(
    corpus: list[str], seed: int, noise: float = 0.1
) -> list[PropertyExample]:
    """Synthetic regression targets for ``corpus`` under the fixed rule,
    with seeded Gaussian noise of standard deviation ``noise``."""
    rng = random.Random(seed)
    return [
        PropertyExample(s, target_value(parse(s)) + noise * rng.gauss(0.0, 1.0))
        for s in corpus
    ]
