"""Canonical and randomized polymer-SMILES writing.

``write_canonical`` produces one deterministic string per attributed-graph
isomorphism class: Morgan-style iterative refinement of atom invariants
(element, degree, charge, explicit H count, attachment flag, neighbor bond
orders), then a lowest-label depth-first write.  When refinement leaves tied
atoms, graphs of up to :data:`EXACT_TIEBREAK_LIMIT` atoms take the minimum
string over every refinement-tree leaf labeling, which is exact; larger
graphs individualize the lowest-index member of the first tied cell and
re-refine, a fast heuristic that is exact whenever tied cells are
automorphism orbits (true for molecule-like graphs).

``enumerate_random`` writes the same graph from a uniformly random start
atom with uniformly random neighbor ordering, reproducible from its seed.

Neither writer emits isotope labels or stereo annotations; those are
carried by the graph but excluded from identity.
"""

from __future__ import annotations

import heapq
import random
from collections import defaultdict
from typing import Callable

from .graph import BOND_SYMBOL, PolymerGraph, default_order
from .tokens import AROMATIC_ORGANIC, ORGANIC_SUBSET

#: Largest atom count for which tie-breaking explores every leaf labeling.
EXACT_TIEBREAK_LIMIT = 16

_BARE_WRITABLE = frozenset(ORGANIC_SUBSET) | frozenset(AROMATIC_ORGANIC)

_NeighborOrder = Callable[[int, list[int]], list[int]]


def _atom_text(g: PolymerGraph, u: int) -> str:
    a = g.atoms[u]
    if a.is_attachment:
        return "[*]"
    if a.charge == 0 and a.hcount == 0 and a.element in _BARE_WRITABLE:
        return a.element
    h = "" if a.hcount == 0 else ("H" if a.hcount == 1 else f"H{a.hcount}")
    if a.charge == 0:
        c = ""
    elif a.charge == 1:
        c = "+"
    elif a.charge == -1:
        c = "-"
    else:
        c = f"{a.charge:+d}"
    return f"[{a.element}{h}{c}]"


def _bond_text(g: PolymerGraph, u: int, v: int) -> str:
    order = g.bond_between(u, v).order
    if order is default_order(g, u, v):
        return ""
    return BOND_SYMBOL[order]


def _digit_text(digit: int) -> str:
    if digit < 10:
        return str(digit)
    if digit < 100:
        return f"%{digit:02d}"
    raise RuntimeError("more than 99 simultaneously open ring closures")


def _spanning_order(
    g: PolymerGraph, start: int, order_neighbors: _NeighborOrder
) -> tuple[list[int], list[list[int]], list[tuple[int, int]]]:
    """Depth-first visit order, tree children per atom, and non-tree edges."""
    n = g.n_atoms
    visited = [False] * n
    children: list[list[int]] = [[] for _ in range(n)]
    back: list[tuple[int, int]] = []
    seen_pairs: set[frozenset[int]] = set()
    order: list[int] = []
    stack: list[tuple[int, int]] = [(-1, start)]
    while stack:
        p, u = stack.pop()
        if visited[u]:
            pair = frozenset((p, u))
            if pair not in seen_pairs:
                seen_pairs.add(pair)
                back.append((p, u))
            continue
        visited[u] = True
        order.append(u)
        if p >= 0:
            children[p].append(u)
        nbrs = [v for v in g.neighbors(u) if v != p]
        for v in reversed(order_neighbors(u, nbrs)):
            stack.append((u, v))
    return order, children, back


def _ring_texts(
    g: PolymerGraph, order: list[int], back: list[tuple[int, int]]
) -> dict[int, list[str]]:
    """Ring-closure digit strings per atom, in emission order.

    Digits are allocated smallest-free-first at the opening (earlier-visited)
    end, where any non-default bond symbol is also written; a digit becomes
    reusable after the atom that closes it.
    """
    visit_index = {u: i for i, u in enumerate(order)}
    opens_at: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for a, b in back:
        opening, closing = sorted((a, b), key=visit_index.__getitem__)
        opens_at[opening].append((visit_index[closing], closing))
    free = list(range(1, 100))
    heapq.heapify(free)
    pending: dict[int, list[tuple[int, int]]] = defaultdict(list)
    texts: dict[int, list[str]] = defaultdict(list)
    for u in order:
        closures = sorted(pending.pop(u, []))
        for digit, _ in closures:
            texts[u].append(_digit_text(digit))
        for _, closing in sorted(opens_at.get(u, [])):
            if not free:
                raise RuntimeError("more than 99 simultaneously open ring closures")
            digit = heapq.heappop(free)
            texts[u].append(_bond_text(g, u, closing) + _digit_text(digit))
            pending[closing].append((digit, u))
        for digit, _ in closures:
            heapq.heappush(free, digit)
    return texts


def _write(g: PolymerGraph, start: int, order_neighbors: _NeighborOrder) -> str:
    order, children, back = _spanning_order(g, start, order_neighbors)
    ring_texts = _ring_texts(g, order, back)
    out: list[str] = []
    work: list[tuple[str, int, str]] = [("atom", start, "")]
    while work:
        kind, u, text = work.pop()
        if kind == "lit":
            out.append(text)
            continue
        out.append(text)
        out.append(_atom_text(g, u))
        out.extend(ring_texts.get(u, ()))
        kids = children[u]
        items: list[tuple[str, int, str]] = []
        for i, v in enumerate(kids):
            last = i == len(kids) - 1
            if not last:
                items.append(("lit", 0, "("))
            items.append(("atom", v, _bond_text(g, u, v)))
            if not last:
                items.append(("lit", 0, ")"))
        work.extend(reversed(items))
    return "".join(out)


def _dense_rank(keys: list) -> list[int]:
    by_key = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [by_key[k] for k in keys]


def _initial_ranks(g: PolymerGraph) -> list[int]:
    keys = [
        (a.is_attachment, a.element, a.charge, a.hcount, g.degree(i))
        for i, a in enumerate(g.atoms)
    ]
    return _dense_rank(keys)


def _refine(g: PolymerGraph, ranks: list[int]) -> list[int]:
    """Split rank classes by neighbor (bond order, rank) multisets until
    the partition stops changing.  Classes only ever split, never merge."""
    n_classes = len(set(ranks))
    while True:
        keys = [
            (
                ranks[i],
                tuple(
                    sorted(
                        (g.bond_between(i, j).order.value, ranks[j])
                        for j in g.neighbors(i)
                    )
                ),
            )
            for i in range(g.n_atoms)
        ]
        new = _dense_rank(keys)
        new_classes = len(set(new))
        if new_classes == n_classes:
            return new
        ranks, n_classes = new, new_classes


def _individualize(ranks: list[int], target: int) -> list[int]:
    return _dense_rank([(r, i != target) for i, r in enumerate(ranks)])


def _first_tied_cell(ranks: list[int]) -> list[int] | None:
    members: dict[int, list[int]] = defaultdict(list)
    for i, r in enumerate(ranks):
        members[r].append(i)
    for r in sorted(members):
        if len(members[r]) > 1:
            return members[r]
    return None


def _write_labeled(g: PolymerGraph, labels: list[int]) -> str:
    start = labels.index(min(labels))
    return _write(g, start, lambda _u, nbrs: sorted(nbrs, key=labels.__getitem__))


def write_canonical(g: PolymerGraph) -> str:
    """Deterministic canonical polymer-SMILES for ``g``.

    Equal strings exactly characterize attributed-graph isomorphism for
    graphs up to EXACT_TIEBREAK_LIMIT atoms; above that the tie-break is
    heuristic (see module docstring).
    """
    if g.n_atoms == 0:
        raise ValueError("cannot write an empty graph")
    ranks = _refine(g, _initial_ranks(g))
    if len(set(ranks)) == g.n_atoms:
        return _write_labeled(g, ranks)
    if g.n_atoms <= EXACT_TIEBREAK_LIMIT:
        best: str | None = None
        stack = [ranks]
        while stack:
            r = stack.pop()
            cell = _first_tied_cell(r)
            if cell is None:
                s = _write_labeled(g, r)
                if best is None or s < best:
                    best = s
            else:
                stack.extend(_refine(g, _individualize(r, a)) for a in cell)
        assert best is not None
        return best
    while len(set(ranks)) < g.n_atoms:
        cell = _first_tied_cell(ranks)
        assert cell is not None
        ranks = _refine(g, _individualize(ranks, min(cell)))
    return _write_labeled(g, ranks)


def enumerate_random(g: PolymerGraph, rng_seed: int) -> str:
    """One random traversal of ``g`` as polymer-SMILES, deterministic in
    ``rng_seed``: uniform start atom, uniform neighbor order at each step."""
    if g.n_atoms == 0:
        raise ValueError("cannot write an empty graph")
    rng = random.Random(rng_seed)
    start = rng.randrange(g.n_atoms)
    return _write(g, start, lambda _u, nbrs: rng.sample(nbrs, len(nbrs)))
