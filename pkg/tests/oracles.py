"""Independent reference implementations used to check the package.

Everything here is deliberately naive: explicit double loops, brute-force
graph matching, and exhaustive enumeration.  The point is that these
oracles share no code (and no clever tricks) with the implementations they
check.
"""

from __future__ import annotations

import itertools
import math

import networkx as nx
import numpy as np
from networkx.algorithms import isomorphism

from polycl.smiles_core import BondOrder, PolymerGraph


# ---------------------------------------------------------------------------
# attributed-graph isomorphism (brute force via VF2)


def to_nx(g: PolymerGraph) -> nx.Graph:
    G = nx.Graph()
    for i, atom in enumerate(g.atoms):
        G.add_node(i, key=atom.key())
    for bond in g.bonds:
        G.add_edge(bond.u, bond.v, order=bond.order)
    return G


def graphs_isomorphic(g1: PolymerGraph, g2: PolymerGraph) -> bool:
    """Exact attributed-graph isomorphism: atom identity tuples on nodes,
    bond orders on edges."""
    return nx.is_isomorphic(
        to_nx(g1),
        to_nx(g2),
        node_match=isomorphism.categorical_node_match("key", None),
        edge_match=isomorphism.categorical_edge_match("order", None),
    )


# ---------------------------------------------------------------------------
# exhaustive SMILES surface enumeration for tiny acyclic molecules


def all_dfs_surfaces(g: PolymerGraph) -> set[str]:
    """Every surface string a depth-first writer can emit for ``g``.

    Restricted to connected acyclic all-single-bond molecules of plain
    uncharged atoms, where the surface grammar is just atoms and
    parentheses: each non-last child is parenthesized, the last child is
    appended bare.  Small molecules only; the expansion is exponential.
    """
    for atom in g.atoms:
        assert atom.charge == 0 and atom.hcount == 0 and not atom.aromatic
    for bond in g.bonds:
        assert bond.order is BondOrder.SINGLE
    assert len(g.bonds) == len(g.atoms) - 1, "tree molecules only"

    def text(v: int) -> str:
        return "[*]" if g.atoms[v].is_attachment else g.atoms[v].element

    def surfaces(v: int, parent: int | None) -> set[str]:
        kids = [u for u in g.neighbors(v) if u != parent]
        if not kids:
            return {text(v)}
        out: set[str] = set()
        for order in itertools.permutations(kids):
            child_sets = [surfaces(u, v) for u in order]
            for combo in itertools.product(*child_sets):
                branches = "".join(f"({c})" for c in combo[:-1])
                out.add(text(v) + branches + combo[-1])
        return out

    return {s for v in range(len(g.atoms)) for s in surfaces(v, None)}


# ---------------------------------------------------------------------------
# alignment / uniformity via explicit double loops


def alignment_double_loop(pairs) -> float:
    total = 0.0
    for a, b in pairs:
        an = np.asarray(a, dtype=np.float64)
        bn = np.asarray(b, dtype=np.float64)
        an = an / math.sqrt(float(np.dot(an, an)))
        bn = bn / math.sqrt(float(np.dot(bn, bn)))
        total += float(np.dot(an - bn, an - bn))
    return total / len(pairs)


def uniformity_double_loop(embeddings) -> float:
    rows = [np.asarray(x, dtype=np.float64) for x in embeddings]
    rows = [x / math.sqrt(float(np.dot(x, x))) for x in rows]
    values = []
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            diff = rows[i] - rows[j]
            values.append(math.exp(-2.0 * float(np.dot(diff, diff))))
    return math.log(sum(values) / len(values))


# ---------------------------------------------------------------------------
# contrastive loss via explicit loops over similarity terms


def nt_xent_double_loop(z, temperature: float) -> float:
    """Mean over all 2N anchor rows of -log softmax(positive similarity),
    cosine similarities, self-similarity excluded from the denominator."""
    z = np.asarray(z, dtype=np.float64)
    m = z.shape[0]
    assert m % 2 == 0 and m >= 2
    n = m // 2
    unit = [row / math.sqrt(float(np.dot(row, row))) for row in z]

    def sim(i: int, j: int) -> float:
        return float(np.dot(unit[i], unit[j]))

    total = 0.0
    for k in range(m):
        pos = (k + n) % m
        numer = math.exp(sim(k, pos) / temperature)
        denom = sum(
            math.exp(sim(k, other) / temperature) for other in range(m) if other != k
        )
        total += -math.log(numer / denom)
    return total / m


# ---------------------------------------------------------------------------
# central finite differences


def fd_gradient(f, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` at ``x``."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = grad.reshape(-1)
    xf = x.reshape(-1)
    for i in range(xf.size):
        orig = xf[i]
        xf[i] = orig + eps
        hi = f(x)
        xf[i] = orig - eps
        lo = f(x)
        xf[i] = orig
        flat[i] = (hi - lo) / (2.0 * eps)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    denom = max(float(np.linalg.norm(a)), float(np.linalg.norm(b)), 1e-300)
    return float(np.linalg.norm(a - b)) / denom
