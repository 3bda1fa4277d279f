"""Attributed molecular graph behind polymer-SMILES parsing.

``parse`` turns a polymer-SMILES string into a :class:`PolymerGraph`, an
undirected simple graph whose identity attributes are element symbol
(lowercase marks aromatic atoms), formal charge, explicit hydrogen count,
the attachment flag, and bond order.  Isotope labels and stereo annotations
(``@``, ``@@``, ``/``, ``\\``) are lexed and carried on the graph but take
no part in identity: canonicalization ignores them and writers never emit
them.

Structural rules enforced here:

- attachment atoms ("[*]") have degree exactly 1,
- the graph is connected and simple (no self-loops, no parallel bonds),
- branches balance and every ring digit is closed exactly once.

All violations raise :class:`~polycl.errors.SmilesSyntaxError` with the byte
offset of the offending token.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from ..errors import SmilesSyntaxError, ValenceError
from .tokens import (
    AROMATIC_ORGANIC,
    ORGANIC_SUBSET,
    BRACKET_RE,
    Token,
    TokenKind,
    lex,
    ring_number,
)


class BondOrder(Enum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence(self) -> float:
        return 1.5 if self is BondOrder.AROMATIC else float(self.value)


_BOND_BY_SYMBOL = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
    # stereo slashes degrade to single bonds; the direction is carried on
    # the Bond but ignored by identity and never written back
    "/": BondOrder.SINGLE,
    "\\": BondOrder.SINGLE,
}

BOND_SYMBOL = {
    BondOrder.SINGLE: "-",
    BondOrder.DOUBLE: "=",
    BondOrder.TRIPLE: "#",
    BondOrder.AROMATIC: ":",
}

# Elements accepted inside brackets.  Bare atoms are restricted by the lexer
# to the organic subset already.
_PERIODIC_TABLE = frozenset(
    """H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co
    Ni Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te
    I Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir
    Pt Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No
    Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og""".split()
)

# Highest standard valence for strict-mode rejection; charged atoms and
# elements outside this table are exempt.
_MAX_VALENCE = {
    "B": 3, "C": 4, "N": 5, "O": 2, "P": 5, "S": 6,
    "F": 1, "Cl": 1, "Br": 1, "I": 1,
}

ATTACHMENT_SYMBOL = "*"


@dataclass
class Atom:
    """One atom; ``element`` is lowercase for aromatic atoms, "*" for
    attachment points.  ``isotope`` and ``chiral`` are carried annotations
    only, excluded from :meth:`key`."""

    element: str
    charge: int = 0
    hcount: int = 0
    is_attachment: bool = False
    isotope: int | None = None
    chiral: str | None = None

    def key(self) -> tuple[str, int, int, bool]:
        """Identity attributes used by canonicalization and graph equality."""
        return (self.element, self.charge, self.hcount, self.is_attachment)

    @property
    def aromatic(self) -> bool:
        return self.element.islower() and not self.is_attachment


@dataclass
class Bond:
    """Undirected bond; ``direction`` carries a stereo slash, if any."""

    u: int
    v: int
    order: BondOrder
    direction: str | None = None


@dataclass
class PolymerGraph:
    atoms: list[Atom] = field(default_factory=list)
    bonds: list[Bond] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._adj: dict[int, dict[int, int]] = {i: {} for i in range(len(self.atoms))}
        for idx, b in enumerate(self.bonds):
            self._index_bond(idx, b)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    @property
    def attachment_count(self) -> int:
        return sum(a.is_attachment for a in self.atoms)

    def add_atom(self, atom: Atom) -> int:
        self.atoms.append(atom)
        idx = len(self.atoms) - 1
        self._adj[idx] = {}
        return idx

    def add_bond(self, u: int, v: int, order: BondOrder, direction: str | None = None) -> int:
        if u == v:
            raise ValueError("self-loop bond")
        if not (0 <= u < self.n_atoms and 0 <= v < self.n_atoms):
            raise ValueError("bond endpoint out of range")
        if v in self._adj[u]:
            raise ValueError("parallel bond")
        self.bonds.append(Bond(u, v, order, direction))
        idx = len(self.bonds) - 1
        self._index_bond(idx, self.bonds[idx])
        return idx

    def _index_bond(self, idx: int, b: Bond) -> None:
        self._adj[b.u][b.v] = idx
        self._adj[b.v][b.u] = idx

    def neighbors(self, u: int) -> list[int]:
        return sorted(self._adj[u])

    def bond_between(self, u: int, v: int) -> Bond:
        return self.bonds[self._adj[u][v]]

    def degree(self, u: int) -> int:
        return len(self._adj[u])

    def is_connected(self) -> bool:
        if self.n_atoms == 0:
            return False
        seen = {0}
        frontier = [0]
        while frontier:
            u = frontier.pop()
            for v in self._adj[u]:
                if v not in seen:
                    seen.add(v)
                    frontier.append(v)
        return len(seen) == self.n_atoms


@dataclass
class _RingOpen:
    atom: int
    symbol: str | None
    offset: int


@dataclass
class _ParserState:
    graph: PolymerGraph
    offsets: list[int] = field(default_factory=list)  # atom index -> byte offset
    prev: int | None = None
    pending: tuple[str, int] | None = None  # (bond symbol, offset)
    stack: list[tuple[int, int]] = field(default_factory=list)  # (atom, "(" offset)
    open_rings: dict[int, _RingOpen] = field(default_factory=dict)


def _bracket_atom(text: str, offset: int) -> Atom:
    m = BRACKET_RE.match(text[1:-1])
    if m is None:  # the lexer pre-screens, so this guards direct calls only
        raise SmilesSyntaxError(f"malformed bracket atom {text!r}", offset)
    symbol = m.group("symbol")
    if symbol.islower():
        if symbol not in AROMATIC_ORGANIC:
            raise SmilesSyntaxError(f"unknown aromatic element {symbol!r}", offset)
    elif symbol not in _PERIODIC_TABLE:
        raise SmilesSyntaxError(f"unknown element {symbol!r}", offset)
    isotope = int(m.group("isotope")) if m.group("isotope") else None
    hpart = m.group("hcount")
    if hpart is None:
        hcount = 0
    else:
        hcount = int(hpart[1:]) if len(hpart) > 1 else 1
    cpart = m.group("charge")
    if cpart is None:
        charge = 0
    elif cpart in ("++", "--"):
        charge = 2 if cpart == "++" else -2
    elif len(cpart) == 1:
        charge = 1 if cpart == "+" else -1
    else:
        charge = int(cpart[1:]) * (1 if cpart[0] == "+" else -1)
    return Atom(symbol, charge, hcount, isotope=isotope, chiral=m.group("chiral"))


def default_order(g: PolymerGraph, u: int, v: int) -> BondOrder:
    """Bond order read into an unadorned bond between ``u`` and ``v``:
    aromatic between two aromatic atoms, single otherwise.  Writers suppress
    the bond symbol exactly when the order equals this default."""
    if g.atoms[u].aromatic and g.atoms[v].aromatic:
        return BondOrder.AROMATIC
    return BondOrder.SINGLE


def _connect(st: _ParserState, u: int, v: int, symbol: str | None, offset: int) -> None:
    order = _BOND_BY_SYMBOL[symbol] if symbol else default_order(st.graph, u, v)
    direction = symbol if symbol in ("/", "\\") else None
    try:
        st.graph.add_bond(u, v, order, direction)
    except ValueError as exc:
        raise SmilesSyntaxError(str(exc), offset) from None


def _add_atom(st: _ParserState, atom: Atom, offset: int) -> None:
    idx = st.graph.add_atom(atom)
    st.offsets.append(offset)
    if st.prev is not None:
        symbol, _ = st.pending if st.pending else (None, 0)
        _connect(st, st.prev, idx, symbol, offset)
    elif st.pending is not None:
        raise SmilesSyntaxError("bond with no preceding atom", st.pending[1])
    st.pending = None
    st.prev = idx


def _close_ring(st: _ParserState, tok: Token, offset: int) -> None:
    assert st.prev is not None
    n = ring_number(tok)
    symbol = st.pending[0] if st.pending else None
    st.pending = None
    opened = st.open_rings.pop(n, None)
    if opened is None:
        st.open_rings[n] = _RingOpen(st.prev, symbol, offset)
        return
    if opened.atom == st.prev:
        raise SmilesSyntaxError(f"ring closure {tok.text} bonds an atom to itself", offset)
    if symbol and opened.symbol and symbol != opened.symbol:
        raise SmilesSyntaxError(
            f"conflicting bond symbols on ring closure {tok.text}", offset
        )
    _connect(st, opened.atom, st.prev, symbol or opened.symbol, offset)


def _check_valence(st: _ParserState) -> None:
    g = st.graph
    for i, atom in enumerate(g.atoms):
        limit = _MAX_VALENCE.get(atom.element.capitalize())
        if limit is None or atom.is_attachment or atom.charge != 0:
            continue
        total = atom.hcount + sum(
            g.bond_between(i, j).order.valence for j in g.neighbors(i)
        )
        if total > limit + 1e-9:
            raise ValenceError(
                f"atom {atom.element} at offset {st.offsets[i]} has valence "
                f"{total:g}, above the standard maximum {limit}"
            )


def parse(text: str, *, check_valence: bool = False) -> PolymerGraph:
    """Parse polymer-SMILES text into a :class:`PolymerGraph`.

    Raises SmilesSyntaxError with a byte offset on any grammar or structure
    violation.  With ``check_valence=True``, neutral organic-subset atoms
    whose bond-order sum plus explicit hydrogens exceeds the standard
    maximum valence raise ValenceError.
    """
    st = _ParserState(PolymerGraph())
    last_kind: TokenKind | None = None
    for tok, offset in lex(text):
        if tok.kind is TokenKind.ATOM:
            if tok.text.startswith("["):
                _add_atom(st, _bracket_atom(tok.text, offset), offset)
            else:
                _add_atom(st, Atom(tok.text), offset)
        elif tok.kind is TokenKind.ATTACHMENT:
            _add_atom(st, Atom(ATTACHMENT_SYMBOL, is_attachment=True), offset)
        elif tok.kind is TokenKind.BOND:
            if st.prev is None:
                raise SmilesSyntaxError("bond with no preceding atom", offset)
            if st.pending is not None:
                raise SmilesSyntaxError("two bond symbols in a row", offset)
            st.pending = (tok.text, offset)
        elif tok.kind is TokenKind.BRANCH_OPEN:
            if st.prev is None:
                raise SmilesSyntaxError("branch with no preceding atom", offset)
            if st.pending is not None:
                raise SmilesSyntaxError("bond symbol before '('", st.pending[1])
            st.stack.append((st.prev, offset))
        elif tok.kind is TokenKind.BRANCH_CLOSE:
            if not st.stack:
                raise SmilesSyntaxError("unmatched ')'", offset)
            if st.pending is not None:
                raise SmilesSyntaxError("dangling bond before ')'", st.pending[1])
            if last_kind is TokenKind.BRANCH_OPEN:
                raise SmilesSyntaxError("empty branch", offset)
            st.prev = st.stack.pop()[0]
        elif tok.kind is TokenKind.RING:
            if st.prev is None:
                raise SmilesSyntaxError("ring closure with no preceding atom", offset)
            _close_ring(st, tok, offset)
        else:  # SPECIAL tokens are never produced by the lexer
            raise SmilesSyntaxError(f"unexpected token {tok.text}", offset)
        last_kind = tok.kind
    if st.pending is not None:
        raise SmilesSyntaxError("dangling bond at end of input", st.pending[1])
    if st.stack:
        raise SmilesSyntaxError("unclosed '('", st.stack[-1][1])
    if st.open_rings:
        first = min(st.open_rings.values(), key=lambda r: r.offset)
        raise SmilesSyntaxError("unclosed ring digit", first.offset)
    for i, atom in enumerate(st.graph.atoms):
        if atom.is_attachment and st.graph.degree(i) != 1:
            raise SmilesSyntaxError(
                f"attachment point must have exactly one neighbor, found "
                f"{st.graph.degree(i)}",
                st.offsets[i],
            )
    if not st.graph.is_connected():
        raise SmilesSyntaxError("polymer-SMILES must describe one connected unit", 0)
    if check_valence:
        _check_valence(st)
    return st.graph
