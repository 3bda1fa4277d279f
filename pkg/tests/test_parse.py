"""Parser behavior: graph construction, error offsets, valence checking."""

import pytest

from polycl.errors import SmilesSyntaxError, ValenceError
from polycl.smiles_core import BondOrder, PolymerGraph, parse


class TestParseBasics:
    def test_single_atom(self):
        g = parse("C")
        assert len(g.atoms) == 1 and len(g.bonds) == 0
        assert g.atoms[0].element == "C" and not g.atoms[0].is_attachment

    def test_vinyl_chloride_repeat_unit(self):
        g = parse("[*]CC([*])Cl")
        assert len(g.atoms) == 5 and len(g.bonds) == 4
        attach = [a for a in g.atoms if a.is_attachment]
        assert len(attach) == 2
        for i, atom in enumerate(g.atoms):
            if atom.is_attachment:
                assert g.degree(i) == 1
        elements = sorted(a.element for a in g.atoms if not a.is_attachment)
        assert elements == ["C", "C", "Cl"]

    def test_ring_closure_resolved(self):
        g = parse("C1CC1")
        assert len(g.atoms) == 3 and len(g.bonds) == 3
        assert all(g.degree(i) == 2 for i in range(3))

    def test_attachment_count_matches_text(self, tiny_corpus):
        for text in tiny_corpus:
            g = parse(text)
            n_attach = sum(1 for a in g.atoms if a.is_attachment)
            assert n_attach == text.count("[*]")

    def test_bond_orders(self):
        g = parse("C=C")
        assert g.bonds[0].order is BondOrder.DOUBLE
        g = parse("C#N")
        assert g.bonds[0].order is BondOrder.TRIPLE
        g = parse("c1ccccc1")
        assert all(b.order is BondOrder.AROMATIC for b in g.bonds)
        assert all(a.aromatic for a in g.atoms)

    def test_kekulized_ring_is_not_aromatic_flagged(self):
        g = parse("C1=CC=CC=C1")
        assert not any(a.aromatic for a in g.atoms)
        orders = sorted(b.order.name for b in g.bonds)
        assert orders.count("DOUBLE") == 3 and orders.count("SINGLE") == 3

    def test_bracket_atom_attributes(self):
        g = parse("[13C@H2+]")
        atom = g.atoms[0]
        assert atom.element == "C"
        assert atom.isotope == 13
        assert atom.chiral == "@"
        assert atom.hcount == 2
        assert atom.charge == 1

    def test_charge_forms(self):
        assert parse("[O-]").atoms[0].charge == -1
        assert parse("[N+]").atoms[0].charge == 1
        assert parse("[Fe++]").atoms[0].charge == 2
        assert parse("[S--]").atoms[0].charge == -2
        assert parse("[N+3]").atoms[0].charge == 3

    def test_unspecified_hcount_is_zero(self):
        # "C", "[C]" and "[CH0]" all denote the same attributed atom
        assert parse("C").atoms[0].key() == parse("[C]").atoms[0].key()
        assert parse("C").atoms[0].key() == parse("[CH0]").atoms[0].key()
        assert parse("[CH3]").atoms[0].hcount == 3
        assert parse("[CH]").atoms[0].hcount == 1

    def test_stereo_direction_carried_on_bond(self):
        g = parse("F/C=C\\F")
        directions = [b.direction for b in g.bonds]
        assert "/" in directions and "\\" in directions
        # direction never changes the bond order
        assert all(
            b.order is (BondOrder.DOUBLE if b.direction is None else BondOrder.SINGLE)
            for b in g.bonds
        )

    def test_branching(self):
        g = parse("CC(C)(C)C")
        center = [i for i in range(len(g.atoms)) if g.degree(i) == 4]
        assert len(center) == 1


class TestParseErrors:
    @pytest.mark.parametrize(
        "text,offset",
        [
            ("C(", 1),          # branch never closed; the '(' is at fault
            ("C)", 1),          # unmatched close
            ("C()O", 2),        # empty branch
            ("C=", 1),          # dangling bond at end of input
            ("C(=)O", 2),       # bond with nothing to attach to
            ("=C", 0),          # bond with no preceding atom
            ("C==C", 2),        # two bond symbols in a row
            ("C1CC", 1),        # ring digit never closed
            ("C11", 2),         # ring closure back to the same atom
            ("C-1CC=1", 6),     # conflicting bond symbols on one ring closure
        ],
    )
    def test_syntax_error_offsets(self, text, offset):
        with pytest.raises(SmilesSyntaxError) as err:
            parse(text)
        assert err.value.offset == offset

    def test_attachment_degree_must_be_one(self):
        with pytest.raises(SmilesSyntaxError):
            parse("C[*]C")  # attachment in the middle of a chain
        with pytest.raises(SmilesSyntaxError):
            parse("[*]")  # bare attachment bonded to nothing

    def test_unknown_element_rejected(self):
        with pytest.raises(SmilesSyntaxError):
            parse("[Zz]")


class TestValence:
    def test_off_by_default(self):
        parse("C(C)(C)(C)(C)C")  # 5-coordinate carbon accepted

    def test_strict_flag_rejects_overbonded_carbon(self):
        with pytest.raises(ValenceError):
            parse("C(C)(C)(C)(C)C", check_valence=True)

    def test_strict_flag_counts_explicit_hydrogens(self):
        parse("[CH3]C", check_valence=True)
        with pytest.raises(ValenceError):
            parse("[CH4]C", check_valence=True)

    def test_charged_atoms_exempt(self):
        parse("[N+](C)(C)(C)C", check_valence=True)

    def test_common_molecules_pass(self, tiny_corpus):
        for text in tiny_corpus:
            parse(text, check_valence=True)


class TestPolymerGraphType:
    def test_self_loop_rejected(self):
        g = PolymerGraph()
        i = g.add_atom(parse("C").atoms[0])
        with pytest.raises(ValueError):
            g.add_bond(i, i, BondOrder.SINGLE)

    def test_parallel_bond_rejected(self):
        g = parse("CC")
        with pytest.raises(ValueError):
            g.add_bond(0, 1, BondOrder.DOUBLE)

    def test_neighbors_sorted(self):
        g = parse("C(Cl)(Br)(F)I")
        assert g.neighbors(0) == sorted(g.neighbors(0))

    def test_bond_between(self):
        g = parse("C=C")
        assert g.bond_between(0, 1).order is BondOrder.DOUBLE
        assert g.bond_between(1, 0).order is BondOrder.DOUBLE
