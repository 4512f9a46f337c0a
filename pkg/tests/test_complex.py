from itertools import permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collapsehyp import corpus
from collapsehyp.complex import (
    CellComplex,
    ProductCell,
    SimplicialComplex,
    format_facet_list,
    parse_facet_list,
    staircase_count,
    triangulate_cells,
)
from collapsehyp.errors import InvalidInputError, MissingFaceError
from collapsehyp.homology import HomologyGroup, smith_normal_form_dense

from oracles import integral_homology

F = frozenset


def _reduced(h):
    """Oracle output (unreduced) as reduced Betti numbers and torsion."""
    return [(b - (k == 0), t) for k, (b, t) in enumerate(h)]


def _as_pairs(groups):
    return [(g.betti, g.torsion) for g in groups]


class TestConstruction:
    def test_downward_closed(self):
        c = SimplicialComplex([(0, 1, 2), (2, 3)])
        assert c.f_vector() == [4, 4, 1]
        assert (0, 2) in c and (3,) in c and (1, 3) not in c
        assert c.euler_characteristic() == 1

    def test_facets_are_maximal(self):
        c = SimplicialComplex([(0, 1), (0, 1, 2), (1,)])
        assert sorted(c.facets) == [(0, 1, 2)]

    def test_facet_list_round_trip(self):
        c = corpus.dunce_hat()
        assert parse_facet_list(format_facet_list(c)) == c

    def test_string_labels(self):
        c = parse_facet_list("a b c\nc d  # tail\n")
        assert c.vertices == ["a", "b", "c", "d"]

    def test_parse_errors_carry_line_numbers(self):
        with pytest.raises(InvalidInputError, match=":2:"):
            parse_facet_list("0 1\n1 1\n")
        with pytest.raises(InvalidInputError):
            parse_facet_list("# nothing\n")


class TestStar:
    def test_triangle_boundary_vertex(self):
        c = corpus.simplex_boundary(2)
        assert c.star((0,)) == SimplicialComplex([(0, 1), (0, 2)])

    def test_full_simplex(self):
        c = corpus.simplex(3)
        for f in c.faces:
            assert c.star(f) == c

    def test_disjoint_union(self):
        c = SimplicialComplex([(0, 1, 2), (5, 6)])
        assert set(c.star((5,)).vertices) <= {5, 6}

    def test_missing_face(self):
        with pytest.raises(MissingFaceError):
            corpus.simplex(2).star((0, 7))

    def test_star_contains_closure(self):
        c = corpus.bing_house()
        for f in sorted(c.faces)[::37]:
            s = c.star(f)
            assert all(g in s for g in SimplicialComplex([f]).faces)


class TestLink:
    def test_triangle_boundary_vertex(self):
        assert corpus.simplex_boundary(2).link((0,)) == SimplicialComplex([(1,), (2,)])

    def test_tetrahedron_boundary_edge(self):
        assert corpus.simplex_boundary(3).link((0, 1)) == SimplicialComplex([(2,), (3,)])

    def test_cone_point(self):
        L = corpus.cycle(5)
        assert corpus.cone(L).link((5,)) == L

    @pytest.mark.parametrize("name", ["dunce-hat", "bing-house"])
    def test_two_implementations_agree(self, name):
        c = corpus.non_collapsible_corpus()[name]
        for f in c.faces:
            if f in c.facets:
                continue
            assert c.link(f) == c.link_by_definition(f)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.sets(st.integers(0, 6), min_size=1, max_size=4), min_size=1, max_size=6))
    def test_two_implementations_agree_property(self, facets):
        c = SimplicialComplex([tuple(s) for s in facets])
        for f in c.faces:
            if f not in c.facets:
                assert c.link(f) == c.link_by_definition(f)


class TestHomology:
    def test_simplex(self):
        for n in range(1, 5):
            assert corpus.simplex(n).has_homology_of_point()

    def test_sphere(self):
        assert corpus.simplex_boundary(3).reduced_betti() == [0, 0, 1]

    def test_dunce_hat(self):
        c = corpus.dunce_hat()
        assert c.reduced_betti() == [0, 0, 0]
        assert _as_pairs(c.homology()) == _reduced(integral_homology(c.facets))

    def test_torsion(self):
        rp2 = SimplicialComplex([(1, 2, 3), (1, 3, 4), (1, 4, 5), (1, 5, 6), (1, 6, 2),
                                 (2, 3, 5), (3, 4, 6), (4, 5, 2), (5, 6, 3), (6, 2, 4)])
        assert rp2.homology() == [HomologyGroup(0), HomologyGroup(0, (2,)), HomologyGroup(0)]
        assert _as_pairs(rp2.homology()) == _reduced(integral_homology(rp2.facets))

    def test_bing_house(self):
        c = corpus.bing_house()
        assert c.has_homology_of_point()
        assert _as_pairs(c.homology()) == _reduced(integral_homology(c.facets))

    def test_dense_snf(self):
        assert smith_normal_form_dense([[2, 4, 4], [-6, 6, 12], [10, -4, -16]]) == [2, 6, 12]
        assert smith_normal_form_dense([[0, 0], [0, 0]]) == []


class TestBarycentricSubdivision:
    def test_edge(self):
        sd = corpus.simplex(1).barycentric_subdivision()
        assert sd.f_vector() == [3, 2]

    def test_triangle(self):
        sd = corpus.simplex(2).barycentric_subdivision()
        assert len(sd.facets) == 6
        assert len(sd.vertices) == 7

    @pytest.mark.parametrize("name", ["dunce-hat", "cone-cycle", "fan", "bowtie", "simplex-3"])
    def test_homology_and_euler_preserved(self, name):
        c = {**corpus.collapsible_corpus(3), **corpus.non_collapsible_corpus()}[name]
        sd = c.barycentric_subdivision()
        assert sd.homology() == c.homology()
        assert sd.euler_characteristic() == c.euler_characteristic()

    def test_sphere_homology_preserved(self):
        c = corpus.octahedron_boundary()
        assert c.barycentric_subdivision().reduced_betti() == [0, 0, 1]

    def test_face_poset_acyclic(self):
        sd = corpus.simplex(2).barycentric_subdivision()
        order = corpus.simplex(2).face_order()
        for f in sd.facets:
            chain = [order[i] for i in f]
            chain.sort(key=len)
            assert all(set(a) < set(b) for a, b in zip(chain, chain[1:]))


def _lattice_paths(base_dim, cube_exponent):
    """Monotone lattice paths: orderings of base steps (identical) and axis steps (distinct)."""
    moves = ["b"] * base_dim + list(range(cube_exponent))
    return len(set(permutations(moves)))


class TestProductCells:
    def test_staircase_count_brute_force(self):
        for p in range(4):
            for q in range(4):
                assert staircase_count(p, q) == _lattice_paths(p, q)
        assert staircase_count(1, 2) == 6

    def test_vertex_times_interval(self):
        c, labels, membership = triangulate_cells(CellComplex([ProductCell((0,), F(), F({"t"}))]))
        assert c.f_vector() == [2, 1]

    def test_square(self):
        c, _, _ = triangulate_cells(CellComplex([ProductCell((0, 1), F(), F({"t"}))]))
        assert len(c.facets) == 2 and c.dimension == 2

    def test_edge_times_square(self):
        cell = ProductCell((0, 1), F(), F({"s", "t"}))
        c, _, membership = triangulate_cells(CellComplex([cell]))
        assert len(c.facets) == 6 == staircase_count(1, 2)
        assert set(membership.values()) == {cell}
        assert c.has_homology_of_point()

    def test_shared_faces_triangulate_alike(self):
        a = ProductCell((0, 1), F(), F({"t"}))
        b = ProductCell((1, 2), F(), F({"t"}))
        c, labels, _ = triangulate_cells(CellComplex([a, b]))
        assert c.has_homology_of_point()
        assert c.dimension == 2 and len(c.facets) == 4

    def test_cellular_matches_triangulated_homology(self):
        cells = [ProductCell((0, 1), F(), F({"s", "t"})), ProductCell((1, 2), F(), F({"s"})),
                 ProductCell((2, 3, 4), F(), F())]
        b = CellComplex(cells)
        c, _, _ = triangulate_cells(b)
        assert b.cellular_homology() == c.homology()
        assert b.euler_characteristic() == c.euler_characteristic() == 1

    def test_annulus_of_squares(self):
        # four squares around a hole
        cells = [ProductCell((i, (i + 1) % 4), F(), F({"t"})) for i in range(4)]
        b = CellComplex(cells)
        c, _, _ = triangulate_cells(b)
        assert b.cellular_homology() == c.homology()
        assert c.reduced_betti() == [0, 1, 0]

    def test_invalid_cells(self):
        with pytest.raises(InvalidInputError):
            ProductCell((), F(), F({"t"}))
        with pytest.raises(InvalidInputError):
            ProductCell((0,), F({"t"}), F({"t"}))

    def test_triangulation_downward_closed(self):
        b = CellComplex([ProductCell((0, 1, 2), F(), F({"s"}))])
        c, _, _ = triangulate_cells(b)
        for f in c.faces:
            for g in SimplicialComplex([f]).faces:
                assert g in c
