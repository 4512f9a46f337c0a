import math

import numpy as np
import pytest

from collapsehyp import corpus
from collapsehyp.collapse import cone_collapse, find_collapse
from collapsehyp.complex import CellComplex, ProductCell
from collapsehyp.curvature import (
    GeodesicGraph,
    LinkComplex,
    check_link,
    comparison_sample,
    edge_path_group_trivial,
    face_link,
    flag_check,
    girth,
    link_loop_lengths,
    loop_histogram_table,
    metric_link,
    nesting_check,
    right_angled_squares,
    short_loop_search,
    skeleton,
    verify_links,
    violation_table,
)
from collapsehyp.errors import ConnectivityError, GluingError, InvalidInputError, MissingFaceError
from collapsehyp.hyperbolize import MetricComplex, hyperbolize, realize_metric
from collapsehyp.hypgeom import random_lorentz

RIGHT = math.pi / 2
TWO_PI = 2 * math.pi
F = frozenset


def _all_right(simplices):
    return LinkComplex(simplices, [np.eye(len(s)) for s in simplices])


def _hyperbolized(name):
    c = corpus.collapsible_corpus(3)[name]
    seq = cone_collapse(c) if name.startswith(("simplex", "cone")) else find_collapse(c, seed=0).sequence
    return hyperbolize(c, seq)


@pytest.fixture(scope="module")
def triangle_metric():
    return _hyperbolized("simplex-2")


@pytest.fixture(scope="module")
def tetra_metric():
    return _hyperbolized("simplex-3")


class TestMetricLink:
    def test_interior_point_of_segment(self):
        m = MetricComplex.from_lengths([("a", "b"), ("b", "c")], {("a", "b"): 0.3, ("b", "c"): 0.5})
        l = metric_link(m, m.names.index("b"))
        assert l.dimension == 0 and len(l.vertices) == 2

    def test_corner_of_right_angled_square(self):
        b = CellComplex([ProductCell((0, 1), F(), F()), ProductCell((0, 1), F(), F({"t"}))])
        m, _ = realize_metric(b)
        l = metric_link(m, m.names.index("0"))
        assert l.dimension == 1
        assert l.total_length() == pytest.approx(RIGHT, abs=1e-12)
        # the diagonal splits the corner; the two arcs form a path
        assert girth(l)[0] == math.inf

    def test_four_squares_in_a_plane(self):
        m = right_angled_squares(4)
        l = metric_link(m, m.names.index("o"))
        assert len(l.vertices) == 8
        assert l.total_length() == pytest.approx(TWO_PI, abs=1e-12)
        g, cyc = girth(l)
        assert g == pytest.approx(TWO_PI, abs=1e-12)
        # the rays along the square sides meet at right angles
        a = [v for v in l.vertices if m.names[v].startswith("a")]
        adj = l.adjacency()
        for v in a:
            assert all(w == pytest.approx(math.pi / 4, abs=1e-12) for w in adj[v].values())

    def test_missing_vertex(self):
        with pytest.raises(MissingFaceError):
            metric_link(right_angled_squares(3), 99)

    def test_invariant_under_isometry_and_relabeling(self, triangle_metric):
        m = triangle_metric
        rng = np.random.default_rng(1)
        moved_coords = []
        for X in m.coords:
            L = random_lorentz(X.shape[1] - 1, rng)
            moved_coords.append(X @ L.T)
        perm = rng.permutation(m.n_vertices)
        m2 = MetricComplex(
            [m.names[i] for i in np.argsort(perm)],
            [tuple(int(perm[v]) for v in s) for s in m.simplices],
            {(int(perm[i]), int(perm[j])): l for (i, j), l in m.edge_lengths.items()},
            coords=moved_coords,
        )
        for v in range(m.n_vertices):
            a = sorted(metric_link(m, v).lengths.values())
            b = sorted(metric_link(m2, int(perm[v])).lengths.values())
            assert a == pytest.approx(b, abs=1e-9)

    def test_inconsistent_lengths(self):
        c1 = np.array([[1.0, 0.0], [0.0, 1.0]])
        c2 = np.array([[1.0, 0.5], [0.5, 1.0]])
        with pytest.raises(GluingError):
            LinkComplex([(0, 1), (0, 1)], [c1, c2])


class TestFlagCheck:
    def test_octahedron(self):
        assert flag_check(_all_right(corpus.octahedron_boundary().facets)).verdict == "pass"

    def test_empty_triangle(self):
        v = flag_check(_all_right([(0, 1), (1, 2), (0, 2)]))
        assert v.verdict == "fail" and v.loop == (0, 1, 2)
        assert girth(_all_right([(0, 1), (1, 2), (0, 2)]))[0] == pytest.approx(3 * RIGHT)

    def test_single_simplex(self):
        assert flag_check(_all_right([(0, 1, 2)])).verdict == "pass"

    def test_not_applicable(self):
        C = np.array([[1.0, 0.3], [0.3, 1.0]])
        assert flag_check(LinkComplex([(0, 1)], [C])).verdict == "not-applicable"

    def test_agrees_with_loop_search(self):
        cases = {
            "octahedron": corpus.octahedron_boundary().facets,
            "hollow square pyramid": [(0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 0, 4)],
            "hollow triangle pyramid": [(0, 1, 3), (1, 2, 3), (2, 0, 3)],
            "two triangles": [(0, 1, 2), (1, 2, 3)],
        }
        for name, facets in cases.items():
            l = _all_right(facets)
            flag_pass = flag_check(l).verdict == "pass"
            res = short_loop_search(l)
            assert flag_pass == (not res.below_threshold), name


class TestShortLoopSearch:
    def test_three_cycle(self):
        res = short_loop_search(_all_right([(0, 1), (1, 2), (0, 2)]))
        assert res.length == pytest.approx(3 * RIGHT, abs=1e-12)
        assert res.below_threshold

    def test_four_cycle(self):
        res = short_loop_search(_all_right([(0, 1), (1, 2), (2, 3), (3, 0)]))
        assert res.length == pytest.approx(TWO_PI, abs=1e-12)
        assert not res.below_threshold

    def test_octant(self):
        l = _all_right([(0, 1, 2)])
        # as a graph the boundary is a cycle of length 3 pi / 2 ...
        assert short_loop_search(l, geodesic=False).length == pytest.approx(3 * RIGHT)
        # ... but it turns by pi / 2 at every corner, so it is not a geodesic
        res = short_loop_search(l)
        assert res.length is None and not res.below_threshold
        assert check_link(l).verdict == "pass"

    def test_subdivision_does_not_change_edge_loops(self):
        l = _all_right([(0, 1), (1, 2), (0, 2)])
        assert short_loop_search(l, 4).length == pytest.approx(short_loop_search(l, 1).length)
        with pytest.raises(InvalidInputError):
            short_loop_search(l, 0)

    def test_octahedron_equator(self):
        res = short_loop_search(_all_right(corpus.octahedron_boundary().facets))
        assert res.length == pytest.approx(TWO_PI, abs=1e-12)


class TestBatchedKernel:
    @pytest.mark.parametrize("name", ["simplex-2", "simplex-3", "cone-cycle", "bowtie"])
    def test_matches_reference_search(self, name):
        m = _hyperbolized(name)
        for size in range(1, m.dimension):
            F_, best, spread, right, dims = link_loop_lengths(m, size)
            assert np.all(spread < 1e-8)
            for i in range(len(F_)):
                l = face_link(m, tuple(int(x) for x in F_[i]))
                if l.dimension <= 1:
                    ref = girth(l)[0]
                else:
                    ref = short_loop_search(l).length
                    ref = math.inf if ref is None else ref
                if ref > TWO_PI + 1e-7:
                    assert best[i] == math.inf
                else:
                    assert best[i] == pytest.approx(ref, abs=1e-9)

    def test_squares(self):
        for n, expected in ((3, 3 * RIGHT), (4, TWO_PI), (5, 5 * RIGHT)):
            m = right_angled_squares(n)
            F_, best, _, _, _ = link_loop_lengths(m, 1)
            o = m.names.index("o")
            row = [i for i in range(len(F_)) if F_[i][0] == o][0]
            if expected <= TWO_PI + 1e-7:
                assert best[row] == pytest.approx(expected, abs=1e-12)
            else:
                assert best[row] == math.inf


class TestVerifyLinks:
    def test_triangle_output_passes(self, triangle_metric):
        rep = verify_links(triangle_metric)
        assert rep.verdict == "pass" and rep.simply_connected == "trivial"

    def test_tetrahedron_output_passes(self, tetra_metric):
        rep = verify_links(tetra_metric)
        assert rep.verdict == "pass"
        assert rep.faces_checked[0] == tetra_metric.n_vertices
        assert not rep.notes

    def test_three_squares_fail(self):
        m = right_angled_squares(3)
        rep = verify_links(m)
        assert rep.verdict == "fail"
        assert rep.failing_vertices() == ["o"]
        (f,) = rep.failures
        assert f["face"] == ["o"]
        assert f["loop_length"] == pytest.approx(3 * RIGHT, abs=1e-9)
        assert len(f["loop"]) == 6

    def test_four_squares_pass(self):
        rep = verify_links(right_angled_squares(4))
        assert rep.verdict == "pass"
        assert rep.min_loop == pytest.approx(TWO_PI, abs=1e-12)

    def test_open_fan_boundary_vertex(self):
        # two squares sharing an edge: the boundary corner has angle pi and
        # its link is an arc, which has no loops at all
        m = right_angled_squares(2, closed=False)
        rep = verify_links(m)
        assert rep.verdict == "pass"
        l = metric_link(m, m.names.index("o"))
        assert l.total_length() == pytest.approx(math.pi)
        assert girth(l)[0] == math.inf
        m3 = right_angled_squares(3, closed=False)
        assert metric_link(m3, m3.names.index("o")).total_length() == pytest.approx(3 * RIGHT)
        assert verify_links(m3).verdict == "pass"

    def test_glue_face_links_are_at_most_right(self, triangle_metric, tetra_metric):
        for m in (triangle_metric, tetra_metric):
            for g in m.glue_ridges:
                l = face_link(m, tuple(g["ridge"]))
                assert max(l.lengths.values()) <= RIGHT + 1e-8

    def test_report_json(self):
        rep = verify_links(right_angled_squares(3))
        d = rep.as_dict()
        assert d["verdict"] == "fail" and d["failing_vertices"] == ["o"]
        assert rep.to_json() == verify_links(right_angled_squares(3)).to_json()


class TestEdgePathGroup:
    def test_disk(self):
        assert edge_path_group_trivial([(0, 1), (1, 2), (0, 2)], [(0, 1, 2)]) == "trivial"

    def test_circle(self):
        assert edge_path_group_trivial([(0, 1), (1, 2), (0, 2)], []) == "inconclusive"

    def test_disconnected(self):
        assert edge_path_group_trivial([(0, 1), (2, 3)], []) == "disconnected"

    def test_sphere(self):
        s = corpus.simplex_boundary(3)
        assert edge_path_group_trivial(s.faces_of_dim(1), s.facets) == "trivial"

    def test_dunce_hat(self):
        c = corpus.dunce_hat()
        assert edge_path_group_trivial(sorted(c.faces_of_dim(1)), sorted(c.facets)) == "trivial"

    def test_projective_plane_is_not_claimed_trivial(self):
        rp2 = [(1, 2, 3), (1, 3, 4), (1, 4, 5), (1, 5, 6), (1, 6, 2),
               (2, 3, 5), (3, 4, 6), (4, 5, 2), (5, 6, 3), (6, 2, 4)]
        edges = sorted({tuple(sorted(e)) for t in rp2 for e in ((t[0], t[1]), (t[1], t[2]), (t[0], t[2]))})
        assert edge_path_group_trivial(edges, rp2) == "inconclusive"

    def test_skeleton(self, triangle_metric):
        assert len(skeleton(triangle_metric, 0)) == triangle_metric.n_vertices
        assert len(skeleton(triangle_metric, 2)) == len(triangle_metric.simplices)


class TestComparisonSample:
    def test_single_cell(self):
        m = MetricComplex.from_lengths([(0, 1, 2)], {(0, 1): 0.8, (1, 2): 1.1, (0, 2): 0.6})
        st = comparison_sample(m, 200, 3, seed=1)
        assert st.max_violation <= 1e-9
        assert st.beyond_allowance == 0

    def test_degenerate_triangle(self):
        m = MetricComplex.from_lengths([("a", "b"), ("b", "c")], {("a", "b"): 0.4, ("b", "c"): 0.7})
        st = comparison_sample(m, 100, 2, seed=0)
        assert abs(st.max_violation) <= 1e-7
        assert st.beyond_allowance == 0

    def test_disconnected(self):
        m = MetricComplex.from_lengths([(0, 1), (2, 3), (4, 5)], {(0, 1): 0.3, (2, 3): 0.3, (4, 5): 0.3})
        with pytest.raises(ConnectivityError):
            comparison_sample(m, 10, 1)

    def test_graph_distances_dominate_true_distances(self):
        m = MetricComplex.from_lengths([(0, 1, 2)], {(0, 1): 0.8, (1, 2): 1.1, (0, 2): 0.6})
        g = GeodesicGraph(m, 4)
        assert g.connected()
        D, _ = g.distances([g.vertex_of[0]])
        assert D[0, g.vertex_of[1]] == pytest.approx(0.8, abs=1e-12)

    @pytest.mark.parametrize("name", ["simplex-2", "cone-path"])
    def test_refinement_monotone(self, name):
        m = _hyperbolized(name)
        v = [comparison_sample(m, 300, r, seed=4).max_violation for r in (1, 2, 4)]
        assert v[1] <= v[0] + 1e-6 and v[2] <= v[1] + 1e-6

    def test_deterministic(self, triangle_metric):
        a = comparison_sample(triangle_metric, 100, 2, seed=9)
        b = comparison_sample(triangle_metric, 100, 2, seed=9)
        assert a == b


class TestNestingAndTables:
    def test_nesting(self, triangle_metric):
        rows = nesting_check(triangle_metric, pairs=50, refinement=2)
        assert len(rows) == triangle_metric.n_steps + 1
        assert all(leaving == 0 for _, _, leaving in rows)

    def test_tables(self, triangle_metric):
        st = comparison_sample(triangle_metric, 50, 2)
        csv = violation_table([st])
        assert csv.splitlines()[0].startswith("refinement,samples,max_violation")
        assert len(csv.splitlines()) == 2
        hist = loop_histogram_table([math.pi, TWO_PI, TWO_PI])
        assert sum(int(line.split(",")[2]) for line in hist.splitlines()[1:]) == 3
