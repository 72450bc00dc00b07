import numpy as np
import pytest

from hypgraph import limits as L
from hypgraph.domain import BadLabels, builtin_domain
from hypgraph.mesh import mesh_region
from hypgraph.solver import ScalarField, SolveConfig


@pytest.fixture(scope="module")
def square():
    return builtin_domain("square")


@pytest.fixture(scope="module")
def planted(square):
    """A field that is unit and crosses the real diameter upward, weak elsewhere."""
    m = mesh_region(square, h=0.15)
    c = L._centroids_disk(m)
    band = np.abs(c.imag) < 0.1
    X = np.zeros((len(c), 2))
    X[:, 1] = np.where(band, 0.999, 0.3)
    n_list = [1.0, 2.0, 4.0, 8.0]
    fields = [ScalarField(m, n * np.tanh(3 * m.disk.imag), np.zeros(m.n_vertices, bool),
                          np.full(m.n_vertices, np.nan)) for n in n_list]
    norms = np.tile(np.linalg.norm(X, axis=1), (len(n_list), 1))
    return L.LimitField(square, m, n_list, X, norms, np.zeros(len(c)), fields)


def test_planted_line_is_detected(planted):
    rep = L.detect_divergence_lines(planted)
    assert [l.vertices for l in rep.lines] == [(0, 2)]
    assert rep.lines[0].support == pytest.approx(1.0)
    assert rep.lines[0].angle < 1.0
    assert len(rep.components) == 2
    assert len(rep.unclassified) == 0


def test_planted_component_graph(planted):
    rep = L.detect_divergence_lines(planted)
    g = L.component_graph(rep, planted)
    assert g.acyclic
    assert len(g.arrows()) == 1
    tail, head = g.arrows()[0]
    # the field points into the upper half, where the solutions grow
    assert g.node_of(planted.mesh, 0.5j) == head
    assert g.node_of(planted.mesh, -0.5j) == tail
    assert all(g.drift_increasing().values())


def test_unexplained_cluster_is_ambiguous(planted):
    c = L._centroids_disk(planted.mesh)
    X = np.tile([0.0, 0.3], (len(c), 1))
    X[np.abs(c - 0.1) < 0.2] = [0.6, 0.799]      # unit, but along no candidate geodesic
    lim = L.LimitField(planted.domain, planted.mesh, planted.n_list, X, planted.norms,
                       planted.cauchy, planted.fields)
    with pytest.raises(L.AmbiguousFit):
        L.detect_divergence_lines(lim, min_cluster_area=0.1)


def test_square_has_no_divergence_lines(square):
    _, lim = L.run_sequence(square, [1, 2, 4, 8], SolveConfig(h=0.2))
    rep = L.detect_divergence_lines(lim)
    assert rep.lines == []
    assert len(rep.components) == 1


def test_repeated_n_gives_zero_variation(square):
    _, lim = L.run_sequence(square, [1, 1], SolveConfig(h=0.2))
    assert np.max(lim.cauchy) < 1e-8


def test_sequence_rejects_decreasing(square):
    with pytest.raises(ValueError):
        L.run_sequence(square, [2, 1])


def test_candidates_of_square(square):
    cands = L.candidate_lines(square)
    assert sorted(c.vertices for c in cands) == [(0, 2), (1, 3)]


def test_candidates_of_annulus_include_core():
    cands = L.candidate_lines(builtin_domain("example53"))
    assert sum(c.kind == "core" for c in cands) == 1


def test_offset_point_distance():
    from hypgraph import hypgeom as hg
    g = hg.Geodesic.between(0.0, np.pi)
    z = L.offset_point(g, 0.7, 0.4)
    assert abs(g.signed_distance(z)) == pytest.approx(0.4, abs=1e-12)


# -- pairs, extensions and distances --------------------------------------------------------

def test_consecutive_pairs():
    d = builtin_domain("example53")
    for end in d.ends:
        pairs = L.consecutive_pairs(d, end)
        assert len(pairs) == 2
        for b, a in pairs:
            assert (d.edges[b].label, d.edges[a].label) == ("b", "a")
            assert d.edges[b].end.vertex == d.edges[a].start.vertex


def test_pairs_need_even_alternation():
    import dataclasses
    d = builtin_domain("example53")
    d.edges[0] = dataclasses.replace(d.edges[0], label="b")
    with pytest.raises(BadLabels):
        L.consecutive_pairs(d, d.vertices[d.edges[0].start.vertex].end)


def test_extend_all_pairs_grows_distances():
    d = builtin_domain("example53")
    e = L.extend_all_pairs(d, 0.5)
    assert e.N == d.N + 2 * 2 * len(d.ends) * 2
    assert L.boundary_distance(e) > L.boundary_distance(d)
    for end, v in L.end_boundary_distance(e).items():
        assert v > L.end_boundary_distance(d)[end]


def test_signed_edge_distance_sign(square):
    z = np.array([0j, 0.99 + 0.99j * 0.5])
    s = L.signed_edge_distance(square, z)
    assert s[0] > 0 > s[1]


def test_extension_pinned_at_reference_point(square):
    tab = L.extension_experiment(square, (1, 2), [0.5, 0.25], K=[0j], config=SolveConfig(h=0.2), n=4)
    assert tab.compact_size == 1
    assert all(abs(s) < 1e-12 for s in tab.sups)
    assert all(r.grad_sup > 0 for r in tab.rows)


def test_extension_differences_shrink(square):
    K = L.inner_points(mesh_region(square, h=0.2), square, 0.5)
    tab = L.extension_experiment(square, (1, 2), [0.6, 0.3, 0.15], K=K, config=SolveConfig(h=0.2), n=4)
    assert tab.monotone()
    assert set(tab.to_dict()) == {"n", "point", "compact_size", "rows"}


def test_extension_rejects_empty_compact(square):
    with pytest.raises(ValueError):
        L.extension_experiment(square, (1, 2), [0.5], K=np.zeros(0, complex), config=SolveConfig(h=0.2), n=2)
