import math

import networkx as nx
import numpy as np
import pytest

from app.exceptions import ArgumentError, DegeneracyError, NoNonEdgesError, SpecificationError, UnsupportedError
from models.enums import BraessMode
from models.graph import GraphSample
from schemas.ensemble import Seed

K3_EDGE_LIST = "n 3\n0 1\n1 2\n0 2\n"


def _graph(nx_graph):
    return GraphSample(nx.convert_node_labels_to_integers(nx_graph))


def _oracle_gap(nx_graph):
    lap = nx.normalized_laplacian_matrix(nx_graph, nodelist=range(nx_graph.number_of_nodes())).toarray()
    return float(np.linalg.eigvalsh(lap)[1])


class TestSampling:

    def test_deterministic(self, graphs):
        a = graphs.sample_gnp(40, 0.3, Seed(master=5, trial_index=1))
        b = graphs.sample_gnp(40, 0.3, Seed(master=5, trial_index=1))
        c = graphs.sample_gnp(40, 0.3, Seed(master=5, trial_index=2))
        assert a.edges == b.edges
        assert a.edges != c.edges

    def test_edge_count(self, graphs):
        graph = graphs.sample_gnp(100, 0.5, Seed(master=1))
        pairs = math.comb(100, 2)
        assert abs(graph.edge_count - 0.5 * pairs) <= 5 * math.sqrt(0.25 * pairs)
        assert graphs.edge_probability(graph) == 0.5

    def test_frozen(self, graphs):
        graph = graphs.sample_gnp(10, 0.5, Seed(master=1))
        with pytest.raises(nx.NetworkXError):
            graph.graph.add_edge(0, 1)
        assert graph.with_edge(*graph.non_edges()[0]).edge_count == graph.edge_count + 1

    @pytest.mark.parametrize("n, p", [(1, 0.5), (10, 0.0), (10, 1.0)])
    def test_rejects_bad_parameters(self, graphs, n, p):
        with pytest.raises(ArgumentError):
            graphs.sample_gnp(n, p, Seed())


class TestMatrices:

    def test_complete_graph(self, graphs):
        m = graphs.graph_matrices(_graph(nx.complete_graph(4)))
        off = m.normalized_adjacency[~np.eye(4, dtype=bool)]
        assert np.allclose(off, 1.0 / 3.0)
        assert np.allclose(np.linalg.eigvalsh(m.laplacian), [0.0, 4 / 3, 4 / 3, 4 / 3])

    def test_single_edge(self, graphs):
        m = graphs.graph_matrices(_graph(nx.path_graph(2)))
        assert np.allclose(m.laplacian, [[1.0, -1.0], [-1.0, 1.0]])
        assert np.allclose(m.degree_matrix, np.eye(2))

    def test_matches_networkx(self, graphs):
        graph = graphs.sample_gnp(50, 0.5, Seed(master=3))
        m = graphs.graph_matrices(graph)
        expected = nx.normalized_laplacian_matrix(graph.graph, nodelist=range(50)).toarray()
        assert np.allclose(m.laplacian, expected)
        assert np.allclose(m.laplacian @ np.sqrt(m.degrees), 0.0, atol=1e-10)

    def test_isolated_vertex(self, graphs):
        graph = GraphSample.from_edges(3, [(0, 1)])
        with pytest.raises(DegeneracyError):
            graphs.graph_matrices(graph)


class TestSpectralGap:

    def test_known_gaps(self, graphs):
        assert graphs.spectral_gap(_graph(nx.path_graph(2))).lambda2 == pytest.approx(2.0)
        cycle = graphs.spectral_gap(_graph(nx.cycle_graph(4)))
        assert cycle.lambda2 == pytest.approx(1.0)
        assert cycle.multiplicity_flag
        complete = graphs.spectral_gap(_graph(nx.complete_graph(4)))
        assert complete.lambda2 == pytest.approx(4.0 / 3.0)
        assert complete.lambda1 == pytest.approx(0.0, abs=1e-12)
        assert complete.multiplicity_flag

    def test_matches_networkx(self, graphs):
        graph = graphs.sample_gnp(40, 0.4, Seed(master=8))
        assert graphs.spectral_gap(graph).lambda2 == pytest.approx(_oracle_gap(graph.graph), abs=1e-10)

    def test_laplacian_deloc_on_edge(self, graphs):
        report = graphs.laplacian_deloc_audit(_graph(nx.path_graph(2)))
        assert report.lambda2 == pytest.approx(2.0)
        assert report.linf == pytest.approx(1.0 / math.sqrt(2.0))
        assert report.frac_below == 0.0
        assert report.eps_grid == [0.5]

    def test_laplacian_deloc_on_cycle(self, graphs):
        report = graphs.laplacian_deloc_audit(_graph(nx.cycle_graph(12)))
        assert report.adjacency_residual == pytest.approx(0.0, abs=1e-9)
        assert report.multiplicity_flag


class TestNodalDomains:

    def test_path_example(self, graphs):
        path = _graph(nx.path_graph(3))
        v = np.array([1.0, -1.0, 1.0])
        nodal = graphs.nodal_domains(path, v)
        assert nodal.positive_domains == ((0,), (2,))
        assert nodal.negative_domains == ((1,),)
        assert nodal.domain_count == 3
        cross = graphs.cross_domain_degrees(path, v)
        assert (cross.min_positive_to_negative, cross.min_negative_to_positive) == (1, 2)

    def test_single_sign_is_degenerate(self, graphs):
        path = _graph(nx.path_graph(4))
        assert graphs.nodal_domains(path, np.ones(4)).domain_count == 1
        assert graphs.cross_domain_degrees(path, np.ones(4)).degenerate

    def test_complete_bipartite(self, graphs):
        graph = _graph(nx.complete_bipartite_graph(3, 3))
        v = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
        cross = graphs.cross_domain_degrees(graph, v)
        assert (cross.min_positive_to_negative, cross.min_negative_to_positive) == (3, 3)

    def test_zero_set_uses_relative_tolerance(self, graphs):
        path = _graph(nx.path_graph(3))
        nodal = graphs.nodal_domains(path, np.array([1.0, 1e-14, -1.0]))
        assert nodal.zero_set == (1,)
        assert nodal.residual_set == (1,)

    def test_domains_partition_vertices(self, graphs, rng):
        graph = graphs.sample_gnp(25, 0.2, Seed(master=2))
        for _ in range(10):
            v = rng.normal(size=25)
            nodal = graphs.nodal_domains(graph, v)
            seen = [x for d in nodal.positive_domains + nodal.negative_domains for x in d] + list(nodal.zero_set)
            assert sorted(seen) == list(range(25))
            for domain in nodal.positive_domains + nodal.negative_domains:
                assert nx.is_connected(graph.graph.subgraph(domain))

    def test_survey_rows(self, graphs):
        rows, summary = graphs.nodal_survey(30, 0.5, trials=1, master_seed=4)
        assert summary.vectors == 29
        assert [row.index for row in rows] == list(range(1, 30))
        assert all(row.domains >= 2 for row in rows)

    @pytest.mark.slow
    def test_dense_graphs_have_two_domains(self, graphs):
        _, summary = graphs.nodal_survey(200, 0.5, trials=3, master_seed=0)
        assert summary.two_domain_fraction >= 0.99


class TestBraess:

    def test_sufficient_condition(self, graphs):
        cycle = _graph(nx.cycle_graph(6))
        x = np.full(6, 1.0 / math.sqrt(6.0))
        assert graphs.braess_sufficient_condition(cycle, x, 0, 3, c1=0.0, c2=2.0)
        assert not graphs.braess_sufficient_condition(cycle, x, 0, 3, c1=0.0, c2=0.5)
        y = x.copy()
        y[3] = -y[3]
        assert not graphs.braess_sufficient_condition(cycle, y, 0, 3, c1=0.0, c2=2.0)
        with pytest.raises(ArgumentError):
            graphs.braess_sufficient_condition(cycle, x, 0, 1)

    def test_complete_graph_has_no_candidates(self, graphs):
        with pytest.raises(NoNonEdgesError):
            graphs.a_minus(graphs.parse_edge_list(K3_EDGE_LIST))

    def test_cycle_against_networkx(self, graphs):
        cycle = nx.cycle_graph(4)
        report = graphs.a_minus(_graph(cycle))
        assert [(p.u, p.w) for p in report.tested] == [(0, 2), (1, 3)]
        for pair in report.tested:
            added = nx.Graph(cycle)
            added.add_edge(pair.u, pair.w)
            assert pair.lambda2_new == pytest.approx(_oracle_gap(added), abs=1e-10)
            assert pair.tie
            assert not pair.decreased
        assert report.a_minus == 0.0

    def test_certificate_implies_decrease(self, graphs):
        graph = graphs.sample_gnp(30, 0.5, Seed(master=6))
        report = graphs.a_minus(graph)
        assert len(report.tested) == len(graph.non_edges())
        for pair in report.tested:
            if pair.certified:
                assert pair.decreased
            assert pair.certificate_bound >= pair.lambda2_new - 1e-9
        assert 0.0 <= report.a_minus <= 1.0

    def test_sampled_mode(self, graphs):
        graph = graphs.sample_gnp(30, 0.5, Seed(master=6))
        first = graphs.a_minus(graph, mode=BraessMode.SAMPLED, m=5, seed=1)
        again = graphs.a_minus(graph, mode=BraessMode.SAMPLED, m=5, seed=1)
        pairs = [(p.u, p.w) for p in first.tested]
        assert len(pairs) == 5
        assert pairs == sorted(pairs)
        assert pairs == [(p.u, p.w) for p in again.tested]
        with pytest.raises(ArgumentError):
            graphs.a_minus(graph, mode=BraessMode.SAMPLED)

    def test_exact_mode_guard(self, graphs):
        with pytest.raises(UnsupportedError):
            graphs.a_minus(_graph(nx.path_graph(151)))

    def test_frontier(self, graphs):
        graph = graphs.sample_gnp(20, 0.5, Seed(master=7))
        report = graphs.a_minus(graph)
        rows = graphs.braess_condition_frontier(graph, report, [0.0, 1.0], [0.5, 1.0, 2.0])
        assert len(rows) == 6
        assert all(row.false_positives <= row.flagged for row in rows)

    def test_weyl_audit(self, graphs):
        graph = graphs.sample_gnp(20, 0.5, Seed(master=9))
        rows = graphs.edge_addition_weyl_audit(graph, graph.non_edges()[:10])
        assert len(rows) == 10
        assert all(row.holds for row in rows)

    @pytest.mark.slow
    def test_dense_graph_fraction(self, graphs):
        for trial in range(2):
            graph = graphs.sample_gnp(100, 0.5, Seed(master=0, trial_index=trial))
            report = graphs.a_minus(graph)
            assert 0.35 <= report.a_minus <= 0.65


class TestPropertyAudit:

    def test_exact_items(self, graphs):
        graph = graphs.sample_gnp(60, 0.5, Seed(master=1))
        report = graphs.gnp_property_audit(graph)
        assert report.exact_items_hold
        identity = [c for c in report.check(5) if c.name == "non_edge_identity"]
        assert identity[0].holds
        top = [c for c in report.check(4) if c.name == "top_eigenvalue"]
        assert top[0].value == pytest.approx(1.0)
        assert report.check(1)[0].heuristic

    def test_small_graph_skips_crossing_check(self, graphs):
        report = graphs.gnp_property_audit(graphs.sample_gnp(20, 0.5, Seed(master=1)))
        assert report.check(2)[0].holds is None

    @pytest.mark.parametrize("text", ["n 3\n", "n 4\n0 1\n1 2\n"])
    def test_degenerate_graphs(self, graphs, text):
        with pytest.raises(DegeneracyError):
            graphs.gnp_property_audit(graphs.parse_edge_list(text))

    @pytest.mark.slow
    def test_dense_graphs(self, graphs):
        passed = sum(
            graphs.gnp_property_audit(graphs.sample_gnp(300, 0.5, Seed(master=0, trial_index=t))).exact_items_hold
            for t in range(20)
        )
        assert passed >= 19


class TestEdgeLists:

    def test_parse_and_format(self, graphs):
        graph = graphs.parse_edge_list(K3_EDGE_LIST)
        assert graph.n == 3
        assert graph.edges == [(0, 1), (0, 2), (1, 2)]
        assert graphs.format_edge_list(graph) == "n 3\n0 1\n0 2\n1 2\n"

    @pytest.mark.parametrize("text", ["", "3\n0 1\n", "n 2\n0 5\n", "n 3\n1 1\n", "n 3\n0 x\n"])
    def test_rejects_malformed(self, graphs, text):
        with pytest.raises(SpecificationError) as excinfo:
            graphs.parse_edge_list(text)
        assert excinfo.value.field == "edge_list"
