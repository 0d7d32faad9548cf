from typing import List, Optional, Sequence, Tuple
import logging
import math

import networkx as nx
import numpy as np
from scipy import linalg

from app.config import settings
from app.exceptions import ArgumentError, DegeneracyError, NoNonEdgesError, SpecificationError, UnsupportedError
from models.enums import BraessMode
from models.graph import GraphMatrices, GraphSample, NodalDecomposition
from schemas.ensemble import Seed
from schemas.graph import (
    BraessPair,
    BraessReport,
    CrossDomainReport,
    FrontierRow,
    GraphAuditReport,
    LaplacianDelocReport,
    NodalRow,
    NodalSummary,
    PropertyCheck,
    SpectralGapResult,
    WeylAuditRow,
)
from services.deloc_service import get_deloc_service
from services.linalg_service import get_linalg_service
from utils.logger import log_timing
from utils.parallel import ordered_map
from utils.seeding import pair_uniforms

logger = logging.getLogger(__name__)

_AUDIT_STREAM = 8
_BRAESS_STREAM = 9


def normalized_laplacian(adjacency: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(D^{-1/2} A D^{-1/2}, I - D^{-1/2} A D^{-1/2}); raises on an isolated vertex"""
    degrees = adjacency.sum(axis=1)
    if np.any(degrees == 0):
        isolated = int(np.flatnonzero(degrees == 0)[0])
        raise DegeneracyError(f"vertex {isolated} is isolated; normalized Laplacian undefined")
    scale = 1.0 / np.sqrt(degrees)
    a_hat = adjacency * scale[:, None] * scale[None, :]
    return a_hat, np.eye(adjacency.shape[0]) - a_hat


class GraphService:
    """
    G(n, p) sampling, normalized-Laplacian spectra, nodal domains and the
    effect of edge additions on the spectral gap.
    """

    def __init__(self):
        self.linalg = get_linalg_service()
        self.deloc = get_deloc_service()

    # ==================== Sampling and matrices ====================

    def sample_gnp(self, n: int, p: float, seed: Seed) -> GraphSample:
        """Each pair {u, w} is an edge iff its counter-based uniform is below p"""
        if n < 2:
            raise ArgumentError(f"n must be at least 2, got {n}")
        if not 0 < p < 1:
            raise ArgumentError(f"p must lie in (0, 1), got {p}")
        iu, ju = np.triu_indices(n, k=1)
        present = pair_uniforms(seed.key(), iu, ju) < p
        g = nx.Graph()
        g.add_nodes_from(range(n))
        g.add_edges_from(zip(iu[present].tolist(), ju[present].tolist()))
        return GraphSample(g, p=p, seed=seed)

    def graph_matrices(self, graph: GraphSample) -> GraphMatrices:
        a = np.array(graph.adjacency)
        a_hat, lap = normalized_laplacian(a)
        return GraphMatrices(adjacency=a, degrees=a.sum(axis=1), normalized_adjacency=a_hat, laplacian=lap)

    def edge_probability(self, graph: GraphSample) -> float:
        """Generation parameter, or the edge density when the graph carries none"""
        if graph.p is not None:
            return graph.p
        return graph.edge_count / math.comb(graph.n, 2)

    # ==================== Property audit ====================

    @log_timing("G(n,p) property audit")
    def gnp_property_audit(self, graph: GraphSample, c_audit: Optional[float] = None,
                           seed: int = 0) -> GraphAuditReport:
        """
        Audit the five G(n, p) properties. Item 1 is heuristic (greedy maximal
        independent sets), item 2 sampled, items 3 to 5 exact.
        """
        c = settings.c_audit if c_audit is None else c_audit
        n = graph.n
        p = self.edge_probability(graph)
        if p == 0.0:
            raise DegeneracyError("graph has no edges; the property audit needs p > 0")
        np_ = n * p
        log_n = math.log(n)
        a = graph.adjacency
        rng = Seed(master=seed, trial_index=0).generator(stream=_AUDIT_STREAM)
        checks: List[PropertyCheck] = []

        # (1) independent sets
        sizes = [len(nx.maximal_independent_set(graph.graph, seed=int(s)))
                 for s in rng.integers(0, 2**31, size=50)]
        limit = c * log_n / p
        checks.append(PropertyCheck(item=1, name="independent_set", value=max(sizes), upper=limit,
                                    holds=max(sizes) <= limit, heuristic=True,
                                    detail="max over 50 greedy maximal independent sets"))

        # (2) disjoint sets of size C log n / p see an edge between them
        size = math.ceil(c * log_n / p)
        if 2 * size > n:
            checks.append(PropertyCheck(item=2, name="crossing_edges", value=0, holds=None,
                                        detail=f"skipped: two sets of size {size} do not fit in {n} vertices"))
        else:
            misses = 0
            for _ in range(100):
                order = rng.permutation(n)
                first, second = order[:size], order[size:2 * size]
                misses += int(not a[np.ix_(first, second)].any())
            checks.append(PropertyCheck(item=2, name="crossing_edges", value=misses, upper=0.0,
                                        holds=misses == 0, detail=f"100 sampled pairs of size {size}"))

        # (3) degrees
        degrees = graph.degrees
        spread = log_n * math.sqrt(np_)
        lower, upper = np_ - spread, np_ + spread
        checks.append(PropertyCheck(item=3, name="min_degree", value=float(degrees.min()), lower=lower,
                                    holds=bool(degrees.min() >= lower)))
        checks.append(PropertyCheck(item=3, name="max_degree", value=float(degrees.max()), upper=upper,
                                    holds=bool(degrees.max() <= upper)))

        # (4) normalized adjacency spectrum
        a_hat, _ = normalized_laplacian(np.array(a))
        eigenvalues = np.sort(linalg.eigvalsh(a_hat))[::-1]
        top = float(eigenvalues[0])
        checks.append(PropertyCheck(item=4, name="top_eigenvalue", value=top, lower=1.0 - 1e-10,
                                    upper=1.0 + 1e-10, holds=abs(top - 1.0) <= 1e-10))
        rest = float(np.max(np.abs(eigenvalues[1:])))
        checks.append(PropertyCheck(item=4, name="bulk_eigenvalues", value=rest, upper=c / math.sqrt(np_),
                                    holds=rest <= c / math.sqrt(np_)))

        # (5) non-edges inside J; J = V first, then 20 random subsets
        subsets = [np.arange(n)] + [np.sort(rng.choice(n, size=int(rng.integers(2, n + 1)), replace=False))
                                    for _ in range(20)]
        worst = 0.0
        identity_holds = True
        for j in subsets:
            pairs = math.comb(j.size, 2)
            non_edges = int(np.count_nonzero(np.triu(a[np.ix_(j, j)] == 0, k=1)))
            inside = graph.graph.subgraph(j.tolist()).number_of_edges()
            identity_holds &= non_edges + inside == pairs
            worst = max(worst, abs(non_edges - (1.0 - p) * pairs))
        deviation = n ** 1.5
        checks.append(PropertyCheck(item=5, name="non_edge_deviation", value=worst, upper=deviation,
                                    holds=worst <= deviation, detail="J = V and 20 random subsets"))
        checks.append(PropertyCheck(item=5, name="non_edge_identity", value=float(identity_holds),
                                    holds=identity_holds))

        return GraphAuditReport(n=n, p=p, edge_count=graph.edge_count, checks=checks)

    # ==================== Nodal domains ====================

    def nodal_domains(self, graph: GraphSample, v: np.ndarray, zero_tol: Optional[float] = None) -> NodalDecomposition:
        """
        Split vertices into the zero set (|v_i| <= zero_tol * max|v|) and the
        connected components of the positive and negative supports.
        """
        zero_tol = settings.nodal_zero_tol if zero_tol is None else zero_tol
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (graph.n,):
            raise ArgumentError(f"vector length {v.shape} does not match n={graph.n}")

        scale = float(np.max(np.abs(v))) if v.size else 0.0
        zero = np.abs(v) <= zero_tol * scale

        def domains(mask):
            sub = graph.graph.subgraph(np.flatnonzero(mask).tolist())
            parts = [tuple(sorted(c)) for c in nx.connected_components(sub)]
            return tuple(sorted(parts))

        return NodalDecomposition(
            positive_domains=domains((v > 0) & ~zero),
            negative_domains=domains((v < 0) & ~zero),
            zero_set=tuple(np.flatnonzero(zero).tolist()),
            zero_tol=zero_tol,
            n=graph.n,
        )

    def cross_domain_degrees(self, graph: GraphSample, v: np.ndarray,
                             zero_tol: Optional[float] = None) -> CrossDomainReport:
        """min over P of |N(x) & N| and min over N of |N(x) & P|"""
        nodal = self.nodal_domains(graph, v, zero_tol)
        positive = list(nodal.positive_support)
        negative = list(nodal.negative_support)
        if not positive or not negative:
            return CrossDomainReport(degenerate=True)
        block = graph.adjacency[np.ix_(positive, negative)]
        return CrossDomainReport(
            min_positive_to_negative=int(block.sum(axis=1).min()),
            min_negative_to_positive=int(block.sum(axis=0).min()),
        )

    @log_timing("nodal survey")
    def nodal_survey(self, n: int, p: float, trials: int, master_seed: int = 0,
                     zero_tol: Optional[float] = None, c_residual: float = 1.0,
                     threads: Optional[int] = None) -> Tuple[List[NodalRow], NodalSummary]:
        """Nodal decomposition of every non-first adjacency eigenvector over sampled G(n, p)"""
        if trials < 1:
            raise ArgumentError(f"trials must be at least 1, got {trials}")

        def run_trial(trial):
            seed = Seed(master=master_seed, trial_index=trial)
            graph = self.sample_gnp(n, p, seed)
            spectral = self.linalg.eigenpairs(graph.adjacency, symmetric=True, seed=seed)
            rows = []
            for index in range(1, n):
                v = spectral.vector(index)
                nodal = self.nodal_domains(graph, v, zero_tol)
                cross = self.cross_domain_degrees(graph, v, zero_tol)
                rows.append(NodalRow(
                    trial=trial, index=index, eigenvalue=float(spectral.eigenvalues[index]),
                    domains=nodal.domain_count,
                    positive_domains=len(nodal.positive_domains),
                    negative_domains=len(nodal.negative_domains),
                    zero_count=len(nodal.zero_set),
                    residual_count=len(nodal.residual_set),
                    min_positive_to_negative=cross.min_positive_to_negative,
                    min_negative_to_positive=cross.min_negative_to_positive,
                ))
            return rows

        rows = [row for chunk in ordered_map(run_trial, range(trials), threads=threads) for row in chunk]
        two = sum(1 for row in rows if row.domains == 2 and row.zero_count == 0)
        summary = NodalSummary(
            trials=trials, n=n, p=p, vectors=len(rows),
            two_domain_fraction=two / len(rows) if rows else 0.0,
            max_residual_count=max((row.residual_count for row in rows), default=0),
            residual_reference=c_residual * math.log(n) ** 2 / p ** 2,
        )
        return rows, summary

    # ==================== Spectral gap ====================

    def spectral_gap(self, graph: GraphSample) -> SpectralGapResult:
        """Second-smallest eigenvalue of L_G with its eigenvector"""
        if graph.n < 2:
            raise ArgumentError("spectral gap needs at least 2 vertices")
        matrices = self.graph_matrices(graph)
        spectral = self.linalg.eigenpairs(matrices.laplacian, symmetric=True, seed=graph.seed)
        values = spectral.eigenvalues
        lambda3 = float(values[-3]) if graph.n >= 3 else None
        flag = lambda3 is not None and abs(values[-2] - lambda3) <= settings.multiplicity_tol
        if flag:
            logger.debug(f"lambda2 has multiplicity > 1 on {graph!r}")
        return SpectralGapResult(
            lambda1=float(values[-1]), lambda2=float(values[-2]), lambda3=lambda3,
            vector=spectral.vector(graph.n - 2), multiplicity_flag=flag,
        )

    def degree_hypothesis(self, graph: GraphSample) -> bool:
        """(1/2) d <= d_v <= (3/2) d for every vertex, d the mean degree"""
        d = graph.mean_degree
        degrees = graph.degrees
        return bool(np.all(degrees >= 0.5 * d) and np.all(degrees <= 1.5 * d))

    def braess_sufficient_condition(self, graph: GraphSample, x: np.ndarray, u: int, w: int,
                                    c1: Optional[float] = None, c2: Optional[float] = None) -> bool:
        """
        (x_u^2 + x_w^2) / sqrt(d) + c1 d^-2 < c2 x_u x_w with d the mean degree.
        """
        c1 = settings.braess_c1 if c1 is None else c1
        c2 = settings.braess_c2 if c2 is None else c2
        if graph.has_edge(u, w):
            raise ArgumentError(f"({u}, {w}) is already an edge")
        if u == w:
            raise ArgumentError("u and w must differ")
        d = graph.mean_degree
        xu, xw = float(x[u]), float(x[w])
        return (xu * xu + xw * xw) / math.sqrt(d) + c1 / (d * d) < c2 * xu * xw

    def _gap_after_addition(self, adjacency: np.ndarray, u: int, w: int, x: np.ndarray) -> Tuple[float, float]:
        """(lambda2 of G + uw, Rayleigh-quotient upper bound built from x)"""
        a = adjacency.copy()
        a[u, w] = a[w, u] = 1.0
        _, lap = normalized_laplacian(a)
        new_gap = float(linalg.eigvalsh(lap, subset_by_index=[1, 1])[0])
        y = np.sqrt(a.sum(axis=1))
        y /= np.linalg.norm(y)
        overlap = float(x @ y)
        denominator = 1.0 - overlap * overlap
        bound = float(x @ lap @ x) / denominator if denominator > 0 else math.inf
        return new_gap, bound

    @log_timing("Braess fraction")
    def a_minus(self, graph: GraphSample, mode: BraessMode = BraessMode.EXACT, m: Optional[int] = None,
                seed: int = 0, tie_tol: Optional[float] = None, c1: Optional[float] = None,
                c2: Optional[float] = None, threads: Optional[int] = None) -> BraessReport:
        """
        Fraction of non-edges whose addition decreases the spectral gap.

        Args:
            graph: input graph, every degree at least 1
            mode: EXACT tests every non-edge, SAMPLED m of them without replacement
            m: sample size for SAMPLED mode
            seed: master seed for the sample
            tie_tol: decreased means lambda2_new < lambda2_base - tie_tol

        Returns:
            BraessReport with tested pairs ordered by (u, w)
        """
        mode = BraessMode(mode)
        tie_tol = settings.braess_tie_tol if tie_tol is None else tie_tol
        c1 = settings.braess_c1 if c1 is None else c1
        c2 = settings.braess_c2 if c2 is None else c2

        candidates = graph.non_edges()
        if not candidates:
            raise NoNonEdgesError(graph.n)
        if mode is BraessMode.EXACT:
            if graph.n > settings.braess_exact_max_n:
                raise UnsupportedError(
                    f"exact mode is limited to n <= {settings.braess_exact_max_n}; use sampled mode"
                )
            tested = candidates
        else:
            if not m or m < 1:
                raise ArgumentError("sampled mode needs m >= 1")
            rng = Seed(master=seed, trial_index=0).generator(stream=_BRAESS_STREAM)
            chosen = rng.choice(len(candidates), size=min(m, len(candidates)), replace=False)
            tested = [candidates[i] for i in sorted(chosen)]

        base = self.spectral_gap(graph)
        x = base.vector
        adjacency = np.array(graph.adjacency)

        def test_pair(pair):
            u, w = pair
            new_gap, bound = self._gap_after_addition(adjacency, u, w, x)
            return BraessPair(
                u=u, w=w, lambda2_new=new_gap,
                decreased=new_gap < base.lambda2 - tie_tol,
                tie=abs(new_gap - base.lambda2) <= tie_tol,
                sufficient_condition=self.braess_sufficient_condition(graph, x, u, w, c1, c2),
                certificate_bound=bound,
                certified=bound < base.lambda2 - tie_tol,
            )

        pairs = ordered_map(test_pair, tested, threads=threads)
        decreased = sum(p.decreased for p in pairs)
        same_sign = sum(1 for u, w in candidates if x[u] * x[w] > 0) / len(candidates)
        logger.info(f"a_minus on n={graph.n}: {decreased}/{len(pairs)} decreased")
        return BraessReport(
            n=graph.n, lambda2_base=base.lambda2, mode=mode,
            m=m if mode is BraessMode.SAMPLED else None,
            tested=pairs, a_minus=decreased / len(pairs),
            same_sign_fraction=same_sign,
            degree_hypothesis=self.degree_hypothesis(graph),
            multiplicity_flag=base.multiplicity_flag, c1=c1, c2=c2,
        )

    def braess_condition_frontier(self, graph: GraphSample, report: BraessReport,
                                  c1_grid: Sequence[float], c2_grid: Sequence[float]) -> List[FrontierRow]:
        """False positives of the sufficient condition against exact verdicts over a (c1, c2) grid"""
        x = self.spectral_gap(graph).vector
        rows = []
        for c1 in c1_grid:
            for c2 in c2_grid:
                flagged = [p for p in report.tested
                           if self.braess_sufficient_condition(graph, x, p.u, p.w, c1, c2)]
                false_positives = sum(1 for p in flagged if not p.decreased)
                rows.append(FrontierRow(c1=c1, c2=c2, flagged=len(flagged), false_positives=false_positives,
                                        zero_false_positives=false_positives == 0))
        return rows

    # ==================== Delocalization and perturbation ====================

    def laplacian_deloc_audit(self, graph: GraphSample,
                              eps_grid: Sequence[float] = (0.1, 0.25, 0.5)) -> LaplacianDelocReport:
        """Sup norm, small-coordinate fraction and mass profile of the spectral-gap eigenvector"""
        gap = self.spectral_gap(graph)
        f = gap.vector
        n = graph.n
        threshold = n ** -0.625
        grid = [e for e in eps_grid if e * n >= 1]
        profile = self.deloc.mass_profile(f, grid)

        d = graph.mean_degree
        x = math.sqrt(d) * f / np.sqrt(graph.degrees)
        residual = np.linalg.norm(graph.adjacency @ x - (1.0 - gap.lambda2) * d * x) / np.linalg.norm(x)
        return LaplacianDelocReport(
            lambda2=gap.lambda2, linf=profile.linf,
            frac_below=float(np.mean(np.abs(f) < threshold)), threshold=threshold,
            eps_grid=list(profile.eps_grid), min_mass=list(profile.min_mass),
            multiplicity_flag=gap.multiplicity_flag, adjacency_residual=float(residual),
        )

    def edge_addition_weyl_audit(self, graph: GraphSample,
                                 pairs: Optional[Sequence[Tuple[int, int]]] = None) -> List[WeylAuditRow]:
        """Largest normalized-adjacency eigenvalue shift against ||A_hat_new - A_hat_old||"""
        candidates = list(pairs) if pairs is not None else graph.non_edges()
        a = np.array(graph.adjacency)
        a_hat, _ = normalized_laplacian(a)
        before = linalg.eigvalsh(a_hat)
        rows = []
        for u, w in candidates:
            if graph.has_edge(u, w):
                raise ArgumentError(f"({u}, {w}) is already an edge")
            added = a.copy()
            added[u, w] = added[w, u] = 1.0
            a_hat_new, _ = normalized_laplacian(added)
            perturbation = float(linalg.norm(a_hat_new - a_hat, 2))
            shift = float(np.max(np.abs(linalg.eigvalsh(a_hat_new) - before)))
            rows.append(WeylAuditRow(u=u, w=w, perturbation_norm=perturbation, max_shift=shift,
                                     holds=shift <= perturbation + settings.laplacian_psd_tol))
        return rows

    # ==================== Edge lists ====================

    def parse_edge_list(self, text: str) -> GraphSample:
        """Header line "n <count>", then one 0-indexed "u v" pair per line"""
        lines = [line.strip() for line in text.splitlines() if line.strip()]
        if not lines:
            raise SpecificationError("edge_list", "empty edge list")
        header = lines[0].split()
        if len(header) != 2 or header[0] != "n" or not header[1].isdigit():
            raise SpecificationError("edge_list", f"expected header 'n <count>', got {lines[0]!r}")
        n = int(header[1])
        edges = []
        for number, line in enumerate(lines[1:], start=2):
            parts = line.split()
            if len(parts) != 2 or not all(part.isdigit() for part in parts):
                raise SpecificationError("edge_list", f"line {number}: expected 'u v', got {line!r}")
            u, w = int(parts[0]), int(parts[1])
            if u == w:
                raise SpecificationError("edge_list", f"line {number}: self-loop at {u}")
            edges.append((u, w))
        try:
            return GraphSample.from_edges(n, edges)
        except ArgumentError as e:
            raise SpecificationError("edge_list", str(e)) from e

    def format_edge_list(self, graph: GraphSample) -> str:
        lines = [f"n {graph.n}"] + [f"{u} {w}" for u, w in graph.edges]
        return "\n".join(lines) + "\n"


# Singleton instance
_graph_service_instance: Optional[GraphService] = None


def get_graph_service() -> GraphService:
    """Get graph service singleton instance"""
    global _graph_service_instance
    if _graph_service_instance is None:
        _graph_service_instance = GraphService()
    return _graph_service_instance
