from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Tuple, TYPE_CHECKING

import networkx as nx
import numpy as np

from app.exceptions import ArgumentError

if TYPE_CHECKING:
    from schemas.ensemble import Seed


@dataclass(frozen=True)
class GraphSample:
    """
    Simple undirected graph on vertices 0..n-1.

    Immutable after construction: ``graph`` is a frozen networkx graph and
    ``with_edge`` returns a new sample.
    """
    graph: nx.Graph
    p: Optional[float] = None
    seed: Optional["Seed"] = None

    def __post_init__(self):
        g = self.graph
        if set(g.nodes) != set(range(g.number_of_nodes())):
            raise ArgumentError("vertices must be labelled 0..n-1")
        if nx.number_of_selfloops(g):
            raise ArgumentError("self-loops are not allowed")
        if not nx.is_frozen(g):
            object.__setattr__(self, "graph", nx.freeze(g))

    def __repr__(self):
        return f"<GraphSample(n={self.n}, edges={self.edge_count}, p={self.p})>"

    @classmethod
    def from_edges(cls, n: int, edges: List[Tuple[int, int]], p: Optional[float] = None) -> "GraphSample":
        g = nx.Graph()
        g.add_nodes_from(range(n))
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ArgumentError(f"edge ({u}, {v}) out of range for n={n}")
            g.add_edge(int(u), int(v))
        return cls(g, p=p)

    @property
    def n(self) -> int:
        """Vertex count"""
        return self.graph.number_of_nodes()

    @property
    def edge_count(self) -> int:
        return self.graph.number_of_edges()

    @property
    def edges(self) -> List[Tuple[int, int]]:
        """Edges as sorted (u, v) pairs with u < v"""
        return sorted((min(u, v), max(u, v)) for u, v in self.graph.edges)

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = nx.to_numpy_array(self.graph, nodelist=range(self.n), dtype=float)
        a.setflags(write=False)
        return a

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @property
    def mean_degree(self) -> float:
        """Observable stand-in for np: 2|E| / n"""
        return 2.0 * self.edge_count / self.n

    def has_edge(self, u: int, v: int) -> bool:
        return self.graph.has_edge(u, v)

    def non_edges(self) -> List[Tuple[int, int]]:
        """All non-edges (u, w) with u < w, in lexicographic order"""
        iu, ju = np.nonzero(np.triu(self.adjacency == 0, k=1))
        return list(zip(iu.tolist(), ju.tolist()))

    def with_edge(self, u: int, w: int) -> "GraphSample":
        g = nx.Graph(self.graph)
        g.add_edge(u, w)
        return GraphSample(g, p=self.p, seed=self.seed)


@dataclass(frozen=True)
class NodalDecomposition:
    """
    Sign domains of a vertex function: connected components of the positive and
    negative supports plus the set of (numerically) zero vertices.
    """
    positive_domains: Tuple[Tuple[int, ...], ...]
    negative_domains: Tuple[Tuple[int, ...], ...]
    zero_set: Tuple[int, ...]
    zero_tol: float
    n: int = field(default=0)

    def __repr__(self):
        return (f"<NodalDecomposition(+{len(self.positive_domains)}, -{len(self.negative_domains)}, "
                f"zero={len(self.zero_set)})>")

    @property
    def domain_count(self) -> int:
        return len(self.positive_domains) + len(self.negative_domains)

    @property
    def positive_support(self) -> Tuple[int, ...]:
        return tuple(sorted(v for d in self.positive_domains for v in d))

    @property
    def negative_support(self) -> Tuple[int, ...]:
        return tuple(sorted(v for d in self.negative_domains for v in d))

    @property
    def residual_set(self) -> Tuple[int, ...]:
        """Vertices outside the largest positive and the largest negative domain"""
        keep = set()
        for domains in (self.positive_domains, self.negative_domains):
            if domains:
                keep.update(max(domains, key=lambda d: (len(d), -d[0])))
        return tuple(v for v in range(self.n) if v not in keep)


@dataclass(frozen=True)
class GraphMatrices:
    """A_G, the degree vector, D^{-1/2} A D^{-1/2} and L_G = I - D^{-1/2} A D^{-1/2}"""
    adjacency: np.ndarray
    degrees: np.ndarray
    normalized_adjacency: np.ndarray
    laplacian: np.ndarray

    @property
    def degree_matrix(self) -> np.ndarray:
        return np.diag(self.degrees)
