"""
Compact metric graphs, edge-end indexing and periodic orbits.

Edge ends are numbered 0..2E-1: index j < E is the initial end of edge j
(x = 0), index j + E is its terminal end (x = l_j). The same numbers label
directed edges: directed edge j leaves from edge end j, so j < E runs along
edge j from its initial to its terminal vertex and j + E runs backwards.
A transition j -> j' is possible when S[j', omega(j)] is nonzero.
"""

import math
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from qgraph.config import settings
from qgraph.exceptions import (
    CutoffTooLarge,
    DanglingVertexReference,
    EmptyGraph,
    IndexOutOfRange,
    NonPositiveLength,
)
from qgraph.logging import get_logger
from qgraph.utils import parallel_map

logger = get_logger("graph", metadata={"component": "graph"})


class Edge(BaseModel):
    """A single edge; loops and parallel edges are allowed."""

    model_config = ConfigDict(frozen=True)

    initial: int = Field(..., description="Vertex at x = 0")
    terminal: int = Field(..., description="Vertex at x = length")
    length: float = Field(..., description="Positive edge length")


class DirectedEdgeIndex(BaseModel):
    """Edge-end numbering of a graph with E edges."""

    model_config = ConfigDict(frozen=True)

    edge_count: int
    end_to_vertex: Tuple[int, ...]

    @property
    def size(self) -> int:
        return 2 * self.edge_count

    def omega(self, j: int) -> int:
        """Opposite end of the edge that carries end j."""
        if not isinstance(j, (int, np.integer)) or not 0 <= j < self.size:
            raise IndexOutOfRange(index=j, size=self.size)
        return int(j + self.edge_count) if j < self.edge_count else int(j - self.edge_count)

    def omega_array(self) -> np.ndarray:
        E = self.edge_count
        return np.concatenate([np.arange(E, 2 * E), np.arange(0, E)])


class MetricGraph(BaseModel):
    """
    Immutable compact metric graph.

    Attributes:
        vertex_count: Number of vertices V
        edges: Edges in the order that defines the edge-end numbering
    """

    model_config = ConfigDict(frozen=True)

    vertex_count: int
    edges: Tuple[Edge, ...]

    @property
    def V(self) -> int:
        return self.vertex_count

    @property
    def E(self) -> int:
        return len(self.edges)

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([edge.length for edge in self.edges], dtype=float)

    @cached_property
    def end_lengths(self) -> np.ndarray:
        """Edge length attached to each of the 2E edge ends (the diagonal of D(l))."""
        return np.concatenate([self.lengths, self.lengths])

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    @property
    def l_min(self) -> float:
        return float(self.lengths.min())

    @property
    def l_max(self) -> float:
        return float(self.lengths.max())

    @cached_property
    def index(self) -> DirectedEdgeIndex:
        ends = [edge.initial for edge in self.edges] + [edge.terminal for edge in self.edges]
        return DirectedEdgeIndex(edge_count=self.E, end_to_vertex=tuple(ends))

    @cached_property
    def vertex_degrees(self) -> Tuple[int, ...]:
        degrees = [0] * self.vertex_count
        for vertex in self.index.end_to_vertex:
            degrees[vertex] += 1
        return tuple(degrees)

    @cached_property
    def vertex_ends(self) -> Tuple[Tuple[int, ...], ...]:
        """Edge ends grouped by vertex, ascending within each vertex."""
        groups: List[List[int]] = [[] for _ in range(self.vertex_count)]
        for j, vertex in enumerate(self.index.end_to_vertex):
            groups[vertex].append(j)
        return tuple(tuple(group) for group in groups)

    def omega(self, j: int) -> int:
        return self.index.omega(j)

    def D(self) -> np.ndarray:
        """Diagonal matrix D(l) = diag(l, l)."""
        return np.diag(self.end_lengths).astype(complex)

    def to_networkx(self) -> nx.MultiGraph:
        graph = nx.MultiGraph()
        graph.add_nodes_from(range(self.vertex_count))
        for e, edge in enumerate(self.edges):
            graph.add_edge(edge.initial, edge.terminal, key=e, length=edge.length)
        return graph

    @property
    def is_connected(self) -> bool:
        return nx.is_connected(self.to_networkx())

    @property
    def euler_characteristic(self) -> int:
        return self.vertex_count - self.E

    def kirchhoff_zero_mode(self) -> Optional[Tuple[int, int]]:
        """(g0, N) = (1, E - V + 2) of standard Kirchhoff conditions; None on a disconnected graph."""
        if not self.is_connected:
            return None
        return 1, 2 - self.euler_characteristic

    def kirchhoff_gamma(self) -> Optional[Fraction]:
        """Heat-trace constant (V - E)/2 of standard Kirchhoff conditions on a connected graph."""
        if not self.is_connected:
            return None
        return Fraction(self.euler_characteristic, 2)

    def describe(self) -> Dict[str, object]:
        return {
            "V": self.V,
            "E": self.E,
            "total_length": self.total_length,
            "l_min": self.l_min,
            "l_max": self.l_max,
            "degrees": list(self.vertex_degrees),
        }


EdgeLike = Union[Edge, Sequence[float]]


def build_graph(vertices: int, edges: Iterable[EdgeLike]) -> MetricGraph:
    """
    Build a metric graph from a vertex count and (initial, terminal, length) triples.

    Args:
        vertices: Number of vertices V; vertex ids run over 0..V-1
        edges: Edge objects or (initial, terminal, length) triples

    Returns:
        MetricGraph: graph with derived degrees, total length and edge-end index

    Raises:
        EmptyGraph: no edges were given
        NonPositiveLength: a length is not strictly positive and finite
        DanglingVertexReference: an edge names a vertex outside 0..V-1
    """
    parsed: List[Edge] = []
    for e, item in enumerate(edges):
        if isinstance(item, Edge):
            initial, terminal, length = item.initial, item.terminal, item.length
        else:
            initial, terminal, length = item
        for vertex in (initial, terminal):
            if not 0 <= int(vertex) < vertices:
                raise DanglingVertexReference(edge=e, vertex=int(vertex), vertex_count=vertices)
        length = float(length)
        if not math.isfinite(length) or length <= 0.0:
            raise NonPositiveLength(edge=e, length=length)
        parsed.append(Edge(initial=int(initial), terminal=int(terminal), length=length))
    if not parsed:
        raise EmptyGraph()

    graph = MetricGraph(vertex_count=int(vertices), edges=tuple(parsed))
    logger.debug("Built metric graph", metadata=graph.describe())
    return graph


def interval(length: float = math.pi) -> MetricGraph:
    return build_graph(2, [(0, 1, length)])


def loop(length: float = 1.0) -> MetricGraph:
    return build_graph(1, [(0, 0, length)])


def star(lengths: Sequence[float]) -> MetricGraph:
    """Star with center 0 and leaves 1..n; edge e runs from the center to leaf e+1."""
    return build_graph(len(lengths) + 1, [(0, e + 1, l) for e, l in enumerate(lengths)])


class PeriodicOrbit(BaseModel):
    """
    Class of closed directed paths modulo cyclic rotation.

    Attributes:
        rep: Lexicographically least rotation of the directed-edge sequence
        topo_length: Number of directed edges n
        metric_length: l_p, sum of the traversed edge lengths
        repetition: r_p, how often the primitive orbit is repeated
        primitive_length: l_p^#, metric length of the primitive orbit
    """

    model_config = ConfigDict(frozen=True)

    rep: Tuple[int, ...]
    topo_length: int
    metric_length: float
    repetition: int
    primitive_length: float

    @property
    def transitions(self) -> List[Tuple[int, int]]:
        """Consecutive (j, j') pairs along the orbit, including the wrap-around."""
        n = self.topo_length
        return [(self.rep[m], self.rep[(m + 1) % n]) for m in range(n)]


def canonical_rotation(sequence: Sequence[int]) -> Tuple[int, ...]:
    seq = tuple(int(j) for j in sequence)
    return min(seq[i:] + seq[:i] for i in range(len(seq)))


def smallest_period(sequence: Sequence[int]) -> int:
    n = len(sequence)
    seq = tuple(sequence)
    for q in range(1, n + 1):
        if n % q == 0 and seq[q:] + seq[:q] == seq:
            return q
    return n


def make_orbit(g: MetricGraph, sequence: Sequence[int]) -> PeriodicOrbit:
    rep = canonical_rotation(sequence)
    n = len(rep)
    q = smallest_period(rep)
    ends = g.end_lengths
    primitive = float(sum(ends[j] for j in rep[:q]))
    r = n // q
    return PeriodicOrbit(
        rep=rep,
        topo_length=n,
        metric_length=primitive * r,
        repetition=r,
        primitive_length=primitive,
    )


def structural_mask(g: MetricGraph, smatrix: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """
    Allowed-transition mask from the zero pattern of an S-matrix.

    mask[j', j] is True iff |S[j', omega(j)]| exceeds tol.
    """
    tol = settings.QGRAPH_STRUCTURAL_ZERO_TOL if tol is None else tol
    omega = g.index.omega_array()
    return np.abs(np.asarray(smatrix)[:, omega]) > tol


def count_closed_paths(mask: np.ndarray, n: int) -> int:
    """Number of closed directed paths of length n, tr(mask^n)."""
    power = np.linalg.matrix_power(np.asarray(mask, dtype=np.int64), n)
    return int(np.trace(power))


def _orbits_of_length(g: MetricGraph, successors: List[List[int]], n: int, cap: int) -> List[PeriodicOrbit]:
    size = len(successors)
    found: List[PeriodicOrbit] = []
    for start in range(size):
        stack: List[Tuple[int, ...]] = [(start,)]
        while stack:
            path = stack.pop()
            if len(path) == n:
                if start in successors[path[-1]] and canonical_rotation(path) == path:
                    found.append(make_orbit(g, path))
                    if len(found) > cap:
                        raise CutoffTooLarge(n_max=n, cap=cap, reached_length=n)
                continue
            # any rotation starting below `start` would be smaller
            for nxt in reversed(successors[path[-1]]):
                if nxt >= start:
                    stack.append(path + (nxt,))
    found.sort(key=lambda orbit: orbit.rep)
    return found


def enumerate_orbits(
    g: MetricGraph,
    mask: np.ndarray,
    n_max: int,
    cap: Optional[int] = None,
) -> Dict[int, List[PeriodicOrbit]]:
    """
    Enumerate all periodic orbits up to topological length n_max.

    Args:
        g: The metric graph
        mask: Boolean 2E x 2E matrix, mask[j', j] True when j -> j' is allowed
        n_max: Largest topological length
        cap: Maximum total number of orbit classes

    Returns:
        Dict mapping n to the orbit classes of topological length n

    Raises:
        CutoffTooLarge: the number of orbits exceeds the cap
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    cap = settings.QGRAPH_ORBIT_CAP if cap is None else int(cap)
    mask = np.asarray(mask, dtype=bool)
    successors = [sorted(int(i) for i in np.nonzero(mask[:, j])[0]) for j in range(mask.shape[1])]

    lengths = list(range(1, n_max + 1))
    results = parallel_map(lambda n: _orbits_of_length(g, successors, n, cap), lengths)
    orbits = dict(zip(lengths, results))

    total = sum(len(v) for v in orbits.values())
    if total > cap:
        reached = next(n for n in lengths if sum(len(orbits[m]) for m in lengths if m <= n) > cap)
        raise CutoffTooLarge(n_max=n_max, cap=cap, reached_length=reached)

    logger.info(
        "Enumerated periodic orbits",
        metadata={"n_max": n_max, "orbits": total, "per_length": [len(orbits[n]) for n in lengths]},
    )
    return orbits
