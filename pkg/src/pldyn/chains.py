"""Grid transition graphs, chain-recurrent cells and chain classes.

The delta-step relation of a PL map is outer-approximated on a uniform
grid: the image of a cell is an exact interval, inflated by delta and
covered by cells. Successor sets are therefore contiguous index ranges,
which keeps the graph linear in cell count. Chain classes are the
strongly connected components restricted to cells that lie on a cycle.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .maps import MapSpec


@dataclass(frozen=True)
class GridPartition:
    """Half-open cells [i*h, (i+1)*h) tiling [0, 1], last cell closed."""

    cell_width: float = 2.0 ** -12

    def __post_init__(self):
        if not (0.0 < self.cell_width <= 1.0):
            raise ParameterError("cell_width must lie in (0, 1]")

    @property
    def cell_count(self):
        return int(math.ceil(1.0 / self.cell_width))

    def cell_index(self, x):
        if not (0.0 <= x <= 1.0):
            raise ParameterError(f"state {x!r} outside [0, 1]")
        return min(int(x / self.cell_width), self.cell_count - 1)

    def cell_indices(self, xs):
        idx = np.floor(np.asarray(xs, dtype=float) / self.cell_width).astype(np.int64)
        return np.clip(idx, 0, self.cell_count - 1)

    def bounds(self, i):
        return i * self.cell_width, min((i + 1) * self.cell_width, 1.0)

    def midpoint(self, i):
        lo, hi = self.bounds(i)
        return 0.5 * (lo + hi)


@dataclass
class TransitionGraph:
    """Outer approximation of the one-step delta relation on grid cells.

    Successors of cell i are exactly the contiguous range
    lo[i] .. hi[i] (inclusive).
    """

    grid: GridPartition
    delta: float
    lo: np.ndarray
    hi: np.ndarray
    map_label: str
    _scc: tuple = field(default=None, repr=False, compare=False)

    def successors(self, i):
        return range(int(self.lo[i]), int(self.hi[i]) + 1)

    def has_self_loop(self, i):
        return self.lo[i] <= i <= self.hi[i]

    def edge_rows(self):
        for i in range(len(self.lo)):
            for j in self.successors(i):
                yield i, j

    def edges_to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("src,dst\n")
            for i, j in self.edge_rows():
                fh.write(f"{i},{j}\n")


@dataclass
class ChainClassSet:
    classes: list  # sorted cell-index arrays, ordered by leftmost cell
    recurrent_cells: np.ndarray
    grid: GridPartition
    delta: float

    def class_of_cell(self, i):
        for k, cls in enumerate(self.classes):
            if i in self._sets[k]:
                return k
        return None

    def __post_init__(self):
        self._sets = [set(map(int, c)) for c in self.classes]

    def hull(self, k):
        cls = self.classes[k]
        lo, _ = self.grid.bounds(int(cls[0]))
        _, hi = self.grid.bounds(int(cls[-1]))
        return lo, hi

    def to_json_dict(self):
        return {
            "classes": [list(map(int, c)) for c in self.classes],
            "h": self.grid.cell_width,
            "delta": self.delta,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)
            fh.write("\n")


def build_transition_graph(m: MapSpec, grid: GridPartition, delta: float) -> TransitionGraph:
    """Edges i -> j for every cell j meeting the delta-inflated exact
    image of cell i. Requires delta >= cell width so discretization
    error stays inside the inflation."""
    h = grid.cell_width
    if delta < h:
        raise ParameterError(f"delta={delta!r} under-resolves the grid (cell_width={h!r})")
    C = grid.cell_count
    edges = np.arange(C + 1, dtype=float) * h
    edges[-1] = 1.0
    F = m.eval_array(np.clip(edges, 0.0, 1.0))
    mlo = np.minimum(F[:-1], F[1:]).copy()
    mhi = np.maximum(F[:-1], F[1:]).copy()
    for bpt, val in zip(m.breakpoints[1:-1], m.values[1:-1]):
        i = min(int(bpt / h), C - 1)
        mlo[i] = min(mlo[i], val)
        mhi[i] = max(mhi[i], val)
    lo = np.clip(np.floor((mlo - delta) / h).astype(np.int64), 0, C - 1)
    hi = np.clip(np.floor((mhi + delta) / h).astype(np.int64), 0, C - 1)
    return TransitionGraph(grid, float(delta), lo, hi, m.label)


def _tarjan_sccs(lo, hi):
    """Iterative Tarjan on range-successor adjacency.

    Returns (component id per node, component count); ids are in reverse
    topological discovery order, which we only use for grouping.
    """
    n = len(lo)
    index = np.full(n, -1, dtype=np.int64)
    low = np.zeros(n, dtype=np.int64)
    on = np.zeros(n, dtype=bool)
    comp = np.full(n, -1, dtype=np.int64)
    stack = []
    counter = 0
    ncomp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, int(lo[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on[root] = True
        while work:
            v, nxt = work[-1]
            if nxt <= hi[v]:
                work[-1] = (v, nxt + 1)
                w = nxt
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on[w] = True
                    work.append((w, int(lo[w])))
                elif on[w]:
                    if index[w] < low[v]:
                        low[v] = index[w]
            else:
                work.pop()
                if work:
                    pv = work[-1][0]
                    if low[v] < low[pv]:
                        low[pv] = low[v]
                if low[v] == index[v]:
                    while True:
                        w = stack.pop()
                        on[w] = False
                        comp[w] = ncomp
                        if w == v:
                            break
                    ncomp += 1
    return comp, ncomp


def _scc(g: TransitionGraph):
    if g._scc is None:
        g._scc = _tarjan_sccs(g.lo, g.hi)
    return g._scc


def chain_recurrent_cells(g: TransitionGraph) -> np.ndarray:
    """Cells lying on some directed cycle (self-loop or SCC of size >= 2)."""
    comp, ncomp = _scc(g)
    sizes = np.bincount(comp, minlength=ncomp)
    rec = sizes[comp] >= 2
    for i in range(len(g.lo)):
        if not rec[i] and g.has_self_loop(i):
            rec[i] = True
    return np.nonzero(rec)[0]


def chain_classes(g: TransitionGraph) -> ChainClassSet:
    """SCC decomposition restricted to recurrent cells, ordered by
    leftmost cell."""
    comp, _ = _scc(g)
    rec = chain_recurrent_cells(g)
    groups = {}
    for i in rec:
        groups.setdefault(int(comp[i]), []).append(int(i))
    classes = sorted((np.asarray(sorted(cells)) for cells in groups.values()), key=lambda c: c[0])
    return ChainClassSet(classes, rec, g.grid, g.delta)


def reachable_cells(g: TransitionGraph, start: int) -> np.ndarray:
    """Cells reachable from ``start`` by a path of length >= 1."""
    C = len(g.lo)
    seen = np.zeros(C, dtype=bool)
    frontier = [start]
    first = True
    while frontier:
        nxt = []
        for v in frontier:
            a, b = int(g.lo[v]), int(g.hi[v])
            block = np.arange(a, b + 1)
            fresh = block[~seen[block]]
            seen[fresh] = True
            nxt.extend(int(w) for w in fresh)
        frontier = nxt
        first = False
    return np.nonzero(seen)[0]


def _reaches(g: TransitionGraph, src: int, dst: int) -> bool:
    C = len(g.lo)
    seen = np.zeros(C, dtype=bool)
    frontier = [src]
    while frontier:
        nxt = []
        for v in frontier:
            a, b = int(g.lo[v]), int(g.hi[v])
            if a <= dst <= b:
                return True
            block = np.arange(a, b + 1)
            fresh = block[~seen[block]]
            seen[fresh] = True
            nxt.extend(int(w) for w in fresh)
        frontier = nxt
    return False


def chain_related(g: TransitionGraph, x: float, y: float) -> bool:
    """True iff cell(x) and cell(y) reach each other by paths of
    length >= 1 in the graph."""
    cx, cy = g.grid.cell_index(x), g.grid.cell_index(y)
    return _reaches(g, cx, cy) and _reaches(g, cy, cx)


def shortest_cell_path(g: TransitionGraph, src: int, dst_cells) -> list:
    """BFS path (list of cells, src first) from src to the nearest cell
    in ``dst_cells``; deterministic (lowest-index expansion)."""
    dst = set(int(c) for c in (dst_cells if np.iterable(dst_cells) else [dst_cells]))
    if src in dst:
        return [src]
    C = len(g.lo)
    parent = np.full(C, -2, dtype=np.int64)
    parent[src] = -1
    frontier = [src]
    while frontier:
        nxt = []
        for v in frontier:
            for w in range(int(g.lo[v]), int(g.hi[v]) + 1):
                if parent[w] != -2:
                    continue
                parent[w] = v
                if w in dst:
                    path = [w]
                    while parent[path[-1]] != -1:
                        path.append(int(parent[path[-1]]))
                    return path[::-1]
                nxt.append(w)
        frontier = nxt
    return []


def visited_cells(states, grid: GridPartition, burn_in=0) -> np.ndarray:
    """Distinct cells hit by a state sequence after ``burn_in`` entries."""
    states = np.asarray(states, dtype=float)
    return np.unique(grid.cell_indices(states[burn_in:]))


def omega_limit_cells(m: MapSpec, x: float, burn_in: int, sample: int, grid: GridPartition):
    """Cells visited by T^i x for burn_in <= i < burn_in + sample; an
    outer estimate of the omega-limit set at resolution h."""
    if burn_in < 1 or sample < 1:
        raise ParameterError("burn_in and sample must be >= 1")
    cur = x
    for _ in range(burn_in):
        cur = m(cur)
    cells = set()
    for _ in range(sample):
        cells.add(grid.cell_index(cur))
        cur = m(cur)
    return np.asarray(sorted(cells))


def containing_class(cells, classes: ChainClassSet):
    """Class with maximal overlap against a cell set; flags ties.

    Returns (class index or None, overlap fraction, tie flag).
    """
    cells = set(int(c) for c in cells)
    if not cells:
        return None, 0.0, False
    overlaps = [len(cells & s) for s in classes._sets]
    best = max(overlaps, default=0)
    if best == 0:
        return None, 0.0, False
    winners = [k for k, o in enumerate(overlaps) if o == best]
    return winners[0], best / len(cells), len(winners) > 1
