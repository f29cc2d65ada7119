"""Independent oracles used to check the package's primary routes.

Everything here is deliberately written against the raw map data
(breakpoints/values) with algorithms different from the package
implementations: backward preimage refinement instead of forward piece
tracking, per-point brute force instead of vectorized pools, and a
matrix-free BFS on recomputed edges.
"""

import numpy as np


def pl_eval(m, x):
    return float(np.interp(x, m.breakpoints, m.values))


def brute_orbit(m, x, n):
    out = [float(x)]
    for _ in range(n - 1):
        out.append(pl_eval(m, out[-1]))
    return out


def brute_bowen_dist(m, x, y, n):
    ox, oy = brute_orbit(m, x, n), brute_orbit(m, y, n)
    return max(abs(a - b) for a, b in zip(ox, oy))


def preimage_intervals(m, lo, hi):
    """Preimage of [lo, hi] under the PL map, one interval per crossing
    monotone segment."""
    out = []
    bp, va = m.breakpoints, m.values
    for i in range(len(bp) - 1):
        x0, x1, y0, y1 = bp[i], bp[i + 1], va[i], va[i + 1]
        if y0 == y1:
            if lo <= y0 <= hi:
                out.append((x0, x1))
            continue
        if y0 < y1:
            a, b = max(lo, y0), min(hi, y1)
            if a > b:
                continue
            t0 = (a - y0) / (y1 - y0)
            t1 = (b - y0) / (y1 - y0)
        else:
            a, b = max(lo, y1), min(hi, y0)
            if a > b:
                continue
            t0 = (b - y0) / (y1 - y0)
            t1 = (a - y0) / (y1 - y0)
        out.append((x0 + t0 * (x1 - x0), x0 + t1 * (x1 - x0)))
    return out


def backward_surviving_set(m, targets, eps):
    """Intervals of {y : |T^i y - targets[i]| <= eps for all i}, built
    back to front by preimage pullback. Returns a merged sorted list of
    (lo, hi); empty list when the set dies."""
    n = len(targets)
    S = [(max(0.0, targets[n - 1] - eps), min(1.0, targets[n - 1] + eps))]
    for i in range(n - 2, -1, -1):
        pre = []
        for a, b in S:
            pre.extend(preimage_intervals(m, a, b))
        wlo, whi = max(0.0, targets[i] - eps), min(1.0, targets[i] + eps)
        S = [
            (max(a, wlo), min(b, whi))
            for a, b in pre
            if max(a, wlo) <= min(b, whi)
        ]
        if not S:
            return []
    S.sort()
    merged = [list(S[0])]
    for a, b in S[1:]:
        if a <= merged[-1][1] + 1e-15:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def backward_ball_measure(m, x, n, eps):
    segs = backward_surviving_set(m, brute_orbit(m, x, n), eps)
    return sum(b - a for a, b in segs)


def bfs_reaches(graph, src, dst):
    """Reachability by >= 1 edge, re-walked naively from the stored
    successor ranges."""
    seen = set()
    frontier = [src]
    while frontier:
        nxt = []
        for v in frontier:
            for w in range(int(graph.lo[v]), int(graph.hi[v]) + 1):
                if w == dst:
                    return True
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return False


def strongly_connected(graph):
    C = len(graph.lo)
    return all(bfs_reaches(graph, 0, j) for j in range(C)) and all(
        bfs_reaches(graph, j, 0) for j in range(C)
    )


def direct_average(phi, states):
    return sum(float(phi(float(s))) for s in states) / len(states)
