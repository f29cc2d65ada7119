"""Piecewise-linear self-maps of [0, 1] and exact PL algebra.

Everything downstream (orbit tracing, transition graphs, entropy
estimators, level sets) reduces to a handful of exact operations on
piecewise-linear (PL) maps: evaluation, iteration, composition of
iterates, monotone-branch counting and periodic-point extraction.
This module owns those primitives, plus the map builders used across
the test and experiment suite and a full-shift system with exactly
known entropy for cross-validation.
"""

import bisect
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError, ResolutionError

MAX_PL_BREAKPOINTS = 10_000_000
_SQRT2 = math.sqrt(2.0)


@dataclass
class MapSpec:
    """A continuous PL self-map of [0, 1].

    ``breakpoints`` is strictly increasing with first element 0 and last
    element 1; ``values`` holds the image of each breakpoint and must
    stay inside [0, 1]. Evaluation is exact linear interpolation between
    consecutive nodes, so orbits of dyadic points under dyadic-slope
    maps are computed without rounding.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    label: str = "pl-map"
    _bp_list: list = field(init=False, repr=False, compare=False)
    _va_list: list = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        va = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or va.shape != bp.shape:
            raise ParameterError("breakpoints and values must be 1-d arrays of equal length")
        if len(bp) < 2:
            raise ParameterError("a map needs at least two breakpoints")
        if bp[0] != 0.0 or bp[-1] != 1.0:
            raise ParameterError("breakpoints must start at 0.0 and end at 1.0")
        if not np.all(np.diff(bp) > 0.0):
            raise ParameterError("breakpoints must be strictly increasing")
        if float(va.min()) < -1e-12 or float(va.max()) > 1.0 + 1e-12:
            bad = int(np.argmax((va < -1e-12) | (va > 1.0 + 1e-12)))
            raise ParameterError(f"values[{bad}]={va[bad]!r} outside [0, 1]: not a self-map")
        self.breakpoints = bp
        self.values = np.clip(va, 0.0, 1.0)
        self._bp_list = self.breakpoints.tolist()
        self._va_list = self.values.tolist()

    def __call__(self, x):
        """Evaluate at a scalar in [0, 1]."""
        if not (0.0 <= x <= 1.0):
            raise DomainError(f"state {x!r} outside [0, 1]")
        bp, va = self._bp_list, self._va_list
        i = bisect.bisect_right(bp, x) - 1
        if i >= len(bp) - 1:
            return va[-1]
        x0, x1 = bp[i], bp[i + 1]
        return va[i] + (x - x0) / (x1 - x0) * (va[i + 1] - va[i])

    def eval_array(self, xs):
        xs = np.asarray(xs, dtype=float)
        if xs.size and (float(xs.min()) < 0.0 or float(xs.max()) > 1.0):
            raise DomainError("state array leaves [0, 1]")
        return np.interp(xs, self.breakpoints, self.values)

    def slopes(self):
        return np.diff(self.values) / np.diff(self.breakpoints)

    def segments(self):
        """(x0, x1, y0, y1) rows, one per linear piece."""
        bp, va = self.breakpoints, self.values
        return list(zip(bp[:-1], bp[1:], va[:-1], va[1:]))


@dataclass
class Orbit:
    """A finite forward trajectory; states[i+1] is the exact image of states[i]."""

    states: np.ndarray
    map_label: str

    def __len__(self):
        return len(self.states)

    def block(self, lo, hi):
        """Contiguous slice of the trajectory, indices lo..hi inclusive."""
        return self.states[lo : hi + 1]


def evaluate(m: MapSpec, x: float) -> float:
    """Exact PL interpolation of ``m`` at ``x``; errors outside [0, 1]."""
    return m(x)


def orbit(m: MapSpec, x0: float, n: int) -> Orbit:
    """First ``n`` states of the trajectory started at ``x0``."""
    if n < 1:
        raise ParameterError("orbit length must be >= 1")
    out = np.empty(n)
    x = x0
    for i in range(n):
        out[i] = x
        if i < n - 1:
            x = m(x)
    return Orbit(out, m.label)


def bowen_dist(m: MapSpec, x: float, y: float, n: int) -> float:
    """max_{j<n} |T^j x - T^j y|; reduces to |x - y| at n = 1."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    best = 0.0
    for _ in range(n):
        d = abs(x - y)
        if d > best:
            best = d
        x, y = m(x), m(y)
    return best


def lipschitz_constant(m: MapSpec) -> float:
    """Largest absolute segment slope; exact for PL maps."""
    return float(np.max(np.abs(m.slopes())))


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def tent(slope: float, label=None) -> MapSpec:
    """Symmetric tent map with peak value slope/2."""
    if not (0.0 < slope <= 2.0):
        raise ParameterError(f"tent slope {slope!r} outside (0, 2]")
    return MapSpec(
        np.array([0.0, 0.5, 1.0]),
        np.array([0.0, slope / 2.0, 0.0]),
        label or f"tent({slope:g})",
    )


def identity_map() -> MapSpec:
    return MapSpec(np.array([0.0, 1.0]), np.array([0.0, 1.0]), "identity")


def halving_map() -> MapSpec:
    """f(x) = x/2; single attracting fixed point at 0."""
    return MapSpec(np.array([0.0, 1.0]), np.array([0.0, 0.5]), "halving")


def _exv_scales(depth):
    a = [2.0 ** -k for k in range(depth + 2)]
    b = [5.0 * a[k + 1] / 4.0 for k in range(depth + 1)]
    return a, b


def example_exv(depth: int, slopes=None) -> MapSpec:
    """Finite truncation of the multi-block tent family on [0, 1].

    The untruncated family tiles (0, 1] with tent blocks [b_n, a_n]
    (a_n = 2^-n, b_n = 5 a_{n+1} / 4, block n carrying slope
    ``slopes[n]``) joined by affine connectors on [a_{n+1}, b_n] that
    fix b_n and send a_{n+1} to b_{n+1}. ``depth = N >= 1`` keeps the
    blocks 0..N-1, restricts to [a_N, 1], clamps outputs below a_N up
    to a_N, and rescales the domain affinely onto [0, 1]. ``depth = 0``
    degenerates to block 0 alone, i.e. the plain tent of ``slopes[0]``.

    The connectors all have slope 2.5, so with the default slopes the
    map has Lipschitz constant 2.5 after rescaling.
    """
    if depth < 0:
        raise ParameterError("depth must be >= 0")
    n_blocks = depth if depth >= 1 else 1
    if slopes is None:
        slopes = [2.0] * n_blocks
    slopes = [float(s) for s in slopes]
    if len(slopes) != n_blocks:
        raise ParameterError(f"need exactly {n_blocks} slopes for depth {depth}")
    if abs(slopes[0] - 2.0) > 1e-12:
        raise ParameterError("slopes[0] must be 2.0")
    for k, s in enumerate(slopes):
        if not (_SQRT2 < s <= 2.0):
            raise ParameterError(f"slopes[{k}]={s!r} outside (sqrt(2), 2]")
    a, b = _exv_scales(depth)
    if depth == 0:
        left = b[0]
        xs = [b[0], (b[0] + 1.0) / 2.0, 1.0]
        ys = [b[0], b[0] + slopes[0] * (1.0 - b[0]) / 2.0, b[0]]
    else:
        left = a[depth]
        if left <= 0.0 or 1.0 - left <= 0.0:
            raise ResolutionError("block widths underflow double precision", max_feasible=52)
        xs = [left]
        ys = [left]
        # leftmost connector, clamped where the affine part dips below a_N
        conn_slope = (b[depth - 1] - b[depth]) / (b[depth - 1] - a[depth])
        xc = left + (left - b[depth]) / conn_slope
        xs += [xc, b[depth - 1]]
        ys += [left, b[depth - 1]]
        for n in range(depth - 1, -1, -1):
            p, q = b[n], a[n]
            xs += [(p + q) / 2.0, q]
            ys += [p + slopes[n] * (q - p) / 2.0, p]
            if n > 0:
                xs += [b[n - 1]]
                ys += [b[n - 1]]
    scale = 1.0 / (1.0 - left)
    xs = (np.asarray(xs) - left) * scale
    ys = (np.asarray(ys) - left) * scale
    xs[0], xs[-1] = 0.0, 1.0
    return MapSpec(xs, np.clip(ys, 0.0, 1.0), f"exv(depth={depth})")


def example_exv_cores(depth: int):
    """Rescaled tent-block intervals of example_exv, left to right."""
    a, b = _exv_scales(depth)
    if depth == 0:
        return [(0.0, 1.0)]
    left = a[depth]
    scale = 1.0 / (1.0 - left)
    return [((b[n] - left) * scale, (a[n] - left) * scale) for n in range(depth - 1, -1, -1)]


# ---------------------------------------------------------------------------
# exact PL algebra on iterates
# ---------------------------------------------------------------------------

def _compose_with_map(m: MapSpec, xs, ys, max_breakpoints):
    """PL representation of m(g(x)) given the representation (xs, ys) of g."""
    inner = m.breakpoints[1:-1]
    y0, y1 = ys[:-1], ys[1:]
    lo = np.minimum(y0, y1)
    hi = np.maximum(y0, y1)
    nodes = [xs]
    dx = np.diff(xs)
    for bpt in inner:
        mask = (lo < bpt) & (bpt < hi)
        if mask.any():
            t = (bpt - y0[mask]) / (y1[mask] - y0[mask])
            nodes.append(xs[:-1][mask] + t * dx[mask])
    nx = np.unique(np.concatenate(nodes))
    if len(nx) > 1:
        keep = np.concatenate(([True], np.diff(nx) > 1e-15))
        nx = nx[keep]
    if len(nx) > max_breakpoints:
        raise ResolutionError(
            f"iterate representation needs {len(nx)} breakpoints (cap {max_breakpoints})"
        )
    gy = np.interp(nx, xs, ys)
    return nx, np.interp(gy, m.breakpoints, m.values)


def pl_iterates(m: MapSpec, n: int, max_breakpoints=MAX_PL_BREAKPOINTS):
    """Yield exact PL representations (xs, ys) of T^1, ..., T^n."""
    if n < 1:
        raise ParameterError("need n >= 1")
    xs, ys = m.breakpoints.copy(), m.values.copy()
    for k in range(1, n + 1):
        yield xs, ys
        if k < n:
            try:
                xs, ys = _compose_with_map(m, xs, ys, max_breakpoints)
            except ResolutionError as exc:
                raise ResolutionError(str(exc), max_feasible=k) from None


def pl_iterate(m: MapSpec, n: int, max_breakpoints=MAX_PL_BREAKPOINTS):
    """Exact PL representation of the n-th iterate."""
    for xs, ys in pl_iterates(m, n, max_breakpoints):
        pass
    return xs, ys


def lap_count(ys) -> int:
    """Number of maximal monotone branches of a PL graph."""
    s = np.sign(np.diff(ys))
    s = s[s != 0]
    if len(s) == 0:
        return 1
    return 1 + int(np.count_nonzero(s[1:] != s[:-1]))


def lap_counts(m: MapSpec, n_max: int, max_breakpoints=MAX_PL_BREAKPOINTS):
    """Lap numbers of T^1 ... T^n_max by exact composition."""
    return [lap_count(ys) for _, ys in pl_iterates(m, n_max, max_breakpoints)]


def periodic_points(m: MapSpec, period: int, tol=1e-11):
    """All solutions of T^p x = x, found exactly per monotone branch.

    Deduplication uses a rounded key but the exact per-branch root is
    returned, so downstream blocks built from cycle states carry no
    rounding beyond the root solve itself.
    """
    xs, ys = pl_iterate(m, period)
    roots = {}
    for x0, x1, v0, v1 in zip(xs[:-1], xs[1:], ys[:-1], ys[1:]):
        s = (v1 - v0) / (x1 - x0)
        if abs(s - 1.0) < 1e-12:
            if abs(v0 - x0) < tol:
                for r in (x0, x1):
                    roots.setdefault(round(r, 12), r)
            continue
        r = (v0 - s * x0) / (1.0 - s)
        if x0 - tol <= r <= x1 + tol:
            r = min(max(r, x0), x1) + 0.0
            roots.setdefault(round(r, 12), r)
    return np.array([roots[k] for k in sorted(roots)])


def periodic_cycles(m: MapSpec, max_period: int, tol=1e-9):
    """Distinct periodic orbits with minimal period <= max_period.

    Returns a list of cycles, each a numpy array starting at the
    smallest cycle point; ordered by (period, starting point).
    """
    seen = {}
    for p in range(1, max_period + 1):
        for x in periodic_points(m, p):
            cyc = [float(x)]
            for _ in range(p - 1):
                cyc.append(m(cyc[-1]))
            if abs(m(cyc[-1]) - cyc[0]) > tol:
                continue
            q = next(
                (d for d in range(1, p + 1) if p % d == 0 and abs(cyc[d % p] - cyc[0]) <= tol),
                p,
            )
            if q != p:
                continue  # already collected at its minimal period
            lo = min(cyc)
            key = (p, round(lo, 10))
            if key in seen:
                continue
            k = cyc.index(lo)
            seen[key] = np.asarray(cyc[k:] + cyc[:k])
    return [seen[k] for k in sorted(seen)]


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------

def map_to_json_dict(m: MapSpec):
    return {
        "label": m.label,
        "breakpoints": m.breakpoints.tolist(),
        "values": m.values.tolist(),
    }


def save_map_json(m: MapSpec, path):
    with open(path, "w") as fh:
        json.dump(map_to_json_dict(m), fh, indent=1)
        fh.write("\n")


def load_map_json(path) -> MapSpec:
    """Load a {"label", "breakpoints", "values"} JSON file, rejecting
    malformed input with a message anchored to the offending location."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ParameterError(f"{path}: top-level value must be an object")
    for key in ("label", "breakpoints", "values"):
        if key not in raw:
            raise ParameterError(f"{path}: missing required field '{key}'")
    try:
        return MapSpec(np.asarray(raw["breakpoints"]), np.asarray(raw["values"]), str(raw["label"]))
    except ParameterError as exc:
        raise ParameterError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# full shift validation system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShiftSystem:
    """Full shift on ``alphabet_size`` symbols with the usual ultrametric.

    Sequences are tuples of ints in range(alphabet_size). The distance
    between two sequences is metric_base**j where j is the first index
    at which they differ (0 if they agree on the compared horizon).
    Serves as a validation system with exactly known entropy
    log(alphabet_size).
    """

    alphabet_size: int = 2
    metric_base: float = 0.5

    def __post_init__(self):
        if self.alphabet_size < 2:
            raise ParameterError("alphabet_size must be >= 2")
        if not (0.0 < self.metric_base < 1.0):
            raise ParameterError("metric_base must lie in (0, 1)")

    def distance(self, u, v):
        horizon = min(len(u), len(v))
        for j in range(horizon):
            if u[j] != v[j]:
                return self.metric_base ** j
        return 0.0

    @staticmethod
    def shift(u):
        return tuple(u[1:])

    def is_pseudo_orbit(self, seqs, delta):
        return all(
            self.distance(self.shift(seqs[i]), seqs[i + 1]) < delta
            for i in range(len(seqs) - 1)
        )

    def prefix_concat_point(self, seqs):
        """Leading symbols of the pseudo-orbit, read as one sequence."""
        return tuple(u[0] for u in seqs)

    def entropy_exact(self):
        return math.log(self.alphabet_size)
