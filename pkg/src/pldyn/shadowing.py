"""Pseudo-orbits and exact orbit tracing by forward interval refinement.

For a PL map the set of points whose first n iterates stay within eps
of a prescribed target sequence is a finite union of intervals, and the
refinement that produces it is exact up to double rounding. Pieces are
tracked together with the affine image of the current iterate, so the
certificate stays well-scaled even when the surviving set becomes
narrower than double spacing (expanding maps shrink it like
slope**-n).
"""

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import NotShadowed, ParameterError, ResolutionError
from .maps import MapSpec
from .util import ordered_map, rng_for

REFINE_PIECE_CAP = 4096
PROVENANCES = ("random-perturbed", "chain-path", "construction-star")


@dataclass
class PseudoOrbit:
    """A state sequence with a certified one-step gap bound ``delta``."""

    states: np.ndarray
    delta: float
    provenance: str = "random-perturbed"

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        if self.delta <= 0:
            raise ParameterError("delta must be positive")
        if self.provenance not in PROVENANCES:
            raise ParameterError(f"unknown provenance {self.provenance!r}")

    def __len__(self):
        return len(self.states)

    @classmethod
    def certified(cls, m: MapSpec, states, delta, provenance="random-perturbed"):
        po = cls(np.asarray(states, dtype=float), delta, provenance)
        if not is_pseudo_orbit(m, po.states, delta):
            raise ParameterError(f"states are not a {delta!r}-pseudo-orbit of {m.label}")
        return po

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["delta", repr(self.delta), "provenance", self.provenance])
            for s in self.states:
                w.writerow([repr(float(s))])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        head = rows[0]
        delta = float(head[1])
        provenance = head[3]
        states = np.array([float(r[0]) for r in rows[1:]])
        return cls(states, delta, provenance)


@dataclass
class TraceResult:
    shadow_point: float
    achieved_error: float
    surviving_interval_width: float

    def to_json(self):
        return json.dumps(
            {
                "shadow_point": self.shadow_point,
                "achieved_error": self.achieved_error,
                "surviving_interval_width": self.surviving_interval_width,
            },
            sort_keys=True,
        )


def is_pseudo_orbit(m: MapSpec, states, delta: float) -> bool:
    """True iff every one-step gap |T(x_i) - x_{i+1}| is < delta."""
    states = np.asarray(states, dtype=float)
    if len(states) < 2:
        raise ParameterError("need at least two states")
    if delta <= 0:
        raise ParameterError("delta must be positive")
    return float(max_gap(m, states)) < delta


def max_gap(m: MapSpec, states) -> float:
    states = np.asarray(states, dtype=float)
    return float(np.max(np.abs(m.eval_array(states[:-1]) - states[1:])))


def perturbed_orbit(m: MapSpec, x0: float, n: int, delta: float, seed: int) -> PseudoOrbit:
    """Orbit with i.i.d. uniform(-delta/2, delta/2) kicks, clamped to [0, 1].

    Clamping moves a state toward the unperturbed image, so the gap
    bound delta is preserved. Deterministic in ``seed``.
    """
    if delta <= 0:
        raise ParameterError("delta must be positive")
    if n < 2:
        raise ParameterError("need n >= 2")
    rng = rng_for(seed)
    kicks = rng.uniform(-delta / 2.0, delta / 2.0, size=n - 1)
    states = np.empty(n)
    states[0] = x0
    x = x0
    for i in range(n - 1):
        x = min(max(m(x) + kicks[i], 0.0), 1.0)
        states[i + 1] = x
    return PseudoOrbit(states, delta, "random-perturbed")


# ---------------------------------------------------------------------------
# forward interval refinement
# ---------------------------------------------------------------------------

def _split_piece_through_map(m: MapSpec, piece, out):
    """Push one piece through the map, splitting at breakpoint crossings.

    A piece is (ylo, yhi, u, v, err): the current iterate maps
    [ylo, yhi] affinely onto the interval with endpoints u (at ylo) and
    v (at yhi); err is the piece's running tracking certificate (the
    largest distance so far from a target to the piece's image).
    """
    ylo, yhi, u, v, err = piece
    if u == v:
        out.append((ylo, yhi, m(u), m(u), err))
        return
    wlo, whi = (u, v) if u < v else (v, u)
    inner = [b for b in m._bp_list[1:-1] if wlo < b < whi]
    nodes = [wlo] + inner + [whi]
    vals = [m(w) for w in nodes]
    span = v - u
    for w0, w1, f0, f1 in zip(nodes[:-1], nodes[1:], vals[:-1], vals[1:]):
        y0 = ylo + (w0 - u) / span * (yhi - ylo)
        y1 = ylo + (w1 - u) / span * (yhi - ylo)
        if y0 <= y1:
            out.append((y0, y1, f0, f1, err))
        else:
            out.append((y1, y0, f1, f0, err))


def refine(m: MapSpec, targets, eps: float, cap=REFINE_PIECE_CAP, soft_cap=None, keep=None):
    """Surviving pieces of {y : |T^i y - targets[i]| <= eps for all i}.

    Returns (pieces, worst). Each piece is (ylo, yhi, u, v, err): u, v
    are the endpoints of the final iterate image and err is the piece's
    tracking certificate max_i dist(targets[i], image_i), i.e. the best
    max-error attainable inside the piece (0 whenever every target sits
    inside the piece's image, as for a true orbit traced by itself).
    ``worst`` is the certified sup over all surviving points and steps.
    Raises NotShadowed (carrying the first dead index) if the set dies.

    A non-invertible map spawns a legitimate extra shadow branch at
    every passage of the target tube across a fold, so the piece count
    doubles per passage. Callers that only need one certified shadow
    orbit (not the whole set) may pass ``soft_cap``/``keep``: whenever
    the live count exceeds soft_cap, only the ``keep`` pieces with the
    widest image intervals survive. Wide-image pieces span the whole
    constraint window and are the robust trackers, so a pruned run that
    reaches the end still certifies tracing; pruning is never applied
    when exact set structure (e.g. a measure) is required.
    """
    targets = np.asarray(targets, dtype=float)
    if eps <= 0:
        raise ParameterError("eps must be positive")
    pieces = [(0.0, 1.0, 0.0, 1.0, 0.0)]
    worst = 0.0
    n = len(targets)
    for i in range(n):
        z = targets[i]
        wlo, whi = z - eps, z + eps
        clipped = []
        step_dev = 0.0
        for ylo, yhi, u, v, err in pieces:
            if u == v:
                if wlo <= u <= whi:
                    clipped.append((ylo, yhi, u, v, max(err, abs(u - z))))
                    step_dev = max(step_dev, abs(u - z))
                continue
            lo, hi = (u, v) if u < v else (v, u)
            lo2, hi2 = max(lo, wlo), min(hi, whi)
            if lo2 > hi2:
                continue
            err = max(err, lo2 - z, z - hi2, 0.0)
            span = v - u
            if u < v:
                y0 = ylo + (lo2 - u) / span * (yhi - ylo)
                y1 = ylo + (hi2 - u) / span * (yhi - ylo)
                clipped.append((y0, y1, lo2, hi2, err))
            else:
                y0 = ylo + (hi2 - u) / span * (yhi - ylo)
                y1 = ylo + (lo2 - u) / span * (yhi - ylo)
                clipped.append((y0, y1, hi2, lo2, err))
            step_dev = max(step_dev, abs(lo2 - z), abs(hi2 - z))
        if not clipped:
            raise NotShadowed(f"surviving set died at step {i}", failed_index=i)
        worst = max(worst, step_dev)
        if i < n - 1:
            nxt = []
            for piece in clipped:
                _split_piece_through_map(m, piece, nxt)
            if soft_cap is not None and len(nxt) > soft_cap:
                nxt.sort(key=lambda p: abs(p[3] - p[2]), reverse=True)
                del nxt[keep:]
            if len(nxt) > cap:
                raise ResolutionError(
                    f"interval refinement exceeded {cap} pieces at step {i}", max_feasible=i
                )
            pieces = nxt
        else:
            pieces = clipped
    return pieces, worst


TRACE_SOFT_CAP = 1024
TRACE_KEEP = 128


def trace(m: MapSpec, po, eps: float) -> TraceResult:
    """Find a true orbit staying within eps of the pseudo-orbit.

    The midpoint of the widest surviving interval is returned together
    with the certified worst-case deviation (sup over the interval and
    all steps) and the interval width. Raises NotShadowed when no
    orbit survives.
    """
    states = po.states if isinstance(po, PseudoOrbit) else np.asarray(po, dtype=float)
    pieces, worst = refine(m, states, eps, soft_cap=TRACE_SOFT_CAP, keep=TRACE_KEEP)
    widest = max(pieces, key=lambda p: (p[1] - p[0], -p[0]))
    ylo, yhi = widest[0], widest[1]
    return TraceResult(
        shadow_point=0.5 * (ylo + yhi),
        achieved_error=worst,
        surviving_interval_width=yhi - ylo,
    )


def shadowing_modulus(
    m: MapSpec,
    eps: float,
    trials: int,
    horizon: int,
    seed: int,
    rel_tol=2.0 ** -10,
    threads=1,
) -> float:
    """Empirical tracing modulus: the largest delta on a bisection grid
    over (0, eps] for which ``trials`` seeded random delta-pseudo-orbits
    of length ``horizon`` are all eps-traced.

    Returns 0.0 when even the smallest grid delta fails. The same
    per-trial starting points and kick streams are reused at every
    delta, so the result is a deterministic function of ``seed``.
    """
    if eps <= 0 or trials < 1 or horizon < 2:
        raise ParameterError("need eps > 0, trials >= 1, horizon >= 2")
    starts = [float(rng_for(seed, t, 0).uniform()) for t in range(trials)]

    def ok(delta):
        def one(t):
            po = perturbed_orbit(m, starts[t], horizon, delta, rng_for(seed, t, 1).integers(2**63))
            try:
                trace(m, po, eps)
                return True
            except NotShadowed:
                return False

        return all(ordered_map(one, range(trials), threads))

    hi = eps
    if ok(hi):
        return hi
    lo = 0.0
    floor = eps * rel_tol
    if not ok(floor):
        return 0.0
    lo = floor
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def pseudo_orbit_to_csv_string(po: PseudoOrbit) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["delta", repr(po.delta), "provenance", po.provenance])
    for s in po.states:
        w.writerow([repr(float(s))])
    return buf.getvalue()
