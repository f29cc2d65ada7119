"""Birkhoff sums, running-average diagnostics, level-set membership,
empirical measures on the grid and a bounded-Lipschitz metric between
them.

Finite-horizon liminf/limsup are estimated as the min/max of the
running average over a declared tail window; reports always carry the
window so no unobservable limit is asserted.
"""

import functools
import json
import math
from dataclasses import dataclass

import numpy as np

from .chains import GridPartition
from .errors import ParameterError
from .maps import MapSpec

_BL_MAX_K = 32


@dataclass
class Observable:
    """A bounded continuous function on [0, 1].

    kinds: "coordinate" (x), "constant" (c), "cosine" (cos(k pi x)),
    "pl" (continuous piecewise-linear interpolation).
    """

    kind: str
    c: float = 0.0
    k: int = 1
    breakpoints: np.ndarray = None
    pl_values: np.ndarray = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("coordinate", "constant", "cosine", "pl"):
            raise ParameterError(f"unknown observable kind {self.kind!r}")
        if self.kind == "cosine" and self.k < 1:
            raise ParameterError("cosine frequency k must be >= 1")
        if self.kind == "pl":
            bp = np.asarray(self.breakpoints, dtype=float)
            va = np.asarray(self.pl_values, dtype=float)
            if bp.ndim != 1 or va.shape != bp.shape or len(bp) < 2:
                raise ParameterError("pl observable needs matching breakpoint/value arrays")
            if bp[0] != 0.0 or bp[-1] != 1.0 or not np.all(np.diff(bp) > 0):
                raise ParameterError("pl observable breakpoints must increase from 0 to 1")
            self.breakpoints, self.pl_values = bp, va
        if not self.label:
            self.label = {
                "coordinate": "x",
                "constant": f"const({self.c:g})",
                "cosine": f"cos({self.k}*pi*x)",
                "pl": "pl-observable",
            }[self.kind]

    def __call__(self, x):
        if self.kind == "coordinate":
            return np.asarray(x, dtype=float) if np.ndim(x) else float(x)
        if self.kind == "constant":
            return np.full(np.shape(x), self.c) if np.ndim(x) else self.c
        if self.kind == "cosine":
            return np.cos(self.k * np.pi * np.asarray(x, dtype=float)) if np.ndim(x) else math.cos(self.k * math.pi * x)
        out = np.interp(np.asarray(x, dtype=float), self.breakpoints, self.pl_values)
        return out if np.ndim(x) else float(out)

    def lipschitz(self):
        if self.kind == "coordinate":
            return 1.0
        if self.kind == "constant":
            return 0.0
        if self.kind == "cosine":
            return self.k * math.pi
        return float(np.max(np.abs(np.diff(self.pl_values) / np.diff(self.breakpoints))))

    def bound(self):
        if self.kind == "coordinate":
            return 1.0
        if self.kind == "constant":
            return abs(self.c)
        if self.kind == "cosine":
            return 1.0
        return float(np.max(np.abs(self.pl_values)))

    def lebesgue_integral(self):
        """Exact integral against Lebesgue on [0, 1]."""
        if self.kind == "coordinate":
            return 0.5
        if self.kind == "constant":
            return self.c
        if self.kind == "cosine":
            return math.sin(self.k * math.pi) / (self.k * math.pi)
        mids = 0.5 * (self.pl_values[:-1] + self.pl_values[1:])
        return float(np.sum(mids * np.diff(self.breakpoints)))


def coordinate():
    return Observable("coordinate")


def constant(c):
    return Observable("constant", c=float(c))


def cosine(k):
    return Observable("cosine", k=int(k))


def pl_observable(breakpoints, values, label=""):
    return Observable("pl", breakpoints=breakpoints, pl_values=values, label=label)


def combine_pl(phi: Observable, psi: Observable, weight: float) -> Observable:
    """phi + weight * psi as a PL observable; both must be PL-representable."""
    def as_pl(o):
        if o.kind == "pl":
            return o.breakpoints, o.pl_values
        if o.kind == "coordinate":
            return np.array([0.0, 1.0]), np.array([0.0, 1.0])
        if o.kind == "constant":
            return np.array([0.0, 1.0]), np.array([o.c, o.c])
        raise ParameterError(f"observable kind {o.kind!r} is not PL-representable")

    b1, v1 = as_pl(phi)
    b2, v2 = as_pl(psi)
    bp = np.unique(np.concatenate([b1, b2]))
    vals = np.interp(bp, b1, v1) + weight * np.interp(bp, b2, v2)
    return pl_observable(bp, vals, label=f"{phi.label}+{weight:g}*{psi.label}")


# ---------------------------------------------------------------------------
# Birkhoff statistics
# ---------------------------------------------------------------------------

@dataclass
class BirkhoffReport:
    ns: np.ndarray          # 1..n_max
    averages: np.ndarray    # A_n at each n
    liminf_est: float
    limsup_est: float
    gap: float
    tail_start: int
    phi_label: str

    def running(self):
        return list(zip(self.ns.tolist(), self.averages.tolist()))

    def to_json_dict(self):
        return {
            "phi": self.phi_label,
            "liminf_est": self.liminf_est,
            "limsup_est": self.limsup_est,
            "gap": self.gap,
            "tail_start": self.tail_start,
            "n_max": int(self.ns[-1]),
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), sort_keys=True)


def orbit_states(m: MapSpec, x: float, n: int) -> np.ndarray:
    if n < 1:
        raise ParameterError("n must be >= 1")
    out = np.empty(n)
    cur = x
    for i in range(n):
        out[i] = cur
        if i < n - 1:
            cur = m(cur)
    return out


def birkhoff_average(m: MapSpec, phi: Observable, x: float, n: int) -> float:
    """Exact finite average (1/n) sum_{i<n} phi(T^i x)."""
    return float(np.mean(phi(orbit_states(m, x, n))))


def running_averages(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return np.cumsum(values) / np.arange(1, len(values) + 1)


def report_from_states(states, phi: Observable, tail_fraction=0.5, label=None) -> BirkhoffReport:
    """Running-average diagnostics for an arbitrary state sequence."""
    states = np.asarray(states, dtype=float)
    n_max = len(states)
    if n_max < 2:
        raise ParameterError("need at least two states")
    if not (0.0 < tail_fraction < 1.0):
        raise ParameterError("tail_fraction must lie in (0, 1)")
    avgs = running_averages(phi(states))
    tail_start = max(1, int(math.ceil(tail_fraction * n_max)))
    tail = avgs[tail_start - 1 :]
    lo, hi = float(tail.min()), float(tail.max())
    return BirkhoffReport(
        ns=np.arange(1, n_max + 1),
        averages=avgs,
        liminf_est=lo,
        limsup_est=hi,
        gap=hi - lo,
        tail_start=tail_start,
        phi_label=label or phi.label,
    )


def irregularity_report(m: MapSpec, phi: Observable, x: float, n_max: int, tail_fraction=0.5) -> BirkhoffReport:
    """Tail-window min/max of the running Birkhoff average along the
    exact orbit of x. gap > 0 on the tail window is the finite-horizon
    signature of a divergent average."""
    if n_max < 100:
        raise ParameterError("n_max must be >= 100")
    return report_from_states(orbit_states(m, x, n_max), phi, tail_fraction)


def level_set_member(m: MapSpec, phi: Observable, x: float, a: float, theta: float, n_max: int) -> bool:
    """True iff both tail estimates lie strictly inside (a-theta, a+theta)."""
    if theta <= 0:
        raise ParameterError("theta must be positive")
    rep = irregularity_report(m, phi, x, n_max)
    return (a - theta < rep.liminf_est) and (rep.limsup_est < a + theta)


# ---------------------------------------------------------------------------
# empirical measures and the bounded-Lipschitz metric
# ---------------------------------------------------------------------------

@dataclass
class EmpiricalMeasure:
    grid: GridPartition
    weights: np.ndarray
    sample_size: int

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != self.grid.cell_count:
            raise ParameterError("weight vector does not match the grid")
        if w.min() < 0 or abs(float(w.sum()) - 1.0) > 1e-12:
            raise ParameterError("weights must be nonnegative and sum to 1")
        self.weights = w


def empirical_measure_from_states(states, grid: GridPartition) -> EmpiricalMeasure:
    states = np.asarray(states, dtype=float)
    counts = np.bincount(grid.cell_indices(states), minlength=grid.cell_count)
    return EmpiricalMeasure(grid, counts / len(states), len(states))


def empirical_measure(m: MapSpec, x: float, n: int, grid: GridPartition) -> EmpiricalMeasure:
    """Normalized visit histogram of the first n exact orbit points."""
    return empirical_measure_from_states(orbit_states(m, x, n), grid)


def uniform_measure(grid: GridPartition) -> EmpiricalMeasure:
    C = grid.cell_count
    return EmpiricalMeasure(grid, np.full(C, 1.0 / C), 0)


@functools.lru_cache(maxsize=8)
def _bl_family(cell_count: int, cell_width: float):
    """Fixed separating test family, unit bounded-Lipschitz norm each:
    phi_0 = x/2 and phi_k = sin(k pi x)/(1 + k pi), evaluated at cell
    midpoints. Truncated at k = 32; the dropped tail of the weighted
    series is below 2^-32."""
    grid = GridPartition(cell_width)
    mids = np.array([grid.midpoint(i) for i in range(cell_count)])
    rows = [mids / 2.0]
    for k in range(1, _BL_MAX_K + 1):
        rows.append(np.sin(k * np.pi * mids) / (1.0 + k * np.pi))
    return np.vstack(rows)


def bl_distance(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Weighted L1 of test-function means: sum_k 2^-k |mu(phi_k) - nu(phi_k)|.

    Integrals use cell-midpoint quadrature (error <= Lip * h / 2 per
    test function). A genuine metric on grid measures, hence the
    triangle inequality holds exactly.
    """
    if mu.grid != nu.grid:
        raise ParameterError("measures live on different grids")
    fam = _bl_family(mu.grid.cell_count, mu.grid.cell_width)
    diffs = fam @ (mu.weights - nu.weights)
    w = 2.0 ** -np.arange(len(diffs))
    return float(np.sum(w * np.abs(diffs)))
