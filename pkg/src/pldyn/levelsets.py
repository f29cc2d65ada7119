"""Birkhoff-average super-level regions D_n, their exact Lebesgue
measure, the finite-n rate sequence (1/n) log m(D_n), and a
candidate-measure lower bound for the asymptotic rate.

The lower bound enumerates periodic-orbit measures (entropy zero,
exactly computable averages) plus one long-run empirical candidate and
is therefore a valid, possibly loose, bound: exactly the safe direction
for testing the rate inequality.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .birkhoff import Observable
from .entropy import katok_entropy_estimate, lap_entropy, local_reference_entropy
from .errors import ParameterError, ResolutionError
from .maps import MapSpec, periodic_cycles, pl_iterates
from .shadowing import perturbed_orbit
from .util import rng_for

_EXACT_NODE_CAP = 2_000_000
_BOUNDARY_GUARD = 1e-9


@dataclass
class RateReport:
    c: float
    phi_label: str
    xi_const: float
    series: list          # rows (n, exact flag, m_Dn, rate)
    lower_bound: float
    bound_witness: dict

    def to_json_dict(self):
        return {
            "c": self.c,
            "phi": self.phi_label,
            "xi_const": self.xi_const,
            "series": [
                {"n": int(n), "exact": bool(ex), "m_Dn": float(mv), "rate": float(rv)}
                for n, ex, mv, rv in self.series
            ],
            "lower_bound": self.lower_bound,
            "bound_witness": self.bound_witness,
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), sort_keys=True)


def _sum_nodes(m: MapSpec, phi: Observable, n: int):
    """Nodes partitioning [0,1] so the Birkhoff sum of phi over n steps
    is affine on each piece, with the exact sums at the nodes."""
    nodes = [np.array([0.0, 1.0])]
    reps = []
    for xs, ys in pl_iterates(m, max(n - 1, 1), max_breakpoints=_EXACT_NODE_CAP):
        reps.append((xs, ys))
    if n == 1:
        reps = []
    phi_inner = None
    if phi.kind == "pl":
        phi_inner = phi.breakpoints[1:-1]
    elif phi.kind not in ("coordinate", "constant"):
        raise ParameterError("exact region measure needs a PL or coordinate observable")
    nodes.append(m.breakpoints)
    for xs, ys in reps:
        nodes.append(xs)
        if phi_inner is not None and len(phi_inner):
            y0, y1 = ys[:-1], ys[1:]
            lo, hi = np.minimum(y0, y1), np.maximum(y0, y1)
            dx = np.diff(xs)
            for b in phi_inner:
                mask = (lo < b) & (b < hi)
                if mask.any():
                    t = (b - y0[mask]) / (y1[mask] - y0[mask])
                    nodes.append(xs[:-1][mask] + t * dx[mask])
    allx = np.unique(np.concatenate(nodes))
    if len(allx) > 1:
        keep = np.concatenate(([True], np.diff(allx) > 1e-15))
        allx = allx[keep]
    if len(allx) > _EXACT_NODE_CAP:
        raise ResolutionError(
            f"exact enumeration needs {len(allx)} nodes; use the Monte Carlo estimator",
            max_feasible=n - 1,
        )
    sums = np.zeros(len(allx))
    cur = allx.copy()
    for i in range(n):
        sums += phi(cur)
        if i < n - 1:
            cur = m.eval_array(cur)
    return allx, sums


def dn_measure_exact(m: MapSpec, phi: Observable, c: float, n: int) -> float:
    """Exact Lebesgue measure of {x : (1/n) sum_{i<n} phi(T^i x) > c}.

    The Birkhoff sum is PL in x once the partition refines every
    iterate, so the region is a finite union of intervals solved
    segment by segment.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    xs, sums = _sum_nodes(m, phi, n)
    thr = c * n
    total = 0.0
    s0, s1 = sums[:-1], sums[1:]
    x0, x1 = xs[:-1], xs[1:]
    for a, b, u, v in zip(x0, x1, s0, s1):
        if u > thr and v > thr:
            total += b - a
        elif u <= thr and v <= thr:
            continue
        else:
            t = (thr - u) / (v - u)
            xc = a + t * (b - a)
            total += (b - xc) if v > u else (xc - a)
    return total


def dn_measure_mc(m: MapSpec, phi: Observable, c: float, n: int, samples: int, seed: int):
    """Monte Carlo estimate of m(D_n) with binomial standard error."""
    if samples < 1000:
        raise ParameterError("need at least 1000 samples")
    rng = rng_for(seed)
    xs = rng.uniform(size=samples)
    sums = np.zeros(samples)
    cur = xs
    for i in range(n):
        sums += phi(cur)
        if i < n - 1:
            cur = m.eval_array(cur)
    p = float(np.mean(sums / n > c))
    stderr = math.sqrt(max(p * (1.0 - p), 1.0 / samples) / samples)
    return p, stderr


def cycle_average(phi: Observable, cycle) -> float:
    return float(np.mean(phi(np.asarray(cycle))))


def rate_lower_bound(
    m: MapSpec,
    phi: Observable,
    xi_const: float,
    c: float,
    max_period: int,
    seed: int = 0,
    empirical_orbit_len: int = 100_000,
    katok_sample: int = 4096,
    katok_eps: float = 0.05,
    katok_ns=range(6, 11),
):
    """sup of (entropy - xi_const) over candidate invariant measures
    whose phi-average strictly exceeds c.

    Candidates: periodic-orbit measures up to max_period (entropy 0,
    averages exact) and one long-run empirical measure from a tiny-kick
    pseudo-orbit. The empirical candidate's entropy combines the
    ball-cover growth fit with the mean local ball-decay exponent at
    the sample (sharper when ball occupancy is granular) and is capped
    at the exact lap entropy, since no invariant measure carries more
    than the topological entropy.

    Returns (bound, witness); bound is -inf when no candidate clears c.
    """
    if max_period > 14:
        raise ParameterError("max_period capped at 14 (branch growth)")
    candidates = []
    for cyc in periodic_cycles(m, max_period):
        avg = cycle_average(phi, cyc)
        if avg > c + _BOUNDARY_GUARD:
            candidates.append(
                (
                    0.0 - xi_const,
                    {
                        "type": "periodic",
                        "period": len(cyc),
                        "point": float(cyc[0]),
                        "phi_average": avg,
                        "entropy": 0.0,
                    },
                )
            )
    po = perturbed_orbit(m, float(rng_for(seed, 7).uniform()), empirical_orbit_len, 1e-9, seed)
    emp_avg = float(np.mean(phi(po.states)))
    if emp_avg > c + _BOUNDARY_GUARD:
        stride = max(1, len(po.states) // katok_sample)
        sample = po.states[::stride][:katok_sample]
        est = katok_entropy_estimate(m, sample, katok_ns, katok_eps)
        probe = sample[:: max(1, len(sample) // 64)][:64]
        h_local = float(
            np.mean([local_reference_entropy(m, float(x), 18, 0.08) for x in probe])
        )
        h_cap = lap_entropy(m, 14).extrapolated
        h = min(max(est.extrapolated, h_local), h_cap)
        candidates.append(
            (
                h - xi_const,
                {
                    "type": "empirical",
                    "orbit_len": empirical_orbit_len,
                    "phi_average": emp_avg,
                    "entropy": h,
                    "entropy_ball_cover": est.extrapolated,
                    "entropy_local_decay": h_local,
                    "entropy_cap": h_cap,
                },
            )
        )
    if not candidates:
        return -math.inf, {"type": "none", "reason": f"no candidate has phi-average > {c}"}
    return max(candidates, key=lambda t: t[0])


@dataclass
class VMinusVerdict:
    holds: bool
    lower_bound: float
    margins: list          # (n, rate - bound)
    report: RateReport

    def to_json_dict(self):
        return {
            "holds": self.holds,
            "lower_bound": self.lower_bound,
            "margins": [[int(n), float(v)] for n, v in self.margins],
            "report": self.report.to_json_dict(),
        }


def rate_series(m: MapSpec, phi: Observable, c: float, n_values, exact_max_n=14, mc_samples=200_000, seed=0):
    """(n, exact flag, m_Dn, rate) rows; exact enumeration up to
    exact_max_n, Monte Carlo beyond."""
    rows = []
    for n in n_values:
        if n <= exact_max_n:
            try:
                mv = dn_measure_exact(m, phi, c, n)
                exact = True
            except (ResolutionError, ParameterError):
                mv, _ = dn_measure_mc(m, phi, c, n, mc_samples, seed)
                exact = False
        else:
            mv, _ = dn_measure_mc(m, phi, c, n, mc_samples, seed)
            exact = False
        rate = math.log(mv) / n if mv > 0 else -math.inf
        rows.append((n, exact, mv, rate))
    return rows


def check_theorem_vminus(
    m: MapSpec,
    phi: Observable,
    xi_const: float,
    c: float,
    n_range,
    tol: float,
    max_period: int = 8,
    seed: int = 0,
    **bound_kwargs,
) -> VMinusVerdict:
    """Check min_n rate_n >= lower_bound - tol over the given n range.

    A violation is a negative verdict, not an error.
    """
    bound, witness = rate_lower_bound(m, phi, xi_const, c, max_period, seed=seed, **bound_kwargs)
    rows = rate_series(m, phi, c, list(n_range), seed=seed)
    margins = [(n, rate - bound) for n, _, _, rate in rows]
    holds = all(v >= -tol for _, v in margins) if math.isfinite(bound) else True
    report = RateReport(c, phi.label, xi_const, rows, bound, witness)
    return VMinusVerdict(holds, bound, margins, report)
