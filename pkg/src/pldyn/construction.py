"""Cyclic two-behavior block schedules and the pseudo-orbits they
generate.

The pipeline picks two periodic orbits in a chain class whose
observable averages differ, turns them into reusable blocks joined by
short delta-chains found in the transition graph, and concatenates the
blocks in geometrically growing groups so the running average of the
traced orbit oscillates between the two behaviors forever. Checkpoint
averages at the group boundaries are evaluated exactly from the
schedule algebra (group sums are integer combinations of per-block
sums), because the later checkpoints sit at positions far beyond any
horizon that could be materialized state by state.
"""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .birkhoff import Observable
from .chains import ChainClassSet, TransitionGraph, chain_classes, shortest_cell_path
from .errors import ConstructionImpossible, ParameterError, ScheduleError
from .levelsets import cycle_average
from .maps import MapSpec, bowen_dist, lipschitz_constant, periodic_cycles
from .shadowing import PseudoOrbit, TraceResult, max_gap, shadowing_modulus, trace
from .util import rng_for

_XI_GRID = (Fraction(3, 4), Fraction(2, 3), Fraction(1, 2), Fraction(1, 3), Fraction(1, 4))
_INT64_MAX = 2 ** 63 - 1
_LIBRARY_CAP = 64


@dataclass
class BlockLibrary:
    """Reusable material for the block schedule.

    alpha_blocks have length L and observable average within eta/4 of
    alpha; gamma_blocks have length K and average within 2*eta of
    zeta = xi*alpha + (1-xi)*beta. chain_q returns a block-end image to
    the alpha start cell, chain_p returns a gamma-end image there, and
    chain_w (already embedded in every gamma block) bridges from the
    alpha behavior to the beta point.
    """

    alpha_blocks: list
    gamma_blocks: list
    chain_q: np.ndarray
    chain_p: np.ndarray
    chain_w: np.ndarray
    alpha: float
    beta: float
    zeta: float
    xi: float
    eta: float
    eps: float
    delta: float
    m_bound: float
    omega_max: int
    L: int
    Q: int
    K: int
    P: int
    W: int
    J: int
    start_cell: int
    class_id: int

    def summary(self):
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "zeta": self.zeta,
            "xi": self.xi,
            "eta": self.eta,
            "eps": self.eps,
            "delta": self.delta,
            "m_bound": self.m_bound,
            "L": self.L,
            "Q": self.Q,
            "K": self.K,
            "P": self.P,
            "W": self.W,
            "J": self.J,
            "n_alpha_blocks": len(self.alpha_blocks),
            "n_gamma_blocks": len(self.gamma_blocks),
        }


@dataclass
class Schedule:
    """Group bookkeeping: lambda_*(L+Q) == kappa_*(K+P) =: G, group n
    holds l[n]*lambda_ alpha-type units then l_prime[n]*kappa_
    gamma-type units, and the boundaries satisfy
    b[n] = a[n] + M[n], a[n+1] = b[n] + M_prime[n] with
    M[n] > ratio*a[n], M_prime[n] > ratio*b[n], ratio = (m_bound-eta)/eta.
    """

    L: int
    Q: int
    K: int
    P: int
    lambda_: int
    kappa_: int
    eta: float
    m_bound: float
    n_steps: int
    l: list
    l_prime: list
    M: list
    M_prime: list
    a: list      # a_1 .. a_{n_steps+1}
    b: list      # b_1 .. b_{n_steps}

    @property
    def group_length(self):
        return self.lambda_ * (self.L + self.Q)

    def to_json_dict(self):
        return {
            "L": self.L, "Q": self.Q, "K": self.K, "P": self.P,
            "lambda": self.lambda_, "kappa": self.kappa_,
            "eta": self.eta, "m_bound": self.m_bound, "n_steps": self.n_steps,
            "l": self.l, "l_prime": self.l_prime,
            "M": self.M, "M_prime": self.M_prime,
            "a": self.a, "b": self.b,
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), sort_keys=True)


def plan_schedule(L, Q, K, P, eta, m_bound, n_steps) -> Schedule:
    """Minimal schedule meeting the growth conditions.

    lambda_ and kappa_ are the least positive integers equalizing the
    unit lengths; l and l_prime are minimal strictly increasing integer
    sequences making each group swamp the accumulated history by the
    factor (m_bound - eta)/eta. Counts are kept within int64; the
    sequences grow geometrically, so the feasible n_steps is small and
    the error reports the largest feasible value.
    """
    if L < 1 or K < 1 or Q < 0 or P < 0:
        raise ParameterError("need L, K >= 1 and Q, P >= 0")
    if not (0.0 < eta < m_bound):
        raise ParameterError("need 0 < eta < m_bound")
    if n_steps < 1:
        raise ParameterError("n_steps must be >= 1")
    G = math.lcm(L + Q, K + P)
    lam = G // (L + Q)
    kap = G // (K + P)
    ratio = (m_bound - eta) / eta
    a = [0]
    b = []
    l, lp, M, Mp = [], [], [], []
    for n in range(1, n_steps + 1):
        an = a[-1]
        need = int(math.floor(ratio * an / G)) + 1
        while need * G <= ratio * an:
            need += 1
        ln = max(need, (l[-1] + 1) if l else 1)
        Mn = ln * G
        bn = an + Mn
        need = int(math.floor(ratio * bn / G)) + 1
        while need * G <= ratio * bn:
            need += 1
        lpn = max(need, (lp[-1] + 1) if lp else 1)
        Mpn = lpn * G
        anext = bn + Mpn
        if anext > _INT64_MAX:
            raise ScheduleError(
                f"schedule overflows 64-bit counts at step {n}", max_feasible_n=n - 1
            )
        l.append(ln)
        lp.append(lpn)
        M.append(Mn)
        Mp.append(Mpn)
        b.append(bn)
        a.append(anext)
    return Schedule(L, Q, K, P, lam, kap, eta, m_bound, n_steps, l, lp, M, Mp, a, b)


# ---------------------------------------------------------------------------
# library assembly
# ---------------------------------------------------------------------------

def _chain_states(m: MapSpec, g: TransitionGraph, z: float, target_cell: int):
    """Delta-chain states from the point z to the target cell.

    The returned list starts exactly at z (zero junction gap against
    whatever produced z) and walks the BFS cell path, clamping the
    exact image into each next cell. The final chain point is omitted:
    the successor block's first state stands in for it, as the target
    cell has diameter below the chain tolerance.
    """
    grid = g.grid
    path = shortest_cell_path(g, grid.cell_index(z), [target_cell])
    if not path:
        raise ConstructionImpossible(
            f"no delta-chain from cell {grid.cell_index(z)} to cell {target_cell}"
        )
    if len(path) == 1:
        return []
    states = [z]
    for cell in path[1:-1]:
        lo, hi = grid.bounds(cell)
        hi_in = np.nextafter(hi, lo)
        states.append(min(max(m(states[-1]), lo), hi_in))
    return states


def _separated_prefix(m: MapSpec, blocks, horizon, eps, cap):
    """Keep blocks whose defining orbits are pairwise separated by more
    than eps over the horizon, up to cap."""
    kept = []
    for blk in blocks:
        if all(
            max(abs(a - b) for a, b in zip(blk[:horizon], other[:horizon])) > eps
            for other in kept
        ) or not kept:
            kept.append(blk)
        if len(kept) >= cap:
            break
    return kept


def select_blocks(
    m: MapSpec,
    phi: Observable,
    graph: TransitionGraph,
    class_id: int,
    eps: float,
    eta: float,
    L_target: int,
    xi=None,
    max_period: int = 6,
    m_bound=None,
) -> BlockLibrary:
    """Find two periodic orbits in the class with distinct observable
    averages and assemble the block library around them.

    alpha is the smallest and beta the largest cycle average found; the
    mixing weight xi is taken from a small rational grid (largest
    feasible when not given) subject to 8*eta < (1-xi)*(beta-alpha).
    Raises ConstructionImpossible when no two cycles separate under phi.
    """
    if eps <= 0 or eta <= 0 or L_target < 1:
        raise ParameterError("need eps > 0, eta > 0, L_target >= 1")
    classes = chain_classes(graph)
    if not 0 <= class_id < len(classes.classes):
        raise ParameterError(f"class_id {class_id} out of range ({len(classes.classes)} classes)")
    cell_set = classes._sets[class_id]
    grid = graph.grid

    cycles = [
        cyc
        for cyc in periodic_cycles(m, max_period)
        if all(grid.cell_index(float(p)) in cell_set for p in cyc)
    ]
    if len(cycles) < 2:
        raise ConstructionImpossible(
            f"class {class_id} exposes {len(cycles)} cycles up to period {max_period}; need 2"
        )
    avgs = [cycle_average(phi, cyc) for cyc in cycles]
    i_lo = min(range(len(cycles)), key=lambda i: (avgs[i], i))
    i_hi = max(range(len(cycles)), key=lambda i: (avgs[i], -i))
    alpha, beta = avgs[i_lo], avgs[i_hi]
    if beta - alpha <= 1e-12:
        raise ConstructionImpossible("all cycle averages coincide; observable does not separate")
    alpha_cyc, beta_cyc = cycles[i_lo], cycles[i_hi]

    if xi is None:
        xi_frac = next((f for f in _XI_GRID if 8.0 * eta < (1.0 - f) * (beta - alpha)), None)
        if xi_frac is None:
            raise ParameterError(
                f"eta={eta!r} too large: need 8*eta < (1-xi)*(beta-alpha) = "
                f"(1-xi)*{beta - alpha!r} for some grid xi"
            )
    else:
        xi_frac = Fraction(xi).limit_denominator(64)
        if 8.0 * eta >= (1.0 - float(xi_frac)) * (beta - alpha):
            raise ParameterError(
                f"eta={eta!r} too large for xi={float(xi_frac)!r}: "
                f"8*eta={8 * eta!r} >= {(1.0 - float(xi_frac)) * (beta - alpha)!r}"
            )
    zeta = float(xi_frac) * alpha + (1.0 - float(xi_frac)) * beta
    if m_bound is None:
        m_bound = phi.bound() + max(abs(alpha), abs(beta)) + 0.05

    len_a, len_b = len(alpha_cyc), len(beta_cyc)
    a0, b0 = float(alpha_cyc[0]), float(beta_cyc[0])
    U = grid.cell_index(a0)
    chain_w = _chain_states(m, graph, a0, grid.cell_index(b0))
    chain_p = _chain_states(m, graph, b0, U)
    chain_q = _chain_states(m, graph, a0, U)
    W, P, Q = len(chain_w), len(chain_p), len(chain_q)
    omega_max = max(W, P, Q, 1)

    # J must make xi*J a multiple of len_a and (1-xi)*J a multiple of
    # len_b, and large enough that the chain material inside a gamma
    # block cannot move its average by more than the eta budget.
    d, num = xi_frac.denominator, xi_frac.numerator
    t_unit = math.lcm(len_a // math.gcd(num, len_a), len_b // math.gcd(d - num, len_b))
    J_unit = d * t_unit
    J_floor = max(int(math.ceil(m_bound * omega_max / eta)) + 1, 2 * omega_max, 2)
    J = ((J_floor + J_unit - 1) // J_unit) * J_unit
    K = J + W

    # L: multiple of the alpha cycle length, at least L_target, chosen
    # to minimize lcm(L+Q, K+P) so group lengths stay small.
    L_min = max(L_target, 1)
    if Q > 0:
        L_min = max(L_min, int(math.ceil(m_bound * omega_max / eta)) + 1)
    L_lo = ((L_min + len_a - 1) // len_a) * len_a
    best = None
    for Lc in range(L_lo, L_lo + 2 * (K + P) + len_a, len_a):
        key = (math.lcm(Lc + Q, K + P), Lc)
        if best is None or key < best:
            best = key
    L = best[1]

    xiJ = (num * J) // d
    one_minus_xiJ = J - xiJ

    def repeat_to(cyc, length):
        reps = int(math.ceil(length / len(cyc)))
        return np.tile(np.asarray(cyc, dtype=float), reps)[:length]

    alpha_candidates = [
        repeat_to(cyc, L)
        for cyc, avg in zip(cycles, avgs)
        if len(cyc) <= L and L % len(cyc) == 0 and abs(avg - alpha) <= eta / 4.0
    ]
    alpha_blocks = _separated_prefix(m, alpha_candidates, L, 4.0 * eps, _LIBRARY_CAP)
    if not alpha_blocks:
        raise ConstructionImpossible("no alpha block with average within eta/4")

    prefix = repeat_to(alpha_cyc, xiJ)
    gamma_candidates = []
    for cyc, avg in zip(cycles, avgs):
        if abs(avg - beta) > eta / 4.0 or one_minus_xiJ % len(cyc) != 0:
            continue
        if grid.cell_index(float(cyc[0])) != grid.cell_index(b0):
            continue  # chain_w lands in the cell of beta_cyc[0]
        gamma = np.concatenate([prefix, np.asarray(chain_w), repeat_to(cyc, one_minus_xiJ)])
        if abs(float(np.mean(phi(gamma))) - zeta) < 2.0 * eta:
            gamma_candidates.append(gamma)
    gamma_blocks = _separated_prefix(m, gamma_candidates, K, 4.0 * eps, _LIBRARY_CAP)
    if not gamma_blocks:
        raise ConstructionImpossible("no gamma block meets the 2*eta average tolerance")

    probe = np.concatenate(
        [alpha_blocks[0], np.asarray(chain_q), gamma_blocks[0], np.asarray(chain_p), alpha_blocks[0]]
    )
    delta = max_gap(m, probe) * (1.0 + 1e-9) + 1e-15

    return BlockLibrary(
        alpha_blocks=alpha_blocks,
        gamma_blocks=gamma_blocks,
        chain_q=np.asarray(chain_q, dtype=float),
        chain_p=np.asarray(chain_p, dtype=float),
        chain_w=np.asarray(chain_w, dtype=float),
        alpha=alpha,
        beta=beta,
        zeta=zeta,
        xi=float(xi_frac),
        eta=eta,
        eps=eps,
        delta=float(delta),
        m_bound=float(m_bound),
        omega_max=omega_max,
        L=L,
        Q=Q,
        K=K,
        P=P,
        W=W,
        J=J,
        start_cell=U,
        class_id=class_id,
    )


# ---------------------------------------------------------------------------
# pseudo-orbit assembly and verification
# ---------------------------------------------------------------------------

def draw_unit_counts(lib: BlockLibrary, sched: Schedule, seed: int):
    """Per-group draw of how many units use each library block.

    Group n needs l[n]*lambda_ alpha-type and l_prime[n]*kappa_
    gamma-type units; the choice is drawn as multinomial counts (the
    checkpoint sums depend only on counts, and late groups hold more
    units than could ever be drawn one by one). Deterministic in seed.
    """
    rng = rng_for(seed, 101)
    na, ng = len(lib.alpha_blocks), len(lib.gamma_blocks)
    out = []
    for n in range(sched.n_steps):
        ca = rng.multinomial(sched.l[n] * sched.lambda_, np.full(na, 1.0 / na))
        cg = rng.multinomial(sched.l_prime[n] * sched.kappa_, np.full(ng, 1.0 / ng))
        out.append((ca, cg))
    return out


def build_pseudo_orbit(lib: BlockLibrary, sched: Schedule, horizon: int, seed: int) -> PseudoOrbit:
    """Materialize the schedule's pseudo-orbit up to ``horizon`` states.

    Units within a group are emitted grouped by library index in the
    drawn counts (block choice only matters through per-unit sums).
    """
    if horizon < 1:
        raise ParameterError("horizon must be >= 1")
    if horizon > sched.a[-1]:
        raise ParameterError(f"horizon {horizon} exceeds scheduled length {sched.a[-1]}")
    counts = draw_unit_counts(lib, sched, seed)
    units_a = [np.concatenate([blk, lib.chain_q]) for blk in lib.alpha_blocks]
    units_g = [np.concatenate([blk, lib.chain_p]) for blk in lib.gamma_blocks]
    if len(units_a[0]) != lib.L + lib.Q or len(units_g[0]) != lib.K + lib.P:
        raise ParameterError("library/schedule unit-length mismatch")
    chunks = []
    emitted = 0
    for n in range(sched.n_steps):
        for units, cvec in ((units_a, counts[n][0]), (units_g, counts[n][1])):
            for idx, cnt in enumerate(cvec):
                if emitted >= horizon or cnt == 0:
                    continue
                ulen = len(units[idx])
                take = min(int(cnt), (horizon - emitted + ulen - 1) // ulen)
                block = np.tile(units[idx], take)[: horizon - emitted]
                chunks.append(block)
                emitted += len(block)
        if emitted >= horizon:
            break
    states = np.concatenate(chunks)[:horizon]
    return PseudoOrbit(states, lib.delta, "construction-star")


@dataclass
class CheckpointRow:
    n: int
    position: int
    kind: str       # "b" (alpha side) or "a" (zeta side)
    average: float
    target: float
    tolerance: float
    ok: bool

    def to_json_dict(self):
        return {
            "n": self.n, "position": self.position, "kind": self.kind,
            "average": self.average, "target": self.target,
            "tolerance": self.tolerance, "ok": self.ok,
        }


@dataclass
class IrregularReport:
    rows: list
    alpha: float
    zeta: float
    eta: float
    slack: float
    gap_reported: float
    gap_threshold: float
    irregular: bool
    shadow_point: float

    def to_json_dict(self):
        return {
            "rows": [r.to_json_dict() for r in self.rows],
            "alpha": self.alpha,
            "zeta": self.zeta,
            "eta": self.eta,
            "slack": self.slack,
            "gap_reported": self.gap_reported,
            "gap_threshold": self.gap_threshold,
            "irregular": self.irregular,
            "shadow_point": self.shadow_point,
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), sort_keys=True)


def verify_irregular(
    m: MapSpec,
    phi: Observable,
    u: float,
    sched: Schedule,
    lib: BlockLibrary,
    n_check: int,
    seed: int = 0,
) -> IrregularReport:
    """Checkpoint averages of the scheduled pseudo-orbit, with the
    traced-orbit bound.

    Averages are computed exactly from per-unit observable sums and the
    drawn unit counts; any point eps-tracing the pseudo-orbit has its
    average within slack = Lip(phi)*eps of these values, so each
    checkpoint is tested against its target at tolerance 4*eta + slack.
    The verdict is irregular iff every checkpoint passes and the
    alpha/zeta targets are separated by more than 8*eta + 2*slack.
    """
    if n_check < 1 or n_check > sched.n_steps:
        raise ParameterError("n_check must lie in 1..n_steps")
    counts = draw_unit_counts(lib, sched, seed)
    sums_a = np.array([float(np.sum(phi(np.concatenate([blk, lib.chain_q])))) for blk in lib.alpha_blocks])
    sums_g = np.array([float(np.sum(phi(np.concatenate([blk, lib.chain_p])))) for blk in lib.gamma_blocks])
    slack = phi.lipschitz() * lib.eps
    tol = 4.0 * lib.eta + slack
    rows = []
    cum = 0.0
    side_b, side_a = [], []
    for n in range(1, n_check + 1):
        ca, cg = counts[n - 1]
        cum += float(ca @ sums_a)
        A_b = cum / sched.b[n - 1]
        rows.append(
            CheckpointRow(n, sched.b[n - 1], "b", A_b, lib.alpha, tol, abs(A_b - lib.alpha) <= tol)
        )
        side_b.append(A_b)
        cum += float(cg @ sums_g)
        A_a = cum / sched.a[n]
        rows.append(
            CheckpointRow(n, sched.a[n], "a", A_a, lib.zeta, tol, abs(A_a - lib.zeta) <= tol)
        )
        side_a.append(A_a)
    gap_reported = min(side_a) - max(side_b)
    gap_threshold = (lib.zeta - lib.alpha) - 8.0 * lib.eta - 2.0 * slack
    irregular = all(r.ok for r in rows) and (lib.zeta - lib.alpha) > 8.0 * lib.eta + 2.0 * slack
    return IrregularReport(
        rows=rows,
        alpha=lib.alpha,
        zeta=lib.zeta,
        eta=lib.eta,
        slack=slack,
        gap_reported=gap_reported,
        gap_threshold=gap_threshold,
        irregular=irregular,
        shadow_point=u,
    )


# ---------------------------------------------------------------------------
# end-to-end pipeline
# ---------------------------------------------------------------------------

@dataclass
class IrregularRunResult:
    library: BlockLibrary
    schedule: Schedule
    pseudo_orbit: PseudoOrbit
    trace_result: TraceResult
    report: IrregularReport
    graph: TransitionGraph = field(repr=False)
    classes: ChainClassSet = field(repr=False)
    modulus: float


def run_irregular_pipeline(
    m: MapSpec,
    phi: Observable,
    *,
    eps: float,
    eta: float,
    xi=None,
    L_target: int = 64,
    n_check: int = 3,
    horizon: int = None,
    seed: int = 0,
    class_id: int = None,
    max_period: int = 6,
    modulus_trials: int = 12,
    modulus_horizon: int = 300,
    delta_override: float = None,
    threads: int = 1,
) -> IrregularRunResult:
    """Full run: tracing modulus, transition graph, block library,
    schedule, materialized prefix, trace, checkpoint verification.

    eps should satisfy Lip(phi)*eps <= eta/4 so the tracing slack stays
    inside the eta budget; the default grid resolution is derived from
    the measured modulus so chain gaps stay traceable.
    """
    if phi.lipschitz() * eps > eta / 4.0 + 1e-15:
        raise ParameterError("eps too large: need Lip(phi)*eps <= eta/4")
    if delta_override is not None:
        modulus = delta_override
    else:
        modulus = shadowing_modulus(
            m, eps, trials=modulus_trials, horizon=modulus_horizon, seed=seed, threads=threads
        )
        if modulus <= 0.0:
            raise ConstructionImpossible(f"no tracing modulus found at eps={eps!r}")
    lip = lipschitz_constant(m)
    h = 2.0 ** math.floor(math.log2(modulus / (lip + 3.0)))
    h = max(h, 2.0 ** -20)
    from .chains import GridPartition, build_transition_graph  # local: avoids cycle at import

    grid = GridPartition(h)
    graph = build_transition_graph(m, grid, 2.0 * h)
    classes = chain_classes(graph)
    if class_id is None:
        class_id = max(range(len(classes.classes)), key=lambda k: len(classes.classes[k]))
    lib = select_blocks(
        m, phi, graph, class_id, eps, eta, L_target, xi=xi, max_period=max_period
    )
    if lib.delta > modulus:
        raise ConstructionImpossible(
            f"chain gaps ({lib.delta!r}) exceed the tracing modulus ({modulus!r})"
        )
    sched = plan_schedule(lib.L, lib.Q, lib.K, lib.P, eta, lib.m_bound, n_steps=n_check)
    if horizon is None:
        # cover the first alpha group plus two gamma units: structurally
        # representative, and the fold-branch growth stays cheap to prune
        horizon = sched.b[0] + 2 * (lib.K + lib.P)
    horizon = min(horizon, sched.a[-1])
    po = build_pseudo_orbit(lib, sched, horizon, seed)
    tr = trace(m, po, eps)
    report = verify_irregular(m, phi, tr.shadow_point, sched, lib, n_check, seed)
    return IrregularRunResult(lib, sched, po, tr, report, graph, classes, modulus)


def shadow_point_family(
    m: MapSpec,
    graph: TransitionGraph,
    lib: BlockLibrary,
    sched: Schedule,
    count: int,
    eps: float,
    seed: int = 0,
    header_len: int = 6,
) -> np.ndarray:
    """``count`` distinct traced points whose orbits share the scheduled
    tail but start from separated true-orbit headers.

    Each pseudo-orbit is header + delta-chain into the alpha start cell
    + a prefix of the canonical schedule; distinct headers force the
    traced points apart within the first header_len steps, giving a
    countable witness family for the richness of the traced set.
    Headers live in (0, 1/2) so no two share a fold image.
    """
    starts = (np.arange(count) + 0.5) / (2.0 * count)
    tail_len = min(sched.b[0] + lib.K + lib.P, sched.a[-1])
    tail = build_pseudo_orbit(lib, sched, tail_len, seed).states
    points = np.empty(count)
    for j, s in enumerate(starts):
        head = [float(s)]
        for _ in range(header_len - 1):
            head.append(m(head[-1]))
        z = m(head[-1])
        chain = _chain_states(m, graph, z, lib.start_cell)
        states = np.concatenate([head, chain, tail])
        points[j] = trace(m, states, eps).shadow_point
    return points
