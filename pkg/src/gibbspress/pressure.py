"""Certified pressure intervals at periodic-orbit measures.

The estimator brackets the conditional probability of the origin symbol
given the upper-layer part of the boundary by taking min/max over all
locally admissible canopy configurations, then assembles the per-site
information and edge terms into a certified [lower, upper] interval for the
pressure.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, HypothesisError
from .interaction import Configuration, Interaction, per_site_contribution
from .lattice import Region, Site, boundary, box, canopy_decomposition, past_in_box
from .sft import PeriodicPoint, orbit_sites, random_locally_admissible, region_components
from .transfer import DEFAULT_ROW_STATE_LIMIT, LOG_ZERO, RegionEngine, logsumexp

DEFAULT_ENSEMBLE_BUDGET = 1 << 24
DEFAULT_EVAL_BUDGET = 1 << 20


@dataclass(frozen=True)
class PInterval:
    """Certified bracket for the origin conditional at one orbit site."""

    lower: float
    upper: float
    n: int
    canopy_count: int
    skipped_count: int

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise ValueError("interval must satisfy 0 <= lower <= upper <= 1")

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class SiteTerm:
    site: Site
    p: PInterval
    edge_term: float


@dataclass(frozen=True)
class PressureEstimate:
    """Certified pressure interval with per-site diagnostics."""

    lower: float
    upper: float
    per_site: tuple[SiteTerm, ...]
    n: int
    model: str

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError("pressure bounds must be finite")
        if self.lower > self.upper + 1e-15:
            raise ValueError("lower bound exceeds upper bound")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def canopy_count(self) -> int:
        return sum(t.p.canopy_count for t in self.per_site)

    @property
    def skipped_count(self) -> int:
        return sum(t.p.skipped_count for t in self.per_site)


def admissible_configurations(
    region: Region,
    phi: Interaction,
    limit: int = DEFAULT_ENSEMBLE_BUDGET,
    context: dict[Site, int] | None = None,
) -> np.ndarray:
    """All locally admissible configurations on a region, as a symbol matrix.

    Rows are configurations, columns follow the region's canonical site
    order. `context` pins exterior (or interior) sites that constrain the
    enumeration. The order is deterministic: connected components are
    enumerated depth-first with symbols ascending and combined as a
    cartesian product in canonical component order.
    """
    sites = list(region)
    q = phi.q
    if q ** len(sites) > limit:
        raise BudgetError(
            f"enumeration needs up to {q ** len(sites)} configurations, over the budget {limit}"
        )
    if not sites:
        return np.zeros((1, 0), dtype=np.int64)
    context = dict(context or {})
    if not phi.has_hard_constraints():
        total = q ** len(sites)
        idx = np.arange(total)
        cols = [(idx // q ** (len(sites) - 1 - j)) % q for j in range(len(sites))]
        return np.stack(cols, axis=1).astype(np.int64)

    h, v = phi.tables
    col_of = {s: j for j, s in enumerate(sites)}

    def enumerate_component(comp_sites: list[Site]) -> np.ndarray:
        assign: dict[Site, int] = {}
        rows: list[list[int]] = []

        def consistent(site: Site, a: int) -> bool:
            x, y = site
            for table, fwd, bwd in ((h, (x + 1, y), (x - 1, y)), (v, (x, y + 1), (x, y - 1))):
                b = assign.get(fwd, context.get(fwd))
                if b is not None and np.isposinf(table[a, b]):
                    return False
                b = assign.get(bwd, context.get(bwd))
                if b is not None and np.isposinf(table[b, a]):
                    return False
            return True

        def backtrack(i: int) -> None:
            if i == len(comp_sites):
                rows.append([assign[s] for s in comp_sites])
                return
            site = comp_sites[i]
            for a in range(q):
                if consistent(site, a):
                    assign[site] = a
                    backtrack(i + 1)
                    del assign[site]

        backtrack(0)
        if not rows:
            return np.zeros((0, len(comp_sites)), dtype=np.int64)
        return np.asarray(rows, dtype=np.int64)

    # components only interact through the fixed context, so enumerate each
    # one separately and take the cartesian product
    comps = [(list(c), enumerate_component(list(c))) for c in region_components(region)]
    total = math.prod(len(rows) for _, rows in comps)
    if total == 0:
        return np.zeros((0, len(sites)), dtype=np.int64)
    if total > limit:
        raise BudgetError(
            f"enumeration yields {total} configurations, over the budget {limit}"
        )
    out = np.empty((total, len(sites)), dtype=np.int64)
    idx = np.arange(total)
    stride = total
    for comp_sites, rows in comps:
        stride //= len(rows)
        pick = rows[(idx // stride) % len(rows)]
        for j, site in enumerate(comp_sites):
            out[:, col_of[site]] = pick[:, j]
    return out


def _delta_stats(args):
    """Min/max origin conditional over one chunk of canopy configurations."""
    region, phi, x_u, csites, deltas, a0, row_state_limit = args
    engine = RegionEngine(region, phi, target=(0, 0), row_state_limit=row_state_limit)
    static = engine.terms_from_boundary(x_u)
    zvec = engine.evaluate_deltas([static], csites, deltas)
    den = logsumexp(zvec, axis=1)
    ok = np.isfinite(den)
    skipped = int((~ok).sum())
    if not ok.any():
        return (math.inf, -math.inf, 0, skipped)
    logp = np.minimum(zvec[ok, a0] - den[ok], 0.0)
    p = np.exp(logp)
    return (float(p.min()), float(p.max()), int(ok.sum()), skipped)


def p_interval(
    z: PeriodicPoint,
    v: Site,
    n: int,
    phi: Interaction,
    ensemble_budget: int = DEFAULT_ENSEMBLE_BUDGET,
    workers: int = 1,
    row_state_limit: int = DEFAULT_ROW_STATE_LIMIT,
) -> PInterval:
    """Bracket the conditional probability of the origin symbol of the
    v-shift of z, given the upper layer, over the canopy ensemble.

    Canopy configurations whose conditional denominator vanishes are skipped
    and counted rather than treated as errors; outside single-site-fillable
    models such configurations can legitimately occur.
    """
    if n < 1:
        raise ValueError("radius n must be positive")
    if not z.is_point_of(phi):
        raise HypothesisError("point not in the underlying constraint set")
    s_n, u_n, c_n = canopy_decomposition(n)
    q = phi.q
    if q ** len(c_n) > ensemble_budget:
        raise BudgetError(
            f"canopy ensemble needs up to {q ** len(c_n)} members, over the budget {ensemble_budget}"
        )
    x = z.shift(v)
    x_u = x.restrict(u_n)
    a0 = x.value((0, 0))
    csites = list(c_n)
    deltas = admissible_configurations(c_n, phi, limit=ensemble_budget)
    if len(deltas) == 0:
        raise HypothesisError("empty canopy ensemble")

    if workers > 1 and len(deltas) >= 2 * workers:
        chunks = np.array_split(deltas, workers)
        payloads = [
            (s_n, phi, x_u, csites, chunk, a0, row_state_limit)
            for chunk in chunks
            if len(chunk)
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(_delta_stats, payloads))
    else:
        stats = [_delta_stats((s_n, phi, x_u, csites, deltas, a0, row_state_limit))]

    lo = min(s[0] for s in stats)
    hi = max(s[1] for s in stats)
    count = sum(s[2] for s in stats)
    skipped = sum(s[3] for s in stats)
    if count == 0:
        raise HypothesisError("empty canopy ensemble")
    return PInterval(lower=lo, upper=hi, n=n, canopy_count=count, skipped_count=skipped)


def gk_pressure(
    z: PeriodicPoint,
    n: int,
    phi: Interaction,
    ensemble_budget: int = DEFAULT_ENSEMBLE_BUDGET,
    workers: int = 1,
    row_state_limit: int = DEFAULT_ROW_STATE_LIMIT,
) -> PressureEstimate:
    """Certified pressure interval from the orbit measure of z at radius n.

    A per-site UPPER bound on the conditional becomes a LOWER pressure
    contribution through -log, and vice versa.
    """
    sites = orbit_sites(z)
    terms = []
    lower = 0.0
    upper = 0.0
    for v in sites:
        pi = p_interval(
            z, v, n, phi,
            ensemble_budget=ensemble_budget,
            workers=workers,
            row_state_limit=row_state_limit,
        )
        if pi.lower <= 0.0:
            raise HypothesisError("positivity violated")
        edge = per_site_contribution(z, v, phi)
        terms.append(SiteTerm(site=v, p=pi, edge_term=edge))
        lower += -math.log(pi.upper) + edge
        upper += -math.log(pi.lower) + edge
    count = len(sites)
    return PressureEstimate(
        lower=lower / count,
        upper=upper / count,
        per_site=tuple(terms),
        n=n,
        model=phi.name,
    )


def assemble_pressure_interval(terms: list[SiteTerm], n: int, model: str) -> PressureEstimate:
    """Assemble a PressureEstimate from per-site brackets (inversion logic)."""
    count = len(terms)
    lower = sum(-math.log(t.p.upper) + t.edge_term for t in terms) / count
    upper = sum(-math.log(t.p.lower) + t.edge_term for t in terms) / count
    return PressureEstimate(lower=lower, upper=upper, per_site=tuple(terms), n=n, model=model)


def width_decay_diagnostic(estimates: list[PressureEstimate]) -> dict:
    """Least-squares fit of log(width) against n, as a convergence report.

    Purely diagnostic: the per-model rate constants are unknown, so nothing
    is extrapolated from the fit and the certified intervals stand alone.
    """
    if len(estimates) < 2:
        raise ValueError("need at least two estimates to fit")
    ns = np.array([e.n for e in estimates], dtype=float)
    widths = np.array([e.width for e in estimates])
    if (widths <= 0).any():
        return {"slope": -math.inf, "intercept": -math.inf, "r_squared": 1.0}
    logs = np.log(widths)
    slope, intercept = np.polyfit(ns, logs, 1)
    fitted = slope * ns + intercept
    ss_res = float(((logs - fitted) ** 2).sum())
    ss_tot = float(((logs - logs.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return {"slope": float(slope), "intercept": float(intercept), "r_squared": r2}


def representation_residual(
    z: PeriodicPoint,
    z_ref: PeriodicPoint,
    n: int,
    phi: Interaction,
    ensemble_budget: int = DEFAULT_ENSEMBLE_BUDGET,
    workers: int = 1,
) -> tuple[float, float]:
    """Interval difference of the pressure estimates of two periodic points.

    When the representation holds for every shift-invariant measure the
    residual interval must contain 0; for a frozen point it reproduces the
    failure gap instead.
    """
    a = gk_pressure(z, n, phi, ensemble_budget=ensemble_budget, workers=workers)
    b = gk_pressure(z_ref, n, phi, ensemble_budget=ensemble_budget, workers=workers)
    return (a.lower - b.upper, a.upper - b.lower)


def finite_positivity_probe(
    z: PeriodicPoint,
    n: int,
    phi: Interaction,
    past_radius: int = 2,
    ensemble_budget: int = DEFAULT_ENSEMBLE_BUDGET,
    eval_budget: int = DEFAULT_EVAL_BUDGET,
    row_state_limit: int = DEFAULT_ROW_STATE_LIMIT,
) -> float:
    """Certified lower bound for the finite-past positivity constant.

    For every orbit site and every subset S of the past within radius
    `past_radius`, the conditional of the origin symbol given the point's
    values on S is a weighted average over boundary configurations on the
    enclosing box(n) ring; the probe returns the minimum over all of these
    of the bracket's lower end. Subsets are deduplicated by their
    intersection with box(n) and its ring, which leaves the value unchanged
    (farther sites are screened by the ring).
    """
    if not z.is_point_of(phi):
        raise HypothesisError("point not in the underlying constraint set")
    b_n = box(n)
    ring = boundary(b_n)
    domain = [s for s in past_in_box(past_radius) if s in b_n or s in ring]
    best = math.inf
    evals = 0
    for v in orbit_sites(z):
        x = z.shift(v)
        a0 = x.value((0, 0))
        engine = RegionEngine(b_n, phi, row_state_limit=row_state_limit)
        pin0 = engine.terms_from_pins({(0, 0): a0})
        for mask in range(1 << len(domain)):
            chosen = [domain[i] for i in range(len(domain)) if mask >> i & 1]
            pins_in = {s: x.value(s) for s in chosen if s in b_n}
            ring_pins = {s: x.value(s) for s in chosen if s in ring}
            free_ring = Region(ring.sites - set(ring_pins))
            deltas = admissible_configurations(
                free_ring, phi, limit=ensemble_budget, context=ring_pins
            )
            evals += max(len(deltas), 1)
            if evals > eval_budget:
                raise BudgetError(
                    f"positivity probe needs more than {eval_budget} evaluations"
                )
            if len(deltas) == 0:
                continue
            static = [
                engine.terms_from_boundary(Configuration(Region(ring_pins), ring_pins)),
                engine.terms_from_pins(pins_in),
            ]
            csites = list(free_ring)
            den = engine.evaluate_deltas(static, csites, deltas)
            num = engine.evaluate_deltas(static + [pin0], csites, deltas)
            ok = np.isfinite(den)
            if not ok.any():
                continue
            p = np.exp(np.minimum(num[ok] - den[ok], 0.0))
            best = min(best, float(p.min()))
    if not math.isfinite(best):
        raise HypothesisError("no admissible bracket found")
    return best


def ssm_gap_probe(
    n: int,
    phi: Interaction,
    trials: int,
    seed: int = 0,
    max_tries: int = 10000,
    row_state_limit: int = DEFAULT_ROW_STATE_LIMIT,
) -> float:
    """Empirical mixing diagnostic: worst origin-distribution discrepancy
    between random admissible boundary pairs on the box(n) ring.

    A report decreasing in n suggests (but does not prove) spatial mixing.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    b_n = box(n)
    ring = boundary(b_n)
    engine = RegionEngine(b_n, phi, row_state_limit=row_state_limit)
    pins = [engine.terms_from_pins({(0, 0): a}) for a in range(phi.q)]

    def origin_distribution() -> np.ndarray:
        for _ in range(max_tries):
            cfg = random_locally_admissible(ring, phi, rng, max_tries=max_tries)
            bt = engine.terms_from_boundary(cfg)
            den = engine.evaluate(bt)
            if den == LOG_ZERO:
                continue
            return np.exp(
                np.array([engine.evaluate(bt, pin) for pin in pins]) - den
            )
        raise HypothesisError("sampling failure: no admissible boundary found")

    gap = 0.0
    for _ in range(trials):
        p1 = origin_distribution()
        p2 = origin_distribution()
        gap = max(gap, float(np.abs(p1 - p2).max()))
    return gap
