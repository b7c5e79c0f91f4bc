"""Exact log-domain partition functions on finite regions by row-sweep
dynamic programming, conditional probabilities, and the strip oracle.

All weights live in the natural-log domain: a stored value is log of a
nonnegative weight, with -inf encoding weight zero. Sums of weights go
through logsumexp; exp() is only taken when reporting probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import inf, prod
from typing import Mapping, Sequence

import numpy as np

from .errors import BudgetError, HypothesisError
from .interaction import EMPTY_CONFIGURATION, Configuration, Interaction
from .lattice import Region, Site, boundary

LOG_ZERO = -inf

DEFAULT_ROW_STATE_LIMIT = 1 << 20
DEFAULT_STRIP_STATE_LIMIT = 1 << 24


def logsumexp(a, axis=None):
    """log(sum(exp(a))) with -inf-safe handling; empty sums give -inf."""
    a = np.asarray(a, dtype=float)
    if axis is None:
        if a.size == 0:
            return LOG_ZERO
        m = float(np.max(a))
        if m == -inf:
            return LOG_ZERO
        return m + float(np.log(np.sum(np.exp(a - m))))
    axis = axis % a.ndim
    if a.shape[axis] == 0:
        shape = list(a.shape)
        del shape[axis]
        return np.full(shape, LOG_ZERO)
    m = np.max(a, axis=axis, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m_safe), axis=axis)) + np.squeeze(m_safe, axis=axis)
    return np.where(np.squeeze(np.isfinite(m), axis=axis), out, LOG_ZERO)


@dataclass(frozen=True)
class ConstrainedRegion:
    """A region with optional per-site allowed symbol sets and a pinned
    boundary configuration (disjoint from the region)."""

    region: Region
    allowed: Mapping[Site, tuple[int, ...]] = field(default_factory=dict)
    boundary: Configuration = EMPTY_CONFIGURATION

    def __post_init__(self):
        for v, syms in self.allowed.items():
            if v not in self.region:
                raise ValueError("allowed-set site outside the region")
            if len(syms) == 0:
                raise ValueError("allowed set must be nonempty")
        if self.region.sites & self.boundary.region.sites:
            raise ValueError("boundary overlaps the region")


class _Row:
    __slots__ = ("y", "sites", "col", "configs", "internal")

    def __init__(self, y: int, sites: list[Site]):
        self.y = y
        self.sites = sites
        self.col = {v: j for j, v in enumerate(sites)}
        self.configs: np.ndarray | None = None
        self.internal: np.ndarray | None = None


def _enumerate_row(row: _Row, allowed: dict[Site, tuple[int, ...]], phi: Interaction, limit: int):
    """Fill row.configs / row.internal, pruning states with forbidden
    internal horizontal edges."""
    choices = [np.asarray(allowed[v], dtype=np.int64) for v in row.sites]
    total = prod(len(c) for c in choices)
    if total > limit:
        raise BudgetError(
            f"row at y={row.y} needs {total} states, over the limit {limit}"
        )
    idx = np.arange(total)
    cols = []
    stride = total
    for c in choices:
        stride //= len(c)
        cols.append(c[(idx // stride) % len(c)])
    cfg = np.stack(cols, axis=1) if cols else np.zeros((1, 0), dtype=np.int64)
    energy = np.zeros(len(cfg))
    h = phi.horizontal
    for j in range(len(row.sites) - 1):
        if row.sites[j + 1][0] == row.sites[j][0] + 1:
            energy = energy + h[cfg[:, j], cfg[:, j + 1]]
    keep = ~np.isposinf(energy)
    row.configs = cfg[keep]
    row.internal = -energy[keep]


class RegionEngine:
    """Reusable row-sweep DP over a fixed region and interaction.

    Rows are processed in y-order; per-call boundary conditions and pinned
    sites enter as additive per-row log-weight vectors, so one engine serves
    an entire ensemble of boundary conditions. With `target` set, evaluation
    returns the vector of log partition functions split by the target site's
    symbol (the target must lie in the first or last row).
    """

    def __init__(
        self,
        region: Region,
        phi: Interaction,
        allowed: Mapping[Site, tuple[int, ...]] | None = None,
        target: Site | None = None,
        row_state_limit: int = DEFAULT_ROW_STATE_LIMIT,
    ):
        self.region = region
        self.phi = phi
        self.target = target
        full = tuple(range(phi.q))
        allowed = dict(allowed or {})
        for v, syms in allowed.items():
            if any(not 0 <= s < phi.q for s in syms):
                raise ValueError("allowed symbol out of alphabet range")
        self._allowed = {v: tuple(allowed.get(v, full)) for v in region}

        by_y: dict[int, list[Site]] = {}
        for v in region:
            by_y.setdefault(v[1], []).append(v)
        ys = sorted(by_y)
        descending = True
        if target is not None:
            if target not in region:
                raise ValueError("target site outside the region")
            if ys and target[1] == ys[0]:
                descending = True
            elif ys and target[1] == ys[-1]:
                descending = False
            else:
                raise ValueError("target site must lie in an extremal row")
        if descending:
            ys = ys[::-1]
        self.rows = [_Row(y, sorted(by_y[y])) for y in ys]
        self._descending = descending

        for row in self.rows:
            _enumerate_row(row, self._allowed, phi, row_state_limit)
        self.infeasible = any(len(row.configs) == 0 for row in self.rows)

        self._trans = [
            self._transition(self.rows[i], self.rows[i + 1])
            for i in range(len(self.rows) - 1)
        ]
        self._ext = [self._exterior_map(row) for row in self.rows]
        self._site_term_cache: dict[tuple[Site, ...], list] = {}

        if target is not None and self.rows:
            last = self.rows[-1]
            col = last.col[target]
            self._target_masks = [last.configs[:, col] == a for a in range(phi.q)]
        else:
            self._target_masks = None

    # -- construction helpers -------------------------------------------

    def _transition(self, r: _Row, s: _Row):
        v_table = self.phi.vertical
        if abs(s.y - r.y) != 1:
            return ("const", 0.0, len(s.configs))
        shared_x = sorted({v[0] for v in r.sites} & {v[0] for v in s.sites})
        if not shared_x:
            return ("const", 0.0, len(s.configs))
        t = np.zeros((len(r.configs), len(s.configs)))
        for x in shared_x:
            a = r.configs[:, r.col[(x, r.y)]][:, None]
            b = s.configs[:, s.col[(x, s.y)]][None, :]
            if self._descending:  # s is below r: ordered pair (s, r)
                t = t + v_table[b, a]
            else:  # s is above r: ordered pair (r, s)
                t = t + v_table[a, b]
        if t.size and np.all(t == t.flat[0]):
            return ("const", float(-t.flat[0]), len(s.configs))
        logw = -t
        finite = logw[np.isfinite(logw)]
        if finite.size and float(finite.max() - finite.min()) <= 400.0:
            # narrow spread: exp/matmul loses at most e^-345 relative mass,
            # invisible at double precision, and runs on BLAS
            shift = float(finite.max())
            return ("dense_lin", (np.exp(logw - shift), shift), len(s.configs))
        return ("dense", logw, len(s.configs))

    def _exterior_map(self, row: _Row):
        """site -> [(column, axis, exterior_comes_first)] for sites outside
        the region adjacent to this row."""
        out: dict[Site, list[tuple[int, int, bool]]] = {}
        for v, j in row.col.items():
            x, y = v
            for axis, fwd, bwd in ((0, (x + 1, y), (x - 1, y)), (1, (x, y + 1), (x, y - 1))):
                if fwd not in self.region:
                    out.setdefault(fwd, []).append((j, axis, False))
                if bwd not in self.region:
                    out.setdefault(bwd, []).append((j, axis, True))
        return out

    # -- per-call term builders ------------------------------------------

    def terms_from_boundary(self, config: Configuration) -> list[np.ndarray | None]:
        """Per-row log-weight vectors for edges into a pinned exterior
        configuration. Exterior sites not adjacent to the region are ignored."""
        terms: list[np.ndarray | None] = []
        for row, ext in zip(self.rows, self._ext):
            vec = None
            for v, a in config.symbols.items():
                if not 0 <= a < self.phi.q:
                    raise ValueError("boundary symbol out of alphabet range")
                hits = ext.get(v)
                if not hits:
                    continue
                if vec is None:
                    vec = np.zeros(len(row.configs))
                for j, axis, ext_first in hits:
                    table = self.phi.tables[axis]
                    col = row.configs[:, j]
                    vec = vec - (table[a, col] if ext_first else table[col, a])
            terms.append(vec)
        return terms

    def terms_from_pins(self, pins: Mapping[Site, int]) -> list[np.ndarray | None]:
        """Per-row vectors forcing region sites to fixed symbols."""
        terms: list[np.ndarray | None] = []
        for row in self.rows:
            vec = None
            for v, a in pins.items():
                j = row.col.get(v)
                if j is None:
                    continue
                if vec is None:
                    vec = np.zeros(len(row.configs))
                vec = vec + np.where(row.configs[:, j] == a, 0.0, LOG_ZERO)
            terms.append(vec)
        return terms

    def _site_terms(self, sites: tuple[Site, ...]):
        """Per-row [(delta column, (q, n_states) vectors)] for fast ensembles."""
        cached = self._site_term_cache.get(sites)
        if cached is not None:
            return cached
        q = self.phi.q
        per_row = []
        for row, ext in zip(self.rows, self._ext):
            entries = []
            for d, v in enumerate(sites):
                hits = ext.get(v)
                if not hits:
                    continue
                arr = np.zeros((q, len(row.configs)))
                for j, axis, ext_first in hits:
                    table = self.phi.tables[axis]
                    col = row.configs[:, j]
                    for a in range(q):
                        arr[a] -= table[a, col] if ext_first else table[col, a]
                entries.append((d, arr))
            per_row.append(entries)
        self._site_term_cache[sites] = per_row
        return per_row

    # -- sweeps ------------------------------------------------------------

    @staticmethod
    def _apply(v: np.ndarray, trans) -> np.ndarray:
        kind, data, n_next = trans
        if kind == "const":
            base = logsumexp(v, axis=-1)
            return np.asarray(base)[..., None] + np.full(n_next, data)
        if kind == "dense_lin":
            expw, shift = data
            vmax = np.max(v, axis=-1)
            vm_safe = np.where(np.isfinite(vmax), vmax, 0.0)
            lin = np.exp(v - vm_safe[..., None])
            sums = lin @ expw
            with np.errstate(divide="ignore"):
                return np.log(sums) + vm_safe[..., None] + shift
        return logsumexp(v[..., :, None] + data, axis=-2)

    def _sweep(self, row_vecs: list[np.ndarray]) -> np.ndarray:
        v = row_vecs[0]
        for i in range(1, len(self.rows)):
            v = self._apply(v, self._trans[i - 1]) + row_vecs[i]
        return v

    def _finalize(self, v: np.ndarray):
        if self._target_masks is None:
            return logsumexp(v, axis=-1)
        cols = [logsumexp(v[..., m], axis=-1) for m in self._target_masks]
        return np.stack([np.asarray(c) for c in cols], axis=-1)

    def evaluate(self, *term_lists: Sequence[np.ndarray | None]):
        """Log partition function (scalar, or per-target-symbol vector).

        Each argument is a per-row list of additive log-weight vectors as
        produced by terms_from_boundary / terms_from_pins.
        """
        if not self.rows:
            return 0.0
        if self.infeasible:
            if self._target_masks is None:
                return LOG_ZERO
            return np.full(self.phi.q, LOG_ZERO)
        vecs = []
        for i, row in enumerate(self.rows):
            vec = row.internal
            for terms in term_lists:
                if terms[i] is not None:
                    vec = vec + terms[i]
            vecs.append(vec)
        out = self._finalize(self._sweep(vecs))
        return out if self._target_masks is not None else float(out)

    def evaluate_deltas(
        self,
        static_terms: Sequence[Sequence[np.ndarray | None]],
        delta_sites: Sequence[Site],
        delta_matrix: np.ndarray,
        block: int | None = None,
    ) -> np.ndarray:
        """Evaluate a whole ensemble of exterior configurations.

        delta_matrix has one row per ensemble member, one column per site of
        delta_sites. Returns (n_deltas,) log partitions, or (n_deltas, q)
        split by the target symbol when a target is set.
        """
        sites = tuple(delta_sites)
        delta_matrix = np.asarray(delta_matrix, dtype=np.int64)
        n = len(delta_matrix)
        if block is None:
            cost = max(
                (t[1].size for t in self._trans if t[0] == "dense"),
                default=max((len(r.configs) for r in self.rows), default=1),
            )
            block = max(64, min(4096, 4_000_000 // max(cost, 1)))
        q = self.phi.q
        out_shape = (n, q) if self._target_masks is not None else (n,)
        if not self.rows:
            return np.zeros(out_shape)
        if self.infeasible:
            return np.full(out_shape, LOG_ZERO)
        per_row_terms = self._site_terms(sites)
        base = []
        for i, row in enumerate(self.rows):
            vec = row.internal
            for terms in static_terms:
                if terms[i] is not None:
                    vec = vec + terms[i]
            base.append(vec)
        out = np.empty(out_shape)
        for lo in range(0, n, block):
            dm = delta_matrix[lo : lo + block]
            vecs = []
            for i in range(len(self.rows)):
                vec = np.broadcast_to(base[i], (len(dm), len(base[i])))
                for d, arr in per_row_terms[i]:
                    vec = vec + arr[dm[:, d]]
                vecs.append(np.ascontiguousarray(vec))
            out[lo : lo + len(dm)] = self._finalize(self._sweep(vecs))
        return out


def log_partition(
    cr: ConstrainedRegion,
    phi: Interaction,
    row_state_limit: int = DEFAULT_ROW_STATE_LIMIT,
) -> float:
    """Log of the constrained partition function of cr under phi.

    Sums exp(-energy) over configurations on the region that respect the
    allowed sets, counting region-internal edges and edges into the pinned
    boundary. -inf means no admissible configuration.
    """
    engine = RegionEngine(cr.region, phi, allowed=cr.allowed, row_state_limit=row_state_limit)
    return engine.evaluate(engine.terms_from_boundary(cr.boundary))


def _check_full_boundary(cr: ConstrainedRegion) -> None:
    if not len(cr.region):
        raise ValueError("conditional probability needs a nonempty region")
    missing = boundary(cr.region).sites - cr.boundary.region.sites
    if missing:
        raise ValueError(
            f"boundary must cover the full exterior boundary; missing {sorted(missing)}"
        )


def conditional_probability(
    event: Mapping[Site, int],
    cr: ConstrainedRegion,
    phi: Interaction,
    row_state_limit: int = DEFAULT_ROW_STATE_LIMIT,
) -> float:
    """Probability of pinning `event` inside cr, given the boundary.

    Computed as a difference of log partition functions, never as a ratio
    of linear-domain weights.
    """
    _check_full_boundary(cr)
    for v in event:
        if v not in cr.region:
            raise ValueError("event site outside the region")
    engine = RegionEngine(cr.region, phi, allowed=cr.allowed, row_state_limit=row_state_limit)
    bterms = engine.terms_from_boundary(cr.boundary)
    denom = engine.evaluate(bterms)
    if denom == LOG_ZERO:
        raise HypothesisError("boundary condition inadmissible")
    num = engine.evaluate(bterms, engine.terms_from_pins(event))
    return min(float(np.exp(num - denom)), 1.0)


def conditional_sum_check(
    cr: ConstrainedRegion,
    phi: Interaction,
    site: Site,
    row_state_limit: int = DEFAULT_ROW_STATE_LIMIT,
) -> np.ndarray:
    """Full conditional distribution at one site given cr.

    The denominator is computed as its own unconstrained partition function,
    so summing the returned entries to 1 is a genuine consistency check.
    """
    _check_full_boundary(cr)
    engine = RegionEngine(cr.region, phi, allowed=cr.allowed, row_state_limit=row_state_limit)
    bterms = engine.terms_from_boundary(cr.boundary)
    denom = engine.evaluate(bterms)
    if denom == LOG_ZERO:
        raise HypothesisError("boundary condition inadmissible")
    probs = np.empty(phi.q)
    for a in range(phi.q):
        num = engine.evaluate(bterms, engine.terms_from_pins({site: a}))
        probs[a] = np.exp(num - denom)
    return probs


# -- strip oracle ---------------------------------------------------------


@dataclass(frozen=True)
class StripBounds:
    """Collatz-Wielandt bracket for one strip width (free lateral boundary)."""

    width: int
    log_lambda_lower: float
    log_lambda_upper: float
    iterations: int

    @property
    def per_site_lower(self) -> float:
        return self.log_lambda_lower / self.width

    @property
    def per_site_upper(self) -> float:
        return self.log_lambda_upper / self.width

    @property
    def gap(self) -> float:
        return self.per_site_upper - self.per_site_lower


def _row_internal_energy(m: int, phi: Interaction) -> np.ndarray:
    """(q^m,) energies of the horizontal edges inside one width-m row."""
    q = phi.q
    h = phi.horizontal
    e = np.zeros(1)
    for j in range(m):
        if j == 0:
            e = np.repeat(e, q)
        else:
            last = np.arange(e.size) % q
            e = (e[:, None] + h[last]).reshape(-1)
    return e


def _strip_apply(x: np.ndarray, m: int, phi: Interaction) -> np.ndarray:
    """One application of the row-to-row transfer operator, site by site.

    x indexes width-m rows in base-q (first site most significant); the
    result accumulates the new row's internal energy and the inter-row
    vertical energies, all in the log domain.
    """
    q = phi.q
    neg_v = -phi.vertical
    neg_h = -phi.horizontal
    w = x.reshape(1, q, q ** (m - 1))
    for j in range(m):
        p = q**j
        s = q ** (m - 1 - j)
        w = w.reshape(p, q, s)
        tmp = w[:, :, :, None] + neg_v[None, :, None, :]
        if j > 0:
            last = np.arange(p) % q
            tmp = tmp + neg_h[last][:, None, None, :]
        w = logsumexp(tmp, axis=1)
        w = np.moveaxis(w, -1, 1)
    return w.reshape(-1)


def strip_pressure(
    m: int,
    phi: Interaction,
    tol: float = 1e-10,
    max_iter: int = 100000,
    state_limit: int = DEFAULT_STRIP_STATE_LIMIT,
) -> StripBounds:
    """Per-site pressure bracket for the width-m strip.

    Power-iterates the row transfer operator from the all-ones vector on
    admissible rows and returns Collatz-Wielandt bounds on log(lambda_max),
    stopping when the per-site gap drops below tol. Degenerate strips (no
    admissible row survives) yield a [-inf, -inf] bracket.
    """
    if m < 1:
        raise ValueError("strip width must be positive")
    q = phi.q
    if q ** (m + 1) > state_limit:
        raise BudgetError(
            f"width {m} needs {q ** (m + 1)} transfer states, over the limit {state_limit}"
        )
    internal = _row_internal_energy(m, phi)
    x = np.where(np.isposinf(internal), LOG_ZERO, 0.0)
    lo = hi = LOG_ZERO
    if not np.isfinite(x).any():
        return StripBounds(m, LOG_ZERO, LOG_ZERO, 0)
    it = 0
    for it in range(1, max_iter + 1):
        y = _strip_apply(x, m, phi)
        mask = np.isfinite(x) & np.isfinite(y)
        if not mask.any():
            return StripBounds(m, LOG_ZERO, LOG_ZERO, it)
        ratios = y[mask] - x[mask]
        lo, hi = float(ratios.min()), float(ratios.max())
        stable = bool((np.isfinite(y) == np.isfinite(x)).all())
        x = y - y[mask].max()
        if stable and (hi - lo) / m < tol:
            break
    return StripBounds(m, lo, hi, it)


@dataclass(frozen=True)
class StripPoint:
    """Strip bracket plus the consecutive-width ratio estimate.

    The raw per-site value (log lambda)/m carries an O(1/m) free-boundary
    surface term; the ratio log(lambda_m) - log(lambda_{m-1}) cancels it, so
    the ratio interval is the oracle's converged per-site value at width m.
    """

    width: int
    bounds: StripBounds
    ratio_lower: float | None
    ratio_upper: float | None


def strip_sequence(
    phi: Interaction,
    widths: Sequence[int],
    tol: float = 1e-10,
    max_iter: int = 100000,
    state_limit: int = DEFAULT_STRIP_STATE_LIMIT,
) -> list[StripPoint]:
    """Strip brackets for the given widths with ratio estimates.

    For every requested width m >= 2 the predecessor width m-1 is computed
    as well so the ratio interval can be formed by interval arithmetic.
    """
    widths = sorted(set(widths))
    if not widths or widths[0] < 1:
        raise ValueError("widths must be positive")
    needed = set(widths) | {m - 1 for m in widths if m >= 2}
    cache = {m: strip_pressure(m, phi, tol=tol, max_iter=max_iter, state_limit=state_limit) for m in sorted(needed)}
    points = []
    for m in widths:
        b = cache[m]
        if m >= 2:
            prev = cache[m - 1]
            rl = b.log_lambda_lower - prev.log_lambda_upper
            ru = b.log_lambda_upper - prev.log_lambda_lower
        else:
            rl = ru = None
        points.append(StripPoint(m, b, rl, ru))
    return points


def box_log_partition(
    m: int,
    phi: Interaction,
    row_state_limit: int = DEFAULT_ROW_STATE_LIMIT,
) -> float:
    """Per-site log partition function of the free m x m box."""
    if m < 1:
        raise ValueError("box side must be positive")
    region = Region((x, y) for y in range(1, m + 1) for x in range(1, m + 1))
    value = log_partition(ConstrainedRegion(region), phi, row_state_limit=row_state_limit)
    return value / (m * m)
