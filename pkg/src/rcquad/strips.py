"""Strip measures and strip-density machinery.

The strip of height n is approximated by the rectangle [-m,m] x [-n,2n]
with free (0), wired (1) or Dobrushin (0/1, bottom wired) boundary
conditions; estimates are convergence-checked by doubling the truncation.

The strip densities are the exponential rates per unit aspect ratio of
long horizontal crossings under free conditions (p_n) and of the absence
of vertical crossings under wired conditions (q_n), measured in the
ambient rectangle [0, alpha*n] x [-n, 2n] and extracted by a weighted
log-linear fit in alpha. The limiting aspect ratio is replaced by the
finite grid; rare points are dropped rather than importance-sampled.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .events import crossing
from .fitting import wls_line
from .lattice import SQUARE, build_region
from .measure import BoundaryCondition, ModelParams
from .sampler import Schedule, estimate_event

MIN_HITS = 10.0
PUSH_C_MIN = 0.05


def strip_bc(region, code):
    if code in ("0", 0, "free"):
        return BoundaryCondition.free(region)
    if code in ("1", 1, "wired"):
        return BoundaryCondition.wired(region)
    if code in ("0/1", "dobrushin"):
        return BoundaryCondition.dobrushin(region)
    raise ValueError(f"unknown strip boundary condition {code!r}")


@dataclass
class StripSpec:
    """Truncated strip: height n, bc in {0, 1, 0/1}, half-width m."""

    n: int
    bc: str = "0/1"
    m: int = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("strip height must be >= 1")

    def resolve_m(self, event_rect):
        """Default truncation: 8 x the event's horizontal extent."""
        if self.m is not None:
            return self.m
        extent = max(abs(event_rect[0]), abs(event_rect[1]), self.n)
        return 8 * extent

    def region(self, m):
        return build_region(SQUARE, (-m, m, -self.n, 2 * self.n))


@dataclass
class StripResult:
    estimate: object
    estimate_double_m: object
    m: int
    converged: bool
    note: str = ""


def strip_estimate(spec, params, ev, schedule, dynamics="cm"):
    """Estimate an event under the truncated strip measure, with the
    doubling convergence check (|difference| <= 2 combined stderr)."""
    rect = ev.rect if ev.rect is not None else (-spec.n, spec.n, -spec.n, 2 * spec.n)
    m = spec.resolve_m(rect)
    if m < 2 * max(abs(rect[0]), abs(rect[1])):
        raise ValueError("truncation half-width below twice the event extent")
    res1 = _strip_cell(spec, m, params, ev, schedule, dynamics)
    res2 = _strip_cell(spec, 2 * m, params, ev, schedule, dynamics)
    gap = abs(res1.mean - res2.mean)
    tol = 2.0 * math.hypot(res1.stderr, res2.stderr)
    converged = gap <= max(tol, 1e-12)
    note = "" if converged else f"not converged in m: |delta|={gap:.3g} > {tol:.3g}"
    return StripResult(res1, res2, m, converged, note)


def _strip_cell(spec, m, params, ev, schedule, dynamics):
    region = spec.region(m)
    bc = strip_bc(region, spec.bc)
    return estimate_event(region, bc, params, ev, schedule, dynamics=dynamics)


@dataclass
class DensityEstimate:
    """Fitted strip density: density = exp(slope of log prob vs alpha)."""

    n: int
    which: str                      # "p" or "q"
    alphas: list
    log_probs: list
    log_stderrs: list
    slope: float
    slope_se: float
    r2: float
    density: float
    dropped: list = field(default_factory=list)
    upper_bound: bool = False
    estimates: list = field(default_factory=list)

    def as_json(self):
        return {"n": self.n, "which": self.which, "alphas": list(self.alphas),
                "log_probs": list(self.log_probs),
                "log_stderrs": list(self.log_stderrs),
                "slope": self.slope, "slope_se": self.slope_se, "r2": self.r2,
                "density": self.density, "dropped": self.dropped,
                "upper_bound": bool(self.upper_bound)}


def _density_scan(n, params, alpha_grid, schedule, which, dynamics):
    """Shared machinery for the two densities: direct estimates across the
    alpha grid (no splitting into sub-crossings), then a WLS line fit of
    log probability against alpha."""
    alphas, logps, logses, ests, dropped = [], [], [], [], []
    for alpha in alpha_grid:
        width = alpha * n
        if abs(width - round(width)) > 1e-9:
            raise ValueError(f"alpha*n must be an integer, got {alpha}*{n}")
        width = int(round(width))
        region = build_region(SQUARE, (0, width, -n, 2 * n))
        if which == "p":
            bc = BoundaryCondition.free(region)
            ev = crossing("H", (0, width, 0, n))
        else:
            bc = BoundaryCondition.wired(region)
            ev = crossing("Vc", (0, width, 0, n))
        est = estimate_event(region, bc, params, ev, schedule, dynamics=dynamics)
        ests.append((alpha, est))
        hits = est.mean * est.n_samples
        if est.mean <= 0.0:
            dropped.append((alpha, "zero estimate"))
            continue
        if hits < MIN_HITS:
            dropped.append((alpha, f"rare event: ~{hits:.1f} hits"))
            continue
        if est.mean >= 1.0:
            alphas.append(alpha)
            logps.append(0.0)
            logses.append(0.0)
            continue
        alphas.append(alpha)
        logps.append(math.log(est.mean))
        logses.append(est.stderr / est.mean)
    if len(alphas) < 2:
        # all points rare or zero: report an upper bound from the largest
        # attempted aspect ratio (rule-of-three bound for zero counts)
        amax = max(alpha_grid)
        nsamp = max(e.n_samples for _, e in ests)
        bound = (3.0 / max(nsamp, 1)) ** (1.0 / amax)
        return DensityEstimate(n, which, alphas, logps, logses,
                               float("nan"), float("nan"), float("nan"),
                               min(bound, 1.0), dropped, True,
                               [(a, e) for a, e in ests])
    a0, slope, se, r2 = wls_line(alphas, logps, logses)
    density = min(math.exp(slope), 1.0)
    return DensityEstimate(n, which, alphas, logps, logses, slope, se, r2,
                           density, dropped, False, [(a, e) for a, e in ests])


def estimate_density_p(n, params, alpha_grid, schedule, dynamics="cm"):
    """Horizontal-crossing density under free conditions."""
    return _density_scan(n, params, alpha_grid, schedule, "p", dynamics)


def estimate_density_q(n, params, alpha_grid, schedule, dynamics="cm"):
    """No-vertical-crossing density under wired conditions."""
    return _density_scan(n, params, alpha_grid, schedule, "q", dynamics)


@dataclass
class PowerMonotonicityReport:
    n: int
    lam: float
    log_lhs: float
    log_rhs: float
    sigma: float
    passed: bool


def check_power_monotonicity(est_n, est_lam_n, lam):
    """Probe of density(lam*n) >= density(n)^lam within 3 propagated sigma
    (log-space comparison)."""
    if est_n.upper_bound or est_lam_n.upper_bound:
        raise ValueError("cannot compare upper-bound-only density estimates")
    lhs = math.log(est_lam_n.density) if est_lam_n.density > 0 else -math.inf
    rhs = lam * (math.log(est_n.density) if est_n.density > 0 else -math.inf)
    sigma = math.hypot(est_lam_n.slope_se, lam * est_n.slope_se)
    passed = lhs >= rhs - 3.0 * sigma
    return PowerMonotonicityReport(est_n.n, lam, lhs, rhs, sigma, passed)


@dataclass
class PushingReport:
    n: int
    alphas: list
    primal_log: list
    dual_log: list
    c_primal: float
    c_dual: float
    branches: list
    anomaly: bool

    def as_json(self):
        return {"n": self.n, "alphas": list(self.alphas),
                "primal_log": self.primal_log, "dual_log": self.dual_log,
                "c_primal": self.c_primal, "c_dual": self.c_dual,
                "branches": self.branches, "anomaly": bool(self.anomaly)}


def pushing_probe(n, alpha_grid, params, schedule, dynamics="cm"):
    """Estimates the two pushing-lemma branches across the aspect grid in
    the tall rectangle [0, alpha n] x [0, 26 n]: horizontal crossings of
    the bottom slab under wired-left-top-right conditions, and absence of
    vertical crossings under wired-bottom conditions. Each branch is fitted
    as c^alpha; a branch is 'bounded' when its c stays above a floor."""
    pr_log, du_log, pr_se, du_se, alphas = [], [], [], [], []
    zero_primal = zero_dual = False
    for alpha in alpha_grid:
        width = int(round(alpha * n))
        if abs(alpha * n - width) > 1e-9:
            raise ValueError("alpha*n must be an integer")
        region = build_region(SQUARE, (0, width, 0, 26 * n))
        rect = (0, width, 0, n)
        bc_primal = BoundaryCondition.sides(region, ("L", "T", "R"))
        bc_dual = BoundaryCondition.dobrushin(region)
        est_p = estimate_event(region, bc_primal, params, crossing("H", rect),
                               schedule, dynamics=dynamics)
        est_d = estimate_event(region, bc_dual, params, crossing("Vc", rect),
                               schedule, dynamics=dynamics)
        alphas.append(alpha)
        for est, logs, ses, iszero in ((est_p, pr_log, pr_se, "p"),
                                       (est_d, du_log, du_se, "d")):
            if est.mean <= 0:
                logs.append(None)
                ses.append(None)
            else:
                logs.append(math.log(min(est.mean, 1.0)))
                ses.append(est.stderr / est.mean if est.mean < 1 else 0.0)

    def fit(logs, ses):
        pts = [(a, l, s) for a, l, s in zip(alphas, logs, ses) if l is not None]
        if len(pts) < 2:
            return 0.0
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        ss = [p[2] for p in pts]
        _, slope, _, _ = wls_line(xs, ys, ss)
        return min(math.exp(slope), 1.0)

    c_primal = fit(pr_log, pr_se)
    c_dual = fit(du_log, du_se)
    branches = []
    if c_primal >= PUSH_C_MIN:
        branches.append("PushPrimal")
    if c_dual >= PUSH_C_MIN:
        branches.append("PushDual")
    return PushingReport(n, alphas, pr_log, du_log, c_primal, c_dual,
                         branches, anomaly=not branches)


@dataclass
class DensityRelationReport:
    lam: float
    fitted_k: float
    rows: list

    def as_json(self):
        return {"lam": self.lam, "fitted_k": self.fitted_k, "rows": self.rows}


def check_density_relation(lam, triples):
    """Consistency probe of the renormalization sandwich: for each base n,
    log density_p(3n) should lie between (3+3/lam) log density_q(n) - K and
    (3-9/lam) log density_p(n) + K for a single constant K = C log lam.
    Reports the smallest such K and per-n residuals; not a pass/fail gate.

    triples: list of (n, density_p_n, density_q_n, density_p_3n).
    """
    rows = []
    k_needed = 0.0
    for n, p_n, q_n, p_3n in triples:
        lp3 = math.log(p_3n.density) if p_3n.density > 0 else -math.inf
        lq = math.log(q_n.density) if q_n.density > 0 else -math.inf
        lp = math.log(p_n.density) if p_n.density > 0 else -math.inf
        lower_gap = (3.0 + 3.0 / lam) * lq - lp3      # K must exceed this
        upper_gap = lp3 - (3.0 - 9.0 / lam) * lp      # and this
        k_needed = max(k_needed, lower_gap, upper_gap)
        rows.append({"n": n, "log_p3n": lp3, "log_qn": lq, "log_pn": lp,
                     "lower_gap": lower_gap, "upper_gap": upper_gap})
    return DensityRelationReport(lam, k_needed, rows)
