"""Empirical quadrichotomy: classify (p, q) into SubCrit / SupCrit /
ContCrit / DiscontCrit / Undecided from crossing probabilities of the box
[-n,n]^2 inside the host [-2n,2n]^2 under free and wired conditions, and
locate the transition point by bisection.

Decision thresholds (the theory's constants are non-constructive, so these
are artifact constants, stated in every report): DELTA = 0.02 for the
bounded-away band, R2_MIN = 0.9 for log-linear decay fits, DECAY_MAX = 0.05
for "has decayed" at the largest box, and bracket separation 0.1 / 0.9 for
the discontinuous verdict.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .events import crossing, one_arm
from .fitting import aic_linear, wls_line
from .lattice import SQUARE, build_region
from .measure import BoundaryCondition, ModelParams
from .sampler import Schedule, estimate_event, estimate_events, monotone_pair_run
from .measure import self_dual_point

DELTA = 0.02
R2_MIN = 0.9
DECAY_MAX = 0.05
BRACKET_LO = 0.1
BRACKET_HI = 0.9

SUBCRIT = "SubCrit"
SUPCRIT = "SupCrit"
CONTCRIT = "ContCrit"
DISCONTCRIT = "DiscontCrit"
UNDECIDED = "Undecided"


@dataclass
class DecayFit:
    decays: bool
    slope: float = float("nan")
    r2: float = float("nan")
    n_points: int = 0
    note: str = ""


def _decay_fit(ns, means, stderrs, threshold=DECAY_MAX):
    """Log-linear decay test of a positive sequence over the n grid.

    Zero estimates are censored (consistent with decay, excluded from the
    fit). With >= 3 usable points: WLS fit of log value vs n must have
    negative slope and R^2 >= R2_MIN. With exactly 2 usable points and
    trailing zeros the test accepts strict halving instead of a fit.
    The value at the largest n (zero counts as zero) must be < threshold.
    """
    usable = [(n, m, s) for n, m, s in zip(ns, means, stderrs) if m > 0]
    final = means[-1]
    if final >= threshold:
        return DecayFit(False, note=f"value {final:.3g} at n={ns[-1]} above {threshold}")
    if max(means) < threshold and len(usable) <= 2:
        # already decayed at every measured scale; nothing left to fit
        return DecayFit(True, float("-inf"), float("nan"), len(usable),
                        "below threshold at every scale")
    if len(usable) >= 3:
        xs = [u[0] for u in usable]
        ys = [math.log(u[1]) for u in usable]
        ss = [u[2] / u[1] for u in usable]
        _, slope, _, r2 = wls_line(xs, ys, ss)
        ok = slope < 0 and r2 >= R2_MIN
        return DecayFit(ok, slope, r2, len(usable),
                        "" if ok else f"slope={slope:.3g}, r2={r2:.3g}")
    if len(usable) == 2 and len(usable) < len(means):
        (n1, m1, _), (n2, m2, _) = usable
        if n2 > n1 and m2 <= 0.5 * m1:
            return DecayFit(True, math.log(m2 / m1) / (n2 - n1), float("nan"), 2,
                            "two-point decay with censored tail")
    return DecayFit(False, note="too few measurable points for a decay fit")


def _drift_fit(ns, means, stderrs):
    """Monotone-drift test: WLS slope of the means against n must be within
    3 standard errors of zero."""
    _, slope, se, _ = wls_line(ns, means, stderrs)
    if se == 0:
        return abs(slope) < 1e-12, slope, se
    return abs(slope) <= 3.0 * se, slope, se


@dataclass
class PhaseVerdict:
    verdict: str
    params: object
    n_grid: list
    est_free: list
    est_wired: list
    fits: dict = field(default_factory=dict)
    brackets: dict = field(default_factory=dict)
    confidence: str = ""
    thresholds: dict = field(default_factory=lambda: {
        "delta": DELTA, "r2_min": R2_MIN, "decay_max": DECAY_MAX,
        "bracket_lo": BRACKET_LO, "bracket_hi": BRACKET_HI})

    def as_json(self):
        return {
            "verdict": self.verdict,
            "p": self.params.p, "q": self.params.q,
            "n_grid": list(self.n_grid),
            "phi_free": [[e.mean, e.stderr] for e in self.est_free],
            "phi_wired": [[e.mean, e.stderr] for e in self.est_wired],
            "fits": self.fits,
            "brackets": {k: [e.mean, e.stderr] for k, e in self.brackets.items()},
            "confidence": self.confidence,
            "thresholds": self.thresholds,
        }


def crossing_cell(params, n, bc_name, schedule, dynamics="cm"):
    """phi^bc_{Lambda_2n}[H_{Lambda_n}]. Chains start in the bc-favored
    extreme state (closed under free, open under wired) so that estimates
    converge within the right phase even at strong first-order points."""
    host = build_region(SQUARE, (-2 * n, 2 * n, -2 * n, 2 * n))
    bc = (BoundaryCondition.wired(host) if bc_name == "wired"
          else BoundaryCondition.free(host))
    ev = crossing("H", (-n, n, -n, n))
    init = "open" if bc_name == "wired" else "closed"
    return estimate_event(host, bc, params, ev, schedule, dynamics=dynamics,
                          init=init)


def classify(params, n_grid, schedule, dynamics="cm", bracket_schedule=None,
             run_brackets="auto"):
    """The quadrichotomy decision procedure. Rules, in order:
      (a) wired-host crossing probabilities decay log-linearly -> SubCrit;
      (b) dually for one minus the free-host probabilities -> SupCrit;
      (c) free decays to 0 AND wired rises to 1, confirmed by separated
          monotone brackets at the largest box -> DiscontCrit;
      (d) both sequences inside [delta, 1-delta] with no monotone drift
          beyond 3 sigma -> ContCrit;
      (e) otherwise Undecided. Unreliable estimates force Undecided.
    """
    n_grid = sorted(n_grid)
    if len(n_grid) < 4:
        raise ValueError("classify needs an n-grid with at least 4 points")
    est0, est1 = [], []
    for n in n_grid:
        est0.append(crossing_cell(params, n, "free", schedule, dynamics))
        est1.append(crossing_cell(params, n, "wired", schedule, dynamics))
    verdict = PhaseVerdict(UNDECIDED, params, n_grid, est0, est1)

    if any(not e.reliable for e in est0 + est1):
        verdict.confidence = "unreliable estimates (autocorrelation too long)"
        return verdict

    m0 = [e.mean for e in est0]
    m1 = [e.mean for e in est1]
    s0 = [e.stderr for e in est0]
    s1 = [e.stderr for e in est1]

    sub = _decay_fit(n_grid, m1, s1)
    verdict.fits["subcrit"] = vars(sub)
    if sub.decays:
        verdict.verdict = SUBCRIT
        verdict.confidence = f"wired crossing decays (slope {sub.slope:.3g})"
        return verdict

    sup = _decay_fit(n_grid, [1.0 - m for m in m0], s0)
    verdict.fits["supcrit"] = vars(sup)
    if sup.decays:
        verdict.verdict = SUPCRIT
        verdict.confidence = f"free non-crossing decays (slope {sup.slope:.3g})"
        return verdict

    dis_lo = _decay_fit(n_grid, m0, s0)
    dis_hi = _decay_fit(n_grid, [1.0 - m for m in m1], s1)
    verdict.fits["discont_free"] = vars(dis_lo)
    verdict.fits["discont_wired"] = vars(dis_hi)
    if dis_lo.decays and dis_hi.decays and run_brackets != "never":
        # confirm with the coupled monotone pair at the largest box: the
        # free/all-closed chain sits below the free measure and the
        # wired/all-open chain above the wired one, so their separation is
        # bracket evidence rather than two point estimates
        nb = n_grid[-1]
        bsch = bracket_schedule or schedule
        host = build_region(SQUARE, (-2 * nb, 2 * nb, -2 * nb, 2 * nb))
        lo_e, hi_e = monotone_pair_run(host, params, bsch,
                                       crossing("H", (-nb, nb, -nb, nb)))
        verdict.brackets = {"pair_low": lo_e, "pair_high": hi_e}
        separated = lo_e.mean < BRACKET_LO and hi_e.mean > BRACKET_HI
        if separated:
            verdict.verdict = DISCONTCRIT
            verdict.confidence = (
                f"monotone pair separated at n={nb}: "
                f"{lo_e.mean:.3f} vs {hi_e.mean:.3f}")
            return verdict
        verdict.confidence = "decay pattern seen but brackets not separated"
        return verdict

    inband = all(DELTA <= m <= 1.0 - DELTA for m in m0 + m1)
    drift0, sl0, se0 = _drift_fit(n_grid, m0, s0)
    drift1, sl1, se1 = _drift_fit(n_grid, m1, s1)
    verdict.fits["drift_free"] = {"slope": sl0, "se": se0, "ok": drift0}
    verdict.fits["drift_wired"] = {"slope": sl1, "se": se1, "ok": drift1}
    if inband and drift0 and drift1:
        verdict.verdict = CONTCRIT
        verdict.confidence = (
            f"all estimates in [{DELTA}, {1 - DELTA}] with no drift beyond 3 sigma")
        return verdict
    verdict.confidence = "no decision rule fired"
    return verdict


# -- box-crossing and one-arm reports ----------------------------------------

@dataclass
class BoxCrossingReport:
    rho: int
    rows: list
    min_est: float
    max_est: float
    passed: bool

    def as_json(self):
        return {"rho": self.rho, "rows": self.rows, "min": self.min_est,
                "max": self.max_est, "passed": bool(self.passed),
                "band": [DELTA, 1 - DELTA]}


def box_crossing_check(params, rho, n_grid, schedule, dynamics="cm"):
    """Crossing estimates of [0, rho n] x [0, n] in the fattened host
    [-n, (rho+1) n] x [-n, 2n] under free and wired conditions; passes when
    everything stays inside [delta, 1-delta]."""
    if rho not in (1, 2, 3):
        raise ValueError("rho in {1, 2, 3}")
    rows = []
    vals = []
    for n in n_grid:
        host = build_region(SQUARE, (-n, (rho + 1) * n, -n, 2 * n))
        ev = crossing("H", (0, rho * n, 0, n))
        for bc_name in ("free", "wired"):
            bc = (BoundaryCondition.free(host) if bc_name == "free"
                  else BoundaryCondition.wired(host))
            est = estimate_event(host, bc, params, ev, schedule, dynamics=dynamics)
            rows.append({"n": n, "bc": bc_name, "mean": est.mean,
                         "stderr": est.stderr})
            vals.append(est.mean)
    lo, hi = min(vals), max(vals)
    return BoxCrossingReport(rho, rows, lo, hi, DELTA <= lo and hi <= 1 - DELTA)


@dataclass
class OneArmReport:
    rows: list
    loglog_slope: float
    loglog_se: float
    aic_exponential: float
    aic_polynomial: float
    preferred: str

    def as_json(self):
        return {"rows": self.rows, "loglog_slope": self.loglog_slope,
                "loglog_se": self.loglog_se,
                "aic_exponential": self.aic_exponential,
                "aic_polynomial": self.aic_polynomial,
                "preferred": self.preferred}


def one_arm_scan(params, n_grid, schedule, dynamics="cm"):
    """One-arm probabilities phi^1[0 <-> boundary of Lambda_n] measured in
    the wired host Lambda_{4 max n} (all radii on the same chains), with a
    log-log slope and an exponential-vs-polynomial AIC comparison."""
    n_grid = sorted(n_grid)
    host = build_region(SQUARE, tuple(np.array([-4, 4, -4, 4]) * n_grid[-1]))
    bc = BoundaryCondition.wired(host)
    events = [one_arm(n) for n in n_grid]
    ests = estimate_events(host, bc, params, events, schedule, dynamics=dynamics)
    rows = [{"n": n, "mean": e.mean, "stderr": e.stderr, "tau": e.tau_int}
            for n, e in zip(n_grid, ests)]
    usable = [(n, e) for n, e in zip(n_grid, ests) if e.mean > 0]
    if len(usable) >= 3:
        xs = [u[0] for u in usable]
        ys = [math.log(u[1].mean) for u in usable]
        ss = [u[1].stderr / u[1].mean for u in usable]
        _, slope_ll, se_ll, _ = wls_line(np.log(xs), ys, ss)
        aic_exp = aic_linear(xs, ys, ss, lambda v: v)
        aic_poly = aic_linear(xs, ys, ss, np.log)
        preferred = "exponential" if aic_exp < aic_poly else "polynomial"
    else:
        slope_ll = se_ll = float("nan")
        aic_exp = aic_poly = float("nan")
        preferred = "undetermined"
    return OneArmReport(rows, slope_ll, se_ll, aic_exp, aic_poly, preferred)


# -- transition-point scan -----------------------------------------------------

@dataclass
class PcScan:
    q: float
    history: list                  # (p, verdict, tiebreak value)
    p_lo: float
    p_hi: float
    certified_lo: float
    certified_hi: float
    p_c_estimate: float
    selfdual_ref: float
    widened: bool = False

    def as_json(self):
        return {"q": self.q, "history": self.history,
                "p_lo": self.p_lo, "p_hi": self.p_hi,
                "certified_lo": self.certified_lo,
                "certified_hi": self.certified_hi,
                "p_c_estimate": self.p_c_estimate,
                "selfdual_ref": self.selfdual_ref,
                "widened": bool(self.widened),
                "deviation": self.p_c_estimate - self.selfdual_ref}


def pc_scan(q, tolerance, budget, schedule, n_grid=(4, 8, 12, 16),
            dynamics="cm", p_lo=0.05, p_hi=0.95):
    """Bisection for the transition point at fixed q >= 1.

    SubCrit / SupCrit verdicts move the working interval directly. A
    critical or undecided verdict cannot move a certified endpoint, so the
    bisection then steps by the sign of the symmetric crossing statistic
    (mean of the free and wired estimates at the largest box vs 1/2),
    which is monotone in p and sharp near the transition; those probes
    refine the returned interval but not the certified envelope.
    """
    if q < 1:
        raise ValueError("pc scan requires q >= 1")
    lo, hi = p_lo, p_hi
    cert_lo, cert_hi = p_lo, p_hi
    history = []
    n_max = max(n_grid)
    for _ in range(budget):
        if hi - lo <= tolerance:
            break
        mid = 0.5 * (lo + hi)
        params = ModelParams(mid, q)
        v = classify(params, n_grid, schedule, dynamics=dynamics,
                     run_brackets="never")
        tie = 0.5 * (v.est_free[-1].mean + v.est_wired[-1].mean)
        history.append((mid, v.verdict, tie))
        if v.verdict == SUBCRIT:
            lo = mid
            cert_lo = max(cert_lo, mid)
        elif v.verdict == SUPCRIT:
            hi = mid
            cert_hi = min(cert_hi, mid)
        elif tie < 0.5:
            lo = mid
        else:
            hi = mid
    widened = hi - lo > tolerance
    return PcScan(q, history, lo, hi, cert_lo, cert_hi,
                  0.5 * (lo + hi), self_dual_point(q), widened)
