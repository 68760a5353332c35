"""Batch front-end.

Subcommands: exact-check, estimate, snapshot, classify, pc-scan, densities,
box-crossing, one-arm, pushing-probe. Runs are described by a TOML config
(diffable experiment record) with flag overrides for seed / threads / out.
Exit codes: 0 success, 2 config error, 3 verification failure, 4 unreliable
statistics. Outputs carry no timestamps: a rerun with the same seed writes
byte-identical files.
"""

import argparse
import os
import sys

import numpy as np
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import sampler, serialize
from .checks import run_identity_suite, summarize
from .events import CrossingEvent, crossing, one_arm, witness_path
from .lattice import LATTICES, SQUARE, build_region
from .measure import BoundaryCondition, ModelParams
from .phases import box_crossing_check, classify, one_arm_scan, pc_scan
from .sampler import ChainState, Schedule, chayes_machta_step, estimate_event
from .snapshot import render_svg
from .strips import (StripSpec, estimate_density_p, estimate_density_q,
                     pushing_probe, strip_estimate)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_UNRELIABLE = 4


class ConfigError(Exception):
    pass


SCHEMAS = {
    "run": {"seed", "threads", "out", "lattice"},
    "model": {"p", "q"},
    "schedule": {"burn_in", "sweeps", "thin", "chains", "dynamics"},
    "estimate": {"region", "bc", "event", "strip"},
    "classify": {"n_grid"},
    "pc_scan": {"q", "tolerance", "budget", "n_grid"},
    "densities": {"which", "n", "alpha_grid"},
    "box_crossing": {"rho", "n_grid"},
    "one_arm": {"n_grid"},
    "pushing_probe": {"n", "alpha_grid"},
    "exact_check": {"max_edges", "p_grid", "q_grid", "inject_fault"},
    "snapshot": {"region", "mode", "steps", "highlight"},
}


def load_config(path):
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}")
    for section, body in cfg.items():
        if section not in SCHEMAS:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"section [{section}] must be a table")
        unknown = set(body) - SCHEMAS[section]
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    return cfg


def _need(cfg, section, key=None):
    if section not in cfg:
        raise ConfigError(f"missing config section [{section}]")
    if key is None:
        return cfg[section]
    if key not in cfg[section]:
        raise ConfigError(f"missing key {key!r} in [{section}]")
    return cfg[section][key]


def _model(cfg):
    body = _need(cfg, "model")
    try:
        return ModelParams(float(body.get("p", 0.5)), float(body.get("q", 1.0)))
    except ValueError as exc:
        raise ConfigError(str(exc))


def _schedule(cfg, seed):
    body = cfg.get("schedule", {})
    try:
        sch = Schedule(burn_in=body.get("burn_in"),
                       sweeps=int(body.get("sweeps", 2000)),
                       thin=int(body.get("thin", 1)),
                       chains=int(body.get("chains", 2)),
                       seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc))
    dynamics = body.get("dynamics", "cm")
    if dynamics not in ("cm", "glauber"):
        raise ConfigError(f"unknown dynamics {dynamics!r}")
    return sch, dynamics


def _region(cfg, body):
    rect = body.get("region")
    if not (isinstance(rect, list) and len(rect) == 4):
        raise ConfigError("region must be [a, b, c, d]")
    lat = LATTICES[cfg.get("run", {}).get("lattice", "square")]
    try:
        return build_region(lat, tuple(int(t) for t in rect))
    except ValueError as exc:
        raise ConfigError(str(exc))


def _event(body):
    spec = body.get("event")
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("event must be a table with a 'kind'")
    kind = spec["kind"]
    try:
        if kind in ("H", "V", "Hc", "Vc"):
            return crossing(kind, spec["rect"])
        if kind == "one-arm":
            return one_arm(int(spec["n"]))
        return CrossingEvent.from_json(
            {"kind": kind, "rect": spec.get("rect"),
             "params": {k: v for k, v in spec.items() if k not in ("kind", "rect")}})
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad event spec: {exc}")


def _bc(region, name):
    try:
        return BoundaryCondition.from_json(region, name)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _outdir(args, cfg):
    out = args.out or cfg.get("run", {}).get("out", ".")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# -- subcommands ---------------------------------------------------------------

def cmd_exact_check(args, cfg, seed, outdir):
    body = cfg.get("exact_check", {})
    results, ok = run_identity_suite(
        max_edges=int(body.get("max_edges", 16)),
        p_grid=tuple(body.get("p_grid", (0.2, 0.5, 0.8))),
        q_grid=tuple(body.get("q_grid", (1.0, 1.5, 2.0, 4.0, 10.0))),
        inject_fault=body.get("inject_fault"))
    ok = ok and all(r.passed for r in results)
    summary = summarize(results)
    report = {
        "n_checks": len(results),
        "ok": bool(ok),
        "summary": {k: {"n": v["n"], "fail": v["fail"],
                        "worst_margin": float(v["worst_margin"])}
                    for k, v in summary.items()},
        "failures": [r.as_json() for r in results if not r.passed][:50],
    }
    serialize.write_json(outdir / "exact_check.json", report)
    if not results:
        print("exact-check: warning: 0 checks (empty corpus)")
        return EXIT_OK
    for name, ent in sorted(summary.items()):
        print(f"exact-check: {name}: {ent['n']} checks, {ent['fail']} failures")
    if not ok:
        first = next(r for r in results if not r.passed)
        print(f"exact-check: FAILED first at {first.name}: {first.detail}")
        return EXIT_VERIFY
    print(f"exact-check: all {len(results)} identities hold")
    return EXIT_OK


def cmd_estimate(args, cfg, seed, outdir):
    body = _need(cfg, "estimate")
    params = _model(cfg)
    sch, dynamics = _schedule(cfg, seed)
    ev = _event(body)
    rows = []
    if "strip" in body:
        sbody = body["strip"]
        spec = StripSpec(int(sbody["n"]), str(sbody.get("bc", "0/1")),
                         sbody.get("m"))
        res = strip_estimate(spec, params, ev, sch, dynamics=dynamics)
        region = spec.region(res.m)
        row = serialize.estimate_row(region, f"strip-{spec.bc}", params,
                                     ev.name(), res.estimate, seed)
        if not res.converged:
            row["flag"] = (row["flag"] + ";" if row["flag"] else "") + "not-converged-in-m"
        rows.append(row)
        row2 = serialize.estimate_row(spec.region(2 * res.m), f"strip-{spec.bc}",
                                      params, ev.name(), res.estimate_double_m, seed)
        rows.append(row2)
    else:
        region = _region(cfg, body)
        bc = _bc(region, body.get("bc", "free"))
        est = estimate_event(region, bc, params, ev, sch, dynamics=dynamics)
        rows.append(serialize.estimate_row(region, str(body.get("bc", "free")),
                                           params, ev.name(), est, seed))
    serialize.write_csv(outdir / "estimates.csv", rows)
    for row in rows:
        print(f"estimate: {row['event']} mean={row['mean']!r} "
              f"stderr={row['stderr']!r} flag={row['flag'] or '-'}")
    if any(row["flag"] for row in rows):
        return EXIT_UNRELIABLE
    return EXIT_OK


def cmd_snapshot(args, cfg, seed, outdir):
    body = _need(cfg, "snapshot")
    region = _region(cfg, body)
    mode = body.get("mode", "sample")
    if mode == "open":
        config = np.ones(region.n_edges, dtype=bool)
    elif mode == "closed":
        config = np.zeros(region.n_edges, dtype=bool)
    elif mode == "sample":
        params = _model(cfg)
        st = ChainState(region, BoundaryCondition.free(region), params,
                        seed=seed, init="bernoulli")
        if 0.0 < params.p < 1.0:
            chayes_machta_step(st, int(body.get("steps", 200)))
        config = st.config
    else:
        raise ConfigError(f"unknown snapshot mode {mode!r}")
    witness = None
    if "highlight" in body:
        ev = _event({"event": body["highlight"]})
        try:
            witness = witness_path(config, region, ev)
        except ValueError as exc:
            raise ConfigError(str(exc))
    svg = render_svg(region, config, witness)
    (outdir / "snapshot.svg").write_text(svg)
    print(f"snapshot: wrote {outdir / 'snapshot.svg'} "
          f"({region.n_edges} edges, witness={'yes' if witness else 'no'})")
    return EXIT_OK


def cmd_classify(args, cfg, seed, outdir):
    body = cfg.get("classify", {})
    params = _model(cfg)
    sch, dynamics = _schedule(cfg, seed)
    n_grid = [int(n) for n in body.get("n_grid", (4, 8, 16, 32))]
    try:
        verdict = classify(params, n_grid, sch, dynamics=dynamics)
    except ValueError as exc:
        raise ConfigError(str(exc))
    serialize.write_json(outdir / "classify.json", verdict.as_json())
    print(f"classify: p={params.p} q={params.q} -> {verdict.verdict} "
          f"({verdict.confidence})")
    if any(not e.reliable for e in verdict.est_free + verdict.est_wired):
        return EXIT_UNRELIABLE
    return EXIT_OK


def cmd_pc_scan(args, cfg, seed, outdir):
    body = _need(cfg, "pc_scan")
    sch, dynamics = _schedule(cfg, seed)
    q = float(body.get("q", 1.0))
    scan = pc_scan(q, float(body.get("tolerance", 0.02)),
                   int(body.get("budget", 12)), sch,
                   n_grid=tuple(body.get("n_grid", (4, 8, 12, 16))),
                   dynamics=dynamics)
    serialize.write_json(outdir / "pc_scan.json", scan.as_json())
    rows = [{"q": q, "p_lo": scan.p_lo, "p_hi": scan.p_hi,
             "selfdual_ref": scan.selfdual_ref}]
    serialize.write_csv(outdir / "phase_table.csv", rows,
                        columns=("q", "p_lo", "p_hi", "selfdual_ref"))
    print(f"pc-scan: q={q} interval [{scan.p_lo:.4f}, {scan.p_hi:.4f}] "
          f"ref {scan.selfdual_ref:.4f}{' (widened)' if scan.widened else ''}")
    return EXIT_OK


def cmd_densities(args, cfg, seed, outdir):
    body = _need(cfg, "densities")
    params = _model(cfg)
    sch, dynamics = _schedule(cfg, seed)
    which = body.get("which", "p")
    n = int(_need(cfg, "densities", "n"))
    grid = [float(a) for a in _need(cfg, "densities", "alpha_grid")]
    fn = estimate_density_p if which == "p" else estimate_density_q
    try:
        de = fn(n, params, grid, sch, dynamics=dynamics)
    except ValueError as exc:
        raise ConfigError(str(exc))
    rows = [{"n": n, "alpha": a, "logp_hat": lp, "stderr": se}
            for a, lp, se in zip(de.alphas, de.log_probs, de.log_stderrs)]
    serialize.write_csv(outdir / "densities.csv", rows,
                        columns=("n", "alpha", "logp_hat", "stderr"))
    serialize.write_json(outdir / "densities.json", de.as_json())
    kind = "upper bound" if de.upper_bound else "estimate"
    print(f"densities: {which}_{n} {kind} {de.density!r} "
          f"(slope {de.slope!r}, r2 {de.r2!r}, {len(de.dropped)} dropped)")
    return EXIT_OK


def cmd_box_crossing(args, cfg, seed, outdir):
    body = cfg.get("box_crossing", {})
    params = _model(cfg)
    sch, dynamics = _schedule(cfg, seed)
    report = box_crossing_check(params, int(body.get("rho", 1)),
                                [int(n) for n in body.get("n_grid", (8, 16, 32))],
                                sch, dynamics=dynamics)
    serialize.write_json(outdir / "box_crossing.json", report.as_json())
    serialize.write_csv(outdir / "box_crossing.csv", report.rows,
                        columns=("n", "bc", "mean", "stderr"))
    print(f"box-crossing: rho={report.rho} range [{report.min_est:.4f}, "
          f"{report.max_est:.4f}] pass={report.passed}")
    return EXIT_OK


def cmd_one_arm(args, cfg, seed, outdir):
    body = cfg.get("one_arm", {})
    params = _model(cfg)
    sch, dynamics = _schedule(cfg, seed)
    report = one_arm_scan(params, [int(n) for n in body.get("n_grid", (4, 8, 16, 32))],
                          sch, dynamics=dynamics)
    serialize.write_json(outdir / "one_arm.json", report.as_json())
    serialize.write_csv(outdir / "one_arm.csv", report.rows,
                        columns=("n", "mean", "stderr", "tau"))
    print(f"one-arm: loglog slope {report.loglog_slope!r}, "
          f"preferred fit {report.preferred}")
    return EXIT_OK


def cmd_pushing_probe(args, cfg, seed, outdir):
    body = _need(cfg, "pushing_probe")
    params = _model(cfg)
    sch, dynamics = _schedule(cfg, seed)
    report = pushing_probe(int(_need(cfg, "pushing_probe", "n")),
                           [float(a) for a in _need(cfg, "pushing_probe", "alpha_grid")],
                           params, sch, dynamics=dynamics)
    serialize.write_json(outdir / "pushing.json", report.as_json())
    branches = ", ".join(report.branches) if report.branches else "NONE (anomaly)"
    print(f"pushing-probe: n={report.n} c_primal={report.c_primal!r} "
          f"c_dual={report.c_dual!r} bounded: {branches}")
    return EXIT_OK


COMMANDS = {
    "exact-check": cmd_exact_check,
    "estimate": cmd_estimate,
    "snapshot": cmd_snapshot,
    "classify": cmd_classify,
    "pc-scan": cmd_pc_scan,
    "densities": cmd_densities,
    "box-crossing": cmd_box_crossing,
    "one-arm": cmd_one_arm,
    "pushing-probe": cmd_pushing_probe,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="rcquad",
        description="Random-cluster crossing-probability toolkit")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", default=None, help="TOML run config")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--out", default=None)
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config) if args.config else {}
        seed = args.seed if args.seed is not None else int(cfg.get("run", {}).get("seed", 0))
        threads = args.threads
        if threads is None:
            threads = cfg.get("run", {}).get("threads")
        if threads is None:
            threads = os.environ.get("RCQUAD_THREADS", 1)
        sampler.set_threads(int(threads))
        outdir = _outdir(args, cfg)
        return COMMANDS[args.command](args, cfg, seed, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
