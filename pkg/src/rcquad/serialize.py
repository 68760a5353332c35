"""Deterministic result files: versioned CSV rows and sorted JSON.

Outputs contain no timestamps or environment state, so a rerun with the
same seed produces byte-identical files.
"""

import json

CSV_VERSION = "#rcquad-v1"
ESTIMATE_COLUMNS = ("region", "bc", "p", "q", "event", "mean", "stderr",
                    "tau_int", "n", "seed", "flag")


def fmt(v):
    if hasattr(v, "item"):  # numpy scalar
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def estimate_row(region, bc_name, params, event_name, est, seed):
    return {
        "region": "/".join(str(t) for t in region.rect),
        "bc": bc_name,
        "p": params.p,
        "q": params.q,
        "event": event_name,
        "mean": est.mean,
        "stderr": est.stderr,
        "tau_int": est.tau_int,
        "n": est.n_samples,
        "seed": seed,
        "flag": "" if est.reliable else "unreliable",
    }


def write_csv(path, rows, columns=ESTIMATE_COLUMNS):
    lines = [CSV_VERSION, ",".join(columns)]
    for row in rows:
        lines.append(",".join(fmt(row[c]) for c in columns))
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return text


def write_json(path, obj):
    text = json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return text
