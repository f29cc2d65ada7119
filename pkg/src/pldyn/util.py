"""Small shared helpers: deterministic parallel map, JSON/CSV emit, fits."""

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def ordered_map(fn, items, threads=1):
    """Apply ``fn`` to ``items``, reducing results in item order.

    With ``threads > 1`` the work runs on a thread pool but the returned
    list is always in input order, so output is independent of thread
    count.
    """
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _sanitize(obj):
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
    return obj


def json_dumps_canonical(obj):
    """Serialize deterministically: sorted keys, no whitespace drift,
    infinities encoded as strings so the artifact stays strict JSON."""
    return json.dumps(_sanitize(obj), sort_keys=True, separators=(",", ":"))


def dump_json(path, obj):
    with open(path, "w") as fh:
        fh.write(json_dumps_canonical(obj))
        fh.write("\n")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def fit_slope(ns, logvals):
    """Least-squares slope of ``logvals`` against ``ns``."""
    ns = np.asarray(ns, dtype=float)
    ys = np.asarray(logvals, dtype=float)
    if len(ns) < 2:
        raise ValueError("need at least two samples to fit a slope")
    return float(np.polyfit(ns, ys, 1)[0])


def rng_for(seed, *stream):
    """Deterministic generator for a (seed, stream...) address."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, stream)])
