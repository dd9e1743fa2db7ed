"""Experiment kinds: parameter schemas and the artifact files each one emits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .artifacts import csv_artifact, json_artifact
from .contfrac import cf_value, golden_fraction
from .dimension import (EUCLIDEAN, QUASI, ProductSet, QuasiMetric, cantor_intervals,
                        covering_count_experiment, dim_estimate, dyadic, fit_slope)
from .diophantine import (AffineSubspace, BadTestConfig, bad_set_scan, minkowski_solutions,
                          spike_correspondence)
from .errors import ConfigError, DegenerateFit
from .flow import arange_grid, excursions, heaviness_profile, lambda1_series
from .fractal import (bad_interval_sets, build_cf_lattice, dim_lower_estimate,
                      excursion_data, excursion_diagnostics, mass_distribution_check,
                      scale_range, sharpness_witness, spike_witness, verify_claim_cla)
from .geometry import FlowSpec, Grid, x_v

GOLDEN = (math.sqrt(5) - 1) / 2

# -- parameter checking ----------------------------------------------------


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def INT(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"expected an integer, got {v!r}")
    return v


def FLOAT(v):
    if not _is_num(v) or not math.isfinite(v):
        raise ConfigError(f"expected a finite number, got {v!r}")
    return float(v)


def STR(v):
    if not isinstance(v, str):
        raise ConfigError(f"expected a string, got {v!r}")
    return v


def NUMS(v):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"expected a nonempty list of numbers, got {v!r}")
    return [FLOAT(a) for a in v]


def INTS(v):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"expected a nonempty list of integers, got {v!r}")
    return [INT(a) for a in v]


def OPT_NUMS(v):
    return None if v is None else NUMS(v)


def MATRIX(v):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"expected a list of rows, got {v!r}")
    return [NUMS(r) for r in v]


def ALPHA(v):
    """``"golden"``, a list of partial quotients, or a number."""
    if v == "golden":
        return v
    if isinstance(v, list):
        q = INTS(v)
        if any(a < 1 for a in q):
            raise ConfigError("partial quotients must be positive")
        return q
    return FLOAT(v)


def N_SEQ(v):
    if isinstance(v, str):
        return v
    q = INTS(v)
    if any(a < 1 for a in q):
        raise ConfigError("n_seq entries must be positive")
    return q


def choice(*options):
    def check(v):
        if v not in options:
            raise ConfigError(f"expected one of {', '.join(options)}, got {v!r}")
        return v
    return check


def alpha_value(spec, t_max: float):
    """Exact rational for quotient lists and golden (truncated past t_max), else float."""
    if spec == "golden":
        return golden_fraction(t_max)
    if isinstance(spec, list):
        return cf_value(spec)
    return float(spec)


@dataclass(frozen=True)
class Kind:
    schema: dict[str, tuple[object, Callable]]
    run: Callable[[dict, int, int], dict[str, str]]
    uses_seed: bool = False

    def defaults(self) -> dict:
        return {k: d for k, (d, _) in self.schema.items()}

    def resolve(self, overrides: dict) -> dict:
        unknown = sorted(set(overrides) - set(self.schema))
        if unknown:
            raise ConfigError(f"unknown parameter(s): {', '.join(unknown)}")
        params = self.defaults()
        params.update(overrides)
        for k, (_, check) in self.schema.items():
            check(params[k])
        return params


def _config(kind: str, params: dict, seed: int) -> dict:
    return {"kind": kind, "seed": seed, "params": params}


def _try_fit(deltas, counts) -> dict | None:
    try:
        return fit_slope(deltas, counts).to_dict()
    except (DegenerateFit, ValueError):
        return None


# -- kinds -----------------------------------------------------------------


def run_scan_bad(p: dict, seed: int, threads: int) -> dict[str, str]:
    cfg = BadTestConfig(tuple(p["v"]), p["eps"], p["K"],
                        None if p["weights"] is None else tuple(p["weights"]))
    res = bad_set_scan(cfg, p["R"], threads=threads)
    conf = _config("scan-bad", p, seed)
    fit_rows = [(r, d, c) for r, d, c in res.box_counts if r >= p["fit_min_r"]]
    fit = _try_fit([d for _, d, _ in fit_rows], [c for *_, c in fit_rows])
    summary = {"R": res.R, "n": res.n, "survivor_fraction": res.survivor_fraction,
               "corner_counts": {str(k): v for k, v in sorted(res.corner_counts.items())},
               "fit": fit}
    return {"scan.csv": csv_artifact(conf, ["r", "delta", "count"], res.box_counts),
            "scan.json": json_artifact(conf, summary)}


def _dim_set(name: str, level: int) -> ProductSet:
    full, cantor = [(0.0, 1.0)], cantor_intervals(level)
    factors = {"box": [full, full], "segment": [full, [(0.5, 0.5)]],
               "cantor-x": [cantor, full], "cantor-y": [full, cantor],
               "cantor-product": [cantor, cantor]}[name]
    return ProductSet(factors)


def run_dim_estimate(p: dict, seed: int, threads: int) -> dict[str, str]:
    flow = FlowSpec(tuple(p["c"]))
    q = QuasiMetric(flow)
    if q.dim != 2:
        raise ConfigError("dim-estimate sets live in the plane: c needs exactly two positive entries")
    S = _dim_set(p["set"], p["cantor_level"])
    deltas = dyadic(p["lo_exp"], p["hi_exp"], p["base"])
    est = dim_estimate(S, deltas, p["metric"], q)
    conf = _config("dim-estimate", p, seed)
    summary = {"estimate": est.to_dict(), "h_a": q.h_a, "quasi_constant": q.constant}
    return {"dim.csv": csv_artifact(conf, ["delta", "count"], est.rows()),
            "dim.json": json_artifact(conf, summary)}


def run_heaviness(p: dict, seed: int, threads: int) -> dict[str, str]:
    T_list = p["T_list"]
    x = x_v(alpha_value(p["alpha"], max(T_list)))
    rep = heaviness_profile(FlowSpec((1, -1)), x, T_list, p["eta"], threads=threads)
    conf = _config("heaviness", p, seed)
    summary = {"verdict": rep.verdict, "eta": list(rep.eta),
               "rows": [{"T": r.T, "masses": list(r.masses), "min_lambda1": r.min_lambda1}
                        for r in rep.rows]}
    return {"heaviness.csv": csv_artifact(conf, ["T", "i", "mass"], rep.csv_rows()),
            "heaviness.json": json_artifact(conf, summary)}


def run_orbit(p: dict, seed: int, threads: int) -> dict[str, str]:
    x = x_v(alpha_value(p["alpha"], p["t_max"]))
    flow = FlowSpec((1, -1))
    series = lambda1_series(flow, x, arange_grid(0.0, p["t_max"], p["step"]), threads=threads)
    exc = excursions(flow, x, p["threshold"], p["t_max"])
    conf = _config("orbit", p, seed)
    data = {"threshold": p["threshold"], "excursions": exc.to_json(),
            "dips": [{"start": d.start, "end": d.end} for d in exc.dips]}
    return {"orbit.csv": csv_artifact(conf, ["t", "lambda1"], series),
            "excursions.json": json_artifact(conf, data)}


def run_fractal(p: dict, seed: int, threads: int) -> dict[str, str]:
    depth = p["depth"]
    cf = build_cf_lattice(p["n_seq"], depth)
    data = excursion_data(cf)
    approx = bad_interval_sets(cf)
    claims = [verify_claim_cla(cf, i, p["gamma_samples"], p["t_samples"], threads)
              for i in range(1, depth + 1)]
    sharp = [sharpness_witness(cf, i) for i in range(1, depth + 1)]
    lo, hi = scale_range(approx)
    burn_in = hi / 10
    r_list = list(np.geomspace(lo, burn_in, p["mass_scales"])) if lo < burn_in else [lo]
    mass = mass_distribution_check(approx, p["eps"], r_list, p["mass_centers"], burn_in)
    est = dim_lower_estimate(approx, p["per_decade"])
    witness = spike_witness(cf, approx)
    conf = _config("fractal", p, seed)
    report = {"claims": claims, "all_pass": all(c["pass"] for c in claims),
              "sharpness": sharp, "mass_distribution": mass, "spike_witness": witness,
              "dim_slope": est.slope}
    exc = {"excursions": [d.to_dict() for d in data], "diagnostics": excursion_diagnostics(data),
           "q": [str(q) for q in cf.q]}
    return {"excursions.json": json_artifact(conf, exc),
            "intervals.json": json_artifact(conf, approx.to_dict(p["interval_limit"])),
            "cla_report.json": json_artifact(conf, report),
            "dim.csv": csv_artifact(conf, ["delta", "count"], est.rows())}


def correspondence_instances(n: int, count: int, seed: int, eps_range=(0.02, 0.5)):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        v = rng.random(n)
        w = rng.random(n)
        s = float(rng.random())
        eps = float(rng.uniform(*eps_range))
        yield v, w, s, eps


def run_correspondence(p: dict, seed: int, threads: int) -> dict[str, str]:
    n = p["n"]
    cols = [f"v{j}" for j in range(n)] + [f"w{j}" for j in range(n)] + \
        ["s", "eps", "bad_proxy", "spike_count", "consistent"]
    rows = []
    for v, w, s, eps in correspondence_instances(n, p["instances"], seed):
        r = spike_correspondence(v, w, s, eps, p["K"])
        rows.append((*v, *w, s, eps, r["bad_proxy"], r["spike_count"], r["consistent"]))
    conf = _config("correspondence", p, seed)
    summary = {"instances": len(rows), "consistent": sum(1 for r in rows if r[-1]),
               "bad_proxy": sum(1 for r in rows if r[-3])}
    return {"correspondence.csv": csv_artifact(conf, cols, rows),
            "correspondence.json": json_artifact(conf, summary)}


def run_minkowski(p: dict, seed: int, threads: int) -> dict[str, str]:
    try:
        W = AffineSubspace(p["basis"])
    except ValueError as e:
        raise ConfigError(str(e)) from None
    sols = minkowski_solutions(W, p["norm_bound"])
    nn = np.linalg.norm(sols.astype(float), axis=1) if len(sols) else np.zeros(0)
    dist = W.distance(sols) if len(sols) else np.zeros(0)
    cols = [f"k{j}" for j in range(W.d)] + ["norm", "distance", "bound"]
    rows = [(*map(int, k), a, b, 2.0 ** W.d * a ** -W.exponent) for k, a, b in zip(sols, nn, dist)]
    conf = _config("minkowski", p, seed)
    return {"minkowski.csv": csv_artifact(conf, cols, rows),
            "minkowski.json": json_artifact(conf, {"solutions": len(rows), "d": W.d, "ell": W.ell})}


def run_covering(p: dict, seed: int, threads: int) -> dict[str, str]:
    x = x_v(alpha_value(p["alpha"], p["T_max"]))
    y = Grid(x, tuple(p["offset"]))
    flow = FlowSpec((1, -1))
    rows, reports = [], []
    for T in range(0, p["T_max"] + 1):
        rep = covering_count_experiment(flow, y, p["threshold"], p["r"], T)
        rows.append((T, rep.count, rep.bound, rep.I_size, rep.count <= rep.bound))
        reports.append(rep)
    conf = _config("covering", p, seed)
    last = reports[-1].to_dict()
    summary = {"all_within_bound": all(r[-1] for r in rows), "C": last["C"], "r_y": last["r_y"],
               "I": last["I"]}
    return {"covering.csv": csv_artifact(conf, ["T", "count", "bound", "I_size", "within"], rows),
            "covering.json": json_artifact(conf, summary)}


def run_accept(p: dict, seed: int, threads: int) -> dict[str, str]:
    from .acceptance import run_acceptance
    results = run_acceptance(p["criteria"], seed=seed, threads=threads)
    conf = _config("accept", p, seed)
    data = {"criteria": [r.to_dict() for r in results],
            "all_pass": all(r.passed for r in results)}
    return {"acceptance.json": json_artifact(conf, data)}


KINDS: dict[str, Kind] = {
    "scan-bad": Kind({"v": ([GOLDEN], NUMS), "eps": (0.05, FLOAT), "K": (10_000, INT),
                      "R": (10, INT), "weights": (None, OPT_NUMS), "fit_min_r": (3, INT)},
                     run_scan_bad),
    "dim-estimate": Kind({"set": ("box", choice("box", "segment", "cantor-x", "cantor-y",
                                                "cantor-product")),
                          "c": ([1.0, 0.5, -1.5], NUMS), "metric": (QUASI, choice(QUASI, EUCLIDEAN)),
                          "base": (2.0, FLOAT), "lo_exp": (4, INT), "hi_exp": (10, INT),
                          "cantor_level": (14, INT)},
                         run_dim_estimate),
    "heaviness": Kind({"alpha": ("golden", ALPHA), "T_list": ([50, 100, 200], INTS),
                       "eta": ([0.1, 0.05], NUMS)}, run_heaviness),
    "orbit": Kind({"alpha": ([10, 100, 1000, 10000], ALPHA), "t_max": (20.0, FLOAT),
                   "step": (0.05, FLOAT), "threshold": (0.1, FLOAT)}, run_orbit),
    "fractal": Kind({"n_seq": ("geometric:10", N_SEQ), "depth": (4, INT),
                     "gamma_samples": (100, INT), "t_samples": (20, INT), "eps": (0.3, FLOAT),
                     "mass_scales": (12, INT), "mass_centers": (64, INT), "per_decade": (4, INT),
                     "interval_limit": (2000, INT)}, run_fractal),
    "correspondence": Kind({"n": (1, INT), "instances": (1000, INT), "K": (1000, INT)},
                           run_correspondence, uses_seed=True),
    "minkowski": Kind({"basis": ([[1.0, GOLDEN]], MATRIX), "norm_bound": (1000.0, FLOAT)},
                      run_minkowski),
    "covering": Kind({"alpha": ([10, 100, 1000, 10_000, 100_000, 1_000_000], ALPHA),
                      "offset": ([0.3, 0.2], NUMS), "threshold": (0.1, FLOAT),
                      "r": (0.008, FLOAT), "T_max": (20, INT)}, run_covering),
    "accept": Kind({"criteria": (list(range(1, 12)), INTS)}, run_accept, uses_seed=True),
}
