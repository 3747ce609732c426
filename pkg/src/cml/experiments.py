"""Named experiments: each reads a JSON config and returns an ExperimentReport."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .arith import ComplexRational
from .errors import MAX_TRUNCATION, InvalidInputError, ResourceLimitError
from .gelfand import (
    enumerate_idempotents,
    exp_obstruction,
    natural_spectrum_gap,
    separation_limits,
    spectral_radius_upper,
    transform_indicator_holds,
    trigpoly_spectrum,
)
from .lacunary import (
    CoeffRule,
    IndexSet,
    LacunarySequence,
    RieszProductSpec,
    common_prefix_length,
    convolve_riesz,
    riesz_coefficient,
    riesz_spec_from_json,
    riesz_truncation_to_trigpoly,
    sierpinski_member,
    tilde_set,
)
from .measures import (
    TrigPolynomial,
    discrete_to_json,
    measure_from_json,
    parse_coefficient,
    scalar_to_json,
    trigpoly_to_json,
)
from .sequences import (
    SequenceWindow,
    ap_falsify_step,
    bounded_log,
    density_gap_report,
    find_epsilon_periods,
    wiener_report,
)

EXPERIMENTS = ("riesz", "nonsep", "gap", "wiener", "ap", "idem", "spectrum", "obstruct", "filterlimit")
VERDICTS = ("pass", "fail", "inconclusive")
ORACLE_MAX_K = 8


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict
    window: int | None = None
    trunc: int | None = None
    eps: float | None = None
    delta: float | None = None
    parallel: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidInputError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if not isinstance(self.params, dict):
            raise InvalidInputError("config must be a JSON object")
        for name in ("eps", "delta"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise InvalidInputError(f"{name} must be positive")
        if self.window is not None and self.window < 0:
            raise InvalidInputError("window must be nonnegative")
        if self.trunc is not None and not 0 <= self.trunc <= MAX_TRUNCATION:
            raise ResourceLimitError(f"K={self.trunc} exceeds the truncation cap {MAX_TRUNCATION}")

    @classmethod
    def load(cls, experiment: str, path, **overrides) -> "ExperimentConfig":
        try:
            params = json.loads(Path(path).read_text())
        except OSError as exc:
            raise InvalidInputError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"config {path} is not valid JSON: {exc}") from exc
        return cls(experiment, params, **overrides)

    def get(self, key, default=None):
        override = {"window": self.window, "K": self.trunc, "eps": self.eps, "delta": self.delta}.get(key)
        if override is not None:
            return override
        return self.params.get(key, default)

    def require(self, key):
        value = self.get(key)
        if value is None:
            raise InvalidInputError(f"config is missing {key!r}")
        return value


@dataclass
class ExperimentReport:
    experiment: str
    inputs: dict
    derived: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)  # (name, verdict, detail)
    wall_time: float | None = None
    table: list | None = None  # preferred CSV rows, if any

    def check(self, name: str, ok: bool | None, detail=None):
        verdict = "inconclusive" if ok is None else ("pass" if ok else "fail")
        self.checks.append((name, verdict, detail))

    @property
    def verdict(self) -> str:
        if any(v == "fail" for _, v, _ in self.checks):
            return "fail"
        if self.checks and all(v == "inconclusive" for _, v, _ in self.checks):
            return "inconclusive"
        return "pass"

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "inputs": self.inputs,
            "derived": self.derived,
            "checks": [{"name": n, "verdict": v, "detail": d} for n, v, d in self.checks],
            "verdict": self.verdict,
            "wall_time": self.wall_time,
        }


def _sequence_for(spec_json: dict, K: int | None) -> dict:
    """Copy of a Riesz spec description with K overridden (and a power base
    lengthened to cover it)."""
    spec_json = dict(spec_json)
    if K is not None:
        spec_json["K"] = K
        base = dict(spec_json.get("base", {}))
        if base.get("kind") == "power":
            base["K"] = max(int(base.get("K", 0)), K)
        spec_json["base"] = base
    return spec_json


def _fraction_str(x) -> str:
    return str(Fraction(x))


# --------------------------------------------------------------------------


def run_riesz(cfg: ExperimentConfig) -> ExperimentReport:
    spec_json = _sequence_for(cfg.require("spec"), cfg.trunc)
    spec = riesz_spec_from_json(spec_json)
    W = int(cfg.get("window", spec.seq.partial_sum(spec.K)))
    report = ExperimentReport("riesz", {"spec": spec_json, "window": W})
    support = tilde_set(spec.active(), spec.seq, W)
    table = [{"n": n, "coefficient": _fraction_str(riesz_coefficient(spec, n))} for n in support]
    report.derived = {"support_size": len(support), "coefficients": table}
    report.table = table
    if spec.K <= ORACLE_MAX_K:
        oracle = riesz_truncation_to_trigpoly(spec)
        expected = {n: c for n, c in oracle.coeffs.items() if abs(n) <= W}
        got = {n: ComplexRational(riesz_coefficient(spec, n)) for n in support}
        got = {n: c for n, c in got.items() if not c.is_zero()}
        report.check("oracle_equivalence", got == expected, f"{len(expected)} coefficients compared")
    else:
        report.check("oracle_equivalence", None, f"K={spec.K} above oracle limit {ORACLE_MAX_K}")
    return report


def run_nonsep(cfg: ExperimentConfig) -> ExperimentReport:
    branches = cfg.require("branches")
    if not (isinstance(branches, list) and len(branches) == 2 and all(isinstance(b, str) for b in branches)):
        raise InvalidInputError("branches must be a list of two binary strings")
    b1, b2 = branches
    if any(set(b) - {"0", "1"} or not b for b in branches):
        raise InvalidInputError("branches must be nonempty binary strings")
    depth = min(len(b1), len(b2))
    d = common_prefix_length(b1, b2)
    if d >= depth:
        raise InvalidInputError("branches must differ within their common length")
    A1, A2 = sierpinski_member(b1, len(b1)), sierpinski_member(b2, len(b2))
    K = max(max(A1), max(A2))
    if cfg.trunc is not None and cfg.trunc < K:
        raise InvalidInputError(f"K={cfg.trunc} is below the largest index {K}")
    K = cfg.trunc or K
    if K > MAX_TRUNCATION:
        raise ResourceLimitError(f"branch codes reach index {K}, above the cap {MAX_TRUNCATION}")
    base = int(cfg.get("base", 4))
    seq = LacunarySequence.power(base, K)
    W = int(cfg.get("window", seq.partial_sum(K)))
    s1 = RieszProductSpec(seq, CoeffRule.indicator(A1), K)
    s2 = RieszProductSpec(seq, CoeffRule.indicator(A2), K)
    report = ExperimentReport("nonsep", {"branches": [b1, b2], "base": base, "K": K, "window": W})

    shared = A1 & A2
    t1, t2 = set(tilde_set(A1, seq, W)), set(tilde_set(A2, seq, W))
    meet = sorted(t1 & t2)
    expected = tilde_set(shared, seq, W)
    conv = convolve_riesz(s1, s2, W)
    report.derived = {
        "A1": list(A1),
        "A2": list(A2),
        "common_prefix": d,
        "shared_indices": list(shared),
        "support_intersection": meet,
        "convolution": trigpoly_to_json(conv.poly),
        "full_support_finite": conv.full_support_finite,
    }
    report.check("shared_indices_equal_prefix", len(shared) == d, f"|A1 & A2| = {len(shared)}, prefix {d}")
    report.check("support_intersection_is_shared_tilde", meet == expected)
    report.check("convolution_support_is_shared_tilde", sorted(conv.poly.support()) == expected)
    for label, spec in (("factor1", s1), ("factor2", s2)):
        gap = natural_spectrum_gap(spec, W)
        report.derived[f"gap_{label}"] = gap.as_dict()
        if gap.gap is None:
            report.check(f"gap_witness_{label}", None, gap.precondition)
        else:
            report.check(f"gap_witness_{label}", gap.gap >= 1.0, f"distance {gap.gap}")
    return report


def load_corpus(cfg: ExperimentConfig) -> list[dict]:
    if "corpus" in cfg.params:
        corpus = cfg.params["corpus"]
    elif "corpus_file" in cfg.params:
        try:
            corpus = json.loads(Path(cfg.params["corpus_file"]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot load corpus: {exc}") from exc
    elif cfg.params.get("bundled"):
        corpus = bundled_corpus()
    else:
        raise InvalidInputError("gap config needs 'corpus', 'corpus_file' or 'bundled'")
    if isinstance(corpus, dict):
        corpus = corpus.get("candidates", [])
    if not isinstance(corpus, list) or not corpus:
        raise InvalidInputError("gap corpus is empty")
    return corpus


def bundled_corpus() -> list[dict]:
    text = resources.files("cml").joinpath("data/gap_corpus.json").read_text()
    return json.loads(text)["candidates"]


def _gap_one(args):
    entry, W, eps, delta, p, idx = args
    m = measure_from_json(entry)
    name = entry.get("name", f"candidate_{idx}")
    r = density_gap_report(m, SequenceWindow.step(-W, W), eps, delta, p, name=name)
    return r


def run_gap(cfg: ExperimentConfig) -> ExperimentReport:
    corpus = load_corpus(cfg)
    W = int(cfg.get("window", 200))
    eps, delta, p = float(cfg.get("eps", 0.1)), float(cfg.get("delta", 0.1)), int(cfg.get("p", 8))
    # parse everything up front so bad input fails before any work
    for entry in corpus:
        measure_from_json(entry)
    jobs = [(entry, W, eps, delta, p, i) for i, entry in enumerate(corpus)]
    if cfg.parallel and len(jobs) > 1:
        with ProcessPoolExecutor() as pool:
            reports = list(pool.map(_gap_one, jobs))
    else:
        reports = [_gap_one(j) for j in jobs]
    best = min(reports, key=lambda r: r.sup_distance)
    report = ExperimentReport(
        "gap", {"window": W, "eps": eps, "delta": delta, "p": p, "candidates": len(corpus)}
    )
    report.derived = {
        "corpus_minimum": best.sup_distance,
        "corpus_minimum_candidate": best.candidate,
        "candidates": [dict(r.rows()) for r in reports],
    }
    report.table = [
        {"candidate": r.candidate, "sup_distance": r.sup_distance, "argmax_n": r.argmax_n, "pipeline_ran": r.pipeline_ran}
        for r in reports
    ]
    report.check("no_candidate_below_delta", best.sup_distance >= delta, f"minimum {best.sup_distance}")
    if "min_expected" in cfg.params:
        floor = float(cfg.params["min_expected"])
        report.check("corpus_minimum_at_least", best.sup_distance >= floor, f"floor {floor}")
    for r in reports:
        if r.pipeline_ran:
            report.check(f"lower_bound_holds:{r.candidate}", r.eq2_holds)
    return report


def run_wiener(cfg: ExperimentConfig) -> ExperimentReport:
    m = measure_from_json(cfg.require("measure"))
    Ns = cfg.require("Ns")
    if not isinstance(Ns, list) or not all(isinstance(N, int) and N >= 0 for N in Ns):
        raise InvalidInputError("Ns must be a list of nonnegative integers")
    w = wiener_report(m, Ns)
    report = ExperimentReport("wiener", {"measure": cfg.params["measure"], "Ns": Ns})
    rows = w.rows()
    report.derived = {"limit_claim": w.limit_claim, "rows": rows}
    report.table = rows
    report.check("errors_non_increasing", w.decreasing, w.verdicts)
    if "tolerance" in cfg.params:
        tol = float(cfg.params["tolerance"])
        report.check("final_error_within_tolerance", float(w.abs_errors[-1]) <= tol, f"tolerance {tol}")
    return report


def run_ap(cfg: ExperimentConfig) -> ExperimentReport:
    mode = cfg.get("mode", "step")
    eps = float(cfg.get("eps", 0.9))
    report = ExperimentReport("ap", {"mode": mode, "eps": eps})
    if mode == "step":
        ps = cfg.get("p", [8])
        ps = ps if isinstance(ps, list) else [ps]
        report.inputs["p"] = ps
        rows = []
        for p in ps:
            f = ap_falsify_step(int(p), eps)
            rows.append({"p": p, "witnesses": len(f.witnesses), "succeeded": f.succeeded})
            report.check(f"step_not_ap:p={p}", f.succeeded)
        report.derived = {"falsifications": rows}
        report.table = rows
    elif mode == "measure":
        m = measure_from_json(cfg.require("measure"))
        W = int(cfg.get("window", 60))
        p = int(cfg.require("p"))
        s = SequenceWindow.from_measure(m, -W, W)
        search = find_epsilon_periods(s, eps, p)
        rows = [
            {"start": c.start, "stop": c.stop, "period": c.period, "witnesses": len(c.witnesses)}
            for c in search.intervals
        ]
        report.inputs.update({"measure": cfg.params["measure"], "window": W, "p": p})
        report.derived = {"intervals": rows}
        report.table = rows
        report.check("every_interval_has_period", search.all_verified)
    elif mode == "log":
        m = measure_from_json(cfg.require("measure"))
        W = int(cfg.get("window", 60))
        sep = float(cfg.require("separation"))
        s = SequenceWindow.from_measure(m, -W, W)
        b = bounded_log(s, sep)
        residual = float(np.max(np.abs(np.exp(b.values) - s.values)))
        report.inputs.update({"measure": cfg.params["measure"], "window": W, "separation": sep})
        report.derived = {"max_residual": residual, "max_real": float(np.max(b.values.real))}
        report.check("exp_log_round_trip", residual <= float(cfg.get("tolerance", 1e-9)))
    else:
        raise InvalidInputError(f"unknown ap mode {mode!r}")
    return report


def run_idem(cfg: ExperimentConfig) -> ExperimentReport:
    q_max = int(cfg.get("q_max", cfg.get("q", 2)))
    q_min = int(cfg.get("q_min", q_max if "q" in cfg.params and "q_max" not in cfg.params else 1))
    if q_min < 1 or q_max < q_min:
        raise InvalidInputError("need 1 <= q_min <= q_max")
    report = ExperimentReport("idem", {"q_min": q_min, "q_max": q_max})
    rows = []
    for q in range(q_min, q_max + 1):
        measures = enumerate_idempotents(q)
        masks = [tuple(r for r in range(q) if mask >> r & 1) for mask in range(2**q)]
        indicator_ok = len(measures) == len(masks) and all(
            transform_indicator_holds(mu, q, S) for mu, S in zip(measures, masks)
        )
        rows.append({"q": q, "count": len(measures), "idempotent": True, "transform_indicator": indicator_ok})
        report.check(f"count:q={q}", len(measures) == 2**q, f"{len(measures)} measures")
        report.check(f"idempotent:q={q}", True, "exact self-convolution")
        report.check(f"transform_indicator:q={q}", indicator_ok, f"|n| <= {4 * q}")
        if q <= 2:
            report.derived[f"measures_q{q}"] = [discrete_to_json(mu) for mu in measures]
    report.derived["summary"] = rows
    report.table = rows
    return report


def run_spectrum(cfg: ExperimentConfig) -> ExperimentReport:
    kind = cfg.require("kind")
    report = ExperimentReport("spectrum", {"kind": kind})
    if kind == "trigpoly":
        rows = cfg.require("trigpoly")
        P = TrigPolynomial((r["n"], parse_coefficient(r)) for r in rows)
        s = trigpoly_spectrum(P)
        report.inputs["trigpoly"] = rows
        report.derived = s.as_dict()
        report.check("contains_zero", any(p == 0 for p in s.points))
    elif kind == "radius":
        m = measure_from_json({"atoms": cfg.require("atoms")}).discrete
        M = int(cfg.get("M", 3))
        b = spectral_radius_upper(m, M)
        report.inputs.update({"atoms": cfg.params["atoms"], "M": M})
        report.derived = {
            "enclosures": [{"lo": lo, "hi": hi} for lo, hi in b.enclosures],
            "running_min": b.running_min,
        }
        report.table = [
            {"m": k + 1, "lo": lo, "hi": hi, "running_min": r}
            for k, ((lo, hi), r) in enumerate(zip(b.enclosures, b.running_min))
        ]
        report.check("running_min_non_increasing", all(y <= x for x, y in zip(b.running_min, b.running_min[1:])))
    elif kind == "riesz":
        spec_json = _sequence_for(cfg.require("spec"), cfg.trunc)
        spec = riesz_spec_from_json(spec_json)
        W = int(cfg.get("window", 200))
        g = natural_spectrum_gap(spec, W)
        report.inputs.update({"spec": spec_json, "window": W})
        report.derived = g.as_dict()
        report.check("gap_witness", None if g.gap is None else g.gap >= 1.0, g.precondition)
    else:
        raise InvalidInputError(f"unknown spectrum kind {kind!r}")
    return report


def run_obstruct(cfg: ExperimentConfig) -> ExperimentReport:
    alpha = float(cfg.require("alpha"))
    B = float(cfg.get("B", 10))
    M = int(cfg.get("M", 50))
    w = exp_obstruction(alpha, B, M)
    report = ExperimentReport("obstruct", {"alpha": alpha, "B": B, "M": M})
    report.derived = w.as_dict()
    recomputed = abs(w.m * alpha - 2 * math.pi * w.s)
    report.check("drift_positive", w.drift > 0)
    report.check("growth_reaches_B", w.k * w.drift >= B, f"k*drift = {w.k * w.drift}")
    report.check("drift_matches_float_recompute", abs(recomputed - w.drift) <= 1e-9, f"float value {recomputed}")
    return report


def run_filterlimit(cfg: ExperimentConfig) -> ExperimentReport:
    base = int(cfg.get("base", 4))
    if "X" in cfg.params:
        X = IndexSet(tuple(cfg.params["X"]), infinite=True)
        Y = IndexSet(tuple(cfg.require("Y")), infinite=True)
    else:
        bx, by = cfg.require("x_branch"), cfg.require("y_branch")
        AX, AY = sierpinski_member(bx, len(bx)), sierpinski_member(by, len(by))
        shared = AX & AY
        X, Y = AX - shared, AY - shared
    if not len(X) or not len(Y):
        raise InvalidInputError("X and Y must be nonempty")
    K = max(max(X), max(Y))
    if K > MAX_TRUNCATION:
        raise ResourceLimitError(f"indices reach {K}, above the cap {MAX_TRUNCATION}")
    tol = float(cfg.get("tolerance", 1e-9))
    seq = LacunarySequence.power(base, K)
    along_x, along_y = separation_limits(seq, X, Y, K, tol)
    report = ExperimentReport("filterlimit", {"base": base, "X": list(X), "Y": list(Y), "tolerance": tol})
    report.derived = {"along_X": along_x.as_dict(), "along_Y": along_y.as_dict()}
    report.check("limit_along_X_is_half", along_x.converged and along_x.limit == Fraction(1, 2))
    report.check("limit_along_Y_is_zero", along_y.converged and along_y.limit == 0)
    report.check("separated", along_x.converged and along_y.converged and along_x.limit != along_y.limit)
    return report


RUNNERS = {
    "riesz": run_riesz,
    "nonsep": run_nonsep,
    "gap": run_gap,
    "wiener": run_wiener,
    "ap": run_ap,
    "idem": run_idem,
    "spectrum": run_spectrum,
    "obstruct": run_obstruct,
    "filterlimit": run_filterlimit,
}


def run(cfg: ExperimentConfig, timing: bool = False) -> ExperimentReport:
    start = time.perf_counter()
    report = RUNNERS[cfg.experiment](cfg)
    if timing:
        report.wall_time = time.perf_counter() - start
    return report


# --------------------------------------------------------------------------
# serialization


def _jsonable(x):
    if isinstance(x, bool) or x is None or isinstance(x, (int, str, float)):
        return x
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (ComplexRational,)) or hasattr(x, "to_approx"):
        return scalar_to_json(x)
    if hasattr(x, "_fields") and hasattr(x, "err"):  # ApproxReal
        return {"value": x.value, "err": x.err}
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):  # numpy scalar
        return _jsonable(x.item())
    return str(x)


def _dump(x, indent: int) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if x is None:
        return "null"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            return json.dumps(str(x))
        return format(x, ".17g")
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {_dump(v, indent + 1)}" for k, v in x.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if not x:
        return "[]"
    items = [f"{inner}{_dump(v, indent + 1)}" for v in x]
    return "[\n" + ",\n".join(items) + "\n" + pad + "]"


def to_json(report: ExperimentReport) -> str:
    """Deterministic JSON: insertion-ordered keys, floats at 17 significant digits."""
    return _dump(_jsonable(report.as_dict()), 0) + "\n"


def _flatten(prefix: str, x, out: list):
    if isinstance(x, dict):
        for k, v in x.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(x, list):
        for i, v in enumerate(x):
            _flatten(f"{prefix}.{i}", v, out)
    else:
        out.append((prefix, x))


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def to_csv(report: ExperimentReport) -> str:
    """Tabular experiments get their table; the rest a quantity,value listing."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if report.table:
        rows = _jsonable(report.table)
        header = list(rows[0].keys())
        writer.writerow(header)
        for row in rows:
            flat = []
            for h in header:
                v = row.get(h)
                if isinstance(v, (dict, list)):
                    v = json.dumps(v, sort_keys=False)
                flat.append(_csv_cell(v))
            writer.writerow(flat)
        for name, verdict, _ in report.checks:
            writer.writerow([f"# check {name}", verdict] + [""] * (len(header) - 2))
        return buf.getvalue()
    writer.writerow(["quantity", "value"])
    out: list = []
    _flatten("", _jsonable(report.derived), out)
    for k, v in out:
        writer.writerow([k, _csv_cell(v)])
    for name, verdict, _ in report.checks:
        writer.writerow([f"check.{name}", verdict])
    writer.writerow(["verdict", report.verdict])
    return buf.getvalue()
