"""Scenario execution: tasks, per-degree tables and the run summary.

Computation may fan out over degrees; every file is written afterwards from
one ordered pass, so artifacts are byte-identical across runs.  Timing and
cache statistics live on :class:`RunSummary` (and stderr) only.
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cache import ResultCache
from .errors import DalabError
from .essnorm import commutator_series, lemma_identity_residual, schatten_partial_sum
from .fock import dim_h
from .geometry import closedness_witness, tensor_angle_decay
from .scenario import Scenario
from .serialize import canonical_json, csv_text
from .similarity import (
    LinearMapSpec,
    adjoint_intertwiner_residual,
    intertwiner_residual,
    kernel_action_check,
    polar_analysis,
    transport_residual,
)
from .variety import IdealSpec, VarietySpec, check_radical_consistency, hilbert_dimensions, hilbert_polynomial_fit

log = logging.getLogger(__name__)

# dense H_n projectors beyond this size are skipped for the identity check
LEMMA_DIM_LIMIT = 2000
RADICAL_TOL = 1e-8

# CSV column orders are part of the output contract
COLUMNS = {
    "dims": ["degree", "dim_H", "dim_F", "codim"],
    "radical": ["degree", "distance", "dim_quotient", "dim_variety"],
    "angles": ["i", "j", "degree", "cos", "bound"],
    "closedness": ["degree", "sigma_min", "bound", "pass"],
    "similarity": ["degree", "dim", "sigma_min", "sigma_max", "deviation_sum", "partial_sum", "estimates_ok",
                   "kernel_residual", "adjoint_intertwiner", "forward_intertwiner", "transport_residual"],
}


def _p_label(p: float) -> str:
    return format(p, "g")


def essnorm_columns(p_list) -> list:
    cols = ["degree", "norm", "rank", "boundary", "lemma_residual"]
    for p in p_list:
        lab = _p_label(p)
        cols += [f"contrib_p{lab}", f"partial_p{lab}", f"majorant_p{lab}"]
    return cols


def _finite(x):
    # JSON has no inf/nan; encode them as strings
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


@dataclass
class TaskResult:
    name: str
    verdict: str
    summary: dict
    tables: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)


@dataclass
class RunSummary:
    verdicts: dict
    residual_maxima: dict
    version: str
    cache_hits: int = 0
    cache_misses: int = 0
    timing: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(v != "fail" for v in self.verdicts.values())

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "status": "pass" if self.passed else "fail",
            "verdicts": self.verdicts,
            "residual_maxima": self.residual_maxima,
            "tasks": {k: self.results[k].summary for k in self.results},
        }


@contextmanager
def _mapper(parallelism: int):
    if parallelism <= 1:
        yield map
        return
    with ThreadPoolExecutor(max_workers=parallelism) as ex:
        yield ex.map


def _description(s: Scenario, task: str) -> dict:
    raw = {k: v for k, v in s.raw.items() if k not in ("outputs", "cacheDir", "parallelism", "tasks")}
    return {"task": task, "scenario": raw}


# -- tasks ------------------------------------------------------------------

def task_dims(s: Scenario, mapper) -> dict:
    degrees = list(range(s.max_degree + 1))
    dims = list(mapper(lambda n: hilbert_dimensions(s.subject, [n], s.rank_threshold)[0], degrees))
    rows = [{"degree": n, "dim_H": dim_h(s.d, n), "dim_F": f, "codim": dim_h(s.d, n) - f}
            for n, f in zip(degrees, dims)]
    return {"verdict": "pass", "summary": {"dims": dims}, "tables": {"dims": rows}, "residuals": {}}


def task_hilbert(s: Scenario, mapper) -> dict:
    dims = list(mapper(lambda n: hilbert_dimensions(s.subject, [n], s.rank_threshold)[0],
                       range(s.max_degree + 1)))
    fit = hilbert_polynomial_fit(dims)
    dim = fit.dimension
    lead = fit.coefficients[-1] if fit.coefficients else 0
    h = lead * math.factorial(dim - 1) if dim else 0
    summary = {
        "dims": dims,
        "hilbert_polynomial": [str(c) for c in fit.coefficients],
        "h": str(h),
        "dimI": dim,
        "stabilization_degree": fit.stabilization_degree,
    }
    tables, residuals, verdict = {}, {}, "pass"
    if s.companion is not None:
        pair = (s.subject, s.companion)
        ideal = next((x for x in pair if isinstance(x, IdealSpec)), None)
        variety = next((x for x in pair if isinstance(x, VarietySpec)), None)
        if ideal is not None and variety is not None:
            rep = check_radical_consistency(ideal, variety, s.max_degree, s.rank_threshold)
            tables["radical"] = [
                {"degree": n, "distance": dist, "dim_quotient": a, "dim_variety": b}
                for n, dist, a, b in zip(rep.degrees, rep.distances, rep.dims_quotient, rep.dims_variety)
            ]
            mismatch = rep.first_mismatch(RADICAL_TOL)
            summary["radical_first_mismatch"] = mismatch
            residuals["radical_distance"] = max(rep.distances)
            if mismatch is not None:
                verdict = "fail"
    return {"verdict": verdict, "summary": summary, "tables": tables, "residuals": residuals}


def task_angles(s: Scenario, mapper) -> dict:
    reports = tensor_angle_decay(s.subject.components, s.max_degree)
    rows = [r for rep in reports for r in rep.rows()]
    ok = all(rep.bound_ok for rep in reports)
    summary = {"pairs": [{"i": r.pair[0], "j": r.pair[1], "cos": r.cos, "bound_ok": r.bound_ok} for r in reports]}
    return {"verdict": "pass" if ok else "fail", "summary": summary, "tables": {"angles": rows}, "residuals": {}}


def _lemma_residual(s: Scenario, i: int, j: int, n: int):
    if dim_h(s.d, n + 1) > LEMMA_DIM_LIMIT:
        return None
    return lemma_identity_residual(s.subject, i, j, n, s.rank_threshold)


def task_essnorm(s: Scenario, mapper) -> dict:
    tables, pairs_summary = {}, []
    worst = 0.0
    verdict = "pass"
    for i, j in s.commutator_pairs:
        series = commutator_series(s.subject, i, j, s.max_degree, s.rank_threshold, mapper=mapper)
        lemma = list(mapper(lambda n: _lemma_residual(s, i, j, n), series.degrees))
        reports = {p: schatten_partial_sum(series, p) for p in s.p_list}
        rows = []
        for n in series.degrees:
            row = {"degree": n, "norm": series.norms[n], "rank": series.ranks[n],
                   "boundary": n in series.boundary_degrees, "lemma_residual": lemma[n]}
            for p, rep in reports.items():
                lab = _p_label(p)
                row[f"contrib_p{lab}"] = rep.contributions[n]
                row[f"partial_p{lab}"] = rep.partial_sums[n]
                row[f"majorant_p{lab}"] = rep.majorant[n]
            rows.append(row)
        tables[f"essnorm_{i}_{j}"] = rows
        checked = [x for x in lemma if x is not None]
        lmax = max(checked) if checked else None
        if lmax is not None:
            worst = max(worst, lmax)
        entry = {"i": i, "j": j, "lemma_residual_max": lmax,
                 "lemma_degrees_checked": len(checked), "schatten": {}}
        for p, rep in reports.items():
            entry["schatten"][_p_label(p)] = {
                "partial_sum": rep.partial_sums[-1],
                "contribution_exponent": _finite(rep.decay_exponent),
                "convergence": rep.convergence,
                "majorant_dominated": rep.majorant_dominated,
                "heuristic": True,
            }
            if rep.majorant_dominated is False:
                verdict = "fail"
        fit = reports[s.p_list[0]].decay
        entry["decay_fit"] = None if fit is None else {
            "gamma": _finite(fit.gamma), "delta": _finite(fit.delta), "rho": _finite(fit.rho),
            "critical_p": _finite(fit.critical_p), "heuristic": True,
        }
        pairs_summary.append(entry)
        if lmax is not None and lmax > s.tolerance:
            verdict = "fail"
    return {"verdict": verdict, "summary": {"pairs": pairs_summary}, "tables": tables,
            "residuals": {"lemma_identity": worst}}


def task_closedness(s: Scenario, mapper) -> dict:
    rep = closedness_witness(s.subject.components, s.max_degree)
    return {"verdict": "pass" if all(rep.passed) else "fail", "summary": rep.summary(),
            "tables": {"closedness": rep.rows()}, "residuals": {}}


def task_similarity(s: Scenario, mapper) -> dict:
    spec = LinearMapSpec(s.map_matrix, VarietySpec(components=s.map_source), s.subject)
    rtol = s.rank_threshold
    rep = polar_analysis(spec, s.max_degree, rtol)
    points = [c.basis[:, 0] for c in spec.source.components]
    coords = np.eye(spec.target.d)

    def per_degree(n):
        kern = max(kernel_action_check(spec, lam, n, rtol) for lam in points)
        if n >= s.max_degree:
            return kern, None, None, None
        adj = max(adjoint_intertwiner_residual(spec, coords[a], n, rtol) for a in range(spec.target.d))
        fwd = max(intertwiner_residual(spec, np.eye(spec.source.d)[a], n, rtol) for a in range(spec.source.d))
        tr = max(transport_residual(spec, coords[a], coords[b], n, rtol)
                 for a in range(spec.target.d) for b in range(spec.target.d))
        return kern, adj, fwd, tr

    extra = list(mapper(per_degree, rep.degrees))
    rows = rep.rows()
    for row, (kern, adj, fwd, tr) in zip(rows, extra):
        row.update(kernel_residual=kern, adjoint_intertwiner=adj, forward_intertwiner=fwd, transport_residual=tr)
    kmax = max(e[0] for e in extra)
    amax = max(e[1] for e in extra if e[1] is not None)
    fmax = max(e[2] for e in extra if e[2] is not None)
    summary = {k: _finite(v) if isinstance(v, float) else v for k, v in rep.summary().items()}
    summary["forward_intertwiner_max"] = fmax
    summary["forward_intertwiner_note"] = "informational; exact only when A* maps the target into the source"
    ok = kmax <= s.tolerance and amax <= s.tolerance
    return {"verdict": "pass" if ok else "fail", "summary": summary, "tables": {"similarity": rows},
            "residuals": {"kernel_action": kmax, "adjoint_intertwiner": amax}}


TASK_FUNCS = {
    "dims": task_dims,
    "hilbert": task_hilbert,
    "angles": task_angles,
    "essnorm": task_essnorm,
    "closedness": task_closedness,
    "similarity": task_similarity,
}


def _table_columns(name: str, s: Scenario) -> list:
    return essnorm_columns(s.p_list) if name.startswith("essnorm_") else COLUMNS[name]


def run_scenario(s: Scenario, out_dir=None, cache_dir=None) -> RunSummary:
    """Run every requested task, then write CSV tables and ``summary.json``."""
    cache = ResultCache(cache_dir if cache_dir is not None else s.cache_dir)
    out = Path(out_dir or s.out_dir or "dalab-out")
    results, timing = {}, {}
    try:
        with _mapper(s.parallelism) as mapper:
            for name in s.expanded_tasks:
                t0 = time.perf_counter()
                payload = cache.fetch(_description(s, name), lambda: TASK_FUNCS[name](s, mapper))
                timing[name] = time.perf_counter() - t0
                results[name] = TaskResult(name, payload["verdict"], payload["summary"],
                                           payload["tables"], payload["residuals"])
    except DalabError as exc:
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(
            json.dumps({"version": __version__, "status": "incomplete", "error": f"{name}: {exc}"},
                       indent=2, sort_keys=True) + "\n", encoding="utf-8")
        raise type(exc)(f"task {name}: {exc}") from exc
    summary = RunSummary(
        verdicts={k: r.verdict for k, r in results.items()},
        residual_maxima={f"{k}.{rk}": rv for k, r in results.items() for rk, rv in r.residuals.items()},
        version=__version__,
        cache_hits=cache.hits,
        cache_misses=cache.misses,
        timing=timing,
        results=results,
    )
    out.mkdir(parents=True, exist_ok=True)
    for name, r in results.items():
        for tname, rows in r.tables.items():
            (out / f"{tname}.csv").write_text(csv_text(rows, _table_columns(tname, s)), encoding="utf-8")
    (out / "summary.json").write_text(json.dumps(summary.to_json(), indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    log.info("cache hits %d, misses %d; timing %s", cache.hits, cache.misses,
             canonical_json({k: round(v, 3) for k, v in timing.items()}))
    return summary
