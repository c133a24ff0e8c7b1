"""Command line: run experiment configs, list experiment kinds, print the version.

Exit status: 0 success, 1 unexpected failure, 2 config/schema error,
3 resource cap exceeded, 4 infeasible or unsupported parameters.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import __version__
from .entropy import SubsetSpec, bowen_entropy_estimate, topological_entropy_estimate
from .errors import DomainError, ResourceLimitError, UnsupportedError
from .generic import (
    brin_katok_value,
    count_A_nm_words,
    generic_point_certificate,
    smb_value,
    stirling_bound,
)
from .group import AmenableGroup, FolnerSequence, growth_report, temperedness_report
from .measure import DEFAULT_SEED, Bernoulli, InvariantMeasure, Markov, sample_configuration
from .shift import Cylinder, Subshift

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_RESOURCE, EXIT_INFEASIBLE = 0, 1, 2, 3, 4


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# config schema -----------------------------------------------------------------


class GroupConfig(_Strict):
    kind: Literal["Z", "Z2", "Z3", "heisenberg"] = "Z"
    family: Literal["boxes"] = "boxes"


class SubshiftConfig(_Strict):
    type: Literal["full", "golden_mean", "sft"] = "full"
    alphabet_size: int = Field(2, ge=2)
    # each pattern is a list of [element, symbol]; elements are ints or coordinate lists
    forbidden: List[List[Tuple[Union[int, List[int]], int]]] = []

    @model_validator(mode="after")
    def _check(self):
        if self.type != "sft" and self.forbidden:
            raise ValueError("forbidden patterns are only allowed with type 'sft'")
        if self.type == "golden_mean" and self.alphabet_size != 2:
            raise ValueError("the golden mean shift is binary")
        return self


class MarkovConfig(_Strict):
    P: List[List[float]]
    pi: Optional[List[float]] = None  # computed when omitted


class MeasureConfig(_Strict):
    bernoulli: Optional[List[float]] = None
    markov: Optional[MarkovConfig] = None

    @model_validator(mode="after")
    def _check(self):
        if (self.bernoulli is None) == (self.markov is None):
            raise ValueError("measure needs exactly one of 'bernoulli' and 'markov'")
        return self


class TemperednessParams(_Strict):
    N: int = Field(ge=2)
    method: Literal["auto", "axes", "sets"] = "auto"
    cap: int = Field(10**8, ge=1)


class GrowthParams(_Strict):
    n_lo: int = Field(2, ge=2)
    n_hi: int = Field(ge=2)


class TopologicalParams(_Strict):
    n_schedule: List[int] = Field(min_length=1)
    epsilon: float = Field(0.5, gt=0)


class BowenParams(_Strict):
    n_max_schedule: List[int] = Field(min_length=1)
    N: Optional[int] = Field(None, ge=1)  # None: N = n_max
    epsilon: float = Field(0.5, gt=0)
    solver: Literal["exact", "greedy"] = "exact"
    tol: float = Field(1e-3, gt=0)
    cap: int = Field(2 * 10**5, ge=1)


class SmbParams(_Strict):
    n_schedule: List[int] = Field(min_length=1)


class BrinKatokParams(_Strict):
    n_schedule: List[int] = Field(min_length=1)
    deltas: List[float] = Field(min_length=1)


class ClaimRateParams(_Strict):
    n_schedule: List[int] = Field(min_length=1)
    m: Optional[int] = Field(None, ge=1)
    tolerance: Optional[float] = Field(None, ge=0)
    L: Optional[int] = Field(None, ge=1)
    epsilon: float = Field(0.5, gt=0)
    method: Literal["auto", "binomial", "enumerate"] = "auto"

    @model_validator(mode="after")
    def _one_of(self):
        if (self.m is None) == (self.tolerance is None):
            raise ValueError("give exactly one of 'm' and 'tolerance'")
        return self


class StirlingParams(_Strict):
    n: List[int] = Field(min_length=1)
    q: List[float] = Field(min_length=1)
    a: List[int] = Field(min_length=1)


class CertificateParams(_Strict):
    m_max: int = Field(ge=1)
    n_schedule: List[int] = Field(min_length=1)
    L: Optional[int] = Field(None, ge=1)


_PARAMS = {
    "temperedness": TemperednessParams,
    "growth": GrowthParams,
    "topological_entropy": TopologicalParams,
    "bowen_entropy": BowenParams,
    "smb": SmbParams,
    "brin_katok": BrinKatokParams,
    "claim_rate": ClaimRateParams,
    "stirling": StirlingParams,
    "generic_certificate": CertificateParams,
}


class ExperimentConfig(_Strict):
    id: str = Field(pattern=r"^[A-Za-z0-9_.-]+$")
    kind: Literal[
        "temperedness",
        "growth",
        "topological_entropy",
        "bowen_entropy",
        "smb",
        "brin_katok",
        "claim_rate",
        "stirling",
        "generic_certificate",
    ]
    group: GroupConfig = GroupConfig()
    subshift: Optional[SubshiftConfig] = None
    measure: Optional[MeasureConfig] = None
    params: Dict[str, Any]
    seeds: List[int] = [DEFAULT_SEED]
    units: Literal["nats", "bits"] = "nats"
    output_dir: str = "results"

    @field_validator("seeds")
    @classmethod
    def _seeds(cls, v):
        if not v or any(s < 0 for s in v):
            raise ValueError("seeds must be a nonempty list of nonnegative integers")
        return v

    @model_validator(mode="after")
    def _params(self):
        model = _PARAMS[self.kind]
        object.__setattr__(self, "params", model.model_validate(self.params).model_dump())
        if self.kind in ("smb", "brin_katok", "claim_rate", "generic_certificate") and self.measure is None:
            raise ValueError(f"experiment '{self.kind}' needs a 'measure'")
        if self.kind in ("topological_entropy", "bowen_entropy", "claim_rate") and self.subshift is None:
            raise ValueError(f"experiment '{self.kind}' needs a 'subshift'")
        return self


CATALOG: Tuple[Tuple[str, str], ...] = (
    ("temperedness", "ratios |U_{k<n} F_k^-1 F_n| / |F_n| for n = 2..N and the witnessed constant"),
    ("growth", "ratios |F_n| / ln n on [n_lo, n_hi] and whether they increase strictly"),
    ("topological_entropy", "ln(pattern count on the Bowen domain) / |F_n| per n"),
    ("bowen_entropy", "critical s of the truncated covering cost per n_max (set cover + bisection)"),
    ("smb", "mean of -ln mu(atom) / |F_n| over seeded sample points, per n"),
    ("brin_katok", "mean of -ln mu(Bowen ball) / |F_n| over seeded sample points, per (n, delta)"),
    ("claim_rate", "exact count of A_{n,m} words at eps = 1/2 and its rate (1/n) ln count"),
    ("stirling", "Hamming-ball size vs exp(Kn) on an (n, q, a) grid"),
    ("generic_certificate", "per m, least scheduled n after which sample points stay in A_{n,m}"),
)
_PARAM_DOC = {kind: sorted(model.model_fields) for kind, model in _PARAMS.items()}


# building blocks ---------------------------------------------------------------


def _element(group: AmenableGroup, g):
    return group.check(g if isinstance(g, int) else tuple(g))


def build_group(cfg: ExperimentConfig) -> Tuple[AmenableGroup, FolnerSequence]:
    group = AmenableGroup.by_name(cfg.group.kind)
    return group, FolnerSequence.boxes(group)


def build_subshift(cfg: ExperimentConfig, group: AmenableGroup) -> Subshift:
    s = cfg.subshift
    if s.type == "full":
        return Subshift.full(group, s.alphabet_size)
    if s.type == "golden_mean":
        if group.kind != "Z":
            raise UnsupportedError("the golden mean shift is built over Z")
        return Subshift.golden_mean()
    forbidden = tuple(Cylinder.from_mapping({_element(group, g): a for g, a in pat}) for pat in s.forbidden)
    return Subshift(group, s.alphabet_size, forbidden)


def build_measure(cfg: ExperimentConfig, group: AmenableGroup) -> InvariantMeasure:
    m = cfg.measure
    if m.bernoulli is not None:
        return Bernoulli(tuple(m.bernoulli), group)
    if group.kind != "Z":
        raise UnsupportedError("Markov measures are implemented over Z only")
    pi = None if m.markov.pi is None else np.asarray(m.markov.pi, dtype=float)
    return Markov(np.asarray(m.markov.P, dtype=float), pi)


# experiments ---------------------------------------------------------------------


class _Result:
    def __init__(self, columns: Sequence[str], rows: List[tuple], summary: Dict[str, Any], entropy_columns=()):
        self.columns = list(columns)
        self.rows = sorted(rows)
        self.summary = summary
        self.entropy_columns = set(entropy_columns)


def _mean_and_se(values: Sequence[float]) -> Tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if not np.isfinite(v).all():
        return math.inf, math.nan
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
    return float(v.mean()), se


def _over_seeds(fn: Callable[[int], Any], seeds: Sequence[int], threads: int) -> list:
    if threads <= 1 or len(seeds) <= 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, seeds))


def _run_temperedness(cfg, p, threads):
    _, seq = build_group(cfg)
    rep = temperedness_report(seq, p["N"], cap=p["cap"], method=p["method"])
    rows = [(n, u, f, u / f) for n, u, f in zip(rep.ns, rep.union_sizes, rep.folner_sizes)]
    return _Result(("n", "union_size", "folner_size", "ratio"), rows, {"witnessed_C": rep.witnessed_C})


def _run_growth(cfg, p, threads):
    _, seq = build_group(cfg)
    rep = growth_report(seq, p["n_lo"], p["n_hi"])
    return _Result(("n", "ratio"), list(rep.rows), {"increasing": rep.increasing})


def _run_topological(cfg, p, threads):
    group, seq = build_group(cfg)
    S = build_subshift(cfg, group)
    rows = []
    for n in p["n_schedule"]:
        est = topological_entropy_estimate(S, seq, n, p["epsilon"])
        rows.append((n, est.detail["count"], est.value))
    return _Result(("n", "pattern_count", "entropy"), rows, {"last": sorted(rows)[-1][2]}, ("entropy",))


def _run_bowen(cfg, p, threads):
    group, seq = build_group(cfg)
    Z = SubsetSpec.whole_space(build_subshift(cfg, group))
    rows = []
    for n_max in p["n_max_schedule"]:
        N = p["N"] if p["N"] is not None else n_max
        if N > n_max:
            raise DomainError(f"N = {N} exceeds n_max = {n_max}")
        est = bowen_entropy_estimate(Z, seq, p["epsilon"], N, n_max, p["solver"], p["tol"], p["cap"])
        rows.append((n_max, N, est.detail["universe_size"], est.value))
    return _Result(("n_max", "N", "universe", "entropy"), rows, {"last": sorted(rows)[-1][3]}, ("entropy",))


def _run_smb(cfg, p, threads):
    group, seq = build_group(cfg)
    mu = build_measure(cfg, group)

    def per_seed(seed):
        x = sample_configuration(mu, seed)
        return [smb_value(x, mu, seq, n) for n in p["n_schedule"]]

    values = _over_seeds(per_seed, cfg.seeds, threads)
    rows = []
    for j, n in enumerate(p["n_schedule"]):
        mean, se = _mean_and_se([v[j] for v in values])
        rows.append((n, len(cfg.seeds), mean, se))
    return _Result(
        ("n", "samples", "mean", "std_error"), rows, {"reference": mu.entropy()}, ("mean", "std_error", "reference")
    )


def _run_brin_katok(cfg, p, threads):
    group, seq = build_group(cfg)
    mu = build_measure(cfg, group)
    pairs = [(n, d) for n in p["n_schedule"] for d in p["deltas"]]

    def per_seed(seed):
        x = sample_configuration(mu, seed)
        return [brin_katok_value(x, mu, d, seq, n) for n, d in pairs]

    values = _over_seeds(per_seed, cfg.seeds, threads)
    rows = []
    for j, (n, d) in enumerate(pairs):
        mean, se = _mean_and_se([v[j] for v in values])
        rows.append((n, d, len(cfg.seeds), mean, se))
    return _Result(
        ("n", "delta", "samples", "mean", "std_error"),
        rows,
        {"reference": mu.entropy()},
        ("mean", "std_error", "reference"),
    )


def _run_claim_rate(cfg, p, threads):
    group, _ = build_group(cfg)
    S = build_subshift(cfg, group)
    mu = build_measure(cfg, group)
    rows = []
    for n in p["n_schedule"]:
        res = count_A_nm_words(S, mu, n, p["m"], p["tolerance"], p["epsilon"], p["L"], p["method"])
        rows.append((n, res.count, res.rate))
    return _Result(("n", "count", "rate"), rows, {"reference": mu.entropy()}, ("rate", "reference"))


def _run_stirling(cfg, p, threads):
    rows = []
    for n in p["n"]:
        for q in p["q"]:
            for a in p["a"]:
                b = stirling_bound(n, q, a)
                rows.append((n, q, a, b.exact_count, b.K, b.log_bound, b.holds))
    return _Result(
        ("n", "q", "a", "exact_count", "K", "log_bound", "holds"), rows, {"all_hold": all(r[-1] for r in rows)}
    )


def _run_certificate(cfg, p, threads):
    group, seq = build_group(cfg)
    mu = build_measure(cfg, group)

    def per_seed(seed):
        return generic_point_certificate(sample_configuration(mu, seed), mu, seq, p["m_max"], p["n_schedule"], p["L"])

    certs = _over_seeds(per_seed, cfg.seeds, threads)
    rows = [(r.m, seed, r.depth, r.threshold) for seed, cert in zip(cfg.seeds, certs) for r in cert.rows]
    witnessed = {str(m): all(r[3] is not None for r in rows if r[0] == m) for m in range(1, p["m_max"] + 1)}
    return _Result(("m", "seed", "depth", "threshold"), rows, {"threshold_for_every_seed": witnessed})


_RUNNERS = {
    "temperedness": _run_temperedness,
    "growth": _run_growth,
    "topological_entropy": _run_topological,
    "bowen_entropy": _run_bowen,
    "smb": _run_smb,
    "brin_katok": _run_brin_katok,
    "claim_rate": _run_claim_rate,
    "stirling": _run_stirling,
    "generic_certificate": _run_certificate,
}


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> _Result:
    return _RUNNERS[cfg.kind](cfg, cfg.params, threads)


# output ------------------------------------------------------------------------


def format_value(v, to_bits: bool = False) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if to_bits:
        v /= math.log(2)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.12g" % v


def _json_value(v, to_bits: bool = False):
    if isinstance(v, dict):
        return {k: _json_value(x, to_bits) for k, x in v.items()}
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v) / (math.log(2) if to_bits else 1.0)
        return v if math.isfinite(v) else format_value(v)
    return v


def render_csv(cfg: ExperimentConfig, result: _Result) -> str:
    bits = cfg.units == "bits"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment"] + result.columns)
    for row in result.rows:
        w.writerow([cfg.id] + [format_value(v, bits and c in result.entropy_columns) for c, v in zip(result.columns, row)])
    return buf.getvalue()


def config_digest(resolved: Dict[str, Any]) -> str:
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_config(path: Union[str, Path], seed_override: Optional[int] = None) -> ExperimentConfig:
    """Parse and validate; raises ``ValueError`` subclasses on any schema problem."""
    text = Path(path).read_text(encoding="utf-8")
    raw = json.loads(text)
    if not isinstance(raw, dict):
        raise ValueError("config must be a JSON object")
    if seed_override is not None:
        raw["seeds"] = [seed_override]
    return ExperimentConfig.model_validate(raw)


def execute(cfg: ExperimentConfig, out_dir: Optional[Union[str, Path]] = None, threads: int = 1) -> Tuple[Path, Path]:
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    start = time.perf_counter()
    result = run_experiment(cfg, threads)
    wall = time.perf_counter() - start
    resolved = cfg.model_dump(mode="json")
    bits = cfg.units == "bits"
    summary = {
        "id": cfg.id,
        "kind": cfg.kind,
        "version": __version__,
        "config": resolved,
        "config_digest": config_digest(resolved),
        "units": cfg.units,
        "columns": result.columns,
        "rows": len(result.rows),
        "summary": {k: _json_value(v, bits and k in result.entropy_columns) for k, v in result.summary.items()},
        "wall_clock_seconds": wall,
    }
    csv_path = out / f"{cfg.id}.csv"
    json_path = out / f"{cfg.id}.summary.json"
    _atomic_write(csv_path, render_csv(cfg, result))
    _atomic_write(json_path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


# entry point -------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="amenable-entropy", description="Entropy experiments on amenable group shifts.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("config")
    run.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    run.add_argument("--seed-override", type=int, default=None, help="replace the seed list by this seed")
    run.add_argument("--threads", type=int, default=1, help="worker threads over seeds")
    sub.add_parser("list-experiments", help="list experiment kinds and their parameters")
    sub.add_parser("version", help="print the version")
    return ap


def list_experiments() -> List[Tuple[str, str, List[str]]]:
    return [(kind, doc, _PARAM_DOC[kind]) for kind, doc in CATALOG]


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    if args.command == "list-experiments":
        for kind, doc, params in list_experiments():
            print(f"{kind}: {doc}")
            print(f"    params: {', '.join(params)}")
        return EXIT_OK

    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        cfg = load_config(args.config, args.seed_override)
    except (OSError, ValueError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        csv_path, json_path = execute(cfg, args.out, args.threads)
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (DomainError, UnsupportedError) as exc:
        print(f"infeasible parameters: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # pragma: no cover - diagnostic path
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(csv_path)
    print(json_path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
