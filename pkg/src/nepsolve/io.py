"""Run configuration, Matrix Market loading and result serialisation."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.io
import scipy.sparse as sp
import yaml

from .errors import DimensionMismatch, FormatError, ParseError, ValidationError
from .problems import BUILTIN, NepProblem, ScalarFunction
from .sampling import Ellipse, Interval, Rectangle, region_from_dict

ALGORITHMS = ("ss-ri", "ss-ci", "ss-full", "rsrr", "rsrr-moment", "rsrr-two-stage")
SS_ALGORITHMS = ("ss-ri", "ss-ci", "ss-full")
DIGITS = 17


@dataclass
class RunConfig:
    """Everything needed to reproduce one solver run.

    ``problem`` is either ``{"name": <builtin>, "params": {...}}`` or
    ``{"matrices": [paths], "functions": [descriptors]}`` (paths relative to
    the config file).
    """

    problem: dict
    region: dict
    algorithm: str
    N: int
    L: int = 1
    K: Optional[int] = None
    seed: int = 0
    delta: float = 1e-14
    tol_gap: float = 1e3
    sampling: str = "default"
    inner: dict = field(default_factory=lambda: {"N_Q": 500, "K_Q": 2, "contour": "boundary"})
    output: dict = field(default_factory=lambda: {"dir": "results"})
    base_dir: str = field(default=".", compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def region_obj(self):
        return region_from_dict(self.region)

    def output_dir(self) -> Path:
        out = Path(self.output.get("dir", "results"))
        return out if out.is_absolute() else Path(self.base_dir) / out


def _num(d, key, kind, lo=None, hi=None, required=False, default=None):
    if key not in d or d[key] is None:
        if required:
            raise ValidationError(key, "is required")
        return default
    v = d[key]
    try:
        if kind is int:
            if isinstance(v, bool) or float(v) != int(float(v)):
                raise ValueError
            v = int(float(v))
        else:
            v = float(v)  # YAML 1.1 reads "1e-14" as a string
    except (TypeError, ValueError):
        raise ValidationError(key, f"expected {kind.__name__}, got {d[key]!r}") from None
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        raise ValidationError(key, f"{v} outside [{lo}, {hi}]")
    return v


def config_from_dict(raw: dict, base_dir=".") -> RunConfig:
    """Validate a parsed mapping and fill defaults."""
    if not isinstance(raw, dict):
        raise ValidationError("<root>", "config must be a mapping")
    known = {f for f in RunConfig.__dataclass_fields__ if f != "base_dir"}
    for key in raw:
        if key not in known:
            raise ValidationError(str(key), "unknown key")

    prob = raw.get("problem")
    if not isinstance(prob, dict):
        raise ValidationError("problem", "is required")
    if "name" in prob:
        if prob["name"] not in BUILTIN:
            raise ValidationError("problem.name", f"unknown built-in {prob['name']!r}")
    elif "matrices" in prob:
        mats, funcs = prob.get("matrices"), prob.get("functions")
        if not isinstance(mats, list) or not isinstance(funcs, list) or len(mats) != len(funcs):
            raise ValidationError("problem.functions", "one descriptor per matrix file")
        for m in mats:
            p = Path(m) if Path(m).is_absolute() else Path(base_dir) / m
            if not p.exists():
                raise ValidationError("problem.matrices", f"{m} does not exist")
    else:
        raise ValidationError("problem", "needs 'name' or 'matrices'")

    if "region" not in raw:
        raise ValidationError("region", "is required")
    try:
        region_from_dict(raw["region"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ValidationError("region", str(exc)) from None

    alg = raw.get("algorithm")
    if alg not in ALGORITHMS:
        raise ValidationError("algorithm", f"must be one of {', '.join(ALGORITHMS)}")
    N = _num(raw, "N", int, lo=1, required=True)
    L = _num(raw, "L", int, lo=1, default=1)
    K = _num(raw, "K", int, lo=1)
    if K is None and alg in SS_ALGORITHMS:
        K = max(1, N // 4)
    if K is not None and alg in SS_ALGORITHMS and 2 * K > N:
        raise ValidationError("K", f"2K = {2 * K} exceeds N = {N}")
    if K is not None and alg == "rsrr-moment" and K > N:
        raise ValidationError("K", f"K = {K} exceeds N = {N}")
    seed = _num(raw, "seed", int, lo=0, default=0)
    delta = _num(raw, "delta", float, default=1e-14)
    if not 0 < delta < 1:
        raise ValidationError("delta", "must lie in (0, 1)")
    tol_gap = _num(raw, "tol_gap", float, lo=1.0, default=1e3)
    sampling = raw.get("sampling", "default")
    if sampling not in ("default", "chebyshev", "contour"):
        raise ValidationError("sampling", "must be default, chebyshev or contour")

    inner = {"N_Q": 500, "K_Q": 2, "contour": "boundary"}
    inner.update(raw.get("inner") or {})
    inner["N_Q"] = _num(inner, "N_Q", int, lo=2)
    inner["K_Q"] = _num(inner, "K_Q", int, lo=1)
    if inner["contour"] not in ("boundary", "chebyshev"):
        raise ValidationError("inner.contour", "must be boundary or chebyshev")
    output = {"dir": "results"}
    output.update(raw.get("output") or {})
    return RunConfig(prob, raw["region"], alg, N, L, K, seed, delta, tol_gap, sampling, inner, output,
                     str(base_dir))


def load_config(path) -> RunConfig:
    """Parse and validate a YAML run configuration."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ParseError(str(getattr(exc, "problem", exc)), line=line) from None
    return config_from_dict(raw, base_dir=path.parent)


def dump_config(config: RunConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(config.to_dict(), sort_keys=False))


# -- problems ------------------------------------------------------------

def read_matrix(path):
    """Matrix Market file as a sparse (coordinate) or dense (array) matrix."""
    if not Path(path).is_file():
        raise FileNotFoundError(f"{path}: no such file")
    try:
        A = scipy.io.mmread(str(path))
    except (ValueError, OSError, IndexError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if sp.issparse(A):
        return sp.csr_matrix(A)
    return np.asarray(A)


def write_matrix(path, A) -> None:
    scipy.io.mmwrite(str(path), A, precision=DIGITS)


def load_split_problem(matrix_files, functions, name="file") -> NepProblem:
    """Split-form problem ``sum_j f_j(z) A_j`` from Matrix Market files.

    ``functions`` holds one ScalarFunction (or its dict form) per file.
    Symmetric storage is expanded by the reader.
    """
    if len(matrix_files) != len(functions):
        raise DimensionMismatch("one function descriptor per matrix file")
    terms, n = [], None
    for path, f in zip(matrix_files, functions):
        A = read_matrix(path)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"{path}: matrix is not square ({A.shape})")
        if n is None:
            n = A.shape[0]
        elif A.shape[0] != n:
            raise DimensionMismatch(f"{path}: dimension {A.shape[0]} differs from {n}")
        fn = f if isinstance(f, ScalarFunction) else ScalarFunction.from_dict(f)
        terms.append((fn, A))
    return NepProblem(n, terms, name=name)


def build_problem(config: RunConfig) -> NepProblem:
    prob = config.problem
    if "name" in prob:
        return BUILTIN[prob["name"]](**(prob.get("params") or {}))
    base = Path(config.base_dir)
    files = [m if Path(m).is_absolute() else base / m for m in prob["matrices"]]
    return load_split_problem(files, prob["functions"], name=prob.get("label", "file"))


# -- results -------------------------------------------------------------

EIG_FIELDS = ["index", "re", "im", "residual", "weighted_residual", "inside"]


def _fmt(x) -> str:
    return repr(float(x))


def eigen_rows(result) -> list[dict]:
    """Rows sorted by ascending |lambda|."""
    lam = np.asarray(result.eigenvalues, complex)
    order = np.argsort(np.abs(lam), kind="stable")
    wres = result.weighted_residuals
    rows = []
    for i, k in enumerate(order):
        rows.append({
            "index": i,
            "re": float(lam[k].real),
            "im": float(lam[k].imag),
            "residual": float(result.residuals[k]),
            "weighted_residual": None if wres is None else float(wres[k]),
            "inside": bool(result.inside[k]),
        })
    return rows


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if np.isfinite(obj) else str(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (Interval, Ellipse, Rectangle)):
        return _jsonable(obj.to_dict())
    return obj


def write_results(result, out_dir, config: Optional[RunConfig] = None, extra: Optional[dict] = None) -> dict:
    """Write ``eigenpairs.csv``, ``eigenpairs.json``, ``singular_values.csv`` and ``metadata.json``.

    Returns the mapping of artifact name to path.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        rows = eigen_rows(result)
        paths = {k: out / v for k, v in (("csv", "eigenpairs.csv"), ("json", "eigenpairs.json"),
                                         ("sigma", "singular_values.csv"), ("meta", "metadata.json"))}
        with open(paths["csv"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(EIG_FIELDS)
            for r in rows:
                w.writerow([r["index"], _fmt(r["re"]), _fmt(r["im"]), _fmt(r["residual"]),
                            "" if r["weighted_residual"] is None else _fmt(r["weighted_residual"]),
                            int(r["inside"])])
        paths["json"].write_text(json.dumps(rows, indent=1))
        write_sigma(paths["sigma"], result)
        meta = {
            "provenance": result.provenance,
            "accepted": result.accepted,
            "gap": result.gap.to_dict() if result.gap is not None else None,
            "n_eigenvalues": len(rows),
            "n_inside": int(sum(r["inside"] for r in rows)),
            "timings": result.timings,
        }
        if config is not None:
            meta["config"] = config.to_dict()
        if extra:
            meta.update(extra)
        paths["meta"].write_text(json.dumps(_jsonable(meta), indent=1))
    except OSError as exc:
        raise IOError(f"cannot write results to {out}: {exc}") from exc
    return paths


def write_sigma(path, result) -> None:
    """Scaled singular values ``sigma_j / sigma_1`` of the search space (or of H)."""
    cols = {}
    sub = getattr(result, "subspace", None)
    if sub is not None:
        cols["sigma"] = sub.sigma / sub.sigma[0]
        if sub.sigma_raw is not None:
            cols["sigma_unnormalized"] = sub.sigma_raw / sub.sigma_raw[0]
    elif result.gap is not None and result.gap.sigma.size and result.gap.sigma[0] > 0:
        cols["sigma"] = result.gap.sigma / result.gap.sigma[0]
    names = list(cols)
    length = max((c.size for c in cols.values()), default=0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index"] + (names or ["sigma"]))
        for j in range(length):
            w.writerow([j + 1] + [_fmt(cols[k][j]) if j < cols[k].size else "" for k in names])


def read_eigenpairs(path) -> np.ndarray:
    """Eigenvalues from an ``eigenpairs.json`` written by write_results."""
    rows = json.loads(Path(path).read_text())
    return np.array([complex(r["re"], r["im"]) for r in rows], dtype=complex)


def read_table(path) -> list[dict]:
    path = Path(path)
    if path.suffix == ".json":
        return json.loads(path.read_text())
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_csv(path, header, rows) -> None:
    """Plot-ready CSV; floats in round-trip precision."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x for x in r])


