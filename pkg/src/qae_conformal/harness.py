"""Repeated experiments: generate or split data, build intervals, tabulate.

Result CSV schema (one row per repeat and method)::

    repeat,seed,method,coverage,mean_length

Numbers use 12 significant digits; ``inf`` marks an unbounded interval and
``nan`` a repeat that failed. Rows are written in repeat order whatever the
number of worker processes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .conformal import METHODS, build, coverage_and_length
from .data import Dataset
from .errors import DomainError
from .models import LINEAR, MLP, FitConfig
from .qae import QaeConfig
from .synth import NOISE_LAWS, SCENARIOS, NoiseSpec, ScenarioSpec, derive_seed, generate, substream

CSV_HEADER = ("repeat", "seed", "method", "coverage", "mean_length")

DEFAULT_METHODS = {
    "linear-3d": ("split-cp", "split-cp-huber", "effort"),
    "quadratic-nn": ("split-cp", "split-cp-huber", "effort"),
    "heteroscedastic-1d": ("ad-effort", "lw-cp", "cqr"),
    "real": ("ad-effort", "lw-cp", "cqr"),
}

OUTLIER_STREAM = 7
SPLIT_STREAM = 8


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "linear-3d"
    noise: str = "normal"
    methods: tuple = ()
    alpha: float = 0.1
    n_lrn: int = 1000
    n_cal: int = 1000
    n_test: int = 1000
    repeats: int = 50
    seed: int = 0
    epsilon: float = 0.1
    iterations: int = 1000
    step_exponent: float = 0.6
    quantile_mode: str = "empirical"
    kind: str = "auto"
    width: int = 10
    knn_k: int = 0  # 0: ceil(sqrt(n_learn))
    huber_delta: float = 1.35
    fixed_theta: bool = True
    center_noise: bool = False
    sub_split: bool = False
    jobs: int = 1
    # real-data options
    learn_frac: float = 0.4
    cal_frac: float = 0.4
    outlier_frac: float = 0.0
    outlier_mean_mult: float = 2.0

    def __post_init__(self):
        if not self.methods:
            object.__setattr__(self, "methods", DEFAULT_METHODS.get(self.scenario, DEFAULT_METHODS["real"]))
        object.__setattr__(self, "methods", tuple(self.methods))
        self.validate()

    def validate(self):
        if self.scenario not in SCENARIOS + ("real",):
            raise DomainError(f"unknown scenario {self.scenario!r}")
        if self.noise not in NOISE_LAWS:
            raise DomainError(f"unknown noise law {self.noise!r}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise DomainError(f"unknown methods {bad}; choose from {sorted(METHODS)}")
        if self.kind not in ("auto", LINEAR, MLP):
            raise DomainError("kind must be auto, linear or mlp")
        if min(self.n_lrn, self.n_cal, self.n_test, self.repeats, self.jobs) < 1:
            raise DomainError("sizes, repeats and jobs must be positive")
        if self.knn_k < 0:
            raise DomainError("knn_k must be nonnegative")
        if not (0 < self.learn_frac and 0 < self.cal_frac and self.learn_frac + self.cal_frac < 1):
            raise DomainError("learn and calibration fractions must be positive and sum below 1")
        if not 0 <= self.outlier_frac < 1:
            raise DomainError("outlier fraction must lie in [0, 1)")
        # delegate the numeric checks to the module-level configs
        self.qae_config()
        self.fit_config()

    @property
    def model_kind(self) -> str:
        if self.kind != "auto":
            return self.kind
        return MLP if self.scenario in ("quadratic-nn", "real") else LINEAR

    def qae_config(self) -> QaeConfig:
        return QaeConfig(
            alpha=self.alpha,
            epsilon=self.epsilon,
            n_iter=self.iterations,
            step_exponent=self.step_exponent,
            seed=self.seed,
            quantile_mode=self.quantile_mode,
            width=self.width,
        )

    def fit_config(self) -> FitConfig:
        return FitConfig(
            delta=self.huber_delta,
            iterations=self.iterations,
            step_exponent=self.step_exponent,
            seed=self.seed,
            width=self.width,
        )

    def scenario_spec(self, repeat_seed: int) -> ScenarioSpec:
        return ScenarioSpec(
            kind=self.scenario,
            noise=NoiseSpec(self.noise),
            n_lrn=self.n_lrn,
            n_cal=self.n_cal,
            n_test=self.n_test,
            seed=repeat_seed,
            theta_seed=self.seed if self.fixed_theta else None,
            center_noise=self.center_noise,
        )

    def as_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        return d


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def parse_value(key: str, text: str):
    kind = _FIELD_TYPES.get(key)
    if kind is None:
        raise DomainError(f"unknown config key {key!r}")
    text = text.strip()
    if kind == "bool":
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise DomainError(f"{key}: expected a boolean, got {text!r}")
    if kind == "tuple":
        return tuple(m.strip() for m in text.split(",") if m.strip())
    try:
        return {"int": int, "float": float, "str": str}[kind](text)
    except ValueError:
        raise DomainError(f"{key}: cannot parse {text!r} as {kind}") from None


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            out[key] = parse_value(key, value)
    return out


# --------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class RepeatRecord:
    repeat: int
    seed: int
    method: str
    coverage: float
    mean_length: float
    error: str | None = None
    lengths: np.ndarray | None = field(default=None, repr=False, compare=False)


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    return str(v)


@dataclass
class ExperimentReport:
    records: list
    config: dict

    @property
    def failed(self) -> list:
        return [r for r in self.records if r.error is not None]

    def methods(self) -> list:
        seen = []
        for r in self.records:
            if r.method not in seen:
                seen.append(r.method)
        return seen

    def values(self, method: str, metric: str) -> np.ndarray:
        return np.array([getattr(r, metric) for r in self.records if r.method == method and r.error is None])

    def aggregates(self) -> dict:
        out = {}
        for m in self.methods():
            stats = {}
            for metric in ("coverage", "mean_length"):
                v = self.values(m, metric)
                if v.size == 0:
                    stats[metric] = dict(mean=math.nan, std=math.nan, min=math.nan, max=math.nan)
                    continue
                finite = np.all(np.isfinite(v))
                stats[metric] = dict(
                    mean=float(v.mean()) if finite else math.inf,
                    std=float(v.std(ddof=1)) if finite and v.size > 1 else (0.0 if finite else math.nan),
                    min=float(v.min()),
                    max=float(v.max()),
                )
            stats["n"] = int(self.values(m, "coverage").size)
            out[m] = stats
        return out

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.records:
            w.writerow([r.repeat, r.seed, r.method, _fmt(float(r.coverage)), _fmt(float(r.mean_length))])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    def summary(self) -> dict:
        return {"config": self.config, "aggregates": self.aggregates(), "failures": [
            {"repeat": r.repeat, "method": r.method, "error": r.error} for r in self.failed
        ]}

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True, default=_fmt)
            fh.write("\n")

    def table(self, normalize: bool = False) -> str:
        """Aligned text table of the aggregates.

        With ``normalize`` the length columns are divided by the largest
        per-repeat mean length over all methods.
        """
        agg = self.aggregates()
        scale = 1.0
        if normalize:
            lengths = np.concatenate([self.values(m, "mean_length") for m in self.methods()] or [[]])
            finite = lengths[np.isfinite(lengths)]
            scale = float(finite.max()) if finite.size and finite.max() > 0 else 1.0
        head = ["method", "n", "cov_mean", "cov_sd", "cov_min", "cov_max", "len_mean", "len_sd", "len_min", "len_max"]
        rows = [head]
        for m, s in agg.items():
            c, L = s["coverage"], s["mean_length"]
            rows.append(
                [m, str(s["n"])]
                + [f"{c[k]:.4f}" for k in ("mean", "std", "min", "max")]
                + [f"{L[k] / scale:.4f}" for k in ("mean", "std", "min", "max")]
            )
        widths = [max(len(r[j]) for r in rows) for j in range(len(head))]
        lines = ["  ".join(cell.rjust(w) if j else cell.ljust(w) for j, (cell, w) in enumerate(zip(r, widths))) for r in rows]
        return "\n".join(lines)


# --------------------------------------------------------------------------
# Runners


def evaluate_methods(data: Dataset, cfg: RunConfig, repeat: int, seed: int, keep_lengths=False) -> list:
    """Fit and score each method on one dataset.

    A failing method aborts the rest of the repeat; it and every later
    method get a failure row so each (repeat, method) pair has one record.
    """
    qae = replace(cfg.qae_config(), seed=seed)
    fit_cfg = replace(cfg.fit_config(), seed=seed)
    k = cfg.knn_k or None
    Xt, yt = data.test
    records, error = [], None
    for method in cfg.methods:
        if error is None:
            try:
                p = build(method, data, cfg.alpha, cfg.model_kind, qae, fit_cfg, k, cfg.sub_split)
                rep = coverage_and_length(p, Xt, yt)
                records.append(
                    RepeatRecord(repeat, seed, method, rep.coverage, rep.mean_length,
                                 lengths=rep.lengths if keep_lengths else None)
                )
                continue
            except Exception as exc:  # recorded, the run goes on
                error = f"{type(exc).__name__}: {exc}"
                records.append(RepeatRecord(repeat, seed, method, math.nan, math.nan, error))
                continue
        records.append(RepeatRecord(repeat, seed, method, math.nan, math.nan, f"skipped after: {error}"))
    return records


def _synthetic_repeat(args):
    cfg, repeat = args
    seed = derive_seed(cfg.seed, repeat)
    try:
        data = generate(cfg.scenario_spec(seed))
    except Exception as exc:
        err = f"{type(exc).__name__}: {exc}"
        return [RepeatRecord(repeat, seed, m, math.nan, math.nan, err) for m in cfg.methods]
    return evaluate_methods(data, cfg, repeat, seed)


def _map_repeats(fn, tasks, jobs):
    if jobs <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))  # map keeps input order


def run_synthetic(cfg: RunConfig) -> ExperimentReport:
    if cfg.scenario == "real":
        raise DomainError("use run_real for CSV datasets")
    chunks = _map_repeats(_synthetic_repeat, [(cfg, r) for r in range(cfg.repeats)], cfg.jobs)
    return ExperimentReport([rec for chunk in chunks for rec in chunk], cfg.as_dict())


# --------------------------------------------------------------------------
# Real data


class CsvError(DomainError):
    pass


def read_numeric_csv(path):
    """Header row plus numeric rows; the last column is the response."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    if len(header) < 1:
        raise CsvError(f"{path}: missing header")
    data = np.empty((len(body), len(header)))
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise CsvError(f"{path}: row {i} has {len(row)} columns, header has {len(header)}")
        for j, cell in enumerate(row):
            try:
                data[i - 2, j] = float(cell)
            except ValueError:
                raise CsvError(f"{path}: row {i}, column {j + 1} ({header[j]!r}): non-numeric value {cell!r}") from None
    if not np.all(np.isfinite(data)):
        raise CsvError(f"{path}: non-finite values")
    if data.shape[0] < 10:
        raise CsvError(f"{path}: need at least 10 rows, got {data.shape[0]}")
    return header, data[:, :-1], data[:, -1]


def split_sizes(n: int, learn_frac=0.4, cal_frac=0.4):
    """Floor the learn and calibration shares; the remainder goes to the test split."""
    n_lrn = int(math.floor(learn_frac * n))
    n_cal = int(math.floor(cal_frac * n))
    return n_lrn, n_cal, n - n_lrn - n_cal


def contaminate(y: np.ndarray, frac: float, mean_mult: float, rng) -> np.ndarray:
    """Replace ``round(frac n)`` random responses by draws from ``N(mean_mult * max(y), 1)``."""
    y = np.array(y, dtype=float)
    m = int(round(frac * y.size))
    if m == 0:
        return y
    idx = rng.choice(y.size, size=m, replace=False)
    y[idx] = rng.normal(mean_mult * float(np.max(y)), 1.0, size=m)
    return y


def _standardize(data: Dataset):
    """Affine-normalize X and y with learn-split statistics; return data and the y scale."""
    Xl, yl = data.learn
    mx, sx = Xl.mean(axis=0), Xl.std(axis=0)
    sx = np.where(sx > 0, sx, 1.0)
    my, sy = float(yl.mean()), float(yl.std())
    sy = sy if sy > 0 else 1.0
    return Dataset((data.X - mx) / sx, (data.y - my) / sy, data.split), sy


def _real_repeat(args):
    cfg, X, y, repeat = args
    seed = derive_seed(cfg.seed, repeat)
    n_lrn, n_cal, n_test = split_sizes(y.size, cfg.learn_frac, cfg.cal_frac)
    perm = substream(seed, SPLIT_STREAM).permutation(y.size)
    labels = np.empty(y.size, dtype="<U5")
    labels[perm[:n_lrn]] = "learn"
    labels[perm[n_lrn : n_lrn + n_cal]] = "cal"
    labels[perm[n_lrn + n_cal :]] = "test"
    data, sy = _standardize(Dataset(X, y, labels))
    records = evaluate_methods(data, cfg, repeat, seed)
    return [replace(r, mean_length=r.mean_length * sy) for r in records]


def run_real(path, cfg: RunConfig) -> ExperimentReport:
    """Repeated random 40/40/20 splits of a CSV dataset.

    Lengths are reported in response units. Optional contamination replaces a
    fraction of responses once, before any split, using the run seed.
    """
    header, X, y = read_numeric_csv(path)
    if X.shape[1] == 0:
        X = np.zeros((y.size, 0))
    if cfg.outlier_frac > 0:
        y = contaminate(y, cfg.outlier_frac, cfg.outlier_mean_mult, substream(cfg.seed, OUTLIER_STREAM))
    chunks = _map_repeats(_real_repeat, [(cfg, X, y, r) for r in range(cfg.repeats)], cfg.jobs)
    config = cfg.as_dict()
    config["data"] = str(path)
    return ExperimentReport([rec for chunk in chunks for rec in chunk], config)

