"""Labelled cascade datasets and the three classification approaches."""

from __future__ import annotations

import dataclasses
import json
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .calibration import CalibrationTable, build_calibration, classify_by_interval
from .cascade import CascadeParams, alpha_for_hurst, generate_cascade
from .classes import HurstClassScheme, scheme_by_name
from .features import FEATURE_NAMES, extract_features
from .forest import class_score, fit_forest, predicted_class
from .mfdfa import MfdfaConfig, MfdfaResult, mfdfa
from .seeding import derive_rng, derive_seed

APPROACHES = ("raw_values", "characteristics", "confidence_interval")
APPROACH_LABELS = {
    "raw_values": "Time series values",
    "characteristics": "Time series characteristics",
    "confidence_interval": "Estimate H",
}


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentPlan:
    scheme: HurstClassScheme
    length: int
    train_per_class: int = 100
    test_per_class: int = 20
    approaches: tuple[str, ...] = APPROACHES
    seed: int = 0
    mfdfa: MfdfaConfig = field(default_factory=MfdfaConfig)
    forest_mode: str = "random_forest"
    n_trees: int = 200
    alpha_level: float = 0.05
    calibration_trials: int = 200
    name: str = ""
    scheme_name: str = ""

    def __post_init__(self):
        if self.length < 2 or self.length & (self.length - 1):
            raise PlanError(f"length must be a power of two, got {self.length}")
        if self.train_per_class < 1 or self.test_per_class < 1:
            raise PlanError("train/test counts per class must be >= 1")
        unknown = [a for a in self.approaches if a not in APPROACHES]
        if unknown:
            raise PlanError(f"unknown approach(es) {unknown}; expected a subset of {APPROACHES}")
        if not self.approaches:
            raise PlanError("plan lists no approaches")
        if self.n_trees < 1:
            raise PlanError("n_trees must be >= 1")

    @property
    def levels(self) -> int:
        return self.length.bit_length() - 1

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "scheme": self.scheme_name or self.scheme.to_dict()["intervals"],
            "length": self.length,
            "train_per_class": self.train_per_class,
            "test_per_class": self.test_per_class,
            "approaches": list(self.approaches),
            "seed": self.seed,
            "mfdfa": self.mfdfa.to_dict(),
            "forest": {"mode": self.forest_mode, "n_trees": self.n_trees},
            "alpha_level": self.alpha_level,
            "calibration_trials": self.calibration_trials,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentPlan:
        known = {"name", "scheme", "length", "train_per_class", "test_per_class", "approaches",
                 "seed", "mfdfa", "forest", "alpha_level", "calibration_trials"}
        extra = set(d) - known
        if extra:
            raise PlanError(f"unknown plan keys {sorted(extra)}")
        try:
            raw_scheme = d["scheme"]
            if isinstance(raw_scheme, str):
                scheme, scheme_name = scheme_by_name(raw_scheme), raw_scheme
            else:
                scheme, scheme_name = HurstClassScheme.from_dict(raw_scheme), ""
            forest = d.get("forest", {})
            return cls(
                scheme=scheme, scheme_name=scheme_name, length=int(d["length"]),
                train_per_class=int(d.get("train_per_class", 100)),
                test_per_class=int(d.get("test_per_class", 20)),
                approaches=tuple(d.get("approaches", APPROACHES)),
                seed=int(d.get("seed", 0)),
                mfdfa=MfdfaConfig.from_dict(d.get("mfdfa", {})),
                forest_mode=forest.get("mode", "random_forest"),
                n_trees=int(forest.get("n_trees", 200)),
                alpha_level=float(d.get("alpha_level", 0.05)),
                calibration_trials=int(d.get("calibration_trials", 200)),
                name=d.get("name", ""),
            )
        except KeyError as exc:
            raise PlanError(f"plan is missing required key {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, PlanError):
                raise
            raise PlanError(str(exc)) from None

    @classmethod
    def load(cls, path) -> ExperimentPlan:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def with_overrides(self, **kw) -> ExperimentPlan:
        return dataclasses.replace(self, **kw)


@dataclass
class LabeledSeries:
    split: str
    class_index: int
    h_target: float
    alpha: float
    seed: int
    values: np.ndarray
    analysis: MfdfaResult | None = None

    def manifest_record(self) -> dict:
        return {"split": self.split, "class_index": self.class_index, "H_target": self.h_target,
                "alpha": self.alpha, "seed": self.seed, "length": int(self.values.size)}


@dataclass
class Dataset:
    train: list[LabeledSeries]
    test: list[LabeledSeries]

    def manifest(self) -> list[dict]:
        return [s.manifest_record() for s in self.train + self.test]


def _draw_series(plan: ExperimentPlan, split: str, k: int, i: int) -> LabeledSeries:
    lo, hi = plan.scheme.intervals[k]
    rng = derive_rng(plan.seed, "h_target", split, k, i)
    h = float(rng.uniform(lo, hi))
    # keep strictly inside (0.5, 1) for the alpha mapping
    h = min(max(h, 0.5 + 1e-9), 1.0 - 1e-9)
    alpha = alpha_for_hurst(h)
    seed = derive_seed(plan.seed, "cascade", split, k, i)
    values = generate_cascade(CascadeParams(plan.levels, alpha, seed=seed))
    return LabeledSeries(split, k, h, alpha, seed, values)


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def build_dataset(plan: ExperimentPlan, threads: int = 1) -> Dataset:
    """Draw train and test cascades for every class of the plan's scheme.

    Targets are uniform within the class interval; train and test use
    separate seed streams.
    """
    def make(split, count):
        jobs = [(k, i) for k in range(plan.scheme.n_classes) for i in range(count)]
        return _map(lambda ki: _draw_series(plan, split, *ki), jobs, threads)

    return Dataset(train=make("train", plan.train_per_class), test=make("test", plan.test_per_class))


def analyse(plan: ExperimentPlan, items: list[LabeledSeries], threads: int = 1) -> None:
    """Attach MFDFA results to the series that lack them."""
    def run(item):
        if item.analysis is None:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                item.analysis = mfdfa(item.values, plan.mfdfa)
    _map(run, items, threads)


@dataclass
class ApproachResult:
    approach: str
    true_class: list[int]
    output: list[float]
    predicted: list[int]
    scores: list[float]
    train_seconds: float = 0.0

    @property
    def mean_score(self) -> float:
        return float(np.mean(self.scores))


def _forest_approach(name, plan, X_train, y_train, X_test, y_test, threads) -> ApproachResult:
    t0 = time.perf_counter()
    model = fit_forest(X_train, y_train, mode=plan.forest_mode, n_trees=plan.n_trees,
                       seed=derive_seed(plan.seed, "forest", name), threads=threads)
    elapsed = time.perf_counter() - t0
    m = model.predict(X_test)
    k = plan.scheme.n_classes
    return ApproachResult(
        approach=name, true_class=[int(c) for c in y_test], output=[float(v) for v in m],
        predicted=[predicted_class(v, k) for v in m],
        scores=[class_score(v, c) for v, c in zip(m, y_test)], train_seconds=elapsed)


def run_approach_raw(plan: ExperimentPlan, data: Dataset, threads: int = 1) -> ApproachResult:
    X_train = np.array([s.values for s in data.train])
    X_test = np.array([s.values for s in data.test])
    y_train = np.array([s.class_index for s in data.train], dtype=float)
    y_test = np.array([s.class_index for s in data.test])
    return _forest_approach("raw_values", plan, X_train, y_train, X_test, y_test, threads)


def feature_matrix(plan: ExperimentPlan, items: list[LabeledSeries], threads: int = 1) -> np.ndarray:
    analyse(plan, items, threads)
    return np.array([extract_features(s.values, s.analysis).to_array() for s in items])


def run_approach_characteristics(plan: ExperimentPlan, data: Dataset, threads: int = 1) -> ApproachResult:
    X_train = feature_matrix(plan, data.train, threads)
    X_test = feature_matrix(plan, data.test, threads)
    y_train = np.array([s.class_index for s in data.train], dtype=float)
    y_test = np.array([s.class_index for s in data.test])
    return _forest_approach("characteristics", plan, X_train, y_train, X_test, y_test, threads)


def calibration_for(plan: ExperimentPlan, threads: int = 1) -> CalibrationTable:
    return build_calibration([plan.length], trials_per_cell=plan.calibration_trials,
                             seed=derive_seed(plan.seed, "calibration"), config=plan.mfdfa,
                             threads=threads)


def run_approach_interval(plan: ExperimentPlan, data: Dataset, table: CalibrationTable,
                          threads: int = 1) -> ApproachResult:
    analyse(plan, data.test, threads)
    res = ApproachResult("confidence_interval", [], [], [], [])
    for s in data.test:
        h_hat = s.analysis.hurst
        cls = classify_by_interval(h_hat, plan.length, plan.alpha_level, table, plan.scheme)
        res.true_class.append(s.class_index)
        res.output.append(float(h_hat))
        res.predicted.append(cls.predicted)
        res.scores.append(cls.score(s.class_index))
    return res


@dataclass
class ExperimentReport:
    plan: ExperimentPlan
    results: dict[str, ApproachResult]

    @property
    def mean_scores(self) -> dict[str, float]:
        return {name: r.mean_score for name, r in self.results.items()}

    @property
    def timings(self) -> dict[str, float]:
        return {name: r.train_seconds for name, r in self.results.items()}

    def histogram(self, approach: str) -> np.ndarray:
        """Counts of predicted class (columns) per true class (rows)."""
        k = self.plan.scheme.n_classes
        counts = np.zeros((k, k), dtype=int)
        r = self.results[approach]
        for c, p in zip(r.true_class, r.predicted):
            counts[c, p] += 1
        return counts

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "plan": self.plan.to_dict(),
            "mean_P": self.mean_scores,
            "histograms": {a: self.histogram(a).tolist() for a in self.results},
            "records": {
                a: [{"true_class": c, "output": o, "predicted": p, "P": s}
                    for c, o, p, s in zip(r.true_class, r.output, r.predicted, r.scores)]
                for a, r in self.results.items()
            },
        }
        if include_timing:
            out["train_seconds"] = self.timings
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2) + "\n"

    def histogram_csv(self, approach: str) -> str:
        counts = self.histogram(approach)
        k = counts.shape[0]
        lines = ["true_class," + ",".join(f"pred_{j}" for j in range(k))]
        lines += [f"{i}," + ",".join(str(v) for v in row) for i, row in enumerate(counts)]
        return "\n".join(lines) + "\n"


def summarize(plan: ExperimentPlan, results: list[ApproachResult]) -> ExperimentReport:
    return ExperimentReport(plan=plan, results={r.approach: r for r in results})


def _fmt_time(seconds: float | None) -> str:
    if seconds is None:
        return "-"
    if seconds < 60:
        return f"{seconds:.1f} s"
    return f"{seconds / 60:.1f} min"


def format_table(reports: list[ExperimentReport], include_timing: bool = True) -> str:
    """Fixed-width summary: rows are scheme x length, columns approach x {P, time}."""
    head1 = f"{'':<12}{'Length':>8}"
    head2 = f"{'':<12}{'':>8}"
    for a in APPROACHES:
        width = 20 if a != "confidence_interval" else 12
        head1 += f"  {APPROACH_LABELS[a]:^{width}}"[: width + 2].ljust(width + 2)
        head2 += f"  {'P':>8}  {'time':>10}" if a != "confidence_interval" else f"  {'P':>10}"
    lines = ["AVERAGE PROBABILITY OF CLASS DETERMINATION", head1, head2]
    for rep in reports:
        label = f"{rep.plan.scheme.n_classes} classes"
        row = f"{label:<12}{rep.plan.length:>8}"
        for a in APPROACHES:
            r = rep.results.get(a)
            p = f"{r.mean_score:.2f}" if r else "-"
            if a == "confidence_interval":
                row += f"  {p:>10}"
            else:
                t = _fmt_time(r.train_seconds) if (r and include_timing) else "-"
                row += f"  {p:>8}  {t:>10}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def run_experiment(plan: ExperimentPlan, table: CalibrationTable | None = None,
                   threads: int = 1, data: Dataset | None = None) -> ExperimentReport:
    data = data or build_dataset(plan, threads)
    results = []
    for approach in plan.approaches:
        if approach == "raw_values":
            results.append(run_approach_raw(plan, data, threads))
        elif approach == "characteristics":
            results.append(run_approach_characteristics(plan, data, threads))
        else:
            if table is None:
                table = calibration_for(plan, threads)
            results.append(run_approach_interval(plan, data, table, threads))
    return summarize(plan, results)
