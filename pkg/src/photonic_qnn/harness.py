"""Repeated-trial experiments, cross-trial statistics and report emission.

Each experiment runs ``trials`` seeded training runs per series, aggregates
them into :class:`RunStatistics` and writes ``<out>/<experiment>/<series>.csv``
plus an SVG with the mean curve and a +-1 std band. CSV is the authoritative
output; plotting never touches it.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from math import log, sqrt
from pathlib import Path

import numpy as np

from . import svg
from .data import Dataset, gen_xor, load_iris
from .effdim import ED_COLUMNS, EDConfig, ed_from_fishers, ed_rows, normalized_ed, sample_fishers
from .errors import CapabilityError, ConfigurationError
from .models import MODEL_KINDS, Backend, n_params
from .photonics import NoiseParams, gate_limited_shot_rate, net_shot_rate
from .training import TRACE_COLUMNS, Adam, Cobyla, TrainConfig, TrainTrace, train, traces_to_csv

log_ = logging.getLogger(__name__)

EXPERIMENTS = ("xor_compare", "iris_batch_compare", "shot_sweep", "ed_table", "throughput", "platform_compare")
BACKEND_NAMES = ("exact", "sampled", "photonic", "gate_noise", "remote-stub")
DEFAULT_SHOT_COUNTS = (10, 30, 100, 300, 1000, 10**4, 10**5)
DEFAULT_ED_N = tuple(float(v) for v in np.logspace(3, 6, 7))
Z95 = 1.96


# -- statistics -------------------------------------------------------------------


@dataclass(frozen=True)
class Moments:
    """Mean, Bessel std, 95% CI half-width and std / sqrt(n - 1).

    With a single sample the std is 0 and the last two are NaN (undefined).
    """

    mean: np.ndarray
    std: np.ndarray
    ci95: np.ndarray
    std_scaled: np.ndarray
    n: int


def moments(values, axis: int = 0) -> Moments:
    v = np.asarray(values, dtype=float)
    n = v.shape[axis]
    if n == 0:
        raise ValueError("no values to aggregate")
    mean = v.mean(axis=axis)
    if n == 1:
        zero = np.zeros_like(mean)
        return Moments(mean, zero, zero + np.nan, zero + np.nan, 1)
    std = v.std(axis=axis, ddof=1)
    return Moments(mean, std, Z95 * std / sqrt(n), std / sqrt(n - 1), n)


@dataclass
class RunStatistics:
    iterations: np.ndarray
    loss: Moments
    accuracy: Moments
    final_loss: Moments
    final_accuracy: Moments
    n: int
    padded: tuple[int, ...] = ()
    lengths: tuple[int, ...] = ()

    def rows(self):
        for i, it in enumerate(self.iterations):
            n_pad = sum(1 for length in self.lengths if length <= i)
            yield (int(it),
                   *(_cell(getattr(self.loss, a)[i]) for a in ("mean", "std", "ci95", "std_scaled")),
                   *(_cell(getattr(self.accuracy, a)[i]) for a in ("mean", "std", "ci95", "std_scaled")),
                   self.n, n_pad)


STAT_COLUMNS = ("iteration", "loss_mean", "loss_std", "loss_ci95", "loss_std_scaled",
                "accuracy_mean", "accuracy_std", "accuracy_ci95", "accuracy_std_scaled", "n", "padded")
FINAL_COLUMNS = ("series", "n", "final_loss_mean", "final_loss_std", "final_loss_ci95", "final_loss_std_scaled",
                 "final_accuracy_mean", "final_accuracy_std", "final_accuracy_ci95", "final_accuracy_std_scaled")


def _cell(v) -> str:
    v = float(v)
    return "" if np.isnan(v) else repr(v)


def summarize(traces, window: int = 5) -> RunStatistics:
    """Pointwise and final-value statistics over a list of traces.

    Shorter traces are padded by carrying their last value forward; the
    indices of padded traces are listed in ``padded``. Final values are each
    trace's mean over its last ``window`` records.
    """
    traces = list(traces)
    if not traces:
        raise ValueError("summarize needs at least one trace")
    if any(len(t) == 0 for t in traces):
        raise ValueError("cannot summarize an empty trace")
    length = max(len(t) for t in traces)

    def padded_matrix(attr):
        return np.array([getattr(t, attr) + [getattr(t, attr)[-1]] * (length - len(t)) for t in traces])

    finals = np.array([t.converged(window) for t in traces])
    return RunStatistics(
        iterations=np.arange(length),
        loss=moments(padded_matrix("loss")),
        accuracy=moments(padded_matrix("accuracy")),
        final_loss=moments(finals[:, 0]),
        final_accuracy=moments(finals[:, 1]),
        n=len(traces),
        padded=tuple(i for i, t in enumerate(traces) if len(t) < length),
        lengths=tuple(len(t) for t in traces),
    )


def stats_to_csv(stats: RunStatistics, path=None) -> str:
    return _write_csv(STAT_COLUMNS, stats.rows(), path)


def final_row(series: str, stats: RunStatistics) -> tuple:
    cells = [_cell(getattr(m, a)) for m in (stats.final_loss, stats.final_accuracy)
             for a in ("mean", "std", "ci95", "std_scaled")]
    return (series, stats.n, *cells)


def _write_csv(header, rows, path=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


# -- backends ---------------------------------------------------------------------


@dataclass
class LocalBackend:
    """A backend that runs in-process through the simulators."""

    backend: Backend

    @property
    def name(self) -> str:
        return self.backend.name

    def run(self, kind: str, dataset: Dataset, config: TrainConfig, trial: int) -> TrainTrace:
        return train(kind, dataset, replace(config, backend=self.backend), trial)


@dataclass
class JobRecord:
    job_id: str
    payload: dict
    status: str = "submitted"


@dataclass
class RemoteStubBackend:
    """Placeholder for a cloud processor: accepts jobs, never executes them.

    The submit/poll/collect lifecycle runs end to end so the harness's job
    bookkeeping is exercised; every job ends with status ``unsupported``.
    """

    name: str = "remote-stub"
    jobs: list = field(default_factory=list)

    def submit(self, payload: dict) -> str:
        job = JobRecord(f"stub-{len(self.jobs):05d}", payload)
        self.jobs.append(job)
        return job.job_id

    def _job(self, job_id: str) -> JobRecord:
        for job in self.jobs:
            if job.job_id == job_id:
                return job
        raise KeyError(job_id)

    def poll(self, job_id: str) -> str:
        job = self._job(job_id)
        job.status = "unsupported"
        return job.status

    def collect(self, job_id: str) -> JobRecord:
        return self._job(job_id)

    def run(self, kind: str, dataset: Dataset, config: TrainConfig, trial: int) -> TrainTrace:
        job_id = self.submit({"model": kind, "dataset": dataset.name, "seed": config.seed, "trial": trial})
        status = self.poll(job_id)
        self.collect(job_id)
        raise CapabilityError(f"remote job {job_id}: status {status}")


def backend_descriptor(name: str, shots: int | None = None, noise: NoiseParams | None = None, depolarizing: float = 0.0):
    """Resolve a backend name to a runnable handle."""
    if name == "remote-stub":
        return RemoteStubBackend()
    if name not in BACKEND_NAMES:
        raise ConfigurationError(f"unknown backend {name!r}; choose from {', '.join(BACKEND_NAMES)}")
    if name == "photonic" and shots is None:
        shots = 10**5
    return LocalBackend(Backend(name, shots=shots, noise=noise, depolarizing=depolarizing))


# -- experiment configuration -----------------------------------------------------


_DEFAULT_MODELS = {
    "xor_compare": ("QNN2", "ANN2"),
    "iris_batch_compare": ("QNN6", "ANN6"),
    "shot_sweep": ("QNN6",),
    "ed_table": MODEL_KINDS,
    "throughput": (),
    "platform_compare": ("QNN2", "ANN2"),
}


@dataclass
class ExperimentConfig:
    """Everything needed to regenerate one experiment's report files.

    ``dataset`` is ``"xor"``, ``"iris"`` or a path to an ``x0,x1,label`` CSV;
    ``None`` picks the experiment's own dataset.
    """

    experiment: str
    models: tuple[str, ...] | None = None
    train: TrainConfig = field(default_factory=TrainConfig)
    trials: int = 10
    seed: int = 0
    backend: str = "exact"
    shots: int | None = None
    noise: NoiseParams | None = None
    depolarizing: float = 0.01
    shot_counts: tuple[int, ...] = DEFAULT_SHOT_COUNTS
    batch_sizes: tuple[int, ...] = (1, 4)
    dataset: str | None = None
    xor_sigma: float = 0.05
    xor_n_per_cluster: int = 16
    ed: EDConfig = field(default_factory=EDConfig)
    ed_n_values: tuple[float, ...] = DEFAULT_ED_N
    out: str | None = "results"
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.models is None:
            self.models = _DEFAULT_MODELS[self.experiment]
        for m in self.models:
            n_params(m)
        if self.backend not in BACKEND_NAMES:
            raise ConfigurationError(f"unknown backend {self.backend!r}")

    def load_dataset(self) -> Dataset:
        name = self.dataset or ("xor" if self.experiment == "xor_compare" else "iris")
        if name == "xor":
            return gen_xor(self.xor_n_per_cluster, self.xor_sigma, seed=1)
        if name == "iris":
            return load_iris()
        path = Path(name)
        if not path.exists():
            raise ConfigurationError(f"dataset {name!r} does not exist")
        return Dataset.from_csv(path)

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        doc = dict(doc)
        kwargs = {}
        if "train" in doc:
            kwargs["train"] = train_config_from_dict(doc.pop("train"))
        if "noise" in doc and doc["noise"] is not None:
            kwargs["noise"] = NoiseParams(**doc.pop("noise"))
        if "ed" in doc:
            kwargs["ed"] = EDConfig(**doc.pop("ed"))
        for key in ("models", "shot_counts", "batch_sizes", "ed_n_values"):
            if key in doc:
                kwargs[key] = tuple(doc.pop(key))
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**doc, **kwargs)


def train_config_from_dict(doc: dict) -> TrainConfig:
    doc = dict(doc)
    opt_doc = dict(doc.pop("optimizer", {"name": "cobyla"}))
    opt_name = opt_doc.pop("name", "cobyla").lower()
    if opt_name == "cobyla":
        optimizer = Cobyla(**opt_doc)
    elif opt_name == "adam":
        optimizer = Adam(**opt_doc)
    else:
        raise ConfigurationError(f"unknown optimizer {opt_name!r}")
    if "backend" in doc:
        doc["backend"] = Backend.from_dict(doc["backend"])
    if doc.get("init") is not None:
        doc["init"] = np.asarray(doc["init"], dtype=float)
    return TrainConfig(optimizer=optimizer, **doc)


def load_config_file(path) -> dict:
    """Read a JSON or TOML experiment config into a plain dict."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


def trial_seed(master_seed: int, trial: int) -> int:
    """Independent per-trial seed derived from (master seed, trial index)."""
    return int(np.random.SeedSequence([master_seed, trial]).generate_state(1)[0])


# -- running ----------------------------------------------------------------------


@dataclass
class SeriesResult:
    name: str
    traces: list
    stats: RunStatistics | None
    failures: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)


@dataclass
class ExperimentReport:
    experiment: str
    series: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    jobs: list = field(default_factory=list)


def _run_one(handle, kind, dataset, config, trial):
    return handle.run(kind, dataset, config, trial)


def run_series(name: str, handle, kind: str, dataset: Dataset, cfg: ExperimentConfig, train_cfg: TrainConfig) -> SeriesResult:
    """``cfg.trials`` seeded runs of one (model, backend, settings) combination.

    A failing trial is logged and dropped, so ``stats.n`` counts completed
    trials only. Results are ordered by trial index whatever the schedule.
    """
    configs = [replace(train_cfg, seed=trial_seed(cfg.seed, t)) for t in range(cfg.trials)]
    outcomes = []
    if cfg.workers > 1 and isinstance(handle, LocalBackend):
        with ProcessPoolExecutor(cfg.workers) as pool:
            futures = [pool.submit(_run_one, handle, kind, dataset, c, t) for t, c in enumerate(configs)]
            for t, fut in enumerate(futures):
                try:
                    outcomes.append((t, fut.result(), None))
                except Exception as exc:  # noqa: BLE001 - any backend failure drops the trial
                    outcomes.append((t, None, exc))
    else:
        for t, c in enumerate(configs):
            try:
                outcomes.append((t, _run_one(handle, kind, dataset, c, t), None))
            except Exception as exc:  # noqa: BLE001
                outcomes.append((t, None, exc))
    traces = [tr for _, tr, _ in outcomes if tr is not None]
    failures = [f"trial {t}: {exc}" for t, _, exc in outcomes if exc is not None]
    for msg in failures:
        log_.warning("%s: %s", name, msg)
    if failures:
        log_.warning("%s: %d of %d trials failed; aggregating n = %d", name, len(failures), cfg.trials, len(traces))
    stats = summarize(traces) if traces else None
    return SeriesResult(name, traces, stats, failures)


def _train_config(cfg: ExperimentConfig, **overrides) -> TrainConfig:
    return replace(cfg.train, **overrides)


def _handle(cfg: ExperimentConfig, kind: str, name: str | None = None, shots: int | None = None, depolarizing: float | None = None):
    if not kind.startswith("QNN"):
        return backend_descriptor("exact")
    name = name or cfg.backend
    return backend_descriptor(name, shots if shots is not None else cfg.shots, cfg.noise,
                              cfg.depolarizing if depolarizing is None else depolarizing)


def _training_experiment(cfg: ExperimentConfig):
    dataset = cfg.load_dataset()
    plan = []
    if cfg.experiment == "xor_compare":
        for kind in cfg.models:
            plan.append((kind, kind, _handle(cfg, kind), _train_config(cfg), {}))
    elif cfg.experiment == "iris_batch_compare":
        for kind in cfg.models:
            for b in cfg.batch_sizes:
                plan.append((f"{kind}_batch{b}", kind, _handle(cfg, kind), _train_config(cfg, batch_size=b), {"batch_size": b}))
    elif cfg.experiment == "shot_sweep":
        backend = cfg.backend if cfg.backend != "exact" else "photonic"
        for kind in cfg.models:
            for s in cfg.shot_counts:
                plan.append((f"{kind}_shots{s}", kind, _handle(cfg, kind, backend, int(s)), _train_config(cfg), {"shots": int(s)}))
    elif cfg.experiment == "platform_compare":
        for kind in cfg.models:
            if kind.startswith("QNN"):
                plan.append((f"{kind}_photonic", kind, _handle(cfg, kind, "photonic", cfg.shots or 10**5), _train_config(cfg), {}))
                plan.append((f"{kind}_gate_noise", kind, _handle(cfg, kind, "gate_noise", 10**4), _train_config(cfg), {}))
            else:
                plan.append((kind, kind, _handle(cfg, kind), _train_config(cfg), {}))
    report = ExperimentReport(cfg.experiment)
    for name, kind, handle, tcfg, meta in plan:
        res = run_series(name, handle, kind, dataset, cfg, tcfg)
        res.meta = meta
        report.series[name] = res
        if isinstance(handle, RemoteStubBackend):
            report.jobs.extend({"series": name, "job_id": j.job_id, "status": j.status, **j.payload} for j in handle.jobs)
    return report


def _ed_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    report = ExperimentReport(cfg.experiment)
    rows, curves = [], []
    for trial in range(cfg.trials):
        ed_cfg = replace(cfg.ed, seed=trial_seed(cfg.seed, trial))
        for kind in cfg.models:
            fishers = sample_fishers(kind, ed_cfg)
            ed = ed_from_fishers(fishers, ed_cfg.n, ed_cfg.gamma)
            rows.append(ed_rows(kind, ed_cfg, ed))
            for n in cfg.ed_n_values:
                curves.append((kind, trial, ed_cfg.seed, repr(float(n)),
                               repr(normalized_ed(ed_from_fishers(fishers, n, ed_cfg.gamma), n_params(kind)))))
    report.tables["ed_table"] = (ED_COLUMNS, rows)
    report.tables["ed_convergence"] = (("model", "trial", "seed", "n", "normalized_ed"), curves)
    return report


THROUGHPUT_COLUMNS = ("scenario", "rep_rate_hz", "transmittance", "gate_success", "brightness", "net_shot_rate_hz")


def throughput_table(noise: NoiseParams | None = None) -> list[tuple]:
    """Net accepted-shot rates for the current and projected photonic sources.

    The gate-limited superconducting row uses 4 gates of 100 ns and no
    readout or reset overhead, so it is an upper bound rather than a
    measured rate.
    """
    noise = noise or NoiseParams()
    rows = []
    for scenario, rep, t, bright in (("photonic_current", 80e6, noise.transmittance, None),
                                     ("photonic_current_with_brightness", 80e6, noise.transmittance, noise.brightness),
                                     ("photonic_projected", 320e6, 0.27, None)):
        rate = net_shot_rate(rep, t, 1 / 9, bright)
        rows.append((scenario, repr(rep), repr(t), repr(1 / 9), "" if bright is None else repr(bright), repr(rate)))
    rows.append(("superconducting_gate_limited", "", "", "1.0", "", repr(gate_limited_shot_rate(100e-9, 4))))
    return rows


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run one experiment and, when ``cfg.out`` is set, write its report files."""
    if cfg.experiment == "ed_table":
        report = _ed_experiment(cfg)
    elif cfg.experiment == "throughput":
        report = ExperimentReport(cfg.experiment)
        report.tables["throughput"] = (THROUGHPUT_COLUMNS, throughput_table(cfg.noise))
    else:
        report = _training_experiment(cfg)
    if cfg.out is not None:
        write_report(report, Path(cfg.out) / cfg.experiment)
    return report


# -- report files -----------------------------------------------------------------


def _curve(label, x, m: Moments) -> svg.Curve:
    return svg.Curve(label, np.asarray(x, dtype=float), np.asarray(m.mean, dtype=float), np.asarray(m.std, dtype=float))


def _series_panels(title: str, results) -> list:
    loss = [_curve(r.name, r.stats.iterations, r.stats.loss) for r in results]
    acc = [_curve(r.name, r.stats.iterations, r.stats.accuracy) for r in results]
    return [svg.Panel(f"{title}: loss", "iteration", "cross-entropy loss", loss, hline=log(2)),
            svg.Panel(f"{title}: accuracy", "iteration", "accuracy", acc)]


def write_report(report: ExperimentReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    done = [r for r in report.series.values() if r.stats is not None]
    for res in report.series.values():
        if res.traces:
            p = out / f"{res.name}_traces.csv"
            traces_to_csv(res.traces, p)
            files.append(p)
        if res.stats is None:
            continue
        p = out / f"{res.name}.csv"
        stats_to_csv(res.stats, p)
        files.append(p)
        p = out / f"{res.name}.svg"
        svg.render(_series_panels(res.name, [res]), p)
        files.append(p)
    if report.series:
        rows = []
        for res in report.series.values():
            if res.stats is not None:
                rows.append(final_row(res.name, res.stats))
            else:
                rows.append((res.name, 0) + ("",) * (len(FINAL_COLUMNS) - 2))
        p = out / "finals.csv"
        _write_csv(FINAL_COLUMNS, rows, p)
        files.append(p)
        failures = [(res.name, msg) for res in report.series.values() for msg in res.failures]
        if failures:
            p = out / "failures.csv"
            _write_csv(("series", "message"), failures, p)
            files.append(p)
    if done:
        p = out / "overview.svg"
        svg.render(_series_panels(report.experiment, done), p)
        files.append(p)
    if report.experiment == "shot_sweep" and done:
        files.extend(_write_shot_summary(report, out))
    if report.jobs:
        p = out / "jobs.json"
        p.write_text(json.dumps(report.jobs, indent=2, sort_keys=True) + "\n")
        files.append(p)
    for name, (header, rows) in report.tables.items():
        p = out / f"{name}.csv"
        _write_csv(header, rows, p)
        files.append(p)
    if "ed_convergence" in report.tables:
        files.append(_write_ed_plot(report, out))
    report.files = files
    return files


SHOT_SUMMARY_COLUMNS = ("model", "shots") + FINAL_COLUMNS[1:]


def _write_shot_summary(report: ExperimentReport, out: Path) -> list[Path]:
    by_model: dict[str, list] = {}
    rows = []
    for res in report.series.values():
        if res.stats is None:
            continue
        kind = res.traces[0].model
        by_model.setdefault(kind, []).append(res)
        rows.append((kind, res.meta["shots"], *final_row(res.name, res.stats)[1:]))
    p_csv = out / "summary.csv"
    _write_csv(SHOT_SUMMARY_COLUMNS, rows, p_csv)
    panels = []
    for label, attr in (("final loss", "final_loss"), ("final accuracy", "final_accuracy")):
        curves = []
        for kind, results in by_model.items():
            shots = [r.meta["shots"] for r in results]
            m = [getattr(r.stats, attr) for r in results]
            mean = np.array([float(x.mean) for x in m])
            ci = np.array([float(np.nan_to_num(x.ci95)) for x in m])
            curves.append(svg.Curve(kind, np.array(shots, dtype=float), mean, ci))
        panels.append(svg.Panel(f"{label} vs shots (95% CI)", "shots", label, curves, logx=True,
                                hline=log(2) if attr == "final_loss" else None))
    std_curves = []
    for kind, results in by_model.items():
        shots = np.array([r.meta["shots"] for r in results], dtype=float)
        std_curves.append(svg.Curve(f"{kind} loss", shots, np.array([float(np.nan_to_num(r.stats.final_loss.std_scaled)) for r in results])))
        std_curves.append(svg.Curve(f"{kind} accuracy", shots, np.array([float(np.nan_to_num(r.stats.final_accuracy.std_scaled)) for r in results])))
    panels.append(svg.Panel("std / sqrt(n-1) vs shots", "shots", "scaled std", std_curves, logx=True))
    p_svg = out / "summary.svg"
    svg.render(panels, p_svg)
    return [p_csv, p_svg]


def _write_ed_plot(report: ExperimentReport, out: Path) -> Path:
    _, rows = report.tables["ed_convergence"]
    curves = []
    for kind in dict.fromkeys(r[0] for r in rows):
        sel = [r for r in rows if r[0] == kind]
        ns = sorted({float(r[3]) for r in sel})
        vals = np.array([[float(r[4]) for r in sel if float(r[3]) == n] for n in ns])
        std = vals.std(axis=1, ddof=1) if vals.shape[1] > 1 else np.zeros(len(ns))
        curves.append(svg.Curve(kind, np.array(ns), vals.mean(axis=1), std))
    p = out / "ed_convergence.svg"
    svg.render([svg.Panel("normalized effective dimension", "n", "ED / d", curves, logx=True)], p)
    return p


__all__ = [
    "EXPERIMENTS", "BACKEND_NAMES", "TRACE_COLUMNS", "Moments", "RunStatistics", "moments", "summarize",
    "backend_descriptor", "LocalBackend", "RemoteStubBackend", "ExperimentConfig", "ExperimentReport",
    "run_experiment", "run_series", "trial_seed", "load_config_file", "train_config_from_dict", "throughput_table",
]
