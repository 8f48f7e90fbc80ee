"""Dataset generation, binary persistence, metrics and experiment drivers."""
from __future__ import annotations

import csv
import logging
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import fem
from .config import RunConfig
from .grid import StructuredMesh, build_mesh, coarse_sparsity_pattern, side_from_pattern_length
from .homogenize import EffectiveTensorField, HomogenizationError, effective_field
from .randfield import CovarianceSpec, KLEBasis, build_kle_basis, sample_field, to_feature_vector
from .richards import (PicardConfig, TimeGrid, picard_solve_steady, picard_solve_transient,
                       solve_from_predicted_system)

log = logging.getLogger(__name__)

MAGIC = b"RHDS"
DATASET_VERSION = 1
_HEAD_U32 = struct.Struct("<14I")
_HEAD_F64 = struct.Struct("<8d")


def steady_source(x):
    return np.ones(len(x))


def transient_source(t, x):
    return np.cos(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Workspace:
    """Meshes, KLE basis and solver settings derived from a :class:`RunConfig`."""

    config: RunConfig
    fine: StructuredMesh
    coarse: StructuredMesh
    basis: KLEBasis
    mass: object = field(repr=False)
    unit_stiffness: object = field(repr=False)

    @property
    def time(self) -> TimeGrid:
        return TimeGrid(self.config.terminal_time, self.config.time_steps)

    @property
    def picard(self) -> PicardConfig:
        return PicardConfig(self.config.picard_tol, self.config.picard_max)

    @property
    def pattern_length(self) -> int:
        return len(coarse_sparsity_pattern(self.coarse))


def build_workspace(config: RunConfig) -> Workspace:
    fine, coarse = build_mesh(config.fine_side), build_mesh(config.coarse_side)
    basis = build_kle_basis(CovarianceSpec(config.sigma2, config.eta1, config.eta2),
                            config.kle_grid, config.energy_threshold)
    return Workspace(config, fine, coarse, basis, fem.assemble_mass(coarse),
                     fem.assemble_stiffness(coarse, np.ones(coarse.n_triangles)))


@dataclass
class DatasetHeader:
    n_samples: int
    feature_dim: int
    kappa_dim: int
    matrix_dim: int
    rhs_dim: int
    recorded_steps: tuple[int, ...]
    has_steady: bool
    coarse_side: int
    fine_side: int
    time_steps: int
    picard_max: int
    kle_grid: int
    base_seed: int
    sigma2: float
    eta1: float
    eta2: float
    kappa_min: float
    kappa_max: float
    terminal_time: float
    picard_tol: float
    energy_threshold: float
    version: int = DATASET_VERSION

    @property
    def record_length(self) -> int:
        return (2 + self.feature_dim + self.kappa_dim + (self.matrix_dim if self.has_steady else 0)
                + len(self.recorded_steps) * (self.matrix_dim + self.rhs_dim))

    @classmethod
    def for_config(cls, cfg: RunConfig, base_seed: int, n_samples: int = 0) -> "DatasetHeader":
        n = cfg.coarse_side
        return cls(n_samples, 256, 4 * n * n, (2 * n + 1) ** 2, (n + 1) ** 2,
                   tuple(cfg.record_steps), cfg.steady, n, cfg.fine_side, cfg.time_steps,
                   cfg.picard_max, cfg.kle_grid, base_seed, cfg.sigma2, cfg.eta1, cfg.eta2,
                   cfg.kappa_min, cfg.kappa_max, cfg.terminal_time, cfg.picard_tol,
                   cfg.energy_threshold)

    def pack(self) -> bytes:
        u = _HEAD_U32.pack(self.version, self.n_samples, self.feature_dim, self.kappa_dim,
                           self.matrix_dim, self.rhs_dim, len(self.recorded_steps),
                           int(self.has_steady), self.coarse_side, self.fine_side,
                           self.time_steps, self.picard_max, self.kle_grid, self.base_seed)
        steps = struct.pack(f"<{len(self.recorded_steps)}I", *self.recorded_steps)
        f = _HEAD_F64.pack(self.sigma2, self.eta1, self.eta2, self.kappa_min, self.kappa_max,
                           self.terminal_time, self.picard_tol, self.energy_threshold)
        return MAGIC + u + steps + f

    @classmethod
    def unpack(cls, fh) -> "DatasetHeader":
        magic = fh.read(4)
        if magic != MAGIC:
            raise DatasetFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        raw = fh.read(_HEAD_U32.size)
        if len(raw) != _HEAD_U32.size:
            raise DatasetFormatError("truncated header")
        (version, n, fdim, kdim, mdim, rdim, nrec, steady, cside, fside,
         tsteps, pmax, kgrid, seed) = _HEAD_U32.unpack(raw)
        if version != DATASET_VERSION:
            raise DatasetFormatError(f"unsupported dataset version {version}")
        raw = fh.read(4 * nrec)
        if len(raw) != 4 * nrec:
            raise DatasetFormatError("truncated header")
        steps = struct.unpack(f"<{nrec}I", raw)
        raw = fh.read(_HEAD_F64.size)
        if len(raw) != _HEAD_F64.size:
            raise DatasetFormatError("truncated header")
        floats = _HEAD_F64.unpack(raw)
        return cls(n, fdim, kdim, mdim, rdim, tuple(steps), bool(steady), cside, fside, tsteps,
                   pmax, kgrid, seed, *floats, version=version)

    def run_config(self, base: RunConfig | None = None) -> RunConfig:
        base = base or RunConfig()
        return base.replace(fine_side=self.fine_side, coarse_side=self.coarse_side,
                            sigma2=self.sigma2, eta1=self.eta1, eta2=self.eta2,
                            kle_grid=self.kle_grid, energy_threshold=self.energy_threshold,
                            kappa_min=self.kappa_min, kappa_max=self.kappa_max,
                            picard_tol=self.picard_tol, picard_max=self.picard_max,
                            terminal_time=self.terminal_time, time_steps=self.time_steps,
                            record_steps=tuple(self.recorded_steps), steady=self.has_steady)


@dataclass
class SampleRecord:
    sample_id: int
    seed: int
    features: np.ndarray
    kappa: np.ndarray
    steady_matrix: np.ndarray | None
    matrix: np.ndarray  # (n_recorded, P)
    rhs: np.ndarray  # (n_recorded, n_nodes)

    def flat(self) -> np.ndarray:
        parts = [np.array([self.sample_id, self.seed], dtype=float), self.features, self.kappa]
        if self.steady_matrix is not None:
            parts.append(self.steady_matrix)
        for m, b in zip(self.matrix, self.rhs):
            parts += [m, b]
        out = np.concatenate(parts).astype("<f8")
        if not np.all(np.isfinite(out)):
            raise FloatingPointError(f"sample {self.sample_id} has non-finite entries")
        return out


@dataclass
class Dataset:
    header: DatasetHeader
    sample_ids: np.ndarray
    seeds: np.ndarray
    features: np.ndarray
    kappa: np.ndarray
    steady_matrix: np.ndarray | None
    matrix: np.ndarray  # (n, n_recorded, P)
    rhs: np.ndarray  # (n, n_recorded, n_nodes)
    skipped: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.sample_ids)

    def step_index(self, step: int) -> int:
        try:
            return self.header.recorded_steps.index(int(step))
        except ValueError:
            raise KeyError(f"time step {step} was not recorded; have {self.header.recorded_steps}") from None

    def record(self, i: int) -> SampleRecord:
        return SampleRecord(int(self.sample_ids[i]), int(self.seeds[i]), self.features[i],
                            self.kappa[i], None if self.steady_matrix is None else self.steady_matrix[i],
                            self.matrix[i], self.rhs[i])

    def targets(self, kind: str, step=None) -> np.ndarray:
        if kind == "kappa":
            return self.kappa
        if kind == "matrix" and step in (None, "steady", 0):
            if self.steady_matrix is None:
                raise KeyError("dataset has no steady matrix targets")
            return self.steady_matrix
        if kind == "matrix":
            return self.matrix[:, self.step_index(step)]
        if kind == "rhs":
            if step is None:
                raise KeyError("rhs targets need a time step")
            return self.rhs[:, self.step_index(step)]
        raise KeyError(f"unknown target kind {kind!r}")

    @classmethod
    def from_records(cls, header: DatasetHeader, records: list[SampleRecord]) -> "Dataset":
        nrec = len(header.recorded_steps)
        n = len(records)
        steady = (np.stack([r.steady_matrix for r in records]) if header.has_steady and n
                  else (np.empty((0, header.matrix_dim)) if header.has_steady else None))
        return cls(header,
                   np.array([r.sample_id for r in records], dtype=np.int64),
                   np.array([r.seed for r in records], dtype=np.int64),
                   np.stack([r.features for r in records]) if n else np.empty((0, header.feature_dim)),
                   np.stack([r.kappa for r in records]) if n else np.empty((0, header.kappa_dim)),
                   steady,
                   np.stack([r.matrix for r in records]) if n else np.empty((0, nrec, header.matrix_dim)),
                   np.stack([r.rhs for r in records]) if n else np.empty((0, nrec, header.rhs_dim)))


def compute_sample(ws: Workspace, sample_id: int, seed: int) -> SampleRecord:
    cfg = ws.config
    fld = sample_field(ws.basis, seed, (cfg.kappa_min, cfg.kappa_max), ws.fine)
    eff = effective_field(fld, ws.fine, ws.coarse)
    steady = None
    if cfg.steady:
        _, tr = picard_solve_steady(ws.coarse, eff, steady_source, ws.picard)
        steady = tr.snapshots[0].matrix
    steps = tuple(cfg.record_steps)
    if steps:
        _, tr = picard_solve_transient(ws.coarse, eff, transient_source, ws.time, ws.picard, steps)
        matrix = np.stack([tr.snapshots[s].matrix for s in steps])
        rhs = np.stack([tr.snapshots[s].rhs for s in steps])
    else:
        matrix = np.empty((0, ws.pattern_length))
        rhs = np.empty((0, ws.coarse.n_nodes))
    return SampleRecord(sample_id, seed, to_feature_vector(fld), eff.vector256, steady, matrix, rhs)


_WORKER_WS: Workspace | None = None


def _init_worker(config: RunConfig):
    global _WORKER_WS
    _WORKER_WS = build_workspace(config)


def _worker(args):
    sample_id, seed = args
    try:
        return sample_id, compute_sample(_WORKER_WS, sample_id, seed), None
    except (fem.SolverError, HomogenizationError, FloatingPointError, ValueError) as exc:
        return sample_id, None, f"{type(exc).__name__}: {exc}"


def generate_dataset(count: int, base_seed: int, config: RunConfig, path=None,
                     workers: int = 1, progress=None) -> Dataset:
    """Sample ``count`` fields (seeds ``base_seed + i``) and compute all targets.

    Records are written in sample order whatever the worker count.  Samples
    whose solves fail are skipped and listed in ``Dataset.skipped``.
    """
    if count < 1:
        raise ValueError("count must be positive")
    if base_seed < 0 or base_seed + count >= 2**32:
        raise ValueError("seeds must fit in 32 bits")
    header = DatasetHeader.for_config(config, base_seed)
    jobs = [(i, base_seed + i) for i in range(count)]
    records, skipped = [], []

    if workers > 1:
        import multiprocessing as mp
        pool = mp.Pool(workers, initializer=_init_worker, initargs=(config,))
        results = pool.imap(_worker, jobs, chunksize=4)
    else:
        _init_worker(config)
        pool = None
        results = map(_worker, jobs)
    try:
        for sample_id, rec, err in results:
            if rec is None:
                log.warning("sample %d skipped: %s", sample_id, err)
                skipped.append(sample_id)
            else:
                records.append(rec)
            if progress is not None:
                progress(sample_id + 1, count)
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    if skipped:
        log.warning("%d of %d samples failed; dataset holds %d", len(skipped), count, len(records))
    header.n_samples = len(records)
    ds = Dataset.from_records(header, records)
    ds.skipped = skipped
    if path is not None:
        write_dataset(path, ds)
    return ds


def write_dataset(path, ds: Dataset) -> None:
    with open(path, "wb") as fh:
        fh.write(ds.header.pack())
        for i in range(len(ds)):
            fh.write(ds.record(i).flat().tobytes())


def read_dataset(path) -> Dataset:
    with open(path, "rb") as fh:
        header = DatasetHeader.unpack(fh)
        payload = fh.read()
    stride = header.record_length
    if len(payload) != 8 * stride * header.n_samples:
        raise DatasetFormatError(
            f"payload holds {len(payload)} bytes, expected {8 * stride * header.n_samples}")
    data = np.frombuffer(payload, dtype="<f8").reshape(header.n_samples, stride).astype(float)
    n, nrec = header.n_samples, len(header.recorded_steps)
    pos = 2
    feats = data[:, pos:pos + header.feature_dim]; pos += header.feature_dim
    kappa = data[:, pos:pos + header.kappa_dim]; pos += header.kappa_dim
    steady = None
    if header.has_steady:
        steady = data[:, pos:pos + header.matrix_dim]; pos += header.matrix_dim
    blocks = data[:, pos:].reshape(n, nrec, header.matrix_dim + header.rhs_dim)
    return Dataset(header, data[:, 0].astype(np.int64), data[:, 1].astype(np.int64),
                   feats.copy(), kappa.copy(), None if steady is None else steady.copy(),
                   blocks[:, :, :header.matrix_dim].copy(), blocks[:, :, header.matrix_dim:].copy())


def split_indices(n: int, test_fraction: float = 1.0 / 6.0, seed: int = 0):
    """Seeded disjoint (train, test) index arrays; test keeps its shuffled order."""
    n_test = int(round(n * test_fraction))
    if not 0 < n_test < n:
        raise ValueError(f"cannot split {n} samples with test fraction {test_fraction}")
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[n_test:]), perm[:n_test]


# metrics ----------------------------------------------------------------------

def _matrix_weights(length: int) -> np.ndarray:
    side = side_from_pattern_length(length)
    pat = np.asarray(coarse_sparsity_pattern(build_mesh(side)))
    return np.where(pat[:, 0] == pat[:, 1], 1.0, 2.0)


def relative_l2_errors(pred, target, kind: str = "vector"):
    """Relative errors per sample (rows) or for one vector.

    ``tensor`` and ``matrix`` use the Frobenius norm of the devectorised
    object (a pattern vector counts each off-diagonal entry twice);
    ``vector`` is Euclidean.
    """
    pred, target = np.asarray(pred, dtype=float), np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    if kind in ("tensor", "vector"):
        w = np.ones(target.shape[-1])
    elif kind == "matrix":
        w = _matrix_weights(target.shape[-1])
    else:
        raise ValueError(f"unknown kind {kind!r}")
    num = np.sqrt(np.sum(w * (pred - target) ** 2, axis=-1))
    den = np.sqrt(np.sum(w * target**2, axis=-1))
    if np.any(den == 0):
        raise ZeroDivisionError("target has zero norm")
    out = num / den
    return float(out) if np.ndim(out) == 0 else out


def rmse(pred_batch, target_batch) -> float:
    """``sqrt(sum ||p - y||^2 / sum ||y||^2)`` over a batch."""
    from .surrogate import relative_rmse
    p, y = np.asarray(pred_batch, dtype=float), np.asarray(target_batch, dtype=float)
    if p.shape[0] != y.shape[0]:
        raise ValueError("batches differ in length")
    return relative_rmse(p, y)


def solution_errors(p_pred, p_ref, mesh: StructuredMesh, mass=None, stiffness=None):
    """Relative L2 error and relative H1-seminorm error."""
    d = np.asarray(p_pred, dtype=float) - np.asarray(p_ref, dtype=float)
    dl2, dh1 = fem.discrete_norms(mesh, d, mass, stiffness)
    rl2, rh1 = fem.discrete_norms(mesh, p_ref, mass, stiffness)
    if rl2 == 0 or rh1 == 0:
        raise ZeroDivisionError("reference solution has zero norm")
    return dl2 / rl2, dh1 / rh1


@dataclass
class MetricsReport:
    name: str
    sample_ids: np.ndarray
    errors: np.ndarray

    @property
    def min(self) -> float:
        return float(np.nanmin(self.errors))

    @property
    def max(self) -> float:
        return float(np.nanmax(self.errors))

    @property
    def mean(self) -> float:
        return float(np.nanmean(self.errors))

    @property
    def one_sample(self) -> float:
        return float(self.errors[0])

    @property
    def failures(self) -> int:
        return int(np.sum(~np.isfinite(self.errors)))

    def summary(self) -> dict:
        return {"metric": self.name, "min": self.min, "max": self.max, "mean": self.mean,
                "one_sample": self.one_sample, "failures": self.failures}


class TargetOracle:
    """Stand-in model that returns the exact targets for known feature rows."""

    def __init__(self, features, targets):
        self._table = {np.asarray(f, dtype=float).tobytes(): np.asarray(t, dtype=float)
                       for f, t in zip(features, targets)}

    def predict(self, X) -> np.ndarray:
        return np.stack([self._table[np.asarray(x, dtype=float).tobytes()] for x in np.atleast_2d(X)])


@dataclass
class ExperimentResult:
    reports: dict[str, MetricsReport]
    rows: list[dict]
    solutions: dict[str, np.ndarray] = field(default_factory=dict)  # designated sample


def _try_solve(fn, what, sid):
    try:
        return fn()
    except fem.SolverError as exc:
        log.warning("sample %d: %s solve failed (%s)", sid, what, exc)
        return None


def _errs(p, ref, ws):
    if p is None:
        return (math.nan, math.nan)
    return solution_errors(p, ref, ws.coarse, ws.mass, ws.unit_stiffness)


def _collect(rows, ids, names) -> dict[str, MetricsReport]:
    return {k: MetricsReport(k, ids, np.array([r[k] for r in rows], dtype=float))
            for k in names if all(k in r for r in rows)}


def run_steady_experiment(ds: Dataset, kappa_model, matrix_model, test_idx, ws: Workspace) -> ExperimentResult:
    """Steady f = 1 problem: homogenized reference vs. predicted-tensor and predicted-matrix solves."""
    test_idx = np.asarray(test_idx)
    X = ds.features[test_idx]
    kp = kappa_model.predict(X) if kappa_model is not None else None
    mp = matrix_model.predict(X) if matrix_model is not None else None
    load = fem.assemble_load(ws.coarse, steady_source)
    side = ws.coarse.n_side
    rows, sols = [], {}
    for j, i in enumerate(test_idx):
        sid = int(ds.sample_ids[i])
        row = {"sample_id": sid}
        ref_field = EffectiveTensorField.from_vector(ds.kappa[i], side)
        p_ref, _ = picard_solve_steady(ws.coarse, ref_field, steady_source, ws.picard)
        if j == 0:
            sols["reference"] = p_ref
        if kp is not None:
            row["e_kappa"] = relative_l2_errors(kp[j], ds.kappa[i], "tensor")
            pe = _try_solve(lambda: picard_solve_steady(
                ws.coarse, EffectiveTensorField.from_vector(kp[j], side), steady_source, ws.picard)[0],
                "predicted-tensor", sid)
            row["eE_L2"], row["eE_H1"] = _errs(pe, p_ref, ws)
            if j == 0 and pe is not None:
                sols["E"] = pe
        if mp is not None:
            row["e_matrix"] = relative_l2_errors(mp[j], ds.steady_matrix[i], "matrix")
            pa = _try_solve(lambda: solve_from_predicted_system(ws.coarse, mp[j], load),
                            "predicted-matrix", sid)
            row["eA_L2"], row["eA_H1"] = _errs(pa, p_ref, ws)
            if j == 0 and pa is not None:
                sols["A"] = pa
        rows.append(row)
    ids = ds.sample_ids[test_idx]
    names = ["e_kappa", "e_matrix", "eE_L2", "eE_H1", "eA_L2", "eA_H1"]
    return ExperimentResult(_collect(rows, ids, names), rows, sols)


def run_transient_experiment(ds: Dataset, kappa_model, step_models: dict, test_idx,
                             ws: Workspace) -> ExperimentResult:
    """Time-dependent problem.

    ``step_models`` maps a recorded step to ``(matrix_model, rhs_model)``.
    Per-step keys are suffixed ``_step{k}``; the unsuffixed solution errors
    refer to the final time step.
    """
    test_idx = np.asarray(test_idx)
    X = ds.features[test_idx]
    steps = tuple(ds.header.recorded_steps)
    final = ws.time.step_count
    kp = kappa_model.predict(X) if kappa_model is not None else None
    preds = {k: (mm.predict(X), rm.predict(X)) for k, (mm, rm) in sorted(step_models.items())}
    for k in preds:
        ds.step_index(k)
    side = ws.coarse.n_side
    tau = ws.time.tau
    rec_steps = tuple(sorted(set(steps) | {final}))
    rows, sols = [], {}
    for j, i in enumerate(test_idx):
        sid = int(ds.sample_ids[i])
        row = {"sample_id": sid}
        ref_field = EffectiveTensorField.from_vector(ds.kappa[i], side)
        _, tr_ref = picard_solve_transient(ws.coarse, ref_field, transient_source, ws.time,
                                           ws.picard, rec_steps)
        if j == 0:
            sols["reference"] = tr_ref.snapshots[final].solution
        if kp is not None:
            row["e_kappa"] = relative_l2_errors(kp[j], ds.kappa[i], "tensor")
            tr_e = _try_solve(lambda: picard_solve_transient(
                ws.coarse, EffectiveTensorField.from_vector(kp[j], side), transient_source,
                ws.time, ws.picard, rec_steps)[1], "predicted-tensor", sid)
            for k in rec_steps:
                pe = None if tr_e is None else tr_e.snapshots[k].solution
                el2, eh1 = _errs(pe, tr_ref.snapshots[k].solution, ws)
                row[f"eE_L2_step{k}"], row[f"eE_H1_step{k}"] = el2, eh1
                if k == final:
                    row["eE_L2"], row["eE_H1"] = el2, eh1
                    if j == 0 and pe is not None:
                        sols["E"] = pe
        for k, (mpred, bpred) in preds.items():
            s = ds.step_index(k)
            row[f"e_matrix_step{k}"] = relative_l2_errors(mpred[j], ds.matrix[i, s], "matrix")
            row[f"e_b_step{k}"] = relative_l2_errors(bpred[j], ds.rhs[i, s], "vector")
            pa = _try_solve(lambda: solve_from_predicted_system(ws.coarse, mpred[j], bpred[j], tau, ws.mass),
                            f"predicted-system step {k}", sid)
            el2, eh1 = _errs(pa, tr_ref.snapshots[k].solution, ws)
            row[f"eA_L2_step{k}"], row[f"eA_H1_step{k}"] = el2, eh1
            if k == final:
                row["eA_L2"], row["eA_H1"] = el2, eh1
                if j == 0 and pa is not None:
                    sols["A"] = pa
        rows.append(row)
    ids = ds.sample_ids[test_idx]
    names = ["e_kappa"]
    names += [f"e_matrix_step{k}" for k in preds] + [f"e_b_step{k}" for k in preds]
    names += ["eE_L2", "eE_H1", "eA_L2", "eA_H1"]
    for k in rec_steps:
        names += [f"eE_L2_step{k}", f"eE_H1_step{k}", f"eA_L2_step{k}", f"eA_H1_step{k}"]
    return ExperimentResult(_collect(rows, ids, names), rows, sols)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_rows_csv(path, rows: list[dict], preferred: list[str] | None = None) -> None:
    keys = ["sample_id"]
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    if preferred:
        keys = ["sample_id"] + [k for k in preferred if k in keys] + \
               [k for k in keys[1:] if k not in preferred]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for r in rows:
            w.writerow([_fmt(r[k]) if k in r else "" for k in keys])


def write_summary_csv(path, reports: dict[str, MetricsReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "min", "max", "mean", "one_sample", "failures"])
        for rep in reports.values():
            s = rep.summary()
            w.writerow([s["metric"], _fmt(s["min"]), _fmt(s["max"]), _fmt(s["mean"]),
                        _fmt(s["one_sample"]), s["failures"]])
