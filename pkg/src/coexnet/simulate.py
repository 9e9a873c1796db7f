"""Monte Carlo study of how well the uncertainty index is recovered.

A fitted decomposable covariance is held fixed, data sets of several sizes
are drawn from it, each is refitted and re-clustered with the reference DE
labels, and the squared deviation of every DE gene's ``rho`` from its
reference value is averaged.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cluster import cluster_network
from .data import DataMatrix
from .errors import CoexnetError, NotPositiveDefinite
from .search import SearchConfig, fit_decomposable

logger = logging.getLogger(__name__)

__all__ = [
    "SimulationPlan",
    "MseReport",
    "PRESETS",
    "sample_mvn",
    "replicate_mse",
    "run_study",
    "reference_plan",
    "synthetic_reference_data",
    "top_variance",
]

PRESETS = {
    "toy": {"sample_sizes": (10, 50, 200), "replicates": 50},
    "desk": {"sample_sizes": (10, 50, 100, 150, 250), "replicates": 50},
    "full": {"sample_sizes": tuple(range(10, 251, 10)), "replicates": 500},
}


def sample_mvn(sigma, n: int, seed=None, names: Sequence[str] = (), de_labels=None) -> DataMatrix:
    """``n`` draws from ``N(0, sigma)`` through the Cholesky factor of ``sigma``."""
    sigma = np.asarray(sigma, dtype=np.float64)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("simulation covariance is not positive definite") from None
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, sigma.shape[0]))
    return DataMatrix(z @ chol.T, tuple(names), de_labels)


@dataclass(frozen=True, eq=False)
class SimulationPlan:
    """Fixed covariance, reference indices and the replication grid.

    ``reference_rho`` holds NaN for non-DE genes; ``labels`` are the frozen
    DE flags used for every replicate.
    """

    sigma: np.ndarray
    reference_rho: np.ndarray
    labels: np.ndarray
    sample_sizes: tuple[int, ...] = PRESETS["desk"]["sample_sizes"]
    replicates: int = 50
    seed: int = 0
    alpha: float | None = None
    config: SearchConfig = field(default_factory=SearchConfig)

    def __post_init__(self):
        if any(n <= 1 for n in self.sample_sizes):
            raise ValueError("sample sizes must exceed one")
        if self.replicates < 1:
            raise ValueError("replicates must be positive")
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))


@dataclass
class MseReport:
    """Per sample size: mean over replicates of the per-gene mean squared deviation."""

    sample_sizes: list[int]
    mse: list[float]
    stderr: list[float]
    replicates: list[int]
    failures: list[int]
    values: dict[int, list[float]] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "mse", "stderr", "replicates", "failures"])
        for row in zip(self.sample_sizes, self.mse, self.stderr, self.replicates, self.failures):
            w.writerow([row[0], repr(row[1]), repr(row[2]), row[3], row[4]])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "format": "coexnet.mse/1",
            "rows": [
                {"n": n, "mse": m, "stderr": s, "replicates": r, "failures": f}
                for n, m, s, r, f in zip(self.sample_sizes, self.mse, self.stderr, self.replicates, self.failures)
            ],
            "values": {str(n): v for n, v in self.values.items()},
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "MseReport":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(
            [int(r["n"]) for r in rows],
            [float(r["mse"]) for r in rows],
            [float(r["stderr"]) for r in rows],
            [int(r["replicates"]) for r in rows],
            [int(r["failures"]) for r in rows],
        )

    @classmethod
    def from_json(cls, text: str) -> "MseReport":
        doc = json.loads(text)
        if doc.get("format") != "coexnet.mse/1":
            raise ValueError(f"unsupported report format {doc.get('format')!r}")
        rows = doc["rows"]
        return cls(
            [r["n"] for r in rows],
            [r["mse"] for r in rows],
            [r["stderr"] for r in rows],
            [r["replicates"] for r in rows],
            [r["failures"] for r in rows],
            {int(k): v for k, v in doc["values"].items()},
        )


def replicate_mse(plan: SimulationPlan, n: int, rep: int) -> float:
    """Squared-deviation average for one simulated data set.

    The random stream is derived from ``(seed, n, rep)`` alone.
    """
    data = sample_mvn(plan.sigma, n, (plan.seed, n, rep), de_labels=plan.labels)
    model, _ = fit_decomposable(data, plan.config)
    _, genes = cluster_network(model.graph, plan.labels, plan.alpha, model.sequence)
    rho = np.full(len(plan.labels), np.nan)
    for g in genes:
        rho[g.vertex] = g.rho
    de = plan.labels
    return float(np.mean((rho[de] - plan.reference_rho[de]) ** 2))


def _job(args):
    plan, n, rep = args
    try:
        return replicate_mse(plan, n, rep), None
    except CoexnetError as exc:
        return None, f"n={n} replicate {rep}: {exc}"


def run_study(plan: SimulationPlan, workers: int = 1) -> MseReport:
    """Run every replicate of the plan; failed replicates are logged and skipped.

    Results do not depend on ``workers``: each replicate owns its random
    stream and aggregation follows the plan order.
    """
    jobs = [(plan, n, rep) for n in plan.sample_sizes for rep in range(plan.replicates)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_job(j) for j in jobs]
    report = MseReport([], [], [], [], [])
    for k, n in enumerate(plan.sample_sizes):
        chunk = results[k * plan.replicates:(k + 1) * plan.replicates]
        vals = [v for v, _ in chunk if v is not None]
        for _, err in chunk:
            if err is not None:
                logger.warning("replicate failed: %s", err)
        m = float(np.mean(vals)) if vals else float("nan")
        se = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else float("nan")
        report.sample_sizes.append(n)
        report.mse.append(m)
        report.stderr.append(se)
        report.replicates.append(len(vals))
        report.failures.append(len(chunk) - len(vals))
        report.values[n] = vals
    return report


def reference_plan(data: DataMatrix, cfg: SearchConfig | None = None, **plan_kwargs) -> tuple[SimulationPlan, object]:
    """Fit the reference network on ``data`` and build a plan around it.

    Returns the plan and the fitted reference model (with ``sigma_hat``).
    """
    cfg = cfg or SearchConfig()
    model, _ = fit_decomposable(data, cfg)
    model = model.with_covariance(data)
    sigma = model.sigma_hat
    _, genes = cluster_network(model.graph, data.de_labels, plan_kwargs.get("alpha"), model.sequence)
    ref = np.full(data.p, np.nan)
    for g in genes:
        ref[g.vertex] = g.rho
    plan = SimulationPlan(sigma=sigma, reference_rho=ref, labels=np.array(data.de_labels), config=cfg, **plan_kwargs)
    return plan, model


def top_variance(data: DataMatrix, k: int) -> DataMatrix:
    """Keep the ``k`` columns with the largest sample variance, in original order."""
    idx = np.sort(np.argsort(-data.values.var(axis=0), kind="stable")[:k])
    return DataMatrix(data.values[:, idx], tuple(data.names[j] for j in idx), data.de_labels[idx])


def synthetic_reference_data(
    p: int = 200, n: int = 100, module_size: int = 10, de_fraction: float = 0.4, seed: int = 0
) -> DataMatrix:
    """Modular expression-like data with DE labels for desk-scale studies.

    Variables come in modules driven by a shared latent factor plus a chain
    of local dependencies; roughly ``de_fraction`` of the modules are marked
    DE, with a few labels flipped so clusters are not label-pure.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    labels = np.zeros(p, dtype=bool)
    starts = list(range(0, p, module_size))
    hub = rng.standard_normal(n)
    for m, s in enumerate(starts):
        cols = np.arange(s, min(p, s + module_size))
        factor = rng.standard_normal(n) + 0.5 * hub
        load = rng.uniform(0.4, 1.2, size=len(cols))
        x[:, cols] += factor[:, None] * load
        for a, b in zip(cols[:-1], cols[1:]):
            x[:, b] += 0.6 * x[:, a]
        if rng.random() < de_fraction:
            labels[cols] = True
    flip = rng.random(p) < 0.1
    labels ^= flip
    if not labels.any():
        labels[0] = True
    return DataMatrix(x, tuple(f"g{j:04d}" for j in range(p)), labels)
