import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Callable, List, Optional, Tuple

import numpy as np

import config
from core import logger as log
from core.corpus import Corpus
from core.errors import DivergenceError, RateOverflowError, ShapeError, TrainingError
from core.gibbs import GibbsConfig, cd_estimate
from core.gradients import Gradients
from core.harmonium import (
    HarmoniumParams,
    ModelDims,
    TruncationSpec,
    integrability_eigenvalue,
    validate_params,
)
from core.logger import format_date, format_duration
from core.mean_field import GmfConfig, gmf_estimate
from core.parallel import make_rng
from tools.trainer.init import svd_init
from tools.trainer.oracle import exact_gradient

log = log.get_logger()

METHODS = ("cd", "gmf", "exact")


@dataclass(frozen=True)
class TrainConfig:
    method: str = "cd"
    learning_rate: float = field(default_factory=lambda: config.TRAIN_LEARNING_RATE)
    epochs: int = field(default_factory=lambda: config.TRAIN_EPOCHS)
    batch_size: int = field(default_factory=lambda: config.TRAIN_BATCH_SIZE)
    momentum: float = field(default_factory=lambda: config.TRAIN_MOMENTUM)
    weight_decay: float = field(default_factory=lambda: config.TRAIN_WEIGHT_DECAY)
    seed: int = field(default_factory=lambda: config.TRAIN_SEED)
    gibbs: GibbsConfig = field(default_factory=GibbsConfig)
    gmf: GmfConfig = field(default_factory=GmfConfig)
    projection_margin: float = field(default_factory=lambda: config.PROJECTION_MARGIN)
    init_scale: float = field(default_factory=lambda: config.SVD_INIT_SCALE)
    freeze_couplings: bool = False
    truncation: Optional[TruncationSpec] = None  # required for method="exact"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got '{self.method}'")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if int(self.epochs) < 1 or int(self.batch_size) < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be non-negative, got {self.weight_decay}")
        if not 0.0 < self.projection_margin < 1.0:
            raise ValueError(f"projection_margin must lie in (0, 1), got {self.projection_margin}")
        if self.method == "exact" and self.truncation is None:
            raise ValueError("method 'exact' needs a truncation spec")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    gradient_norm: float  # mean over mini-batches
    clamped: int
    divergences: int
    projections: int
    seconds: float


@dataclass
class TrainReport:
    started_at: str
    records: List[EpochRecord] = field(default_factory=list)
    params: Optional[HarmoniumParams] = None
    padded_directions: int = 0

    def deterministic_rows(self) -> List[tuple]:
        """Per-epoch records without wall-clock fields."""
        return [
            (r.epoch, r.gradient_norm, r.clamped, r.divergences, r.projections)
            for r in self.records
        ]

    def as_rows(self) -> List[dict]:
        return [asdict(r) for r in self.records]


# =====================================================
# Initialisation and projection
# =====================================================


def initial_params(corpus: Corpus, dims: ModelDims, train_config: TrainConfig):
    N = len(corpus)
    word_means = np.asarray(corpus.X.mean(axis=0), dtype=float).ravel()
    alpha = np.log(word_means + 1.0 / N)
    sigma = np.maximum(corpus.Z.std(axis=0), config.SIGMA_INIT_FLOOR)
    init = svd_init(corpus, dims.J, scale=train_config.init_scale, seed=train_config.seed)
    W, U = init.W, init.U
    if train_config.freeze_couplings:
        W, U = np.zeros_like(W), np.zeros_like(U)
    params = HarmoniumParams(
        dims=dims, alpha=alpha, beta=np.zeros(dims.K), sigma=sigma, W=W, U=U
    )
    return params, init.padded


def project_integrable(
    params: HarmoniumParams, margin: Optional[float] = None, bisections: Optional[int] = None
) -> HarmoniumParams:
    """Shrink U by the largest factor c in [0, 1] that keeps
    diag(1/sigma^2) - c^2 U U^T above margin * min(1/sigma^2)."""
    margin = config.PROJECTION_MARGIN if margin is None else margin
    bisections = config.PROJECTION_BISECTIONS if bisections is None else bisections
    if params.dims.K == 0 or not np.any(params.U):
        return params
    floor = margin * float(np.min(params.inv_sigma**2))

    def feasible(c):
        return integrability_eigenvalue(params.replace(U=params.U * c)) >= floor

    if feasible(1.0):
        return params
    lo, hi = 0.0, 1.0
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    log.debug(f"[project_integrable] rescaled U by {lo:.6g}")
    return params.replace(U=params.U * lo)


# =====================================================
# Training loop
# =====================================================


def _gradient(params, batch, train_config, epoch, step, counters) -> Optional[Gradients]:
    if train_config.method == "cd":
        try:
            grads, diag = cd_estimate(
                params,
                batch,
                train_config.gibbs,
                seed=train_config.seed,
                stream=(epoch, step),
            )
        except RateOverflowError as e:
            raise TrainingError(str(e), epoch, component="word rates") from e
        counters["clamped"] += diag.clamped
        return grads
    if train_config.method == "gmf":
        try:
            grads, _ = gmf_estimate(params, batch, train_config.gmf)
        except (DivergenceError, RateOverflowError) as e:
            log.warning(f"[train] epoch {epoch} batch {step}: mean field failed ({e}); skipped")
            counters["divergences"] += 1
            return None
        return grads
    return exact_gradient(params, batch, train_config.truncation)


def _apply(params, grads, velocity, train_config):
    lr, m, wd = train_config.learning_rate, train_config.momentum, train_config.weight_decay
    steps = {
        "alpha": grads.d_alpha,
        "beta": grads.d_beta,
        "inv_sigma": grads.d_inv_sigma,
        "W": grads.d_W - wd * params.W,
        "U": grads.d_U - wd * params.U,
    }
    if train_config.freeze_couplings:
        steps["W"] = np.zeros_like(params.W)
        steps["U"] = np.zeros_like(params.U)
    for name, g in steps.items():
        velocity[name] = m * velocity[name] + lr * g
    inv_sigma = np.clip(
        params.inv_sigma + velocity["inv_sigma"], config.SIGMA_INV_MIN, 1.0 / config.SIGMA_FLOOR
    )
    return params.replace(
        alpha=params.alpha + velocity["alpha"],
        beta=params.beta + velocity["beta"],
        sigma=1.0 / inv_sigma,
        W=params.W + velocity["W"],
        U=params.U + velocity["U"],
    )


def train(
    corpus: Corpus,
    dims: ModelDims,
    train_config: Optional[TrainConfig] = None,
    callback: Optional[Callable[[int, HarmoniumParams], None]] = None,
) -> Tuple[HarmoniumParams, TrainReport]:
    """Mini-batch gradient ascent on the log-likelihood with the configured estimator.

    Every emitted parameter state passes validate_params: after each update U is
    shrunk back inside the integrable region when needed.
    """
    train_config = train_config or TrainConfig()
    if len(corpus) == 0:
        raise ShapeError("Cannot train on an empty corpus")
    if (corpus.M, corpus.K) != (dims.M, dims.K):
        raise ShapeError(f"Corpus is {corpus.M}x{corpus.K}, dims are {dims.M}x{dims.K}")

    log.info(
        f"🚀 [train] method={train_config.method}, J={dims.J}, epochs={train_config.epochs}, "
        f"N={len(corpus)}, batch_size={train_config.batch_size}"
    )
    params, padded = initial_params(corpus, dims, train_config)
    if not validate_params(params).ok:
        params = project_integrable(params, train_config.projection_margin)
    report = TrainReport(started_at=format_date(datetime.now()), padded_directions=padded)

    X = corpus.X.toarray().astype(float)
    Z = corpus.Z
    N = len(corpus)
    velocity = {
        "alpha": np.zeros(dims.M),
        "beta": np.zeros(dims.K),
        "inv_sigma": np.zeros(dims.K),
        "W": np.zeros((dims.M, dims.J)),
        "U": np.zeros((dims.K, dims.J)),
    }

    for epoch in range(1, train_config.epochs + 1):
        started = time.perf_counter()
        counters = {"clamped": 0, "divergences": 0, "projections": 0}
        norms = []
        order = make_rng(train_config.seed, epoch).permutation(N)
        for step, lo in enumerate(range(0, N, train_config.batch_size)):
            rows = order[lo : lo + train_config.batch_size]
            grads = _gradient(params, (X[rows], Z[rows]), train_config, epoch, step, counters)
            if grads is None:
                continue
            bad = grads.non_finite_component()
            if bad:
                log.error(f"[train] non-finite gradient in {bad} at epoch {epoch}")
                raise TrainingError("non-finite gradient", epoch, component=bad)
            norms.append(grads.norm())
            params = _apply(params, grads, velocity, train_config)
            if not validate_params(params).ok:
                params = project_integrable(params, train_config.projection_margin)
                counters["projections"] += 1
        record = EpochRecord(
            epoch=epoch,
            gradient_norm=float(np.mean(norms)) if norms else float("nan"),
            clamped=counters["clamped"],
            divergences=counters["divergences"],
            projections=counters["projections"],
            seconds=time.perf_counter() - started,
        )
        report.records.append(record)
        if epoch == 1 or epoch % 100 == 0 or epoch == train_config.epochs:
            log.info(
                f"[train] epoch {epoch}: |grad|={record.gradient_norm:.4g}, "
                f"clamped={record.clamped}, divergences={record.divergences}, "
                f"projections={record.projections}"
            )
        if callback is not None:
            callback(epoch, params)

    validate_params(params).raise_if_invalid()
    report.params = params
    elapsed = format_duration(sum(r.seconds for r in report.records))
    log.info(f"✅ [train] finished {train_config.epochs} epochs in {elapsed}")
    return params, report
