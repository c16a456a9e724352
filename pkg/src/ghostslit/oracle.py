"""Monte Carlo verification channel, independent of the quadrature stack.

Sampling uses a counter-based generator (Philox) keyed by (seed, chunk
index): every fixed-size chunk owns its own statistically independent
stream, each chunk's summary (count, mean, M2) is a pure function of the
seed, and the final reduction folds the chunk summaries in index order.
Workers may therefore compute chunks in any arrangement and the merged
statistics stay bit-identical.

Gaussian variates come from the inverse normal CDF applied to open-interval
uniforms, so a stream is reproducible from the seed alone with no
rejection-state coupling between variates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .conditioning import SlitConfig, _slit_transform_batch
from .quadrature import DEFAULT_SPEC, QuadratureSpec
from .state import GaussianPairState, derived_widths

__all__ = [
    "OracleConfig",
    "SampleStats",
    "InsufficientAcceptanceError",
    "EnvelopeViolationError",
    "sample_inclusive",
    "sample_central",
    "zscore_report",
]

_CHUNK = 8192
_MIN_ACCEPTED = 100
_ENVELOPE_SLACK = 1e-9  # tolerated fp noise in the exact envelope bound


class InsufficientAcceptanceError(RuntimeError):
    """Too few samples survived rejection for meaningful statistics."""


class EnvelopeViolationError(RuntimeError):
    """A sampled point exceeded the rejection envelope: the bound is wrong."""


@dataclass(frozen=True)
class OracleConfig:
    n_samples: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.n_samples, int) or self.n_samples < 1000:
            raise ValueError("n_samples must be an integer >= 1000")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SampleStats:
    n_accepted: int
    mean: float
    std: float
    std_error_of_std: float
    acceptance_rate: float


def _chunk_rng(seed: int, index: int) -> np.random.Generator:
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _open_uniform(rng: np.random.Generator, shape) -> np.ndarray:
    # map [0, 1) onto an open interval so ndtri never sees 0 or 1
    return rng.random(shape) * (1.0 - 2.0 ** -52) + 2.0 ** -53


def _chunk_sizes(n: int) -> list[int]:
    sizes = [_CHUNK] * (n // _CHUNK)
    if n % _CHUNK:
        sizes.append(n % _CHUNK)
    return sizes


def _chunk_summary(values: np.ndarray) -> tuple[int, float, float]:
    if values.size == 0:
        return 0, 0.0, 0.0
    mean = float(values.mean())
    return values.size, mean, float(np.sum((values - mean) ** 2))


def _fold_summaries(summaries) -> tuple[int, float, float]:
    """Sequential (count, mean, M2) merge over chunk index order."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in summaries:
        if nb == 0:
            continue
        total = n + nb
        delta = mb - mean
        mean = mean + delta * nb / total
        m2 = m2 + m2b + delta * delta * n * nb / total
        n = total
    return n, mean, m2


def _finalize(n: int, mean: float, m2: float, n_total: int) -> SampleStats:
    if n < _MIN_ACCEPTED:
        raise InsufficientAcceptanceError(
            f"only {n} samples accepted (< {_MIN_ACCEPTED}); "
            "widen the slit or increase n_samples")
    std = math.sqrt(m2 / (n - 1))
    return SampleStats(
        n_accepted=n,
        mean=mean,
        std=std,
        std_error_of_std=std / math.sqrt(2.0 * n),
        acceptance_rate=n / n_total,
    )


def sample_inclusive(state: GaussianPairState, slit: SlitConfig,
                     cfg: OracleConfig, return_samples: bool = False):
    """Sample (y1, k2) from the factorized post-source Gaussians and keep
    the k2 of pairs whose y1 falls inside the slit.

    The acceptance rate estimates the slit passage probability; the kept-k2
    statistics estimate the inclusive spread.
    """
    s_k, s_y, _ = derived_widths(state)
    a = slit.half_width
    summaries = []
    kept = []
    for index, size in enumerate(_chunk_sizes(cfg.n_samples)):
        rng = _chunk_rng(cfg.seed, index)
        u = _open_uniform(rng, (size, 2))
        y = s_y * ndtri(u[:, 0])
        k2 = s_k * ndtri(u[:, 1])
        acc = k2[np.abs(y) <= a]
        summaries.append(_chunk_summary(acc))
        if return_samples:
            kept.append(acc)
    stats = _finalize(*_fold_summaries(summaries), cfg.n_samples)
    if return_samples:
        return stats, np.concatenate(kept) if kept else np.array([])
    return stats


def sample_central(state: GaussianPairState, slit: SlitConfig,
                   cfg: OracleConfig, spec: QuadratureSpec = DEFAULT_SPEC,
                   return_samples: bool = False):
    """Rejection-sample the central-detection k2 density.

    Proposal: the Gaussian of width s_k.  The target |A(k2)|^2 is bounded
    by A(0)^2 * exp(-2 k2^2/(s+^2+s-^2)) -- exactly the proposal's shape --
    because |A(k2)| <= int |Psi(y, k2)| dy = A(0) * exp(-k2^2/(s+^2+s-^2)).
    Any sampled point above the bound therefore indicates a bug, not noise,
    and raises EnvelopeViolationError.
    """
    s = state.ssum
    s_k = 0.5 * math.sqrt(s)
    a0 = abs(complex(_slit_transform_batch(
        state, slit, 0.0, [0.0], spec)[0][0]))
    summaries = []
    kept = []
    for index, size in enumerate(_chunk_sizes(cfg.n_samples)):
        rng = _chunk_rng(cfg.seed, index)
        u = _open_uniform(rng, (size, 2))
        k2 = s_k * ndtri(u[:, 0])
        target = np.abs(_slit_transform_batch(state, slit, 0.0, k2,
                                              spec)[0]) ** 2
        bound = a0 * a0 * np.exp(-2.0 * k2 * k2 / s)
        ratio = target / bound
        worst = float(ratio.max())
        if worst > 1.0 + _ENVELOPE_SLACK:
            raise EnvelopeViolationError(
                f"target exceeded envelope by factor {worst:.12g} "
                f"in chunk {index}")
        acc = k2[u[:, 1] < ratio]
        summaries.append(_chunk_summary(acc))
        if return_samples:
            kept.append(acc)
    stats = _finalize(*_fold_summaries(summaries), cfg.n_samples)
    if return_samples:
        return stats, np.concatenate(kept) if kept else np.array([])
    return stats


def zscore_report(stats: SampleStats, reference: float) -> float:
    """Standardized deviation of the sampled std from a reference value;
    |z| <= 4 constitutes agreement at the suite's false-alarm budget."""
    return (stats.std - reference) / stats.std_error_of_std
