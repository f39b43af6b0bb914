"""Alignment of latent positions and posterior summaries.

Latent positions are identified only up to orthogonal maps (and the
likelihood also ignores translations), so draws are matched to a reference
layout by Procrustes rotation before any per-node summary is read off.
"""

import warnings as _warnings
from dataclasses import dataclass

import numpy as np

from .chain import chain_columns
from .model import N_GLOBAL

__all__ = [
    "PosteriorSummary",
    "RecoveryMetrics",
    "procrustes_align",
    "align_chain",
    "summarize_posterior",
    "recovery_metrics",
    "effective_sample_size",
    "mcse",
]


def _orthogonal_fit(source, reference):
    """Orthogonal matrix minimizing ||reference - source @ O||_F.

    Reflections are allowed: O ranges over the full orthogonal group.
    """
    cross = source.T @ reference
    u, sv, vt = np.linalg.svd(cross)
    if np.any(sv < 1e-12 * max(sv[0], 1.0)):
        _warnings.warn(
            "rank-deficient cross-product in orthogonal alignment; "
            "the minimizer is not unique and one SVD solution was returned"
        )
    return u @ vt


def procrustes_align(source, reference, allow_translation=True):
    """Match one point configuration to a reference.

    Returns (aligned, o, t) with aligned = source @ o + t.  With
    allow_translation both configurations are centered before fitting the
    orthogonal map and the reference mean is restored afterward; otherwise
    t is zero.  The map is an isometry, so all pairwise distances of
    ``source`` are preserved.
    """
    source = np.asarray(source, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if source.shape != reference.shape:
        raise ValueError(f"shape mismatch: {source.shape} vs {reference.shape}")
    if allow_translation:
        ms = source.mean(axis=0)
        mr = reference.mean(axis=0)
        o = _orthogonal_fit(source - ms, reference - mr)
        t = mr - ms @ o
    else:
        o = _orthogonal_fit(source, reference)
        t = np.zeros(source.shape[1])
    return source @ o + t, o, t


def align_chain(chain, reference):
    """Rotate/translate every draw's latent positions to the reference.

    Only the z block of each draw changes; scalar parameters and
    sender/receiver effects are untouched.  Returns a new chain flagged as
    aligned, with the reference layout recorded in its metadata.
    """
    reference = np.asarray(reference, dtype=float)
    if reference.shape != (chain.n, chain.d):
        raise ValueError(
            f"reference must have shape {(chain.n, chain.d)}, got {reference.shape}"
        )
    draws = chain.draws.copy()
    z_off = N_GLOBAL + 2 * chain.n
    for t in range(draws.shape[0]):
        z = draws[t, z_off:].reshape(chain.n, chain.d)
        aligned, _, _ = procrustes_align(z, reference, allow_translation=True)
        draws[t, z_off:] = aligned.ravel()
    out = chain.with_draws(draws, aligned=True)
    out.meta = dict(chain.meta)
    out.meta["reference"] = reference.tolist()
    return out


@dataclass(frozen=True)
class ParameterSummary:
    mean: float
    sd: float
    ci_low: float
    ci_high: float


@dataclass
class PosteriorSummary:
    """Per-parameter summaries plus sign probabilities for phi."""

    params: dict
    phi_probs: dict

    def as_dict(self):
        return {
            "params": {
                k: {"mean": v.mean, "sd": v.sd, "ci_low": v.ci_low, "ci_high": v.ci_high}
                for k, v in self.params.items()
            },
            "phi_probs": dict(self.phi_probs),
        }


def summarize_posterior(chain):
    """Posterior mean, SD, and equal-tailed 95% interval per parameter.

    Latent-position summaries are meaningful only on an aligned chain.
    Also reports the posterior probabilities that phi is negative, inside
    the unit interval, and above one.
    """
    if chain.n_draws < 100:
        raise ValueError(f"need at least 100 draws to summarize, got {chain.n_draws}")
    names = chain_columns(chain.n, chain.d)
    means = chain.draws.mean(axis=0)
    sds = chain.draws.std(axis=0, ddof=1)
    lows = np.quantile(chain.draws, 0.025, axis=0)
    highs = np.quantile(chain.draws, 0.975, axis=0)
    params = {
        name: ParameterSummary(float(means[k]), float(sds[k]), float(lows[k]), float(highs[k]))
        for k, name in enumerate(names)
    }
    phi = chain.col("phi")
    phi_probs = {
        "negative": float(np.mean(phi < 0)),
        "unit_interval": float(np.mean((phi > 0) & (phi < 1))),
        "above_one": float(np.mean(phi > 1)),
    }
    return PosteriorSummary(params=params, phi_probs=phi_probs)


@dataclass(frozen=True)
class RecoveryMetrics:
    """Parameter-recovery error metrics against a known truth."""

    mse_s: float
    mse_r: float
    abs_dev_rho: float
    abs_dev_phi: float
    mse_z_aligned: float

    def as_tuple(self):
        return (self.mse_s, self.mse_r, self.abs_dev_rho, self.abs_dev_phi, self.mse_z_aligned)


def recovery_metrics(truth, estimate):
    """Recovery errors of an estimate, with the latent metric adjusted for
    the orthogonal-map invariance: both configurations are centered, the
    estimate is rotated onto the truth, and the mean squared residual per
    coordinate is reported."""
    if truth.n != estimate.n or truth.d != estimate.d:
        raise ValueError("truth and estimate dimensions differ")
    n, d = truth.n, truth.d
    mse_s = float(np.mean((truth.s - estimate.s) ** 2))
    mse_r = float(np.mean((truth.r - estimate.r) ** 2))
    abs_rho = float(abs(truth.rho - estimate.rho))
    abs_phi = float(abs(truth.phi - estimate.phi))
    zt = truth.z - truth.z.mean(axis=0)
    ze = estimate.z - estimate.z.mean(axis=0)
    o = _orthogonal_fit(ze, zt)
    mse_z = float(np.sum((zt - ze @ o) ** 2) / (n * d))
    return RecoveryMetrics(mse_s, mse_r, abs_rho, abs_phi, mse_z)


def _autocorrelation(x):
    n = x.size
    x = x - x.mean()
    size = 1
    while size < 2 * n:
        size *= 2
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conjugate(f))[:n].real / n
    if acov[0] <= 0:
        return np.array([1.0])
    return acov / acov[0]


def effective_sample_size(x):
    """Autocorrelation-based effective sample size of one scalar chain.

    Sums autocorrelations over consecutive pairs for as long as the pair
    sums stay positive (a standard truncation rule for reversible chains).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4 or np.allclose(x, x[0]):
        return float(n)
    rho = _autocorrelation(x)
    max_pairs = (len(rho) - 1) // 2
    tau = 1.0
    for k in range(max_pairs):
        pair = rho[2 * k + 1] + rho[2 * k + 2]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(n / tau)


def mcse(x):
    """Monte Carlo standard error of the mean of one scalar chain."""
    x = np.asarray(x, dtype=float)
    ess = effective_sample_size(x)
    return float(x.std(ddof=1) / np.sqrt(ess))
