"""Model comparison and goodness-of-fit checks.

Three complementary tools: penalized information criteria for choosing
among the nested variants, a posterior predictive check on the mutual-tie
fraction, and an empirical curve of local reciprocity log-odds against
latent distance.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .hmc import make_rng
from .model import (
    ModelVariant,
    _log_normalizer_and_probs,
    _pair_indices,
    _pair_quantities,
    log_likelihood,
    parameter_count,
)
from .network import DirectedNetwork, summarize
from .postprocess import align_chain

__all__ = [
    "InformationCriteria",
    "PredictiveCheck",
    "OddsWindow",
    "LocalOddsCurve",
    "information_criteria",
    "simulate_from_params",
    "posterior_predictive_check",
    "local_log_odds_curve",
]


@dataclass(frozen=True)
class InformationCriteria:
    variant: ModelVariant
    aic: float
    bic: float
    dic: float
    log_lik_at_mean: float
    mean_deviance: float
    p_effective: float
    n_params: int
    n_dyads: int

    def as_dict(self):
        return {
            "variant": self.variant.value,
            "aic": self.aic,
            "bic": self.bic,
            "dic": self.dic,
            "log_lik_at_mean": self.log_lik_at_mean,
            "mean_deviance": self.mean_deviance,
            "p_effective": self.p_effective,
            "n_params": self.n_params,
            "n_dyads": self.n_dyads,
        }


def _criteria_from_deviances(variant, loglik_hat, mean_deviance, n_params, n_dyads):
    dev_hat = -2.0 * loglik_hat
    p_eff = mean_deviance - dev_hat
    return InformationCriteria(
        variant=variant,
        aic=dev_hat + 2.0 * n_params,
        bic=dev_hat + n_params * math.log(n_dyads),
        dic=mean_deviance + p_eff,
        log_lik_at_mean=loglik_hat,
        mean_deviance=mean_deviance,
        p_effective=p_eff,
        n_params=n_params,
        n_dyads=n_dyads,
    )


def free_parameter_count(n, d, variant):
    """Number of free likelihood parameters under a model variant."""
    pinned = len(variant.pinned_indices)
    return parameter_count(n, d) - pinned


def information_criteria(chain, net, variant=None):
    """AIC, BIC, and DIC for a fitted chain on the observed network.

    The plug-in estimate is the posterior mean (all coordinates, taken
    from an aligned chain so position means are not rotation-smeared).
    A chain that has not been aligned yet is aligned to its first draw's
    layout here; the per-draw deviances are rotation invariant, so only
    the plug-in term needs this.  AIC and BIC count free likelihood
    parameters, with BIC's sample size the number of dyads n(n-1)/2.
    DIC uses the effective parameter count p_eff = mean deviance minus
    deviance at the mean.
    """
    if variant is None:
        variant = chain.variant
    if variant != chain.variant:
        raise ValueError(
            f"chain was fit as {chain.variant.value!r} but criteria requested "
            f"for {variant.value!r}"
        )
    if not chain.aligned:
        chain = align_chain(chain, chain.z_draws[0])
    theta_hat, _ = chain.posterior_mean()
    loglik_hat = log_likelihood(theta_hat, net)
    devs = np.empty(chain.n_draws)
    for t in range(chain.n_draws):
        devs[t] = -2.0 * log_likelihood(chain.theta_at(t), net)
    n_dyads = net.n * (net.n - 1) // 2
    return _criteria_from_deviances(
        variant,
        loglik_hat,
        float(devs.mean()),
        free_parameter_count(net.n, chain.d, variant),
        n_dyads,
    )


def _simulate_with_rng(theta, rng):
    n = theta.n
    iu, ju = _pair_indices(n)
    _, _, mu_u, mu_l, rho_d = _pair_quantities(theta, iu, ju)
    _, probs = _log_normalizer_and_probs(mu_u, mu_l, rho_d)
    # columns of cum index the cells (mutual, out, in, null)
    cum = np.cumsum(probs.T, axis=1)
    u = rng.random(iu.size)
    cell = np.minimum((u[:, None] > cum).sum(axis=1), 3)
    adj = np.zeros((n, n), dtype=np.int8)
    adj[iu, ju] = (cell == 0) | (cell == 1)
    adj[ju, iu] = (cell == 0) | (cell == 2)
    return DirectedNetwork(adj)


def simulate_from_params(theta, seed):
    """Draw one network from the model at fixed parameters.

    Each unordered pair is sampled independently from its four-cell dyad
    distribution.  The same seed always yields the same network.
    """
    return _simulate_with_rng(theta, make_rng(seed))


def _strided_indices(n_total, n_take):
    return np.floor(np.linspace(0.0, n_total, n_take, endpoint=False)).astype(int)


@dataclass
class PredictiveCheck:
    statistic: str
    observed: float
    replicates: np.ndarray
    tail_probability: float
    draw_indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    def as_dict(self):
        return {
            "statistic": self.statistic,
            "observed": self.observed,
            "replicates": self.replicates.tolist(),
            "tail_probability": self.tail_probability,
            "draw_indices": self.draw_indices.tolist(),
        }


def posterior_predictive_check(chain, net, n_draws=200, seed=0):
    """Compare the observed mutual-tie fraction with predictive replicates.

    Takes an evenly strided subsample of posterior draws (without
    replacement), simulates one network from each, and reports the
    fraction of replicate statistics at or above the observed value.
    Values near 0 or 1 indicate the fitted model cannot reproduce the
    observed amount of reciprocity.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be positive")
    if n_draws > chain.n_draws:
        raise ValueError(
            f"requested {n_draws} replicates but the chain has only "
            f"{chain.n_draws} draws"
        )
    idx = _strided_indices(chain.n_draws, n_draws)
    seeds = np.random.SeedSequence(seed).spawn(n_draws)
    observed = summarize(net).mutual_tie_fraction
    stats = np.empty(n_draws)
    for k, t in enumerate(idx):
        rep = _simulate_with_rng(chain.theta_at(int(t)), np.random.Generator(np.random.Philox(seeds[k])))
        stats[k] = summarize(rep).mutual_tie_fraction
    tail = float(np.mean(stats >= observed))
    return PredictiveCheck(
        statistic="mutual_tie_fraction",
        observed=float(observed),
        replicates=stats,
        tail_probability=tail,
        draw_indices=idx,
    )


@dataclass(frozen=True)
class OddsWindow:
    low: float
    high: float
    midpoint: float
    log_odds: float
    ci_low: float
    ci_high: float
    n_mutual: int
    n_out: int
    n_in: int
    n_null: int


@dataclass
class LocalOddsCurve:
    windows: list
    window_width: float
    shift: float

    @property
    def midpoints(self):
        return np.array([w.midpoint for w in self.windows])

    @property
    def log_odds(self):
        return np.array([w.log_odds for w in self.windows])

    def as_rows(self):
        header = [
            "low", "high", "midpoint", "log_odds", "ci_low", "ci_high",
            "n_mutual", "n_out", "n_in", "n_null",
        ]
        rows = [
            [w.low, w.high, w.midpoint, w.log_odds, w.ci_low, w.ci_high,
             w.n_mutual, w.n_out, w.n_in, w.n_null]
            for w in self.windows
        ]
        return header, rows


def _log_odds_stats(n_mut, n_out, n_in, n_null):
    """Sample reciprocity log-odds and its Wald 95% interval from a 2x2
    dyad census; requires every cell to be occupied."""
    est = math.log(n_null * n_mut / (n_in * n_out))
    half = 1.96 * math.sqrt(1.0 / n_mut + 1.0 / n_out + 1.0 / n_in + 1.0 / n_null)
    return est, est - half, est + half


def local_log_odds_curve(net, positions, window_width=2.0, shift=0.5):
    """Empirical reciprocity log-odds in sliding distance windows.

    Pairs are bucketed by the distance between their (estimated) latent
    positions into windows [l, l + width) with l stepping by ``shift``
    from zero.  Within each window the dyad census gives the sample
    log-odds log(n_null * n_mutual / (n_in * n_out)); windows missing any
    of the four dyad types are skipped.  Under distance-dependent
    reciprocity the curve trends with distance; under the homogeneous
    variant it is flat.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.shape[0] != net.n:
        raise ValueError(f"positions are for {positions.shape[0]} nodes, network has {net.n}")
    if window_width <= 0 or shift <= 0:
        raise ValueError("window_width and shift must be positive")
    iu, ju = _pair_indices(net.n)
    diff = positions[iu] - positions[ju]
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    y_u = net.adj[iu, ju]
    y_l = net.adj[ju, iu]
    kind = y_u + y_l + (y_u & y_l)  # 0 null, 1 single direction, 3 mutual
    windows = []
    low = 0.0
    d_max = float(dist.max()) if dist.size else 0.0
    while low <= d_max:
        high = low + window_width
        in_win = (dist >= low) & (dist < high)
        n_mut = int(np.sum(kind[in_win] == 3))
        n_out = int(np.sum((kind == 1) & in_win & (y_u == 1)))
        n_in = int(np.sum((kind == 1) & in_win & (y_l == 1)))
        n_null = int(np.sum(kind[in_win] == 0))
        if min(n_mut, n_out, n_in, n_null) > 0:
            est, lo, hi = _log_odds_stats(n_mut, n_out, n_in, n_null)
            windows.append(
                OddsWindow(
                    low=low,
                    high=high,
                    midpoint=low + window_width / 2.0,
                    log_odds=est,
                    ci_low=lo,
                    ci_high=hi,
                    n_mutual=n_mut,
                    n_out=n_out,
                    n_in=n_in,
                    n_null=n_null,
                )
            )
        low += shift
    return LocalOddsCurve(windows=windows, window_width=window_width, shift=shift)
