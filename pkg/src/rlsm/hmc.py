"""Adaptive Hamiltonian Monte Carlo and MAP optimization.

The sampler runs the no-U-turn variant of HMC with multiplicative doubling
of the trajectory, a log-space slice variable, dual-averaging step-size
adaptation toward a target acceptance statistic, and a diagonal mass
matrix estimated from the first half of warm-up and applied in the second.
A fixed-length leapfrog mode is available for debugging.

Everything here works on a generic target: any object with a ``size``
attribute and a ``value_and_grad(x)`` method returning the log-density and
its gradient.  ``sample_posterior`` and ``map_estimate`` wire the network
model into that interface.
"""

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from .chain import PosteriorChain
from .initialization import initialize
from .model import (
    IDX_LOG_VS,
    IDX_LOG_VR,
    IDX_LOG_VZ,
    IDX_TANH_G,
    ModelParams,
    ModelVariant,
    UnconstrainedPosterior,
)

__all__ = [
    "HmcConfig",
    "MapResult",
    "leapfrog",
    "find_reasonable_step_size",
    "run_chain",
    "sample_posterior",
    "map_estimate",
    "maximize_target",
    "make_rng",
]

# energy-error threshold beyond which a trajectory counts as divergent
DELTA_MAX = 1000.0

# dual-averaging constants
DA_GAMMA = 0.05
DA_T0 = 10.0
DA_KAPPA = 0.75


@dataclass(frozen=True)
class HmcConfig:
    """Tuning knobs of one sampling run."""

    warmup_iters: int = 2500
    sampling_iters: int = 5000
    target_accept: float = 0.8
    max_tree_depth: int = 10
    seed: int = 0
    init_step_size: float | None = None
    trajectory: str = "nuts"
    fixed_leapfrog_steps: int = 32

    def __post_init__(self):
        if self.warmup_iters < 0 or self.sampling_iters <= 0:
            raise ValueError("iteration counts must be positive")
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target_accept must lie strictly between 0 and 1")
        if self.max_tree_depth < 1 or self.fixed_leapfrog_steps < 1:
            raise ValueError("trajectory lengths must be positive")
        if self.trajectory not in ("nuts", "fixed"):
            raise ValueError("trajectory must be 'nuts' or 'fixed'")
        if self.init_step_size is not None and not self.init_step_size > 0:
            raise ValueError("init_step_size must be positive")

    def as_dict(self):
        return asdict(self)


def make_rng(seed):
    """Counter-based generator; all sampling randomness flows through one."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def leapfrog(state, momentum, step_size, n_steps, grad_fn):
    """Unit-mass leapfrog integration of (state, momentum).

    Exactly reversible: negating the returned momentum and integrating the
    same number of steps returns to the start up to rounding.
    """
    x = np.array(state, dtype=float)
    p = np.array(momentum, dtype=float)
    g = grad_fn(x)
    for _ in range(int(n_steps)):
        p = p + 0.5 * step_size * g
        x = x + step_size * p
        g = grad_fn(x)
        p = p + 0.5 * step_size * g
    return x, p


def _kinetic(p, inv_mass):
    return 0.5 * float(np.sum(p * p * inv_mass))


def _leapfrog_step(target, x, p, grad, eps, inv_mass):
    p_half = p + 0.5 * eps * grad
    x_new = x + eps * inv_mass * p_half
    logp_new, grad_new = target.value_and_grad(x_new)
    p_new = p_half + 0.5 * eps * grad_new
    return x_new, p_new, logp_new, grad_new


def _joint(logp, p, inv_mass):
    if not np.isfinite(logp):
        return -np.inf
    return logp - _kinetic(p, inv_mass)


def find_reasonable_step_size(target, x, rng, inv_mass=None):
    """Step-size heuristic: scale by factors of 2 until a single leapfrog
    step crosses acceptance probability 1/2."""
    if inv_mass is None:
        inv_mass = np.ones(x.size)
    eps = 1.0
    logp, grad = target.value_and_grad(x)
    p = rng.standard_normal(x.size) / np.sqrt(inv_mass)
    joint0 = _joint(logp, p, inv_mass)

    def log_ratio(eps):
        x1, p1, logp1, _ = _leapfrog_step(target, x, p, grad, eps, inv_mass)
        return _joint(logp1, p1, inv_mass) - joint0

    ratio = log_ratio(eps)
    a = 1.0 if ratio > np.log(0.5) else -1.0
    while a * log_ratio(eps) > -a * np.log(2.0):
        eps *= 2.0**a
        if not 1e-10 < eps < 1e10:
            break
    return eps


def _no_u_turn(x_minus, p_minus, x_plus, p_plus, inv_mass):
    dx = x_plus - x_minus
    return (dx @ (inv_mass * p_minus) >= 0.0) and (dx @ (inv_mass * p_plus) >= 0.0)


def _build_tree(target, x, p, grad, logu, v, j, eps, inv_mass, joint0, rng):
    """One subtree of the doubling trajectory; returns the leftmost and
    rightmost states, a proposal drawn uniformly from the valid leaves, and
    bookkeeping for adaptation and divergence detection."""
    if j == 0:
        x1, p1, logp1, grad1 = _leapfrog_step(target, x, p, grad, v * eps, inv_mass)
        joint = _joint(logp1, p1, inv_mass)
        n1 = 1 if logu <= joint else 0
        divergent = not (joint - logu > -DELTA_MAX)
        alpha = np.exp(min(0.0, joint - joint0))
        return (
            x1, p1, grad1,
            x1, p1, grad1,
            x1, logp1, grad1,
            n1, not divergent, alpha, 1, divergent,
        )

    out = _build_tree(target, x, p, grad, logu, v, j - 1, eps, inv_mass, joint0, rng)
    (xm, pm, gm, xp, pp, gp, xq, logpq, gq, n1, s1, a1, na1, div1) = out
    if s1:
        if v == -1:
            out2 = _build_tree(target, xm, pm, gm, logu, v, j - 1, eps, inv_mass, joint0, rng)
            (xm, pm, gm, _, _, _, xq2, logpq2, gq2, n2, s2, a2, na2, div2) = out2
        else:
            out2 = _build_tree(target, xp, pp, gp, logu, v, j - 1, eps, inv_mass, joint0, rng)
            (_, _, _, xp, pp, gp, xq2, logpq2, gq2, n2, s2, a2, na2, div2) = out2
        if n2 > 0 and rng.random() < n2 / (n1 + n2):
            xq, logpq, gq = xq2, logpq2, gq2
        n1 += n2
        a1 += a2
        na1 += na2
        div1 = div1 or div2
        s1 = s2 and _no_u_turn(xm, pm, xp, pp, inv_mass)
    return (xm, pm, gm, xp, pp, gp, xq, logpq, gq, n1, s1, a1, na1, div1)


def _nuts_transition(target, x, logp, grad, eps, inv_mass, max_depth, rng):
    p0 = rng.standard_normal(x.size) / np.sqrt(inv_mass)
    joint0 = _joint(logp, p0, inv_mass)
    logu = joint0 - rng.exponential()

    xm = xp = x
    pm = pp = p0
    gm = gp = grad
    x_cur, logp_cur, grad_cur = x, logp, grad
    n, depth = 1, 0
    keep_going = True
    alpha_sum, n_alpha = 0.0, 0
    divergent = False
    while keep_going and depth < max_depth:
        v = 1 if rng.random() < 0.5 else -1
        if v == -1:
            out = _build_tree(target, xm, pm, gm, logu, v, depth, eps, inv_mass, joint0, rng)
            (xm, pm, gm, _, _, _, xq, logpq, gq, n1, s1, a1, na1, div1) = out
        else:
            out = _build_tree(target, xp, pp, gp, logu, v, depth, eps, inv_mass, joint0, rng)
            (_, _, _, xp, pp, gp, xq, logpq, gq, n1, s1, a1, na1, div1) = out
        if s1 and n1 > 0 and rng.random() < min(1.0, n1 / n):
            x_cur, logp_cur, grad_cur = xq, logpq, gq
        n += n1
        alpha_sum += a1
        n_alpha += na1
        divergent = divergent or div1
        keep_going = s1 and _no_u_turn(xm, pm, xp, pp, inv_mass)
        depth += 1
    return x_cur, logp_cur, grad_cur, alpha_sum / max(n_alpha, 1), divergent, depth


def _fixed_transition(target, x, logp, grad, eps, inv_mass, n_steps, rng):
    # jitter the step size by +-10% so a constant trajectory length cannot
    # resonate with the target's characteristic period
    eps = eps * rng.uniform(0.9, 1.1)
    p0 = rng.standard_normal(x.size) / np.sqrt(inv_mass)
    joint0 = _joint(logp, p0, inv_mass)
    xn, pn, logpn, gradn = x, p0, logp, grad
    for _ in range(n_steps):
        xn, pn, logpn, gradn = _leapfrog_step(target, xn, pn, gradn, eps, inv_mass)
        if not np.isfinite(logpn):
            break
    joint1 = _joint(logpn, pn, inv_mass)
    alpha = float(np.exp(min(0.0, joint1 - joint0)))
    divergent = not (joint1 - joint0 > -DELTA_MAX)
    if rng.random() < alpha:
        return xn, logpn, gradn, alpha, divergent, n_steps
    return x, logp, grad, alpha, divergent, n_steps


class _DualAveraging:
    """Step-size adaptation toward a target acceptance statistic."""

    def __init__(self, eps0, target_accept):
        self.mu = np.log(10.0 * eps0)
        self.target = target_accept
        self.log_eps = np.log(eps0)
        self.log_eps_bar = 0.0
        self.h_bar = 0.0
        self.m = 0

    def update(self, alpha):
        self.m += 1
        w = 1.0 / (self.m + DA_T0)
        self.h_bar = (1.0 - w) * self.h_bar + w * (self.target - alpha)
        self.log_eps = self.mu - np.sqrt(self.m) / DA_GAMMA * self.h_bar
        m_pow = self.m**-DA_KAPPA
        self.log_eps_bar = m_pow * self.log_eps + (1.0 - m_pow) * self.log_eps_bar
        return np.exp(self.log_eps)

    @property
    def adapted(self):
        return np.exp(self.log_eps_bar)


def _regularized_variance(draws):
    """Diagonal posterior-variance estimate shrunk toward unit scale."""
    m = draws.shape[0]
    var = draws.var(axis=0, ddof=1) if m > 1 else np.ones(draws.shape[1])
    reg = (m / (m + 5.0)) * var + 1e-3 * (5.0 / (m + 5.0))
    return np.maximum(reg, 1e-10)


def run_chain(target, x0, config, rng=None):
    """Run warm-up plus sampling on an arbitrary target.

    Returns (draws, stats): a (sampling_iters, size) array of retained
    states and a dict of acceptance, divergence, step-size, and tree-depth
    statistics.
    """
    if rng is None:
        rng = make_rng(config.seed)
    x = np.array(x0, dtype=float)
    logp, grad = target.value_and_grad(x)
    if not np.isfinite(logp):
        raise ValueError("starting point has non-finite log-density")

    inv_mass = np.ones(target.size)

    def transition(x, logp, grad, eps):
        if config.trajectory == "nuts":
            return _nuts_transition(
                target, x, logp, grad, eps, inv_mass, config.max_tree_depth, rng
            )
        return _fixed_transition(
            target, x, logp, grad, eps, inv_mass, config.fixed_leapfrog_steps, rng
        )

    warmup = config.warmup_iters
    half = warmup // 2
    adapt_mass = warmup >= 20
    eps = (
        config.init_step_size
        if config.init_step_size is not None
        else find_reasonable_step_size(target, x, rng, inv_mass)
    )
    averager = _DualAveraging(eps, config.target_accept)
    step_size_trace = np.empty(warmup)
    warmup_divergences = 0
    phase1 = np.empty((half, target.size)) if adapt_mass else None

    for m in range(warmup):
        x, logp, grad, alpha, divergent, _ = transition(x, logp, grad, eps)
        warmup_divergences += int(divergent)
        eps = averager.update(alpha)
        step_size_trace[m] = eps
        if adapt_mass and m < half:
            phase1[m] = x
        if adapt_mass and m == half - 1:
            # estimate the metric from the later, less transient part of
            # phase one, then re-tune the step size on the new metric
            tail = phase1[half // 2 :]
            inv_mass = _regularized_variance(tail)
            eps = find_reasonable_step_size(target, x, rng, inv_mass)
            averager = _DualAveraging(eps, config.target_accept)

    if warmup > 0:
        eps = averager.adapted

    draws = np.empty((config.sampling_iters, target.size))
    divergences = 0
    accept_sum = 0.0
    depth_sum = 0
    for t in range(config.sampling_iters):
        x, logp, grad, alpha, divergent, depth = transition(x, logp, grad, eps)
        draws[t] = x
        divergences += int(divergent)
        accept_sum += alpha
        depth_sum += depth

    stats = {
        "accept_rate": accept_sum / config.sampling_iters,
        "divergences": divergences,
        "warmup_divergences": warmup_divergences,
        "step_size": float(eps),
        "step_size_trace": step_size_trace,
        "mean_tree_depth": depth_sum / config.sampling_iters,
        "inv_mass": inv_mass,
    }
    return draws, stats


def _natural_rows(target, draws):
    """Map unconstrained free states to natural-coordinate chain rows."""
    full = np.zeros((draws.shape[0], target.full_size))
    full[:, target.free_indices] = draws
    full[:, IDX_LOG_VS] = np.exp(full[:, IDX_LOG_VS])
    full[:, IDX_LOG_VR] = np.exp(full[:, IDX_LOG_VR])
    full[:, IDX_TANH_G] = np.tanh(full[:, IDX_TANH_G])
    full[:, IDX_LOG_VZ] = np.exp(full[:, IDX_LOG_VZ])
    return full


def _pin_start(theta0, variant):
    """Zero out the starting values of coordinates the variant pins."""
    if variant is ModelVariant.DISTANCE_DEPENDENT:
        return theta0
    return ModelParams(
        z=theta0.z,
        s=theta0.s,
        r=theta0.r,
        rho=0.0 if variant is ModelVariant.EDGE_INDEPENDENT else theta0.rho,
        phi=0.0,
    )


def sample_posterior(net, d, config, c=None, init=None, variant=ModelVariant.DISTANCE_DEPENDENT):
    """Draw from the joint posterior for one network.

    Warm-up adapts step size and a diagonal mass matrix, sampling keeps
    ``config.sampling_iters`` draws.  Fully deterministic for a fixed
    config and seed.
    """
    if init is None:
        init = initialize(net, d, c)
    target = UnconstrainedPosterior(net, d, c, variant=variant)
    x0 = target.pack(_pin_start(init.theta0, variant), init.nu0)
    rng = make_rng(config.seed)
    draws, stats = run_chain(target, x0, config, rng)

    warnings = []
    if stats["divergences"] > 0.1 * config.sampling_iters:
        warnings.append(
            f"{stats['divergences']} of {config.sampling_iters} post-warm-up "
            "transitions diverged; draws are unreliable"
        )
    meta = {
        "seed": config.seed,
        "config": config.as_dict(),
        "warmup_divergences": stats["warmup_divergences"],
        "mean_tree_depth": stats["mean_tree_depth"],
        "init_notes": list(init.notes),
    }
    return PosteriorChain(
        n=net.n,
        d=d,
        variant=variant,
        draws=_natural_rows(target, draws),
        accept_rate=float(stats["accept_rate"]),
        divergences=int(stats["divergences"]),
        step_size=stats["step_size"],
        step_size_trace=stats["step_size_trace"],
        warnings=warnings,
        meta=meta,
    )


@dataclass
class MapResult:
    """Posterior mode estimate and optimizer diagnostics."""

    theta: object
    nu: object
    log_posterior: float
    grad_max_norm: float
    converged: bool
    n_evaluations: int
    warnings: list = field(default_factory=list)


def maximize_target(value_and_grad, x0, gtol=1e-6):
    """Quasi-Newton ascent of a log-density; returns the best point visited.

    Returns (x_best, value_best, grad_max_norm, converged, n_evaluations,
    message).
    """
    best = {"value": -np.inf, "x": np.asarray(x0, dtype=float), "n": 0}

    def objective(x):
        v, g = value_and_grad(x)
        best["n"] += 1
        if v > best["value"]:
            best["value"] = v
            best["x"] = x.copy()
        return -v, -g

    res = minimize(
        objective,
        x0,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": 2000, "maxfun": 100000, "ftol": 1e-14, "gtol": gtol},
    )
    x_best = best["x"]
    _, g_best = value_and_grad(x_best)
    grad_max = float(np.max(np.abs(g_best)))
    return x_best, best["value"], grad_max, grad_max < gtol, best["n"], str(res.message)


def map_estimate(net, d, c=None, init=None, variant=ModelVariant.DISTANCE_DEPENDENT):
    """Maximum a posteriori point by quasi-Newton ascent, used as the
    reference layout for aligning posterior draws.

    Maximizes the log-posterior itself (no change-of-variables terms) over
    the unconstrained coordinates and returns the best point visited.
    """
    if init is None:
        init = initialize(net, d, c)
    target = UnconstrainedPosterior(net, d, c, variant=variant)
    x0 = target.pack(_pin_start(init.theta0, variant), init.nu0)

    def posterior_only(x):
        return target.value_and_grad(x, include_jacobian=False)

    x_best, value, grad_max, converged, n_evals, message = maximize_target(posterior_only, x0)
    warnings = []
    if not converged:
        warnings.append(
            f"optimizer stopped with gradient max-norm {grad_max:.3g} "
            f"(status: {message}); returning best visited point"
        )
    theta, nu = target.unpack(x_best)
    return MapResult(
        theta=theta,
        nu=nu,
        log_posterior=float(value),
        grad_max_norm=grad_max,
        converged=converged,
        n_evaluations=n_evals,
        warnings=warnings,
    )
