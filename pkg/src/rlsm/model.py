"""Likelihood, priors, and exact gradients for the reciprocity latent space model.

Each node i carries a latent position z_i in R^d, a sender effect s_i, and
a receiver effect r_i.  For an unordered pair {i, j} the two directed edges
form a dyad whose four joint states have probabilities proportional to

    exp(mu_ij y_ij + mu_ji y_ji + rho_ij y_ij y_ji)

with natural parameters

    mu_ij  = s_i + r_j - ||z_i - z_j||
    rho_ij = rho + phi ||z_i - z_j||

so the log odds ratio between the two edges of a dyad is linear in latent
distance.  Dyads are independent across pairs and the log-likelihood is a
sum over i < j.

Priors: (s_i, r_i) iid bivariate normal with common mean mu_sr and
covariance assembled from (sigma_s2, sigma_r2, gamma_sr); z_i iid
spherical normal with variance sigma_z2; rho and phi mean-zero normal.
Hyperpriors: normal on mu_sr, inverse-gamma on the three variances,
uniform on gamma_sr over [-1, 1].
"""

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "ModelParams",
    "HyperParams",
    "PriorConstants",
    "DyadNaturalParams",
    "DyadProbabilities",
    "ModelVariant",
    "UnconstrainedPosterior",
    "natural_params",
    "dyad_probabilities",
    "log_likelihood",
    "log_prior",
    "log_posterior",
    "grad_log_posterior",
    "parameter_count",
]

LOG_2PI = np.log(2.0 * np.pi)

# layout of the global block of the unconstrained state vector; the
# per-node blocks s, r, z follow in that order
IDX_RHO, IDX_PHI, IDX_MU_SR, IDX_LOG_VS, IDX_LOG_VR, IDX_TANH_G, IDX_LOG_VZ = range(7)
N_GLOBAL = 7


class ModelVariant(enum.Enum):
    """Nested model family, ordered by how reciprocity is parameterized.

    EDGE_INDEPENDENT pins rho = phi = 0 (directed edges independent),
    HOMOGENEOUS pins phi = 0 (one shared reciprocity parameter), and
    DISTANCE_DEPENDENT leaves both free.
    """

    EDGE_INDEPENDENT = "edge-independent"
    HOMOGENEOUS = "homogeneous"
    DISTANCE_DEPENDENT = "distance-dependent"

    @property
    def pinned_indices(self):
        if self is ModelVariant.EDGE_INDEPENDENT:
            return (IDX_RHO, IDX_PHI)
        if self is ModelVariant.HOMOGENEOUS:
            return (IDX_PHI,)
        return ()


@dataclass
class ModelParams:
    """Node-level parameters: positions, sender/receiver effects, reciprocity."""

    z: np.ndarray
    s: np.ndarray
    r: np.ndarray
    rho: float
    phi: float

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        if self.z.ndim != 2:
            raise ValueError("z must be a 2-d array of shape (n, d)")
        self.s = np.asarray(self.s, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        self.rho = float(self.rho)
        self.phi = float(self.phi)
        n = self.z.shape[0]
        if self.s.shape != (n,) or self.r.shape != (n,):
            raise ValueError(
                f"inconsistent dimensions: z has {n} rows, s has shape "
                f"{self.s.shape}, r has shape {self.r.shape}"
            )
        for name in ("z", "s", "r"):
            if not np.isfinite(getattr(self, name)).all():
                raise ValueError(f"non-finite entries in {name}")
        if not (np.isfinite(self.rho) and np.isfinite(self.phi)):
            raise ValueError("rho and phi must be finite")

    @property
    def n(self):
        return self.z.shape[0]

    @property
    def d(self):
        return self.z.shape[1]


@dataclass
class HyperParams:
    """Population-level parameters of the sender/receiver and position priors."""

    mu_sr: float
    sigma_s2: float
    sigma_r2: float
    gamma_sr: float
    sigma_z2: float

    def __post_init__(self):
        for name in ("sigma_s2", "sigma_r2", "sigma_z2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not -1.0 <= self.gamma_sr <= 1.0:
            raise ValueError("gamma_sr must lie in [-1, 1]")


@dataclass(frozen=True)
class PriorConstants:
    """Fixed constants of the hyperpriors; all overridable."""

    a_s: float = 1.5
    b_s: float = 1.5
    a_r: float = 1.5
    b_r: float = 1.5
    a_z: float = 1.5
    b_z: float = 1.5
    sigma_mu: float = 10.0
    sigma_rho: float = 10.0
    sigma_phi: float = 10.0

    def __post_init__(self):
        for name in ("a_s", "b_s", "a_r", "b_r", "a_z", "b_z", "sigma_mu", "sigma_rho", "sigma_phi"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class DyadNaturalParams:
    """Natural parameters of one dyad: two log odds and one log odds ratio."""

    mu_ij: float
    mu_ji: float
    rho_ij: float


@dataclass(frozen=True)
class DyadProbabilities:
    """Probabilities of the four dyad states; they sum to one."""

    p_mutual: float
    p_out: float
    p_in: float
    p_null: float


def natural_params(theta, i, j):
    """Natural parameters (mu_ij, mu_ji, rho_ij) of the dyad {i, j}."""
    if i == j:
        raise ValueError("dyads are defined for distinct nodes only")
    n = theta.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"node index out of range for n={n}")
    dist = float(np.linalg.norm(theta.z[i] - theta.z[j]))
    return DyadNaturalParams(
        mu_ij=theta.s[i] + theta.r[j] - dist,
        mu_ji=theta.s[j] + theta.r[i] - dist,
        rho_ij=theta.rho + theta.phi * dist,
    )


def _cell_log_weights(mu_ij, mu_ji, rho_ij):
    """Log-masses of the four dyad cells in the order mutual, out, in, null."""
    zero = np.zeros_like(np.asarray(mu_ij, dtype=float))
    return np.stack([mu_ij + mu_ji + rho_ij, mu_ij + zero, mu_ji + zero, zero])


def _log_normalizer_and_probs(mu_ij, mu_ji, rho_ij):
    w = _cell_log_weights(mu_ij, mu_ji, rho_ij)
    m = w.max(axis=0)
    e = np.exp(w - m)
    total = e.sum(axis=0)
    log_z = m + np.log(total)
    return log_z, e / total


def dyad_probabilities(nat):
    """Probabilities of the four dyad states, computed in log space."""
    _, p = _log_normalizer_and_probs(nat.mu_ij, nat.mu_ji, nat.rho_ij)
    return DyadProbabilities(
        p_mutual=float(p[0]), p_out=float(p[1]), p_in=float(p[2]), p_null=float(p[3])
    )


def _pair_indices(n):
    return np.triu_indices(n, k=1)


def _pair_quantities(theta, iu, ju):
    diff = theta.z[iu] - theta.z[ju]
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    mu_u = theta.s[iu] + theta.r[ju] - dist
    mu_l = theta.s[ju] + theta.r[iu] - dist
    rho_d = theta.rho + theta.phi * dist
    return diff, dist, mu_u, mu_l, rho_d


def log_likelihood(theta, net):
    """Joint log-probability of the observed network under theta."""
    if theta.n != net.n:
        raise ValueError(f"theta is for n={theta.n} nodes but network has n={net.n}")
    iu, ju = _pair_indices(net.n)
    y_u = net.adj[iu, ju].astype(float)
    y_l = net.adj[ju, iu].astype(float)
    _, dist, mu_u, mu_l, rho_d = _pair_quantities(theta, iu, ju)
    log_z, _ = _log_normalizer_and_probs(mu_u, mu_l, rho_d)
    return float(np.sum(y_u * mu_u + y_l * mu_l + y_u * y_l * rho_d - log_z))


def _bvn_standardized(theta, nu):
    sig_s = np.sqrt(nu.sigma_s2)
    sig_r = np.sqrt(nu.sigma_r2)
    a = (theta.s - nu.mu_sr) / sig_s
    b = (theta.r - nu.mu_sr) / sig_r
    return a, b, sig_s, sig_r


def _invgamma_logpdf(v, a, b):
    return a * np.log(b) - gammaln(a) - (a + 1.0) * np.log(v) - b / v


def log_prior(theta, nu, c=None):
    """Log-density of theta given nu plus the hyperprior of nu.

    Returns -inf when nu is outside the open support (nonpositive variance
    or |gamma_sr| = 1, where the sender/receiver covariance is singular).
    """
    if c is None:
        c = PriorConstants()
    if min(nu.sigma_s2, nu.sigma_r2, nu.sigma_z2) <= 0 or abs(nu.gamma_sr) >= 1.0:
        return -np.inf

    n, d = theta.n, theta.d
    a, b, _, _ = _bvn_standardized(theta, nu)
    g2 = 1.0 - nu.gamma_sr**2
    quad = (a * a - 2.0 * nu.gamma_sr * a * b + b * b) / g2
    lp = -n * LOG_2PI - 0.5 * n * (np.log(nu.sigma_s2) + np.log(nu.sigma_r2) + np.log(g2))
    lp -= 0.5 * np.sum(quad)

    lp += -0.5 * n * d * (LOG_2PI + np.log(nu.sigma_z2)) - np.sum(theta.z**2) / (2.0 * nu.sigma_z2)

    lp += -0.5 * (LOG_2PI + 2.0 * np.log(c.sigma_rho)) - theta.rho**2 / (2.0 * c.sigma_rho**2)
    lp += -0.5 * (LOG_2PI + 2.0 * np.log(c.sigma_phi)) - theta.phi**2 / (2.0 * c.sigma_phi**2)

    lp += -0.5 * (LOG_2PI + 2.0 * np.log(c.sigma_mu)) - nu.mu_sr**2 / (2.0 * c.sigma_mu**2)
    lp += _invgamma_logpdf(nu.sigma_s2, c.a_s, c.b_s)
    lp += _invgamma_logpdf(nu.sigma_r2, c.a_r, c.b_r)
    lp += _invgamma_logpdf(nu.sigma_z2, c.a_z, c.b_z)
    lp += -np.log(2.0)
    return float(lp)


def log_posterior(theta, nu, net, c=None):
    """log_likelihood + log_prior; -inf propagates from out-of-support nu."""
    lp = log_prior(theta, nu, c)
    if not np.isfinite(lp):
        return -np.inf
    return log_likelihood(theta, net) + lp


def parameter_count(n, d):
    """Number of node-level parameters in the full model."""
    if n < 2 or d < 1:
        raise ValueError("need n >= 2 and d >= 1")
    return n * (d + 2) + 2


class UnconstrainedPosterior:
    """Joint log-posterior as a function of one unconstrained real vector.

    The state vector packs, in order: rho, phi, mu_sr, log sigma_s2,
    log sigma_r2, atanh gamma_sr, log sigma_z2, then s (n entries), r (n),
    and z flattened row by row (n*d).  The three log-variance coordinates
    and the atanh coordinate contribute their change-of-variables terms to
    the density, so the target integrates to one over R^K.

    Variants drop pinned coordinates from the packed vector entirely; the
    pinned parameters are fixed at zero.
    """

    def __init__(self, net, d, c=None, variant=ModelVariant.DISTANCE_DEPENDENT):
        self.n = net.n
        self.d = d
        self.c = c if c is not None else PriorConstants()
        self.variant = variant
        iu, ju = _pair_indices(self.n)
        self._iu, self._ju = iu, ju
        self._y_u = net.adj[iu, ju].astype(float)
        self._y_l = net.adj[ju, iu].astype(float)
        self._y_both = self._y_u * self._y_l
        self.full_size = N_GLOBAL + self.n * (self.d + 2)
        mask = np.ones(self.full_size, dtype=bool)
        mask[list(variant.pinned_indices)] = False
        self._free = np.flatnonzero(mask)
        self.size = int(mask.sum())

    # -- packing ---------------------------------------------------------

    @property
    def free_indices(self):
        """Indices of the free coordinates within the full state vector."""
        return self._free.copy()

    def embed(self, x):
        """Expand a free vector to the full state, pinned entries at zero."""
        return self._embed(np.asarray(x, dtype=float))

    def _embed(self, x):
        if x.shape != (self.size,):
            raise ValueError(f"expected state of length {self.size}, got {x.shape}")
        full = np.zeros(self.full_size)
        full[self._free] = x
        return full

    def pack(self, theta, nu):
        """Pack (theta, nu) into the free unconstrained vector."""
        full = np.empty(self.full_size)
        full[IDX_RHO] = theta.rho
        full[IDX_PHI] = theta.phi
        full[IDX_MU_SR] = nu.mu_sr
        full[IDX_LOG_VS] = np.log(nu.sigma_s2)
        full[IDX_LOG_VR] = np.log(nu.sigma_r2)
        full[IDX_TANH_G] = np.arctanh(nu.gamma_sr)
        full[IDX_LOG_VZ] = np.log(nu.sigma_z2)
        n = self.n
        full[N_GLOBAL : N_GLOBAL + n] = theta.s
        full[N_GLOBAL + n : N_GLOBAL + 2 * n] = theta.r
        full[N_GLOBAL + 2 * n :] = theta.z.ravel()
        for k in self.variant.pinned_indices:
            if full[k] != 0.0:
                raise ValueError(f"{self.variant.value} pins coordinate {k} at zero")
        return full[self._free]

    def unpack(self, x):
        """Unpack the free vector into (ModelParams, HyperParams)."""
        full = self._embed(np.asarray(x, dtype=float))
        n, d = self.n, self.d
        theta = ModelParams(
            z=full[N_GLOBAL + 2 * n :].reshape(n, d),
            s=full[N_GLOBAL : N_GLOBAL + n],
            r=full[N_GLOBAL + n : N_GLOBAL + 2 * n],
            rho=full[IDX_RHO],
            phi=full[IDX_PHI],
        )
        nu = HyperParams(
            mu_sr=float(full[IDX_MU_SR]),
            sigma_s2=float(np.exp(full[IDX_LOG_VS])),
            sigma_r2=float(np.exp(full[IDX_LOG_VR])),
            gamma_sr=float(np.tanh(full[IDX_TANH_G])),
            sigma_z2=float(np.exp(full[IDX_LOG_VZ])),
        )
        return theta, nu

    # -- evaluation ------------------------------------------------------

    def value(self, x, include_jacobian=True):
        return self.value_and_grad(x, include_jacobian=include_jacobian)[0]

    def value_and_grad(self, x, include_jacobian=True):
        """Log-density of the unconstrained target and its exact gradient.

        With include_jacobian=False the change-of-variables terms are left
        out, giving the plain log-posterior as a function of the
        unconstrained coordinates (what the MAP optimizer ascends).

        Returns (-inf, zeros) when the point evaluates to a non-finite
        density, which the sampler treats as a rejected (divergent) state.
        """
        full = self._embed(np.asarray(x, dtype=float))
        n, d = self.n, self.d
        rho = full[IDX_RHO]
        phi = full[IDX_PHI]
        mu_sr = full[IDX_MU_SR]
        t_s, t_r, t_g, t_z = (
            full[IDX_LOG_VS],
            full[IDX_LOG_VR],
            full[IDX_TANH_G],
            full[IDX_LOG_VZ],
        )
        s = full[N_GLOBAL : N_GLOBAL + n]
        r = full[N_GLOBAL + n : N_GLOBAL + 2 * n]
        z = full[N_GLOBAL + 2 * n :].reshape(n, d)

        c = self.c

        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            v_s, v_r, v_z = np.exp(t_s), np.exp(t_r), np.exp(t_z)
            gamma = np.tanh(t_g)
            g2 = 1.0 - gamma**2
            # likelihood over pairs
            iu, ju = self._iu, self._ju
            diff = z[iu] - z[ju]
            dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
            mu_u = s[iu] + r[ju] - dist
            mu_l = s[ju] + r[iu] - dist
            rho_d = rho + phi * dist

            w_mut = mu_u + mu_l + rho_d
            m = np.maximum(np.maximum(w_mut, mu_u), np.maximum(mu_l, 0.0))
            e_mut = np.exp(w_mut - m)
            e_out = np.exp(mu_u - m)
            e_in = np.exp(mu_l - m)
            e_null = np.exp(-m)
            total = e_mut + e_out + e_in + e_null
            log_z = m + np.log(total)
            loglik = np.sum(
                self._y_u * mu_u + self._y_l * mu_l + self._y_both * rho_d - log_z
            )

            # prior on theta given nu
            sig_s, sig_r = np.sqrt(v_s), np.sqrt(v_r)
            a = (s - mu_sr) / sig_s
            b = (r - mu_sr) / sig_r
            quad = (a * a - 2.0 * gamma * a * b + b * b) / g2
            lp = -n * LOG_2PI - 0.5 * n * (t_s + t_r + np.log(g2)) - 0.5 * np.sum(quad)
            znorm2 = np.einsum("ij,ij->i", z, z)
            lp += -0.5 * n * d * (LOG_2PI + t_z) - np.sum(znorm2) / (2.0 * v_z)
            lp += -0.5 * (LOG_2PI + 2.0 * np.log(c.sigma_rho)) - rho**2 / (2.0 * c.sigma_rho**2)
            lp += -0.5 * (LOG_2PI + 2.0 * np.log(c.sigma_phi)) - phi**2 / (2.0 * c.sigma_phi**2)

            # hyperprior on nu plus change-of-variables terms
            lp += -0.5 * (LOG_2PI + 2.0 * np.log(c.sigma_mu)) - mu_sr**2 / (2.0 * c.sigma_mu**2)
            lp += _invgamma_logpdf(v_s, c.a_s, c.b_s)
            lp += _invgamma_logpdf(v_r, c.a_r, c.b_r)
            lp += _invgamma_logpdf(v_z, c.a_z, c.b_z)
            lp += -np.log(2.0)
            if include_jacobian:
                lp += t_s + t_r + t_z + np.log(g2)

            value = loglik + lp
            if not np.isfinite(value):
                return -np.inf, np.zeros(self.size)

            # gradient: likelihood cell probabilities
            p_mut = e_mut / total
            p_out = e_out / total
            p_in = e_in / total
            g_mu_u = self._y_u - (p_mut + p_out)
            g_mu_l = self._y_l - (p_mut + p_in)
            g_rho = self._y_both - p_mut

            grad = np.zeros(self.full_size)
            grad[IDX_RHO] = np.sum(g_rho) - rho / c.sigma_rho**2
            grad[IDX_PHI] = np.sum(g_rho * dist) - phi / c.sigma_phi**2

            ds = np.bincount(iu, weights=g_mu_u, minlength=n) + np.bincount(
                ju, weights=g_mu_l, minlength=n
            )
            dr = np.bincount(ju, weights=g_mu_u, minlength=n) + np.bincount(
                iu, weights=g_mu_l, minlength=n
            )
            ds += -(a - gamma * b) / (g2 * sig_s)
            dr += -(b - gamma * a) / (g2 * sig_r)
            grad[N_GLOBAL : N_GLOBAL + n] = ds
            grad[N_GLOBAL + n : N_GLOBAL + 2 * n] = dr

            # zero subgradient of the norm at coincident positions
            d_dist = -(g_mu_u + g_mu_l) + phi * g_rho
            inv = np.zeros_like(dist)
            np.divide(1.0, dist, out=inv, where=dist > 0)
            wvec = (d_dist * inv)[:, None] * diff
            dz = np.zeros((n, d))
            for k in range(d):
                dz[:, k] = np.bincount(iu, weights=wvec[:, k], minlength=n) - np.bincount(
                    ju, weights=wvec[:, k], minlength=n
                )
            dz -= z / v_z
            grad[N_GLOBAL + 2 * n :] = dz.ravel()

            grad[IDX_MU_SR] = (
                np.sum((a - gamma * b) / sig_s + (b - gamma * a) / sig_r) / g2
                - mu_sr / c.sigma_mu**2
            )

            d_vs = np.sum(-0.5 / v_s + a * (a - gamma * b) / (2.0 * v_s * g2))
            d_vs += -(c.a_s + 1.0) / v_s + c.b_s / v_s**2
            d_vr = np.sum(-0.5 / v_r + b * (b - gamma * a) / (2.0 * v_r * g2))
            d_vr += -(c.a_r + 1.0) / v_r + c.b_r / v_r**2
            d_vz = np.sum(-0.5 * d / v_z + znorm2 / (2.0 * v_z**2))
            d_vz += -(c.a_z + 1.0) / v_z + c.b_z / v_z**2
            grad[IDX_LOG_VS] = d_vs * v_s
            grad[IDX_LOG_VR] = d_vr * v_r
            grad[IDX_LOG_VZ] = d_vz * v_z

            d_gamma = np.sum(
                gamma / g2 + (a * b * g2 - gamma * (a * a - 2.0 * gamma * a * b + b * b)) / g2**2
            )
            grad[IDX_TANH_G] = d_gamma * g2
            if include_jacobian:
                grad[IDX_LOG_VS] += 1.0
                grad[IDX_LOG_VR] += 1.0
                grad[IDX_LOG_VZ] += 1.0
                grad[IDX_TANH_G] += -2.0 * gamma

        grad_free = grad[self._free]
        if not np.isfinite(grad_free).all():
            return -np.inf, np.zeros(self.size)
        return float(value), grad_free

    def log_likelihood_at(self, x):
        """Log-likelihood alone at an unconstrained state (no prior terms)."""
        full = self._embed(np.asarray(x, dtype=float))
        n, d = self.n, self.d
        theta = ModelParams(
            z=full[N_GLOBAL + 2 * n :].reshape(n, d),
            s=full[N_GLOBAL : N_GLOBAL + n],
            r=full[N_GLOBAL + n : N_GLOBAL + 2 * n],
            rho=full[IDX_RHO],
            phi=full[IDX_PHI],
        )
        iu, ju = self._iu, self._ju
        _, dist, mu_u, mu_l, rho_d = _pair_quantities(theta, iu, ju)
        log_z, _ = _log_normalizer_and_probs(mu_u, mu_l, rho_d)
        return float(
            np.sum(self._y_u * mu_u + self._y_l * mu_l + self._y_both * rho_d - log_z)
        )


def grad_log_posterior(theta, nu, net, c=None):
    """Gradient of the unconstrained-space log-posterior at (theta, nu).

    Coordinates follow the packing of UnconstrainedPosterior for the full
    model: rho, phi, mu_sr, log sigma_s2, log sigma_r2, atanh gamma_sr,
    log sigma_z2, s, r, z.
    """
    target = UnconstrainedPosterior(net, theta.d, c)
    return target.value_and_grad(target.pack(theta, nu))[1]
