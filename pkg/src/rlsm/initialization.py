"""Deterministic four-stage starting values for the sampler and MAP optimizer.

Stage 1 embeds nodes by classical multidimensional scaling of geodesic
distances on the symmetrized network.  Stage 2 sets sender and receiver
effects from smoothed degree proportions.  Stage 3 fits a logistic
regression of each edge on its reverse edge to start the reciprocity
parameters.  Stage 4 moment-matches the hyperparameters.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path
from scipy.special import expit, logit

from .model import HyperParams, ModelParams
from .network import symmetrize

__all__ = [
    "InitReport",
    "init_latent_mds",
    "init_sender_receiver",
    "init_reciprocity",
    "initialize",
]

NEWTON_MAX_ITER = 100
NEWTON_GRAD_TOL = 1e-8
# coefficient magnitude at which the logistic fit is declared separated
NEWTON_BETA_CAP = 30.0
VARIANCE_FLOOR = 0.1
GAMMA_CLAMP = 0.9


@dataclass
class InitReport:
    """Starting point plus provenance of each stage."""

    theta0: ModelParams
    nu0: HyperParams
    mds_eigenvalues: np.ndarray
    lr_coefficients: tuple
    notes: list = field(default_factory=list)

    def as_dict(self):
        return {
            "s0": self.theta0.s.tolist(),
            "r0": self.theta0.r.tolist(),
            "z0": self.theta0.z.tolist(),
            "rho0": self.theta0.rho,
            "phi0": self.theta0.phi,
            "mu_sr0": self.nu0.mu_sr,
            "sigma_s2_0": self.nu0.sigma_s2,
            "sigma_r2_0": self.nu0.sigma_r2,
            "gamma_sr0": self.nu0.gamma_sr,
            "sigma_z2_0": self.nu0.sigma_z2,
            "mds_eigenvalues": self.mds_eigenvalues.tolist(),
            "lr_coefficients": list(self.lr_coefficients),
            "notes": list(self.notes),
        }


def _geodesic_distances(net):
    """Geodesic distances on the symmetrized network.

    Pairs in different components get surrogate distance (largest finite
    geodesic) + 1 so the embedding stays finite.
    """
    und = symmetrize(net)
    graph = csr_matrix(und.adj)
    dist = shortest_path(graph, method="D", directed=False, unweighted=True)
    notes = []
    finite = np.isfinite(dist)
    if not finite.all():
        surrogate = dist[finite].max() + 1.0
        dist = np.where(finite, dist, surrogate)
        notes.append(
            f"disconnected network: infinite geodesics replaced by {surrogate:g}"
        )
    return dist, notes


def _classical_mds(dist, d):
    """Classical MDS of a distance matrix into d dimensions.

    Double-centers the squared distances, takes the top d eigenpairs, and
    scales eigenvectors by root eigenvalues.  Nonpositive eigenvalues give
    zero-filled coordinates.  Signs follow the convention that the entry
    of largest magnitude in each coordinate is positive.
    """
    n = dist.shape[0]
    sq = dist**2
    row_mean = sq.mean(axis=1)
    grand_mean = sq.mean()
    b = -0.5 * (sq - row_mean[:, None] - row_mean[None, :] + grand_mean)
    eigvals, eigvecs = np.linalg.eigh(b)
    order = np.argsort(eigvals)[::-1][:d]
    top_vals = eigvals[order]
    top_vecs = eigvecs[:, order]
    notes = []
    pos = np.zeros((n, d))
    # eigenvalues within rounding error of zero do not count as positive
    eig_tol = max(float(eigvals.max()), 0.0) * 1e-9 + 1e-12
    n_positive = int(np.sum(top_vals > eig_tol))
    if n_positive < d:
        notes.append(
            f"only {n_positive} positive eigenvalues for {d} requested dimensions;"
            " remaining coordinates zero-filled"
        )
    for k in range(d):
        if top_vals[k] > eig_tol:
            col = top_vecs[:, k] * np.sqrt(top_vals[k])
            # sign convention: entry of largest magnitude positive, with
            # near-ties broken toward the smallest index
            mags = np.abs(col)
            anchor = np.flatnonzero(mags >= mags.max() * (1.0 - 1e-9))[0]
            if col[anchor] < 0:
                col = -col
            pos[:, k] = col
    pos -= pos.mean(axis=0)
    return pos, top_vals, notes


def init_latent_mds(net, d):
    """Latent starting positions from MDS of geodesic distances."""
    pos, _, _ = _latent_mds_details(net, d)
    return pos


def _latent_mds_details(net, d):
    if d < 1:
        raise ValueError("need d >= 1")
    dist, notes = _geodesic_distances(net)
    pos, eigvals, mds_notes = _classical_mds(dist, d)
    return pos, eigvals, notes + mds_notes


def init_sender_receiver(net):
    """Centered sender/receiver starts from smoothed degree proportions.

    Each effect is the logit of (degree + 1) / (n + 2); the shared prior
    mean starts at the average of all uncentered effects.
    """
    n = net.n
    out_deg = net.adj.sum(axis=1)
    in_deg = net.adj.sum(axis=0)
    s_raw = logit((out_deg + 1.0) / (n + 2.0))
    r_raw = logit((in_deg + 1.0) / (n + 2.0))
    mu_sr0 = float(np.concatenate([s_raw, r_raw]).mean())
    return s_raw - s_raw.mean(), r_raw - r_raw.mean(), mu_sr0


def _newton_logistic(x, y):
    """Newton-Raphson logistic regression; returns (beta, converged)."""
    beta = np.zeros(x.shape[1])
    for _ in range(NEWTON_MAX_ITER):
        eta = x @ beta
        p = expit(eta)
        grad = x.T @ (y - p)
        if np.max(np.abs(grad)) < NEWTON_GRAD_TOL:
            return beta, True
        w = p * (1.0 - p)
        hess = x.T @ (x * w[:, None])
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            return beta, False
        beta = beta + step
        if not np.isfinite(beta).all() or np.max(np.abs(beta)) > NEWTON_BETA_CAP:
            return beta, False
    return beta, False


def init_reciprocity(net, z0):
    """Reciprocity starts from a logistic regression of each upper-triangle
    edge on its reverse edge and the reverse edge scaled by latent distance."""
    (rho0, phi0), _, _ = _reciprocity_details(net, z0)
    return rho0, phi0


def _reciprocity_details(net, z0):
    iu, ju = np.triu_indices(net.n, k=1)
    y = net.adj[iu, ju].astype(float)
    y_rev = net.adj[ju, iu].astype(float)
    dist = np.linalg.norm(z0[iu] - z0[ju], axis=1)
    x = np.column_stack([np.ones_like(y), y_rev, dist * y_rev])
    beta, converged = _newton_logistic(x, y)
    if converged:
        return (float(beta[1]), float(beta[2])), float(beta[0]), []
    note = "reciprocity regression did not converge (separation suspected); starting at (0, 0)"
    return (0.0, 0.0), 0.0, [note]


def initialize(net, d, c=None):
    """Compose the four stages into a full starting point.

    The returned point always has a finite log-posterior: variances are
    floored, the sender/receiver correlation is clamped away from +-1, and
    every stage has a finite fallback.
    """
    z0, eigvals, notes = _latent_mds_details(net, d)
    s0, r0, mu_sr0 = init_sender_receiver(net)
    (rho0, phi0), beta0, lr_notes = _reciprocity_details(net, z0)
    notes = notes + lr_notes

    sigma_s2 = max(float(np.var(s0)), VARIANCE_FLOOR)
    sigma_r2 = max(float(np.var(r0)), VARIANCE_FLOOR)
    sigma_z2 = max(float(np.var(z0, axis=0).mean()), VARIANCE_FLOOR)
    if np.var(s0) > 0 and np.var(r0) > 0:
        gamma = float(np.corrcoef(s0, r0)[0, 1])
        gamma = float(np.clip(gamma, -GAMMA_CLAMP, GAMMA_CLAMP))
    else:
        gamma = 0.0
        notes = notes + ["constant sender or receiver effects; correlation start set to 0"]

    theta0 = ModelParams(z=z0, s=s0, r=r0, rho=rho0, phi=phi0)
    nu0 = HyperParams(
        mu_sr=mu_sr0,
        sigma_s2=sigma_s2,
        sigma_r2=sigma_r2,
        gamma_sr=gamma,
        sigma_z2=sigma_z2,
    )
    return InitReport(
        theta0=theta0,
        nu0=nu0,
        mds_eigenvalues=eigvals,
        lr_coefficients=(beta0, rho0, phi0),
        notes=notes,
    )
