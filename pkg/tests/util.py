"""Shared helpers for the test suite."""

import numpy as np

from rlsm.model import HyperParams, ModelParams
from rlsm.network import DirectedNetwork


def random_network(rng, n, density=0.3):
    adj = (rng.random((n, n)) < density).astype(int)
    np.fill_diagonal(adj, 0)
    return DirectedNetwork(adj)


def random_params(rng, n, d, scale=1.0):
    theta = ModelParams(
        z=scale * rng.standard_normal((n, d)),
        s=scale * rng.standard_normal(n),
        r=scale * rng.standard_normal(n),
        rho=float(scale * rng.standard_normal()),
        phi=float(scale * rng.standard_normal()),
    )
    nu = HyperParams(
        mu_sr=float(rng.normal(0, 0.5)),
        sigma_s2=float(np.exp(rng.normal(0, 0.4))),
        sigma_r2=float(np.exp(rng.normal(0, 0.4))),
        gamma_sr=float(np.tanh(rng.normal(0, 0.6))),
        sigma_z2=float(np.exp(rng.normal(0, 0.4))),
    )
    return theta, nu


def central_fd_gradient(fun, x, h=1e-5):
    """Central finite differences with per-coordinate step scaling."""
    g = np.zeros_like(x)
    for k in range(x.size):
        hk = h * max(1.0, abs(x[k]))
        xp = x.copy()
        xm = x.copy()
        xp[k] += hk
        xm[k] -= hk
        g[k] = (fun(xp) - fun(xm)) / (2.0 * hk)
    return g


class GaussianTarget:
    """Diagonal Gaussian log-density with closed-form gradient."""

    def __init__(self, mean, var):
        self.mean = np.asarray(mean, dtype=float)
        self.var = np.asarray(var, dtype=float)
        self.size = self.mean.size

    def value_and_grad(self, x):
        diff = x - self.mean
        value = -0.5 * float(np.sum(diff * diff / self.var))
        return value, -diff / self.var

    def value(self, x):
        return self.value_and_grad(x)[0]


class SubsetTarget:
    """A base target with all but a chosen subset of coordinates frozen."""

    def __init__(self, base, x_full, free):
        self.base = base
        self.x_full = np.asarray(x_full, dtype=float).copy()
        self.free = np.asarray(free, dtype=int)
        self.size = self.free.size

    def value_and_grad(self, x):
        full = self.x_full.copy()
        full[self.free] = x
        v, g = self.base.value_and_grad(full)
        return v, g[self.free]

    def value(self, x):
        return self.value_and_grad(x)[0]


def bernoulli_loglik(theta, net):
    """Independent-edge log-likelihood with logit s_i + r_j - ||z_i - z_j||.

    Oracle route: loops over ordered pairs and uses the scalar Bernoulli
    log-mass directly, sharing no code with the dyad-based likelihood.
    """
    total = 0.0
    n = net.n
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            eta = theta.s[i] + theta.r[j] - np.linalg.norm(theta.z[i] - theta.z[j])
            total += net.adj[i, j] * eta - np.logaddexp(0.0, eta)
    return total
