"""Posterior draw storage and deterministic CSV/JSON serialization.

Draws are kept as one row per retained iteration in natural coordinates,
in the fixed column order rho, phi, mu_sr, sigma_s2, sigma_r2, gamma_sr,
sigma_z2, then s_0..s_{n-1}, r_0..r_{n-1}, then z flattened row by row.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .model import HyperParams, ModelParams, ModelVariant, N_GLOBAL

__all__ = ["PosteriorChain", "chain_columns", "save_chain", "load_chain"]

GLOBAL_COLUMNS = ["rho", "phi", "mu_sr", "sigma_s2", "sigma_r2", "gamma_sr", "sigma_z2"]


def chain_columns(n, d):
    """Column names of the draw matrix for a given network size."""
    cols = list(GLOBAL_COLUMNS)
    cols += [f"s_{i}" for i in range(n)]
    cols += [f"r_{i}" for i in range(n)]
    cols += [f"z_{i}_{k}" for i in range(n) for k in range(d)]
    return cols


@dataclass
class PosteriorChain:
    """Retained posterior draws plus sampling statistics."""

    n: int
    d: int
    variant: ModelVariant
    draws: np.ndarray
    accept_rate: float
    divergences: int
    step_size: float
    step_size_trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    aligned: bool = False
    warnings: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        expected = N_GLOBAL + self.n * (self.d + 2)
        if self.draws.ndim != 2 or self.draws.shape[1] != expected:
            raise ValueError(
                f"draw matrix must have {expected} columns for n={self.n}, d={self.d}"
            )
        self._col_index = {name: k for k, name in enumerate(chain_columns(self.n, self.d))}

    @property
    def n_draws(self):
        return self.draws.shape[0]

    def col(self, name):
        """One named column of the draw matrix."""
        return self.draws[:, self._col_index[name]]

    @property
    def s_draws(self):
        return self.draws[:, N_GLOBAL : N_GLOBAL + self.n]

    @property
    def r_draws(self):
        return self.draws[:, N_GLOBAL + self.n : N_GLOBAL + 2 * self.n]

    @property
    def z_draws(self):
        flat = self.draws[:, N_GLOBAL + 2 * self.n :]
        return flat.reshape(self.n_draws, self.n, self.d)

    def theta_at(self, t):
        row = self.draws[t]
        return ModelParams(
            z=row[N_GLOBAL + 2 * self.n :].reshape(self.n, self.d),
            s=row[N_GLOBAL : N_GLOBAL + self.n],
            r=row[N_GLOBAL + self.n : N_GLOBAL + 2 * self.n],
            rho=row[0],
            phi=row[1],
        )

    def nu_at(self, t):
        row = self.draws[t]
        return HyperParams(
            mu_sr=float(row[2]),
            sigma_s2=float(row[3]),
            sigma_r2=float(row[4]),
            gamma_sr=float(row[5]),
            sigma_z2=float(row[6]),
        )

    def posterior_mean(self):
        """Coordinate-wise posterior mean as (ModelParams, HyperParams).

        Latent position means are only interpretable on an aligned chain.
        """
        m = self.draws.mean(axis=0)
        theta = ModelParams(
            z=m[N_GLOBAL + 2 * self.n :].reshape(self.n, self.d),
            s=m[N_GLOBAL : N_GLOBAL + self.n],
            r=m[N_GLOBAL + self.n : N_GLOBAL + 2 * self.n],
            rho=m[0],
            phi=m[1],
        )
        nu = HyperParams(
            mu_sr=float(m[2]),
            sigma_s2=float(m[3]),
            sigma_r2=float(m[4]),
            gamma_sr=float(np.clip(m[5], -1.0, 1.0)),
            sigma_z2=float(m[6]),
        )
        return theta, nu

    def with_draws(self, draws, aligned=None):
        """Copy of this chain with a replaced draw matrix."""
        out = replace(self, draws=draws)
        if aligned is not None:
            out.aligned = aligned
        return out


def save_chain(chain, csv_path, meta_path):
    """Write draws as CSV and run information as a JSON sidecar.

    Output is byte-deterministic for identical chains: fixed column order,
    fixed float formatting, sorted JSON keys, no timestamps.
    """
    header = "iteration," + ",".join(chain_columns(chain.n, chain.d))
    body = np.column_stack([np.arange(chain.n_draws, dtype=float), chain.draws])
    np.savetxt(csv_path, body, fmt="%.17g", delimiter=",", header=header, comments="")
    meta = {
        "n": chain.n,
        "d": chain.d,
        "variant": chain.variant.value,
        "n_draws": chain.n_draws,
        "accept_rate": chain.accept_rate,
        "divergences": chain.divergences,
        "step_size": chain.step_size,
        "step_size_trace": np.asarray(chain.step_size_trace).tolist(),
        "aligned": chain.aligned,
        "warnings": list(chain.warnings),
    }
    meta.update(chain.meta)
    with open(meta_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_chain(csv_path, meta_path):
    """Read a chain written by save_chain."""
    with open(meta_path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    n, d = meta["n"], meta["d"]
    with open(csv_path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    expected = ["iteration"] + chain_columns(n, d)
    if header != expected:
        raise ValueError(f"{csv_path}: column header does not match n={n}, d={d}")
    body = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    draws = body[:, 1:]
    extra = {
        k: v
        for k, v in meta.items()
        if k
        not in {
            "n",
            "d",
            "variant",
            "n_draws",
            "accept_rate",
            "divergences",
            "step_size",
            "step_size_trace",
            "aligned",
            "warnings",
        }
    }
    return PosteriorChain(
        n=n,
        d=d,
        variant=ModelVariant(meta["variant"]),
        draws=draws,
        accept_rate=meta["accept_rate"],
        divergences=meta["divergences"],
        step_size=meta["step_size"],
        step_size_trace=np.asarray(meta.get("step_size_trace", [])),
        aligned=meta["aligned"],
        warnings=list(meta["warnings"]),
        meta=extra,
    )
