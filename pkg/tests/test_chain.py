import numpy as np
import pytest

from rlsm.chain import PosteriorChain, chain_columns, load_chain, save_chain
from rlsm.model import ModelVariant


def make_chain(rng, n=4, d=2, t=25):
    k = 7 + n * (d + 2)
    draws = rng.standard_normal((t, k))
    draws[:, 3:5] = np.exp(draws[:, 3:5])
    draws[:, 5] = np.tanh(draws[:, 5])
    draws[:, 6] = np.exp(draws[:, 6])
    return PosteriorChain(
        n=n,
        d=d,
        variant=ModelVariant.DISTANCE_DEPENDENT,
        draws=draws,
        accept_rate=0.87,
        divergences=1,
        step_size=0.05,
        step_size_trace=np.array([0.1, 0.07, 0.05]),
        warnings=["example warning"],
        meta={"seed": 3, "config": {"warmup_iters": 10}},
    )


class TestColumns:
    def test_column_layout(self):
        cols = chain_columns(3, 2)
        assert cols[:7] == [
            "rho", "phi", "mu_sr", "sigma_s2", "sigma_r2", "gamma_sr", "sigma_z2",
        ]
        assert cols[7:10] == ["s_0", "s_1", "s_2"]
        assert cols[10:13] == ["r_0", "r_1", "r_2"]
        assert cols[13:] == ["z_0_0", "z_0_1", "z_1_0", "z_1_1", "z_2_0", "z_2_1"]

    def test_wrong_width_rejected(self):
        with pytest.raises(ValueError):
            PosteriorChain(
                n=4,
                d=2,
                variant=ModelVariant.DISTANCE_DEPENDENT,
                draws=np.zeros((5, 10)),
                accept_rate=1.0,
                divergences=0,
                step_size=0.1,
            )


class TestAccessors:
    def test_views_and_draw_objects(self):
        rng = np.random.default_rng(70)
        chain = make_chain(rng)
        assert chain.s_draws.shape == (25, 4)
        assert chain.r_draws.shape == (25, 4)
        assert chain.z_draws.shape == (25, 4, 2)
        theta = chain.theta_at(3)
        assert theta.rho == chain.col("rho")[3]
        np.testing.assert_array_equal(theta.z, chain.z_draws[3])
        nu = chain.nu_at(3)
        assert nu.sigma_s2 == chain.col("sigma_s2")[3]

    def test_posterior_mean(self):
        rng = np.random.default_rng(71)
        chain = make_chain(rng)
        theta, nu = chain.posterior_mean()
        assert theta.rho == pytest.approx(chain.col("rho").mean())
        assert nu.sigma_z2 == pytest.approx(chain.col("sigma_z2").mean())
        np.testing.assert_allclose(theta.z, chain.z_draws.mean(axis=0))


class TestRoundTrip:
    def test_save_load_round_trip(self, tmp_path):
        rng = np.random.default_rng(72)
        chain = make_chain(rng)
        csv, meta = tmp_path / "c.csv", tmp_path / "c.json"
        save_chain(chain, csv, meta)
        back = load_chain(csv, meta)
        np.testing.assert_array_equal(back.draws, chain.draws)
        assert back.n == chain.n and back.d == chain.d
        assert back.variant == chain.variant
        assert back.accept_rate == chain.accept_rate
        assert back.divergences == chain.divergences
        assert back.step_size == chain.step_size
        np.testing.assert_array_equal(back.step_size_trace, chain.step_size_trace)
        assert back.warnings == chain.warnings
        assert back.meta["seed"] == 3
        assert back.meta["config"]["warmup_iters"] == 10

    def test_bytes_deterministic(self, tmp_path):
        rng = np.random.default_rng(73)
        chain = make_chain(rng)
        paths = [(tmp_path / f"{i}.csv", tmp_path / f"{i}.json") for i in range(2)]
        for csv, meta in paths:
            save_chain(chain, csv, meta)
        assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
        assert paths[0][1].read_bytes() == paths[1][1].read_bytes()

    def test_header_mismatch_detected(self, tmp_path):
        rng = np.random.default_rng(74)
        chain = make_chain(rng)
        csv, meta = tmp_path / "c.csv", tmp_path / "c.json"
        save_chain(chain, csv, meta)
        text = csv.read_text().splitlines()
        text[0] = text[0].replace("s_0", "s_9")
        csv.write_text("\n".join(text) + "\n")
        with pytest.raises(ValueError):
            load_chain(csv, meta)

    def test_single_draw_round_trip(self, tmp_path):
        rng = np.random.default_rng(75)
        chain = make_chain(rng, t=1)
        csv, meta = tmp_path / "c.csv", tmp_path / "c.json"
        save_chain(chain, csv, meta)
        back = load_chain(csv, meta)
        assert back.draws.shape == chain.draws.shape
