import math

import numpy as np
import pytest
from scipy import stats as sps

from rlsm.chain import PosteriorChain, chain_columns
from rlsm.diagnostics import (
    _criteria_from_deviances,
    _log_odds_stats,
    _strided_indices,
    free_parameter_count,
    information_criteria,
    local_log_odds_curve,
    posterior_predictive_check,
    simulate_from_params,
)
from rlsm.model import (
    ModelParams,
    ModelVariant,
    N_GLOBAL,
    dyad_probabilities,
    log_likelihood,
    natural_params,
)
from rlsm.network import summarize

from util import random_network, random_params


def flat_params(n, rho=0.0, phi=0.0, mu=0.0):
    """All nodes at one latent point, so every pair shares one dyad law."""
    return ModelParams(
        z=np.zeros((n, 2)),
        s=np.full(n, mu / 2.0),
        r=np.full(n, mu / 2.0),
        rho=rho,
        phi=phi,
    )


def chain_from_rows(rows, n, d, variant=ModelVariant.DISTANCE_DEPENDENT, aligned=False):
    return PosteriorChain(
        n=n,
        d=d,
        variant=variant,
        draws=np.asarray(rows, dtype=float),
        accept_rate=1.0,
        divergences=0,
        step_size=0.1,
        aligned=aligned,
    )


def constant_chain(theta, n_draws=120, variant=ModelVariant.DISTANCE_DEPENDENT):
    n, d = theta.n, theta.d
    row = np.zeros(len(chain_columns(n, d)))
    row[0] = theta.rho
    row[1] = theta.phi
    row[3] = 1.0
    row[4] = 1.0
    row[6] = 1.0
    row[N_GLOBAL : N_GLOBAL + n] = theta.s
    row[N_GLOBAL + n : N_GLOBAL + 2 * n] = theta.r
    row[N_GLOBAL + 2 * n :] = theta.z.ravel()
    return chain_from_rows(np.tile(row, (n_draws, 1)), n, d, variant)


class TestInformationCriteria:
    def test_aic_hand_value(self):
        ic = _criteria_from_deviances(
            ModelVariant.DISTANCE_DEPENDENT, -1500.0, 3000.0, 286, 4950
        )
        assert ic.aic == pytest.approx(3572.0)

    def test_bic_uses_dyad_count(self):
        ic = _criteria_from_deviances(
            ModelVariant.DISTANCE_DEPENDENT, -1500.0, 3000.0, 286, 4950
        )
        assert ic.bic == pytest.approx(3000.0 + 286 * math.log(4950))

    def test_dic_is_mean_deviance_plus_p_eff(self):
        ic = _criteria_from_deviances(
            ModelVariant.HOMOGENEOUS, -100.0, 230.0, 10, 45
        )
        assert ic.p_effective == pytest.approx(30.0)
        assert ic.dic == pytest.approx(260.0)

    def test_free_counts_drop_pinned_coordinates(self):
        full = free_parameter_count(10, 2, ModelVariant.DISTANCE_DEPENDENT)
        assert full == 10 * 4 + 2
        assert free_parameter_count(10, 2, ModelVariant.HOMOGENEOUS) == full - 1
        assert free_parameter_count(10, 2, ModelVariant.EDGE_INDEPENDENT) == full - 2

    def test_degenerate_chain_has_zero_p_eff(self):
        rng = np.random.default_rng(40)
        theta, _ = random_params(rng, 8, 2)
        net = random_network(rng, 8, 0.3)
        chain = constant_chain(theta)
        ic = information_criteria(chain, net)
        assert ic.p_effective == pytest.approx(0.0, abs=1e-8)
        dev_hat = -2.0 * log_likelihood(theta, net)
        assert ic.dic == pytest.approx(dev_hat, abs=1e-8)
        assert ic.aic == pytest.approx(dev_hat + 2 * (8 * 4 + 2))

    def test_plugin_is_posterior_mean(self):
        rng = np.random.default_rng(41)
        theta_a, _ = random_params(rng, 6, 2)
        theta_b, _ = random_params(rng, 6, 2)
        net = random_network(rng, 6, 0.4)
        rows = np.concatenate(
            [constant_chain(theta_a, 60).draws, constant_chain(theta_b, 60).draws]
        )
        chain = chain_from_rows(rows, 6, 2, aligned=True)
        ic = information_criteria(chain, net)
        theta_mean, _ = chain.posterior_mean()
        assert ic.log_lik_at_mean == pytest.approx(log_likelihood(theta_mean, net))
        mean_dev = -(log_likelihood(theta_a, net) + log_likelihood(theta_b, net))
        assert ic.mean_deviance == pytest.approx(mean_dev)

    def test_unaligned_rotated_chain_self_aligns_for_plugin(self):
        # draws identical up to a z-rotation carry zero extra information,
        # so p_eff must vanish even though the raw position mean would not
        rng = np.random.default_rng(43)
        theta, _ = random_params(rng, 7, 2)
        net = random_network(rng, 7, 0.35)
        rot = np.array([[0.0, -1.0], [1.0, 0.0]])
        spun = ModelParams(
            z=theta.z @ rot, s=theta.s, r=theta.r, rho=theta.rho, phi=theta.phi
        )
        rows = np.concatenate(
            [constant_chain(theta, 50).draws, constant_chain(spun, 50).draws]
        )
        chain = chain_from_rows(rows, 7, 2)
        assert not chain.aligned
        ic = information_criteria(chain, net)
        assert ic.p_effective == pytest.approx(0.0, abs=1e-8)
        raw_mean, _ = chain.posterior_mean()
        assert log_likelihood(raw_mean, net) != pytest.approx(
            ic.log_lik_at_mean, abs=1e-3
        )

    def test_variant_mismatch_rejected(self):
        rng = np.random.default_rng(42)
        theta, _ = random_params(rng, 5, 2)
        net = random_network(rng, 5, 0.4)
        chain = constant_chain(theta, variant=ModelVariant.HOMOGENEOUS)
        with pytest.raises(ValueError):
            information_criteria(chain, net, ModelVariant.DISTANCE_DEPENDENT)

    def test_defaults_to_chain_variant(self):
        rng = np.random.default_rng(43)
        theta, _ = random_params(rng, 5, 2)
        net = random_network(rng, 5, 0.4)
        chain = constant_chain(theta, variant=ModelVariant.HOMOGENEOUS)
        ic = information_criteria(chain, net)
        assert ic.variant is ModelVariant.HOMOGENEOUS
        assert ic.n_params == free_parameter_count(5, 2, ModelVariant.HOMOGENEOUS)


class TestSimulateFromParams:
    def test_same_seed_same_network(self):
        rng = np.random.default_rng(50)
        theta, _ = random_params(rng, 15, 2)
        a = simulate_from_params(theta, seed=7)
        b = simulate_from_params(theta, seed=7)
        assert a == b

    def test_different_seeds_differ(self):
        rng = np.random.default_rng(51)
        theta, _ = random_params(rng, 15, 2)
        assert simulate_from_params(theta, 1) != simulate_from_params(theta, 2)

    def test_huge_reciprocity_forces_mutual_dyads(self):
        theta = flat_params(12, rho=60.0, mu=0.0)
        net = simulate_from_params(theta, seed=0)
        assert np.all(net.adj + np.eye(12, dtype=np.int8) == 1)

    def test_hostile_reciprocity_forbids_mutual_dyads(self):
        theta = flat_params(30, rho=-60.0, mu=3.0)
        net = simulate_from_params(theta, seed=1)
        mutual = net.adj & net.adj.T
        assert mutual.sum() == 0
        assert net.n_edges > 0

    def test_cell_frequencies_match_dyad_law(self):
        # one shared dyad law across ~1e5 pairs, checked by chi-square GOF
        n = 450
        theta = flat_params(n, rho=0.4, mu=-0.6)
        net = simulate_from_params(theta, seed=3)
        y_u = net.adj[np.triu_indices(n, 1)]
        y_l = net.adj.T[np.triu_indices(n, 1)]
        counts = np.array(
            [
                int(np.sum((y_u == 1) & (y_l == 1))),
                int(np.sum((y_u == 1) & (y_l == 0))),
                int(np.sum((y_u == 0) & (y_l == 1))),
                int(np.sum((y_u == 0) & (y_l == 0))),
            ]
        )
        p = dyad_probabilities(natural_params(theta, 0, 1))
        expected = counts.sum() * np.array([p.p_mutual, p.p_out, p.p_in, p.p_null])
        gof = sps.chisquare(counts, expected)
        assert gof.pvalue > 0.01

    def test_distance_dependence_shows_up_in_samples(self):
        # phi < 0 turns reciprocity off for far pairs
        rng = np.random.default_rng(52)
        n = 200
        z = np.zeros((n, 2))
        z[n // 2 :, 0] = 4.0
        theta = ModelParams(
            z=z, s=np.zeros(n), r=np.zeros(n), rho=2.5, phi=-2.0
        )
        net = simulate_from_params(theta, seed=4)
        iu, ju = np.triu_indices(n, 1)
        near = (z[iu, 0] == z[ju, 0])
        mut = (net.adj[iu, ju] == 1) & (net.adj[ju, iu] == 1)
        assert mut[near].mean() > mut[~near].mean()


class TestPredictiveCheck:
    def test_strided_subsample_is_unique_and_even(self):
        idx = _strided_indices(1000, 100)
        assert len(np.unique(idx)) == 100
        assert idx[0] == 0
        assert np.all(np.diff(idx) == 10)
        idx = _strided_indices(7, 7)
        assert np.array_equal(idx, np.arange(7))

    def test_degenerate_replicates_hit_statistic_exactly(self):
        theta = flat_params(10, rho=60.0)
        net = simulate_from_params(theta, seed=0)
        chain = constant_chain(theta, 150)
        res = posterior_predictive_check(chain, net, n_draws=20, seed=5)
        assert np.all(res.replicates == 1.0)
        assert res.observed == 1.0
        assert res.tail_probability == 1.0

    def test_seed_determinism(self):
        rng = np.random.default_rng(60)
        theta, _ = random_params(rng, 12, 2)
        net = random_network(rng, 12, 0.3)
        chain = constant_chain(theta, 200)
        a = posterior_predictive_check(chain, net, n_draws=30, seed=9)
        b = posterior_predictive_check(chain, net, n_draws=30, seed=9)
        assert np.array_equal(a.replicates, b.replicates)
        assert a.tail_probability == b.tail_probability

    def test_tail_probability_counts_upper_tail(self):
        rng = np.random.default_rng(61)
        theta, _ = random_params(rng, 12, 2)
        net = random_network(rng, 12, 0.3)
        chain = constant_chain(theta, 200)
        res = posterior_predictive_check(chain, net, n_draws=50, seed=10)
        assert res.tail_probability == pytest.approx(
            np.mean(res.replicates >= res.observed)
        )

    def test_requesting_too_many_draws_rejected(self):
        theta = flat_params(8)
        chain = constant_chain(theta, 120)
        with pytest.raises(ValueError):
            posterior_predictive_check(chain, simulate_from_params(theta, 0), n_draws=121)


class TestLocalLogOddsCurve:
    def test_hand_census_value(self):
        est, lo, hi = _log_odds_stats(n_mut=5, n_out=4, n_in=5, n_null=10)
        assert est == pytest.approx(math.log(2.5))
        half = 1.96 * math.sqrt(1 / 5 + 1 / 4 + 1 / 5 + 1 / 10)
        assert lo == pytest.approx(est - half)
        assert hi == pytest.approx(est + half)

    def test_balanced_census_gives_zero(self):
        est, lo, hi = _log_odds_stats(7, 7, 7, 7)
        assert est == 0.0
        assert lo < 0 < hi

    def test_windows_missing_a_type_are_skipped(self):
        # two nodes at distance 5: one mutual dyad only, no null anywhere
        z = np.array([[0.0, 0.0], [5.0, 0.0]])
        adj = np.array([[0, 1], [1, 0]], dtype=np.int8)
        from rlsm.network import DirectedNetwork

        curve = local_log_odds_curve(DirectedNetwork(adj), z)
        assert curve.windows == []

    def test_positions_shape_checked(self):
        rng = np.random.default_rng(70)
        net = random_network(rng, 6, 0.5)
        with pytest.raises(ValueError):
            local_log_odds_curve(net, np.zeros((5, 2)))

    def test_window_grid_and_census_on_constructed_layout(self):
        # clusters at distance 0.4 (within the first window) and 6.0
        rng = np.random.default_rng(71)
        n = 40
        z = np.zeros((n, 2))
        z[10:20, 0] = 0.4
        z[20:30, 0] = 6.0
        z[30:, 0] = 6.4
        net = random_network(rng, n, 0.4)
        curve = local_log_odds_curve(net, z, window_width=2.0, shift=0.5)
        for w in curve.windows:
            assert w.high == pytest.approx(w.low + 2.0)
            assert w.midpoint == pytest.approx(w.low + 1.0)
            assert (w.low / 0.5) == pytest.approx(round(w.low / 0.5))
            assert min(w.n_mutual, w.n_out, w.n_in, w.n_null) > 0
        lows = [w.low for w in curve.windows]
        assert 0.0 in lows

    def test_flat_for_distance_free_dyads(self):
        # dyads iid across pairs, positions arbitrary: slope CI covers zero
        rng = np.random.default_rng(72)
        n = 260
        theta_flat = flat_params(n, rho=0.8, mu=-1.0)
        net = simulate_from_params(theta_flat, seed=10)
        positions = rng.normal(size=(n, 2))
        curve = local_log_odds_curve(net, positions)
        assert len(curve.windows) >= 3
        fit = sps.linregress(curve.midpoints, curve.log_odds)
        assert abs(fit.slope) <= 2.58 * fit.stderr + 1e-12

    def test_distance_dependent_dyads_slope_downward(self):
        rng = np.random.default_rng(73)
        n = 300
        z = rng.normal(size=(n, 2)) * 1.5
        theta = ModelParams(
            z=z, s=np.zeros(n), r=np.zeros(n), rho=3.0, phi=-1.5
        )
        net = simulate_from_params(theta, seed=11)
        curve = local_log_odds_curve(net, z)
        assert len(curve.windows) >= 4
        rho_spearman = sps.spearmanr(curve.midpoints, curve.log_odds).statistic
        assert rho_spearman < 0

    def test_csv_rows_match_windows(self):
        rng = np.random.default_rng(74)
        n = 80
        z = rng.normal(size=(n, 2))
        net = random_network(rng, n, 0.4)
        curve = local_log_odds_curve(net, z)
        header, rows = curve.as_rows()
        assert len(rows) == len(curve.windows)
        assert header[0] == "low"
        if rows:
            assert rows[0][3] == curve.windows[0].log_odds
