"""Latent space models with distance-dependent reciprocity for directed networks."""

from .chain import PosteriorChain, chain_columns, load_chain, save_chain
from .diagnostics import (
    InformationCriteria,
    LocalOddsCurve,
    PredictiveCheck,
    information_criteria,
    local_log_odds_curve,
    posterior_predictive_check,
    simulate_from_params,
)
from .hmc import (
    HmcConfig,
    MapResult,
    find_reasonable_step_size,
    leapfrog,
    make_rng,
    map_estimate,
    maximize_target,
    run_chain,
    sample_posterior,
)
from .initialization import (
    InitReport,
    init_latent_mds,
    init_reciprocity,
    init_sender_receiver,
    initialize,
)
from .model import (
    DyadNaturalParams,
    DyadProbabilities,
    HyperParams,
    ModelParams,
    ModelVariant,
    PriorConstants,
    UnconstrainedPosterior,
    dyad_probabilities,
    grad_log_posterior,
    log_likelihood,
    log_posterior,
    log_prior,
    natural_params,
    parameter_count,
)
from .network import (
    DirectedNetwork,
    DyadValue,
    NetworkFormatError,
    NetworkSummary,
    load_network,
    save_network,
    summarize,
    symmetrize,
)
from .postprocess import (
    PosteriorSummary,
    RecoveryMetrics,
    align_chain,
    effective_sample_size,
    mcse,
    procrustes_align,
    recovery_metrics,
    summarize_posterior,
)
from .simulation import (
    SimDesign,
    SimInstance,
    calibrate_mu_sr,
    calibrate_rho,
    draw_truth,
    expected_density,
    generate,
)

__version__ = "0.1.0"
