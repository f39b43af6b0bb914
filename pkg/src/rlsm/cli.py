"""Command-line front end for simulation, fitting, and diagnostics.

Every run is a pure function of (config, input files, seed): outputs are
byte-identical across repeats.  Each run writes into its own directory a
config snapshot, the command outputs, and a plain log; JSON outputs embed
the config hash so results can be traced back to their settings.
"""

import argparse
import hashlib
import json
import sys
from pathlib import Path

from .chain import load_chain, save_chain
from .diagnostics import (
    information_criteria,
    local_log_odds_curve,
    posterior_predictive_check,
)
from .hmc import HmcConfig, map_estimate, sample_posterior
from .initialization import initialize
from .model import ModelVariant
from .network import load_network, save_network, summarize
from .postprocess import (
    align_chain,
    effective_sample_size,
    mcse,
    summarize_posterior,
)
from .simulation import SimDesign, generate

__all__ = ["main", "run"]

_REQUIRED = object()

_SCHEMAS = {
    "simulate": {
        "n": (int, _REQUIRED),
        "d": (int, 2),
        "sigma_s2": (float, 1.0),
        "sigma_r2": (float, 1.0),
        "gamma_sr": (float, 0.5),
        "target_density": (float, 0.2),
        "mixture_means": (list, [[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        "mixture_var": (float, 0.1),
        "phi_range": (list, [-1.0, 1.0]),
        "target_mean_odds_ratio": (float, 2.0),
        "match_mean_odds": (bool, False),
    },
    "init": {
        "network": (str, _REQUIRED),
        "d": (int, 2),
    },
    "fit": {
        "network": (str, _REQUIRED),
        "d": (int, 2),
        "variant": (str, "distance-dependent"),
        "warmup_iters": (int, 2500),
        "sampling_iters": (int, 5000),
        "target_accept": (float, 0.8),
        "max_tree_depth": (int, 10),
        "init_step_size": (float, None),
        "trajectory": (str, "nuts"),
        "fixed_leapfrog_steps": (int, 32),
    },
    "compare": {
        "network": (str, _REQUIRED),
        "chains": (list, _REQUIRED),
    },
    "diagnose": {
        "network": (str, _REQUIRED),
        "chain": (str, _REQUIRED),
        "ppc_draws": (int, 200),
        "window_width": (float, 2.0),
        "shift": (float, 0.5),
    },
    "summarize": {
        "chain": (str, _REQUIRED),
    },
}
_SCHEMAS["ppc"] = _SCHEMAS["diagnose"]

_COMMON = {"seed": (int, 0), "out": (str, _REQUIRED)}


class ValidationError(Exception):
    pass


def _check_type(key, value, expected):
    if expected is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif expected is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, expected)
    if not ok and value is not None:
        raise ValidationError(f"config key {key!r} must be {expected.__name__}")


def _resolve_config(command, file_config, overrides):
    schema = dict(_COMMON)
    schema.update(_SCHEMAS[command])
    config = {}
    for key, value in file_config.items():
        if key not in schema:
            raise ValidationError(f"unknown config key {key!r} for {command!r}")
        config[key] = value
    for key, value in overrides.items():
        if value is not None:
            config[key] = value
    for key, (expected, default) in schema.items():
        if key not in config:
            if default is _REQUIRED:
                raise ValidationError(f"missing required config key {key!r}")
            config[key] = default
        _check_type(key, config[key], expected)
    return config


def _config_digest(command, config):
    # the output directory names where the run lives, not what it computes,
    # so it stays out of the hash and reruns into other directories match
    hashed = {k: v for k, v in config.items() if k != "out"}
    blob = json.dumps(
        {"command": command, "config": hashed}, sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _network_digest(net):
    return hashlib.sha256(net.adj.tobytes()).hexdigest()


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        cells = [
            format(v, ".17g") if isinstance(v, float) else str(v) for v in row
        ]
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _theta_dict(theta):
    return {
        "rho": float(theta.rho),
        "phi": float(theta.phi),
        "s": theta.s.tolist(),
        "r": theta.r.tolist(),
        "z": theta.z.tolist(),
    }


def _nu_dict(nu):
    return {
        "mu_sr": float(nu.mu_sr),
        "sigma_s2": float(nu.sigma_s2),
        "sigma_r2": float(nu.sigma_r2),
        "gamma_sr": float(nu.gamma_sr),
        "sigma_z2": float(nu.sigma_z2),
    }


def _parse_variant(name):
    try:
        return ModelVariant(name)
    except ValueError:
        valid = ", ".join(v.value for v in ModelVariant)
        raise ValidationError(f"unknown variant {name!r}; expected one of: {valid}")


def _load_network_checked(path):
    if not Path(path).is_file():
        raise ValidationError(f"network file not found: {path}")
    return load_network(path)


def _chain_paths(csv_path):
    csv_path = Path(csv_path)
    name = csv_path.name
    if name.endswith(".csv"):
        meta = csv_path.with_name(name[:-4] + ".meta.json")
    else:
        meta = csv_path.with_name(name + ".meta.json")
    return csv_path, meta


def _load_chain_checked(path):
    csv_path, meta_path = _chain_paths(path)
    if not csv_path.is_file():
        raise ValidationError(f"chain file not found: {csv_path}")
    if not meta_path.is_file():
        raise ValidationError(f"chain metadata not found: {meta_path}")
    return load_chain(csv_path, meta_path)


def _summary_payload(chain, digest):
    summ = summarize_posterior(chain)
    payload = summ.as_dict()
    payload["ess"] = {
        "rho": effective_sample_size(chain.col("rho")),
        "phi": effective_sample_size(chain.col("phi")),
    }
    payload["mcse"] = {
        "rho": mcse(chain.col("rho")),
        "phi": mcse(chain.col("phi")),
    }
    payload["config_sha256"] = digest
    return payload


def _cmd_simulate(config, out, digest, log):
    design = SimDesign(
        n=config["n"],
        d=config["d"],
        sigma_s2=config["sigma_s2"],
        sigma_r2=config["sigma_r2"],
        gamma_sr=config["gamma_sr"],
        target_density=config["target_density"],
        mixture_means=tuple(tuple(m) for m in config["mixture_means"]),
        mixture_var=config["mixture_var"],
        phi_range=tuple(config["phi_range"]),
        target_mean_odds_ratio=config["target_mean_odds_ratio"],
        seed=config["seed"],
    )
    inst = generate(design, match_mean_odds=config["match_mean_odds"])
    save_network(inst.net, out / "network.csv")
    log.append(f"wrote network.csv ({inst.net.n} nodes, {inst.net.n_edges} edges)")
    _write_json(
        out / "truth.json",
        {
            "theta": _theta_dict(inst.truth),
            "mu_sr_shift": inst.mu_sr_shift,
            "design": design.as_dict(),
            "config_sha256": digest,
        },
    )
    summ = summarize(inst.net)
    _write_json(
        out / "stats.json",
        {
            "realized_density": inst.realized_density,
            "realized_mean_rho_ij": inst.realized_mean_rho_ij,
            "mutual_tie_fraction": summ.mutual_tie_fraction,
            "n_edges": inst.net.n_edges,
            "network_sha256": _network_digest(inst.net),
            "config_sha256": digest,
        },
    )
    log.append("wrote truth.json, stats.json")


def _cmd_init(config, out, digest, log):
    net = _load_network_checked(config["network"])
    report = initialize(net, config["d"])
    payload = report.as_dict()
    payload["config_sha256"] = digest
    payload["network_sha256"] = _network_digest(net)
    _write_json(out / "init.json", payload)
    log.append(f"wrote init.json (notes: {len(report.notes)})")


def _cmd_fit(config, out, digest, log):
    net = _load_network_checked(config["network"])
    variant = _parse_variant(config["variant"])
    hmc_config = HmcConfig(
        warmup_iters=config["warmup_iters"],
        sampling_iters=config["sampling_iters"],
        target_accept=config["target_accept"],
        max_tree_depth=config["max_tree_depth"],
        seed=config["seed"],
        init_step_size=config["init_step_size"],
        trajectory=config["trajectory"],
        fixed_leapfrog_steps=config["fixed_leapfrog_steps"],
    )
    d = config["d"]
    init = initialize(net, d)
    log.append("initialization done")
    chain = sample_posterior(net, d, hmc_config, init=init, variant=variant)
    log.append(
        f"sampling done (accept {chain.accept_rate:.3f}, "
        f"divergences {chain.divergences})"
    )
    result = map_estimate(net, d, init=init, variant=variant)
    log.append(f"mode search done (converged: {result.converged})")
    aligned = align_chain(chain, result.theta.z)
    aligned.meta["config_sha256"] = digest
    aligned.meta["network_sha256"] = _network_digest(net)
    save_chain(aligned, out / "chain.csv", out / "chain.meta.json")
    _write_json(
        out / "map.json",
        {
            "theta": _theta_dict(result.theta),
            "nu": _nu_dict(result.nu),
            "log_posterior": result.log_posterior,
            "converged": result.converged,
            "grad_max_norm": result.grad_max_norm,
            "warnings": list(result.warnings),
            "config_sha256": digest,
        },
    )
    _write_json(out / "summary.json", _summary_payload(aligned, digest))
    log.append("wrote chain.csv, chain.meta.json, map.json, summary.json")


def _cmd_compare(config, out, digest, log):
    net = _load_network_checked(config["network"])
    net_digest = _network_digest(net)
    if not config["chains"]:
        raise ValidationError("compare needs at least one chain path")
    rows = []
    for path in config["chains"]:
        chain = _load_chain_checked(path)
        if chain.n != net.n:
            raise ValidationError(
                f"chain {path} is for n={chain.n} nodes, network has n={net.n}"
            )
        recorded = chain.meta.get("network_sha256")
        if recorded is not None and recorded != net_digest:
            raise ValidationError(
                f"chain {path} was fit on a different network than the one given"
            )
        ic = information_criteria(chain, net)
        rows.append((str(path), ic))
    best = {
        crit: min(rows, key=lambda it: getattr(it[1], crit))[1].variant.value
        for crit in ("aic", "bic", "dic")
    }
    payload_rows = []
    for path, ic in rows:
        entry = ic.as_dict()
        entry["chain"] = path
        for crit in ("aic", "bic", "dic"):
            entry[f"best_{crit}"] = ic.variant.value == best[crit]
        payload_rows.append(entry)
    _write_json(
        out / "comparison.json",
        {"rows": payload_rows, "best": best, "config_sha256": digest},
    )
    header = ["chain", "variant", "n_params", "aic", "bic", "dic", "p_effective"]
    csv_rows = [
        [path, ic.variant.value, ic.n_params, ic.aic, ic.bic, ic.dic, ic.p_effective]
        for path, ic in rows
    ]
    _write_csv(out / "comparison.csv", header, csv_rows)
    log.append(f"wrote comparison.json, comparison.csv ({len(rows)} chains)")


def _cmd_diagnose(config, out, digest, log):
    net = _load_network_checked(config["network"])
    chain = _load_chain_checked(config["chain"])
    if chain.n != net.n:
        raise ValidationError(
            f"chain is for n={chain.n} nodes, network has n={net.n}"
        )
    ppc = posterior_predictive_check(
        chain, net, n_draws=config["ppc_draws"], seed=config["seed"]
    )
    theta_mean, _ = chain.posterior_mean()
    curve = local_log_odds_curve(
        net,
        theta_mean.z,
        window_width=config["window_width"],
        shift=config["shift"],
    )
    payload = ppc.as_dict()
    payload["config_sha256"] = digest
    payload["curve"] = {
        "window_width": curve.window_width,
        "shift": curve.shift,
        "n_windows": len(curve.windows),
    }
    _write_json(out / "ppc.json", payload)
    header, rows = curve.as_rows()
    _write_csv(out / "odds_curve.csv", header, rows)
    log.append(
        f"wrote ppc.json (tail probability {ppc.tail_probability:.3f}), "
        f"odds_curve.csv ({len(curve.windows)} windows)"
    )


def _cmd_summarize(config, out, digest, log):
    chain = _load_chain_checked(config["chain"])
    _write_json(out / "summary.json", _summary_payload(chain, digest))
    log.append("wrote summary.json")


_HANDLERS = {
    "simulate": _cmd_simulate,
    "init": _cmd_init,
    "fit": _cmd_fit,
    "compare": _cmd_compare,
    "diagnose": _cmd_diagnose,
    "ppc": _cmd_diagnose,
    "summarize": _cmd_summarize,
}


class _Parser(argparse.ArgumentParser):
    # usage mistakes are validation errors: exit code 1, not argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser():
    parser = _Parser(
        prog="rlsm",
        description="Latent space network models with distance-dependent reciprocity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _HANDLERS:
        p = sub.add_parser(name, description=f"Run the {name} command.")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="random seed (overrides config)")
        p.add_argument("--variant", help="model variant (overrides config)")
        p.add_argument("--d", type=int, help="latent dimension (overrides config)")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--network", help="network file (overrides config)")
        p.error = parser.error
    return parser


def run(argv=None):
    """Execute one CLI command; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    # ppc is a pure alias: canonicalize before hashing so both spellings
    # produce identical outputs
    command = "diagnose" if args.command == "ppc" else args.command
    try:
        file_config = {}
        if args.config is not None:
            path = Path(args.config)
            if not path.is_file():
                raise ValidationError(f"config file not found: {path}")
            try:
                file_config = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise ValidationError(f"config file is not valid JSON: {exc}")
            if not isinstance(file_config, dict):
                raise ValidationError("config file must hold a JSON object")
        overrides = {
            "seed": args.seed,
            "variant": getattr(args, "variant", None),
            "d": args.d,
            "out": args.out,
            "network": args.network,
        }
        allowed = set(_COMMON) | set(_SCHEMAS[command])
        overrides = {k: v for k, v in overrides.items() if k in allowed}
        config = _resolve_config(command, file_config, overrides)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out = Path(config["out"])
    out.mkdir(parents=True, exist_ok=True)
    digest = _config_digest(command, config)
    log = [f"command: {command}", f"config sha256: {digest}"]
    _write_json(
        out / "config.json",
        {"command": command, "config": config, "config_sha256": digest},
    )
    try:
        _HANDLERS[command](config, out, digest, log)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        log.append(f"failed: validation error: {exc}")
        (out / "FAILED").write_text(f"validation error: {exc}\n", encoding="utf-8")
        _write_log(out, log)
        return 1
    except Exception as exc:  # runtime failure: partial outputs are marked
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        log.append(f"failed: {type(exc).__name__}: {exc}")
        (out / "FAILED").write_text(
            f"runtime failure: {type(exc).__name__}: {exc}\n", encoding="utf-8"
        )
        _write_log(out, log)
        return 2
    log.append("done")
    _write_log(out, log)
    return 0


def _write_log(out, log):
    with open(out / "run.log", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(log) + "\n")


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
