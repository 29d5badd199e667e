"""Command-line entry points and experiment configuration.

Configs are INI files with sections ``[chain]``, ``[train]``, ``[noise]``,
``[output]`` and optional ``[sweep]`` / ``[scaling]`` blocks; see the repo
README for the full schema. Every value has a typed default, parsing errors
name the offending section and key, and a config that fails validation exits
with code 2 before any output file is touched.

All CSV artifacts start with the version comment ``# thermal-vqs v1`` and are
written with deterministic float formatting, so identical configs and seeds
reproduce byte-identical files.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .ansatz import CircuitParams, EntanglerSpec
from .observables import (
    assemble_gibbs,
    estimate_thermals,
    fidelity,
    identify_eigenstates,
)
from .probmodel import ENUMERATION_CAP, BernoulliProduct
from .spinchain import XXZSpec, exact_gibbs, spectral_oracle
from .vfe import GRADIENTS, MODES, RunRecord, TrainConfig, train

CSV_VERSION = "# thermal-vqs v1"

SCALING_KINDS = ("layers", "psr_cost", "spsa_cost")


class ConfigError(Exception):
    """Bad or missing configuration value; message names section and key."""


# ---------------------------------------------------------------------------
# Configuration schema
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    """Inverse-temperature sweep with thermal estimators at each point."""

    betas: tuple[float, ...]
    n_samples: int = 5
    n_repeats: int = 20
    seed: int = 1


@dataclass(frozen=True)
class ScalingConfig:
    """One scaling campaign: layer contour or cost-versus-size fits."""

    kind: str
    n_grid: tuple[int, ...]
    trials: int = 10
    target_epsilon: float = 0.005
    n_iter_cap: int = 1000
    n_iter_fixed: int = 150
    layer_grid: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8, 9, 10)
    layers_per_n: tuple[tuple[int, int], ...] = ()
    n_batch: int = 2
    n_spsa_grid: tuple[int, ...] = (1, 3, 5, 7, 9, 11, 13)
    seed: int = 1


@dataclass
class ExperimentConfig:
    chain: XXZSpec
    train: TrainConfig
    out_dir: str = "runs/out"
    emit_fidelity: bool = False
    sweep: SweepConfig | None = None
    scaling: ScalingConfig | None = None


_REQUIRED = object()


def _get(parser: configparser.ConfigParser, section: str, key: str, cast, default=_REQUIRED):
    if not parser.has_option(section, key):
        if default is _REQUIRED:
            raise ConfigError(f"[{section}] {key}: required key is missing")
        return default
    raw = parser.get(section, key).strip()
    if raw == "":
        if default is _REQUIRED:
            raise ConfigError(f"[{section}] {key}: required key is empty")
        return default
    try:
        return cast(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from exc


def _bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in raw.split(",") if tok.strip())


def _float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.split(",") if tok.strip())


def _pair_list(raw: str) -> tuple[tuple[int, int], ...]:
    pairs = []
    for tok in raw.split(","):
        tok = tok.strip()
        if not tok:
            continue
        left, _, right = tok.partition(":")
        pairs.append((int(left), int(right)))
    return tuple(pairs)


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate an experiment config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc

    for section in ("chain", "train"):
        if not parser.has_section(section):
            raise ConfigError(f"[{section}]: required section is missing")

    try:
        chain = XXZSpec(
            n_sites=_get(parser, "chain", "n_sites", int),
            delta=_get(parser, "chain", "delta", float, 0.0),
            h=_get(parser, "chain", "h", float, 0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"[chain]: {exc}") from exc

    noise_section = "noise" if parser.has_section("noise") else "train"
    train_cfg = TrainConfig(
        beta=_get(parser, "train", "beta", float),
        n_layers=_get(parser, "train", "n_layers", int),
        mode=_get(parser, "train", "mode", str, "full_space"),
        grad_theta=_get(parser, "train", "grad_theta", str, "psr"),
        n_batch=_get(parser, "train", "n_batch", int, 2),
        n_spsa=_get(parser, "train", "n_spsa", int, 10),
        spsa_c=_get(parser, "train", "spsa_c", float, 0.1),
        learning_rate=_get(parser, "train", "learning_rate", float, 0.05),
        adam_beta1=_get(parser, "train", "adam_beta1", float, 0.9),
        adam_beta2=_get(parser, "train", "adam_beta2", float, 0.999),
        adam_eps=_get(parser, "train", "adam_eps", float, 1e-8),
        n_iter_max=_get(parser, "train", "n_iter_max", int, 150),
        seed=_get(parser, "train", "seed", int, 1),
        shots_per_setting=_get(parser, noise_section, "shots_per_setting", int, 0),
        nnn_ratio=_get(parser, noise_section, "nnn_ratio", float, 0.0),
        target_epsilon=_get(parser, "train", "target_epsilon", float, None),
        track_full_space=_get(parser, "train", "track_full_space", _bool, True),
        enum_cap=_get(parser, "train", "enum_cap", int, 14),
    )
    try:
        train_cfg.validate()
    except ValueError as exc:
        raise ConfigError(f"[train]: {exc}") from exc

    out_dir = _get(parser, "output", "directory", str, "runs/out") if parser.has_section("output") else "runs/out"
    emit_fidelity = (
        _get(parser, "output", "emit_fidelity", _bool, False)
        if parser.has_section("output")
        else False
    )

    sweep = None
    if parser.has_section("sweep"):
        sweep = SweepConfig(
            betas=_get(parser, "sweep", "betas", _float_list),
            n_samples=_get(parser, "sweep", "n_samples", int, 5),
            n_repeats=_get(parser, "sweep", "n_repeats", int, 20),
            seed=_get(parser, "sweep", "seed", int, 1),
        )
        if not sweep.betas:
            raise ConfigError("[sweep] betas: need at least one value")
        if any(b <= 0 for b in sweep.betas):
            raise ConfigError("[sweep] betas: all values must be positive")
        if sweep.n_samples < 1 or sweep.n_repeats < 2:
            raise ConfigError("[sweep]: need n_samples >= 1 and n_repeats >= 2")

    scaling = None
    if parser.has_section("scaling"):
        scaling = ScalingConfig(
            kind=_get(parser, "scaling", "kind", str),
            n_grid=_get(parser, "scaling", "n_grid", _int_list),
            trials=_get(parser, "scaling", "trials", int, 10),
            target_epsilon=_get(parser, "scaling", "target_epsilon", float, 0.005),
            n_iter_cap=_get(parser, "scaling", "n_iter_cap", int, 1000),
            n_iter_fixed=_get(parser, "scaling", "n_iter_fixed", int, 150),
            layer_grid=_get(
                parser, "scaling", "layer_grid", _int_list, (2, 3, 4, 5, 6, 7, 8, 9, 10)
            ),
            layers_per_n=_get(parser, "scaling", "layers_per_n", _pair_list, ()),
            n_batch=_get(parser, "scaling", "n_batch", int, 2),
            n_spsa_grid=_get(
                parser, "scaling", "n_spsa_grid", _int_list, (1, 3, 5, 7, 9, 11, 13)
            ),
            seed=_get(parser, "scaling", "seed", int, 1),
        )
        if scaling.kind not in SCALING_KINDS:
            raise ConfigError(f"[scaling] kind: must be one of {SCALING_KINDS}")
        if not scaling.n_grid:
            raise ConfigError("[scaling] n_grid: need at least one size")
        if scaling.trials < 1:
            raise ConfigError("[scaling] trials: must be at least 1")
        if scaling.target_epsilon <= 0:
            raise ConfigError("[scaling] target_epsilon: must be positive")

    return ExperimentConfig(
        chain=chain,
        train=train_cfg,
        out_dir=out_dir,
        emit_fidelity=emit_fidelity,
        sweep=sweep,
        scaling=scaling,
    )


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    """Serialize a config so that loading it back reproduces the same object."""
    parser = configparser.ConfigParser()
    parser["chain"] = {
        "n_sites": str(cfg.chain.n_sites),
        "delta": repr(cfg.chain.delta),
        "h": repr(cfg.chain.h),
    }
    t = cfg.train
    parser["train"] = {
        "beta": repr(t.beta),
        "n_layers": str(t.n_layers),
        "mode": t.mode,
        "grad_theta": t.grad_theta,
        "n_batch": str(t.n_batch),
        "n_spsa": str(t.n_spsa),
        "spsa_c": repr(t.spsa_c),
        "learning_rate": repr(t.learning_rate),
        "adam_beta1": repr(t.adam_beta1),
        "adam_beta2": repr(t.adam_beta2),
        "adam_eps": repr(t.adam_eps),
        "n_iter_max": str(t.n_iter_max),
        "seed": str(t.seed),
        "target_epsilon": "" if t.target_epsilon is None else repr(t.target_epsilon),
        "track_full_space": "true" if t.track_full_space else "false",
        "enum_cap": str(t.enum_cap),
    }
    parser["noise"] = {
        "shots_per_setting": str(t.shots_per_setting),
        "nnn_ratio": repr(t.nnn_ratio),
    }
    parser["output"] = {
        "directory": cfg.out_dir,
        "emit_fidelity": "true" if cfg.emit_fidelity else "false",
    }
    if cfg.sweep is not None:
        parser["sweep"] = {
            "betas": ",".join(repr(b) for b in cfg.sweep.betas),
            "n_samples": str(cfg.sweep.n_samples),
            "n_repeats": str(cfg.sweep.n_repeats),
            "seed": str(cfg.sweep.seed),
        }
    if cfg.scaling is not None:
        s = cfg.scaling
        parser["scaling"] = {
            "kind": s.kind,
            "n_grid": ",".join(str(n) for n in s.n_grid),
            "trials": str(s.trials),
            "target_epsilon": repr(s.target_epsilon),
            "n_iter_cap": str(s.n_iter_cap),
            "n_iter_fixed": str(s.n_iter_fixed),
            "layer_grid": ",".join(str(d) for d in s.layer_grid),
            "layers_per_n": ",".join(f"{n}:{d}" for n, d in s.layers_per_n),
            "n_batch": str(s.n_batch),
            "n_spsa_grid": ",".join(str(k) for k in s.n_spsa_grid),
            "seed": str(s.seed),
        }
    with open(path, "w", newline="\n") as fh:
        parser.write(fh)


# ---------------------------------------------------------------------------
# Artifact writers
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    """Deterministic cell formatting: shortest round-trip repr for floats."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, float):  # covers numpy float scalars, which subclass float
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [CSV_VERSION, ",".join(header)]
    lines += [",".join(_fmt(cell) for cell in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def write_trace(record: RunRecord, path: Path) -> None:
    header = [
        "iter",
        "loss_sample",
        "loss_fullspace",
        "reward_variance",
        "grad_phi_norm",
        "grad_theta_norm",
    ]
    rows = []
    for i in range(record.n_iter):
        rows.append(
            [
                i + 1,
                float(record.loss_sample[i]),
                float(record.loss_full[i]) if record.loss_full is not None else None,
                float(record.reward_variance[i]),
                float(record.grad_phi_norm[i]),
                float(record.grad_theta_norm[i]),
            ]
        )
    _write_csv(path, header, rows)


def _json_dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_params(record: RunRecord, path: Path) -> None:
    _json_dump(
        {
            "thetas": record.thetas_best.tolist(),
            "logits": record.logits_best.tolist(),
            "best_iteration": record.best_iteration,
            "seed": record.config.seed,
        },
        path,
    )


# ---------------------------------------------------------------------------
# Scaling campaigns
# ---------------------------------------------------------------------------


def derive_seed(*parts: int) -> int:
    """Deterministic per-trial seed from a master seed and grid coordinates."""
    return int(np.random.SeedSequence(tuple(int(p) for p in parts)).generate_state(1)[0])


_SCALING_HEADER = [
    "kind",
    "n_sites",
    "n_layers",
    "n_batch",
    "n_spsa",
    "grad_theta",
    "mode",
    "trial",
    "seed",
    "n_iter",
    "converged",
    "epsilon",
    "cost",
]


def run_layer_contour(
    delta: float, h: float, sc: ScalingConfig, template: TrainConfig
) -> tuple[list[list], dict]:
    """Smallest layer count reaching the target error, per chain size.

    Scans the layer grid upward and stops at the first depth whose trial-mean
    relative error meets the target; since the required depth cannot shrink
    with system size, each scan starts at the previous minimum.
    """
    rows: list[list] = []
    grid = sorted(sc.layer_grid)
    ns, minima = [], []
    start_idx = 0
    for n in sorted(sc.n_grid):
        chain = XXZSpec(n, delta, h)
        found = None
        for di in range(start_idx, len(grid)):
            d = grid[di]
            eps_values = []
            for trial in range(sc.trials):
                cfg = replace(
                    template,
                    mode="full_space",
                    grad_theta="psr",
                    n_layers=d,
                    n_iter_max=sc.n_iter_fixed,
                    seed=derive_seed(sc.seed, 1, n, d, trial),
                    target_epsilon=None,
                    shots_per_setting=0,
                )
                rec = train(chain, cfg)
                eps = rec.epsilon()
                eps_values.append(eps)
                rows.append(
                    [
                        "layers",
                        n,
                        d,
                        None,
                        None,
                        "psr",
                        "full_space",
                        trial,
                        cfg.seed,
                        rec.n_iter,
                        eps <= sc.target_epsilon,
                        eps,
                        None,
                    ]
                )
            if float(np.mean(eps_values)) <= sc.target_epsilon:
                found = d
                start_idx = di
                break
        if found is not None:
            ns.append(n)
            minima.append(found)
    fit: dict = {
        "kind": "layers",
        "target_epsilon": sc.target_epsilon,
        "n": ns,
        "min_layers": minima,
    }
    if len(ns) >= 2:
        slope, intercept = np.polyfit(ns, minima, 1)
        residuals = np.array(minima) - (slope * np.array(ns) + intercept)
        fit["slope"] = float(slope)
        fit["intercept"] = float(intercept)
        fit["max_abs_residual"] = float(np.abs(residuals).max())
    return rows, fit


def run_cost_campaign(
    kind: str, delta: float, h: float, sc: ScalingConfig, template: TrainConfig
) -> tuple[list[list], dict]:
    """Iterations-to-target cost accounting for sampling-mode training.

    For ``psr_cost`` the per-run cost is ``n_iter * n_batch * n * n_layers``
    (one shifted evaluation pair per parameter per sample); for ``spsa_cost``
    it is ``n_iter * n_batch * n_spsa`` and the per-size cost is minimized over
    the perturbation-count grid. Runs that never reach the target inside the
    iteration cap count as divergent and stay out of the averages.
    """
    if kind not in ("psr_cost", "spsa_cost"):
        raise ValueError(f"unknown cost campaign kind {kind!r}")
    grad = "psr" if kind == "psr_cost" else "spsa"
    layer_map = dict(sc.layers_per_n)
    rows: list[list] = []
    ns, mean_costs, detail = [], [], {}
    for n in sorted(sc.n_grid):
        chain = XXZSpec(n, delta, h)
        d = layer_map.get(n, n)
        hyper_grid: list[int | None] = (
            [None] if kind == "psr_cost" else list(sc.n_spsa_grid)
        )
        cell_costs: list[tuple[int | None, float, float]] = []
        for hyper in hyper_grid:
            n_spsa = template.n_spsa if hyper is None else hyper
            costs, converged_flags = [], []
            for trial in range(sc.trials):
                cfg = replace(
                    template,
                    mode="sample",
                    grad_theta=grad,
                    n_layers=d,
                    n_batch=sc.n_batch,
                    n_spsa=n_spsa,
                    n_iter_max=sc.n_iter_cap,
                    seed=derive_seed(sc.seed, 2, n, n_spsa if hyper else 0, trial),
                    target_epsilon=sc.target_epsilon,
                    shots_per_setting=0,
                )
                rec = train(chain, cfg)
                converged = rec.first_target_iteration is not None
                n_iter = rec.first_target_iteration or sc.n_iter_cap
                unit = n * d if kind == "psr_cost" else n_spsa
                cost = n_iter * sc.n_batch * unit
                eps = rec.epsilon()
                rows.append(
                    [
                        kind,
                        n,
                        d,
                        sc.n_batch,
                        n_spsa if kind == "spsa_cost" else None,
                        grad,
                        "sample",
                        trial,
                        cfg.seed,
                        n_iter,
                        converged,
                        eps,
                        cost,
                    ]
                )
                costs.append(cost)
                converged_flags.append(converged)
            kept = [c for c, ok in zip(costs, converged_flags) if ok]
            if len(kept) * 2 >= len(costs) and kept:
                cell_costs.append(
                    (hyper, float(np.mean(kept)), float(np.mean(converged_flags)))
                )
        if cell_costs:
            best = min(cell_costs, key=lambda item: item[1])
            ns.append(n)
            mean_costs.append(best[1])
            detail[str(n)] = {
                "n_layers": d,
                "best_n_spsa": best[0],
                "mean_cost": best[1],
                "converged_fraction": best[2],
            }
    fit: dict = {
        "kind": kind,
        "target_epsilon": sc.target_epsilon,
        "n": ns,
        "mean_cost": mean_costs,
        "per_n": detail,
    }
    if len(ns) >= 2:
        slope, intercept = np.polyfit(np.log(ns), np.log(mean_costs), 1)
        fit["exponent"] = float(slope)
        fit["log_intercept"] = float(intercept)
    return rows, fit


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _prepare_out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train(cfg: ExperimentConfig) -> int:
    record = train(cfg.chain, cfg.train)
    out = _prepare_out(cfg)
    write_trace(record, out / "trace.csv")
    write_params(record, out / "params.json")
    summary = {
        "n_sites": cfg.chain.n_sites,
        "delta": cfg.chain.delta,
        "h": cfg.chain.h,
        "beta": cfg.train.beta,
        "mode": cfg.train.mode,
        "grad_theta": cfg.train.grad_theta,
        "n_layers": cfg.train.n_layers,
        "seed": cfg.train.seed,
        "n_iter": record.n_iter,
        "best_iteration": record.best_iteration,
        "loss_best": record.best_loss(),
        "f_exact": record.f_exact,
        "epsilon": record.epsilon(),
        "first_target_iteration": record.first_target_iteration,
        "wall_seconds": record.wall_seconds,
    }
    if cfg.emit_fidelity and cfg.chain.n_sites <= ENUMERATION_CAP:
        model = BernoulliProduct(record.logits_best)
        params = CircuitParams(record.thetas_best)
        ent = EntanglerSpec.uniform(
            cfg.chain.n_sites, nnn_ratio=cfg.train.nnn_ratio
        )
        ref = exact_gibbs(cfg.chain, cfg.train.beta)
        rho = assemble_gibbs(model, params, ent, cfg.chain)
        gibbs_fid = fidelity(rho, ref.rho)
        report = identify_eigenstates(model, params, ent, cfg.chain, cfg.train.beta)
        _json_dump(
            {
                "gibbs_fidelity": gibbs_fid,
                "bitstrings": report.bitstrings,
                "probabilities": report.probabilities.tolist(),
                "circuit_energies": report.circuit_energies.tolist(),
                "eigen_energies": report.eigen_energies.tolist(),
                "gibbs_weights": report.gibbs_weights.tolist(),
                "matrix": report.matrix.tolist(),
            },
            out / "fidelity.json",
        )
        summary["gibbs_fidelity"] = gibbs_fid
    _json_dump(summary, out / "summary.json")
    eps = record.epsilon()
    eps_text = f"{eps:.3e}" if eps is not None else "n/a"
    print(f"train: n={cfg.chain.n_sites} beta={cfg.train.beta} epsilon={eps_text} -> {out}")
    return 0


def cmd_thermal_sweep(cfg: ExperimentConfig) -> int:
    if cfg.sweep is None:
        raise ConfigError("[sweep]: section is required for the thermal-sweep command")
    out = _prepare_out(cfg)
    header = [
        "beta",
        "method",
        "free_energy",
        "free_energy_stderr",
        "energy",
        "energy_stderr",
        "entropy",
        "entropy_stderr",
    ]
    rows: list[list] = []
    summary_points = []
    ent = EntanglerSpec.uniform(cfg.chain.n_sites, nnn_ratio=cfg.train.nnn_ratio)
    for ib, beta in enumerate(cfg.sweep.betas):
        tc = replace(cfg.train, beta=beta, seed=derive_seed(cfg.train.seed, 3, ib))
        record = train(cfg.chain, tc)
        model = BernoulliProduct(record.logits_best)
        params = CircuitParams(record.thetas_best)
        rng = np.random.default_rng(derive_seed(cfg.sweep.seed, 4, ib))
        for method in ("full_space", "sample", "thermal_relation"):
            est = estimate_thermals(
                model,
                params,
                ent,
                cfg.chain,
                beta,
                method=method,
                n_samples=cfg.sweep.n_samples,
                n_repeats=cfg.sweep.n_repeats,
                rng=rng,
            )
            rows.append(
                [
                    float(beta),
                    method,
                    est.free_energy.value,
                    est.free_energy.std_error,
                    est.energy.value,
                    est.energy.std_error,
                    est.entropy.value,
                    est.entropy.std_error,
                ]
            )
        summary_points.append(
            {
                "beta": float(beta),
                "epsilon": record.epsilon(),
                "f_exact": record.f_exact,
                "best_iteration": record.best_iteration,
            }
        )
    _write_csv(out / "thermals.csv", header, rows)
    _json_dump({"points": summary_points}, out / "summary.json")
    print(f"thermal-sweep: {len(cfg.sweep.betas)} betas -> {out}")
    return 0


def cmd_scaling(cfg: ExperimentConfig) -> int:
    if cfg.scaling is None:
        raise ConfigError("[scaling]: section is required for the scaling command")
    sc = cfg.scaling
    if sc.kind == "layers":
        rows, fit = run_layer_contour(cfg.chain.delta, cfg.chain.h, sc, cfg.train)
    else:
        rows, fit = run_cost_campaign(sc.kind, cfg.chain.delta, cfg.chain.h, sc, cfg.train)
    out = _prepare_out(cfg)
    _write_csv(out / "scaling.csv", _SCALING_HEADER, rows)
    _json_dump(fit, out / "fit.json")
    if sc.kind == "layers":
        print(f"scaling[layers]: contour {fit.get('min_layers')} over n={fit.get('n')} -> {out}")
    else:
        exp = fit.get("exponent")
        exp_text = f"{exp:.3f}" if exp is not None else "n/a"
        print(f"scaling[{sc.kind}]: exponent {exp_text} over n={fit.get('n')} -> {out}")
    return 0


def cmd_exact(cfg: ExperimentConfig, write_out: bool) -> int:
    oracle = spectral_oracle(cfg.chain)
    ref = oracle.gibbs(cfg.train.beta)
    print(
        f"exact: n={cfg.chain.n_sites} delta={cfg.chain.delta} h={cfg.chain.h} "
        f"beta={cfg.train.beta}"
    )
    print(f"  free_energy = {ref.free_energy!r}")
    print(f"  energy      = {ref.energy!r}")
    print(f"  entropy     = {ref.entropy!r}")
    if write_out:
        out = _prepare_out(cfg)
        _json_dump(
            {
                "n_sites": cfg.chain.n_sites,
                "delta": cfg.chain.delta,
                "h": cfg.chain.h,
                "beta": cfg.train.beta,
                "free_energy": ref.free_energy,
                "energy": ref.energy,
                "entropy": ref.entropy,
                "spectrum": oracle.energies.tolist(),
            },
            out / "exact.json",
        )
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="path to an INI experiment config")
    sub.add_argument("--seed", type=int, default=None, help="override the training seed")
    sub.add_argument("--out", default=None, help="override the output directory")
    sub.add_argument("--mode", choices=MODES, default=None, help="override the loss mode")
    sub.add_argument(
        "--grad", choices=GRADIENTS, default=None, help="override the circuit gradient"
    )
    sub.add_argument(
        "--shots",
        type=int,
        default=None,
        help="override shots per measurement setting (0 = exact energies)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermal-vqs",
        description="Variational Gibbs-state preparation on small spin chains.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("train", "minimize the free energy for one configuration"),
        ("thermal-sweep", "train across inverse temperatures and tabulate F, E, S"),
        ("scaling", "run a layer-contour or cost-scaling campaign"),
        ("exact", "print exact thermal values from dense diagonalization"),
    ):
        _add_common(subparsers.add_parser(name, help=help_text))
    return parser


def _apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.mode is not None:
        updates["mode"] = args.mode
    if args.grad is not None:
        updates["grad_theta"] = args.grad
    if args.shots is not None:
        updates["shots_per_setting"] = args.shots
    if updates:
        cfg.train = replace(cfg.train, **updates)
        try:
            cfg.train.validate()
        except ValueError as exc:
            raise ConfigError(f"command-line override: {exc}") from exc
    if args.out is not None:
        cfg.out_dir = args.out
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "thermal-sweep":
            return cmd_thermal_sweep(cfg)
        if args.command == "scaling":
            return cmd_scaling(cfg)
        return cmd_exact(cfg, write_out=args.out is not None)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
