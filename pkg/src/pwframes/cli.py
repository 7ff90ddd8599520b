"""Config-driven command line: construct, certify, analyze, and the two
schedule solvers.  Runs are deterministic given the config and seed; every
mode writes delimited tables, a JSON summary, and rendered figures into the
output directory.

Exit codes: 0 all checks passed, 1 a definite failure (or an infeasible
input), 2 inconclusive truncated checks, 64 configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import report
from .certify import (
    Certificate,
    ConditionRecord,
    check_coefficient_criterion,
    check_mask_criterion,
    parseval_oracle,
)
from .construct import (
    AngleParameters,
    AngleSlot,
    activation_profile,
    build_construction,
    product_certificate,
    random_admissible_slots,
)
from .errors import (
    ConstructionPreconditionError,
    DegenerateParameterizationError,
    FeasibilityError,
    SingularConfigurationError,
)
from . import haar
from .masks import RefinementChain, WaveletSystem, derive_chain, theta_recursion, wavelet_spectra
from .schedules import (
    Schedule,
    check_example1_feasibility,
    geometric_xi_schedule,
    haar_like_splits,
    random_splits,
    solve_example1,
    solve_example2,
    splits_schedule,
)
from .spectra import DyadicSequence, Spectrum, frame_coefficients, frame_shifts
from .verdicts import FAIL, INCONCLUSIVE, PASS

__all__ = ["main", "run", "ConfigError", "ExitCode"]

MAX_HORIZON = 20  # level-j data is O(2**j); keep desk-scale memory


class ExitCode:
    PASS = 0
    FAIL = 1
    INCONCLUSIVE = 2
    CONFIG = 64


class ConfigError(ValueError):
    pass


_VERDICT_EXIT = {PASS: ExitCode.PASS, FAIL: ExitCode.FAIL, INCONCLUSIVE: ExitCode.INCONCLUSIVE}


def _complex_array(pairs, what: str) -> np.ndarray:
    try:
        arr = np.asarray(pairs, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: expected an array of [re, im] pairs")
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ConfigError(f"{what}: expected an array of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def _pairs(values: np.ndarray) -> list[list[float]]:
    return [[float(v.real), float(v.imag)] for v in values]


def _chain_from_config(cfg: dict, horizon: int, support: int) -> RefinementChain:
    if cfg.get("generator") == "haar":
        return haar.haar_chain(horizon, support)
    if "file" in cfg:
        cfg = _load_json(cfg["file"]).get("chain", {})
    try:
        top_level = int(cfg["top_level"])
        n_min = int(cfg["n_min"])
        top = Spectrum(n_min, _complex_array(cfg["top_spectrum"], "top_spectrum"))
        masks = {
            int(lvl): DyadicSequence(int(lvl), _complex_array(vals, f"scaling mask {lvl}"))
            for lvl, vals in cfg["scaling_masks"].items()
        }
    except KeyError as exc:
        raise ConfigError(f"chain config missing {exc}")
    except ValueError as exc:
        raise ConfigError(f"inconsistent chain dimensions: {exc}")
    return derive_chain(top, masks, top_level)


def _system_from_config(cfg: dict, horizon: int, support: int):
    if cfg.get("generator") == "haar":
        chain = haar.haar_chain(horizon, support)
        return chain, haar.haar_system(chain)
    if "file" in cfg:
        cfg = _load_json(cfg["file"])
    if "chain" not in cfg or "wavelets" not in cfg:
        raise ConfigError("system config needs 'chain' and 'wavelets' (or a generator)")
    chain = _chain_from_config(cfg["chain"], horizon, support)
    mask_cfg = cfg["wavelets"].get("masks", {})
    if not mask_cfg:
        raise ConfigError("system config has no wavelet masks")
    levels = sorted(int(lvl) for lvl in mask_cfg)
    if levels != list(range(1, len(levels) + 1)):
        raise ConfigError("wavelet mask levels must be contiguous from 1")
    try:
        masks = tuple(
            tuple(
                DyadicSequence(lvl, _complex_array(gen, f"wavelet mask level {lvl}"))
                for gen in mask_cfg[str(lvl)]
            )
            for lvl in levels
        )
        system = wavelet_spectra(chain, WaveletSystem(masks))
    except ValueError as exc:
        raise ConfigError(f"inconsistent system dimensions: {exc}")
    return chain, system


def _system_to_dict(chain: RefinementChain, system: WaveletSystem) -> dict:
    top = chain.spectrum(chain.top_level)
    return {
        "chain": {
            "top_level": chain.top_level,
            "n_min": int(top.n_min),
            "top_spectrum": _pairs(top.coeffs),
            "scaling_masks": {
                str(lvl): _pairs(chain.mask(lvl).values)
                for lvl in range(2, chain.top_level + 1)
            },
        },
        "wavelets": {
            "masks": {
                str(j + 1): [_pairs(b.values) for b in fam]
                for j, fam in enumerate(system.wavelet_masks)
            }
        },
    }


def _seeds_from_config(cfg, horizon: int):
    if cfg == "haar" or cfg is None:
        return haar.valuation_seeds(horizon)
    seeds = {}
    for lvl, fams in cfg.items():
        level = int(lvl)
        seeds[level] = tuple(
            DyadicSequence(level, _complex_array(fam, f"seed level {lvl}")) for fam in fams
        )
    if 1 in seeds and len(seeds[1]) == 1:
        vals = seeds[1][0].values
        if abs(vals[0]) > 0 and abs(vals[1]) > 0:
            raise ConfigError(
                "a single level-1 generator nonzero at both frequencies cannot be "
                "cross-orthogonal; two level-0 generators are required"
            )
    return seeds


def _angles_from_config(cfg, chain, profile, horizon: int, rng) -> AngleParameters:
    if cfg == "haar" or cfg is None:
        return haar.compatible_angle_slots(horizon)
    if cfg == "random":
        return random_admissible_slots(chain, profile, horizon, rng)
    if isinstance(cfg, dict) and "file" in cfg:
        cfg = _load_json(cfg["file"])
    try:
        rho = int(cfg["rho"])
        slots = {}
        for entry in cfg["slots"]:
            t1 = entry.get("t1")
            slots[(int(entry["level"]), int(entry["base"]))] = AngleSlot(
                tuple(entry["t0"]), tuple(t1) if t1 is not None else None
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad angle table: {exc}")
    return AngleParameters(rho, slots)


def _schedule_from_config(cfg, levels: int, rng) -> Schedule:
    generator = cfg.get("generator") if isinstance(cfg, dict) else None
    if generator == "random-splits":
        schedule, _ = splits_schedule(random_splits(rng, levels))
        return schedule
    if generator == "haar-like":
        schedule, _ = splits_schedule(haar_like_splits(levels, cfg.get("blend", 0.1)))
        return schedule
    if generator == "geometric":
        width = 1 << (levels - 1)
        j1 = np.array(
            [1] + [max(1, int(np.ceil(np.log2(n + 1)))) for n in range(1, width)]
        )
        target = float(cfg.get("target", 0.8))
        chain_energy = np.full(width, 0.5)
        seed_energy = target / (2.0 ** j1 * chain_energy)
        return geometric_xi_schedule(seed_energy, chain_energy, j1, levels)
    if isinstance(cfg, dict) and "file" in cfg:
        cfg = _load_json(cfg["file"])
    try:
        f_table = {int(l): np.asarray(v, dtype=float) for l, v in cfg["f_table"].items()}
        xi_table = {int(l): np.asarray(v, dtype=float) for l, v in cfg["xi_table"].items()}
        return Schedule(
            f_table,
            xi_table,
            np.asarray(cfg["j1"], dtype=int),
            np.asarray(cfg["seed_energy"], dtype=float),
            np.asarray(cfg["chain_energy"], dtype=float),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad schedule table: {exc}")


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}")


def _validate_common(config: dict) -> tuple[int, int, dict, int]:
    horizon = int(config.get("horizon", 10))
    if not 1 <= horizon <= MAX_HORIZON:
        raise ConfigError(
            f"horizon {horizon} outside 1..{MAX_HORIZON} (level data grows as 2**horizon)"
        )
    support = int(config.get("support", 1 << min(horizon, 7)))
    if support < 1:
        raise ConfigError("support bound must be positive")
    tol = {"equality": 1e-10, "convergence": 1e-6, "drift": 1e-9, "oracle": 1e-9}
    tol.update(config.get("tolerances", {}))
    if any(v <= 0 for v in tol.values()):
        raise ConfigError("all tolerances must be positive")
    seed = int(config.get("seed", 0))
    return horizon, support, tol, seed


def run(config: dict, out_dir) -> int:
    """Execute one configured run; returns the exit code."""
    mode = config.get("mode")
    if mode not in ("construct", "certify", "analyze", "example1", "example2"):
        raise ConfigError(f"unknown mode {mode!r}")
    horizon, support, tol, seed = _validate_common(config)
    rng = np.random.default_rng(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if mode == "construct":
        chain = _chain_from_config(config.get("chain", {"generator": "haar"}), horizon, support)
        seeds = _seeds_from_config(config.get("seeds", "haar"), chain.top_level)
        profile = activation_profile(chain, seeds)
        angles = _angles_from_config(
            config.get("angles", "haar"), chain, profile, chain.top_level, rng
        )
        result = build_construction(chain, profile, seeds, angles)
        records = product_certificate(
            chain,
            profile,
            seeds,
            result.a_tilde,
            horizon=chain.top_level,
            tol_conv=tol["convergence"],
            drift_tol=tol["drift"],
        )
        cert = check_mask_criterion(
            chain,
            result.system,
            result.theta,
            tol=tol["equality"],
            tol_conv=tol["convergence"],
            drift_tol=tol["drift"],
        )
        with open(out / "system.json", "w") as fh:
            json.dump(_system_to_dict(chain, result.system), fh, indent=2, sort_keys=True)
            fh.write("\n")
        report.write_product_csv(records, out / "products.csv")
        report.write_certificate_csv(cert, out / "certificate.csv")
        verdicts = {r.verdict for r in records} | {cert.global_verdict}
        overall = FAIL if FAIL in verdicts else (INCONCLUSIVE if INCONCLUSIVE in verdicts else PASS)
        report.write_certificate_json(
            cert, out / "certificate.json", extra={"product_records": len(records), "overall": overall}
        )
        report.render_product_figure(records, out / "products.png")
        report.render_certificate_figure(cert, out / "certificate.png")
        print(f"construct: {overall} ({len(records)} product records)")
        return _VERDICT_EXIT[overall]

    if mode == "certify":
        chain, system = _system_from_config(config.get("system", {}), horizon, support)
        if horizon > system.levels:
            raise ConfigError(
                f"horizon {horizon} exceeds the system's {system.levels} generator levels"
            )
        theta = theta_recursion(chain, system)
        cert = check_coefficient_criterion(
            system, horizon, tol=tol["equality"], tol_conv=tol["convergence"], drift_tol=tol["drift"]
        ).merged_with(
            check_mask_criterion(
                chain,
                system,
                theta,
                horizon,
                tol=tol["equality"],
                tol_conv=tol["convergence"],
                drift_tol=tol["drift"],
            )
        )
        oracle_cfg = config.get("oracle", {})
        oracle = parseval_oracle(
            chain,
            system,
            horizon,
            trials=int(oracle_cfg.get("trials", 50)),
            degree=int(oracle_cfg.get("degree", max(2, support // 2))),
            rng=rng,
            theta=theta,
            tol=tol["oracle"],
        )
        cert.records.append(
            ConditionRecord(
                "identity_oracle", None, None, None, oracle.max_rel_error, oracle.verdict,
                f"{oracle.trials} trials, degree {oracle.degree}",
            )
        )
        report.write_certificate_csv(cert, out / "certificate.csv")
        report.write_certificate_json(
            cert, out / "certificate.json", extra={"oracle": report.oracle_to_dict(oracle)}
        )
        report.render_certificate_figure(cert, out / "certificate.png")
        print(f"certify: {cert.global_verdict} "
              f"(oracle max rel err {oracle.max_rel_error:.3e} over {oracle.trials} trials)")
        return _VERDICT_EXIT[cert.global_verdict]

    if mode == "analyze":
        chain, system = _system_from_config(config.get("system", {}), horizon, support)
        input_cfg = config.get("input")
        if not input_cfg:
            raise ConfigError("analyze mode needs an 'input' spectrum")
        f = Spectrum(int(input_cfg["n_min"]), _complex_array(input_cfg["coeffs"], "input"))
        tables = {}
        for j in range(min(horizon, system.levels)):
            for m, spec in enumerate(system.spectra[j], start=1):
                tables[(j, m)] = (frame_shifts(j), frame_coefficients(f, spec, j))
        report.write_analysis_csv(tables, out / "analysis.csv")
        report.render_analysis_figure(tables, out / "analysis.png")
        total = sum(float(np.sum(np.abs(c) ** 2)) for _, c in tables.values())
        with open(out / "analysis.json", "w") as fh:
            json.dump(
                {"levels": min(horizon, system.levels), "total_energy": total,
                 "input_norm_sq": f.norm_sq()},
                fh, indent=2, sort_keys=True,
            )
            fh.write("\n")
        print(f"analyze: energy {total!r} against input norm^2 {f.norm_sq()!r}")
        return ExitCode.PASS

    # schedule modes
    levels = int(config.get("levels", horizon))
    if not 2 <= levels <= MAX_HORIZON:
        raise ConfigError(f"levels {levels} outside 2..{MAX_HORIZON}")
    schedule = _schedule_from_config(config.get("schedule", {}), levels, rng)
    if mode == "example1":
        solution = solve_example1(schedule)
        margins = check_example1_feasibility(schedule)
        report.write_solution_csv(solution, out / "solution.csv")
        report.write_margins_csv(margins, out / "margins.csv")
        report.render_solution_figure(solution, out / "solution.png")
        report.render_margin_figure(margins, out / "margins.png")
        verdicts = {r.verdict for r in margins}
        overall = FAIL if FAIL in verdicts else (INCONCLUSIVE if INCONCLUSIVE in verdicts else PASS)
        print(f"example1: {overall} ({len(margins)} chains)")
        return _VERDICT_EXIT[overall]

    solution = solve_example2(schedule)
    report.write_solution_csv(solution, out / "solution.csv")
    report.render_solution_figure(solution, out / "solution.png")
    if solution.boundary:
        print(f"example2: INCONCLUSIVE ({len(solution.boundary)} boundary-degenerate slots)")
        return ExitCode.INCONCLUSIVE
    print("example2: PASS")
    return ExitCode.PASS


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pwframes",
        description="Construct and certify periodic Parseval wavelet frames.",
    )
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--mode", help="override the config's mode")
    parser.add_argument("--horizon", type=int, help="override the level horizon")
    parser.add_argument("--tol", type=float, help="override the equality tolerance")
    parser.add_argument("--seed", type=int, help="override the random seed")
    parser.add_argument("--out", default=None, help="output directory (default: config dir)")
    args = parser.parse_args(argv)

    try:
        config = _load_json(args.config)
        if not isinstance(config, dict):
            raise ConfigError("config root must be a JSON object")
        if args.mode:
            config["mode"] = args.mode
        if args.horizon is not None:
            config["horizon"] = args.horizon
        if args.seed is not None:
            config["seed"] = args.seed
        if args.tol is not None:
            config.setdefault("tolerances", {})["equality"] = args.tol
        out_dir = args.out or config.get("out") or Path(args.config).resolve().parent / "out"
        return run(config, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return ExitCode.CONFIG
    except (
        FeasibilityError,
        ConstructionPreconditionError,
        DegenerateParameterizationError,
        SingularConfigurationError,
    ) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return ExitCode.FAIL


if __name__ == "__main__":
    raise SystemExit(main())
