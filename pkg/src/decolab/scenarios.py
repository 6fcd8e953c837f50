"""Scenario harness: plain-text configs in, CSV records and JSON summaries out.

A config names one scenario kind, its physical parameters, and the
sampling window; running it produces a deterministic multi-channel CSV
plus a JSON summary holding the fitted characteristic times, the
detected weak limit, the recurrence window, and any honesty flags.
Identical config and seed reproduce the output files byte for byte.
"""

import configparser
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fits
from .continuum import (EnergyGrid, VanHoveObservable, VanHoveState,
                        energy_expectation, expectation_sid, gaussian_scenario,
                        hamiltonian_observable, load_table_kernel, sid_limit)
from .master_eq import dissipative_toy, evolve_linear_generator
from .open_system import (SPIN_CAP, SpinBathParams, purity,
                          spin_bath_recurrence_window,
                          spin_bath_reduced_dynamics)
from .timeseries import TimeSeries

KINDS = ("eid-spin-bath", "sid-kernel", "master-eq-toy")
SID_FAMILIES = ("gaussian", "lorentzian", "table")
MIN_SAMPLES = 16

_NAME_RE = re.compile(r"^[A-Za-z0-9._-]+$")
_REQUIRED = object()


class ConfigError(ValueError):
    """Schema violation, reported with the offending section and key."""


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    name: str
    seed: int
    t_max: float
    samples: int
    params: dict
    tolerances: dict


@dataclass(frozen=True)
class ScenarioResult:
    series: TimeSeries
    summary: dict
    csv_path: Path
    json_path: Path


# ---------------------------------------------------------------------------
# config schema
# ---------------------------------------------------------------------------

_SCENARIO_KEYS = {"kind", "name", "seed", "t_max", "samples"}
_PARAM_KEYS = {
    "eid-spin-bath": {"n_spins", "coupling_min", "coupling_max", "bath_angle",
                      "amp0"},
    "sid-kernel": {"family", "n", "omega_max", "center", "width",
                   "cross_width", "amplitude", "kernel_csv"},
    "master-eq-toy": {"gamma_decohere", "gamma_relax"},
}
_TOL_DEFAULTS = {
    "weak_limit_epsilon": 1e-3,
    "fit_floor_log": fits.FIT_FLOOR_LOG,
}


def _get(cp, section, key, cast, default=_REQUIRED, check=None, why=""):
    if not cp.has_option(section, key):
        if default is _REQUIRED:
            raise ConfigError(f"[{section}] missing required key '{key}'")
        return default
    raw = cp.get(section, key)
    try:
        value = cast(raw)
    except (TypeError, ValueError):
        raise ConfigError(
            f"[{section}] key '{key}': cannot parse {raw!r}"
        ) from None
    if check is not None and not check(value):
        raise ConfigError(f"[{section}] key '{key}': {raw!r} invalid ({why})")
    return value


def _check_sections(cp, kind):
    allowed = {"scenario", "tolerances", kind}
    for section in cp.sections():
        if section not in allowed:
            hint = f"params go in [{kind}]" if section in KINDS else \
                "known sections: [scenario], [tolerances], [" + kind + "]"
            raise ConfigError(f"unknown section [{section}]; {hint}")


def _check_keys(cp, section, known):
    if not cp.has_section(section):
        return
    for key in cp.options(section):
        if key not in known:
            raise ConfigError(
                f"[{section}] unknown key '{key}'; known keys: "
                f"{', '.join(sorted(known))}"
            )


def _angle(raw):
    text = raw.strip().lower()
    if text == "half-pi":
        return math.pi / 2
    if text == "random":
        return "random"
    return float(raw)


def _parse_params(cp, kind):
    section = kind
    if kind == "eid-spin-bath":
        return {
            "n_spins": _get(cp, section, "n_spins", int, check=lambda n: 1 <= n <= SPIN_CAP,
                            why=f"need 1..{SPIN_CAP} bath spins"),
            "coupling_min": _get(cp, section, "coupling_min", float, 0.5,
                                 check=lambda x: x > 0, why="must be positive"),
            "coupling_max": _get(cp, section, "coupling_max", float, 1.5,
                                 check=lambda x: x > 0, why="must be positive"),
            "bath_angle": _get(cp, section, "bath_angle", _angle, math.pi / 2),
            "amp0": _get(cp, section, "amp0", float, 1 / math.sqrt(2),
                         check=lambda a: 0 < a < 1, why="need 0 < amp0 < 1"),
        }
    if kind == "sid-kernel":
        params = {
            "family": _get(cp, section, "family", str, "gaussian",
                           check=lambda f: f in SID_FAMILIES,
                           why="known families: " + ", ".join(SID_FAMILIES)),
            "n": _get(cp, section, "n", int, 400,
                      check=lambda n: MIN_SAMPLES <= n <= 2000,
                      why=f"need {MIN_SAMPLES}..2000 grid points"),
            "omega_max": _get(cp, section, "omega_max", float, 10.0,
                              check=lambda x: x > 0, why="must be positive"),
            "center": _get(cp, section, "center", float, 5.0),
            "width": _get(cp, section, "width", float, 1.2,
                          check=lambda x: x > 0, why="must be positive"),
            "cross_width": _get(cp, section, "cross_width", float, 0.5,
                                check=lambda x: x > 0, why="must be positive"),
            "amplitude": _get(cp, section, "amplitude", float, 0.25),
            "kernel_csv": _get(cp, section, "kernel_csv", str, None),
        }
        if params["family"] == "table" and not params["kernel_csv"]:
            raise ConfigError(
                "[sid-kernel] key 'kernel_csv' is required when family = table"
            )
        return params
    if kind == "master-eq-toy":
        return {
            "gamma_decohere": _get(cp, section, "gamma_decohere", float, 1.0,
                                   check=lambda x: x > 0, why="must be positive"),
            "gamma_relax": _get(cp, section, "gamma_relax", float, 0.2,
                                check=lambda x: x > 0, why="must be positive"),
        }
    raise ConfigError(f"unknown scenario kind {kind!r}; known kinds: "
                      + ", ".join(KINDS))


def _parse_tolerances(cp, overrides):
    tol = dict(_TOL_DEFAULTS)
    if cp.has_section("tolerances"):
        for key in cp.options("tolerances"):
            tol[key] = _get(cp, "tolerances", key, float)
    for key, value in (overrides or {}).items():
        if key not in _TOL_DEFAULTS:
            raise ConfigError(
                f"unknown tolerance '{key}'; known tolerances: "
                f"{', '.join(sorted(_TOL_DEFAULTS))}"
            )
        tol[key] = float(value)
    if tol["weak_limit_epsilon"] <= 0:
        raise ConfigError("[tolerances] key 'weak_limit_epsilon': must be positive")
    return tol


def parse_config(path, seed=None, tol_overrides=None):
    """Read and validate a scenario config file.

    ``seed`` overrides the configured seed; ``tol_overrides`` is a
    mapping merged over the [tolerances] section.  Violations raise
    :class:`ConfigError` naming the section and key at fault.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if not cp.read(path):
        raise ConfigError(f"cannot read config file {path}")
    if not cp.has_section("scenario"):
        raise ConfigError("missing [scenario] section")

    kind = _get(cp, "scenario", "kind", str,
                check=lambda k: k in KINDS,
                why="known kinds: " + ", ".join(KINDS))
    _check_sections(cp, kind)
    _check_keys(cp, "scenario", _SCENARIO_KEYS)
    _check_keys(cp, kind, _PARAM_KEYS[kind])
    _check_keys(cp, "tolerances", set(_TOL_DEFAULTS))

    name = _get(cp, "scenario", "name", str, kind,
                check=lambda s: bool(_NAME_RE.match(s)),
                why="letters, digits, dot, dash, underscore only")
    cfg_seed = _get(cp, "scenario", "seed", int, 0)
    t_max = _get(cp, "scenario", "t_max", float,
                 check=lambda x: x > 0, why="must be positive")
    samples = _get(cp, "scenario", "samples", int,
                   check=lambda n: n >= MIN_SAMPLES,
                   why=f"need at least {MIN_SAMPLES} samples")
    params = _parse_params(cp, kind)
    if kind == "eid-spin-bath" and params["coupling_max"] < params["coupling_min"]:
        raise ConfigError(
            "[eid-spin-bath] key 'coupling_max': must be >= coupling_min"
        )
    tolerances = _parse_tolerances(cp, tol_overrides)
    return ScenarioConfig(kind=kind, name=name,
                          seed=seed if seed is not None else cfg_seed,
                          t_max=t_max, samples=samples, params=params,
                          tolerances=tolerances)


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------

def _summary(config, fit_d, fit_r, weak, recurrence_window, monitored):
    flags = list(weak.flags)
    if not fit_d.ok:
        flags.append("t_D: " + fit_d.status)
    if not fit_r.ok:
        flags.append("t_R: " + fit_r.status)
    if recurrence_window is None:
        flags.append("no recurrence (aperiodic generator)")
    return {
        "scenario": config.name,
        "kind": config.kind,
        "seed": config.seed,
        "t_D": fit_d.value,
        "t_R": fit_r.value,
        "equilibrium_value": weak.equilibrium[monitored],
        "fit_quality": {"t_D": fit_d.r_squared, "t_R": fit_r.r_squared},
        "recurrence_window": recurrence_window,
        "weak_limit_t_star": weak.t_star,
        "flags": flags,
    }


def _run_eid(config):
    p = config.params
    rng = np.random.default_rng(config.seed)
    n = p["n_spins"]
    couplings = rng.uniform(p["coupling_min"], p["coupling_max"], n)
    if p["bath_angle"] == "random":
        angles = rng.uniform(0.0, math.pi, n)
    else:
        angles = np.full(n, float(p["bath_angle"]))
    amp0 = p["amp0"]
    params = SpinBathParams(couplings=couplings, angles=angles,
                            amplitude_0=amp0,
                            amplitude_1=math.sqrt(1.0 - amp0 ** 2))
    times = np.linspace(0.0, config.t_max, config.samples)
    rhos = spin_bath_reduced_dynamics(params, times)

    channels = {}
    for i in range(2):
        for j in range(2):
            channels[f"rho{i}{j}_re"] = rhos[:, i, j].real
            channels[f"rho{i}{j}_im"] = rhos[:, i, j].imag
    channels["purity"] = np.array([purity(r) for r in rhos])
    channels["offdiag_modulus"] = np.abs(rhos[:, 0, 1])
    series = TimeSeries(times=times, channels=channels)

    recurrence = spin_bath_recurrence_window(couplings)
    if not math.isfinite(recurrence):
        recurrence = None
    fit_d = fits.fit_decoherence_time(times, channels["offdiag_modulus"],
                                      floor_log=config.tolerances["fit_floor_log"])
    # pure dephasing: populations are constants of motion, so the
    # relaxation channel is their drift from the final value (zero here)
    fit_r = fits.fit_relaxation_time(times, channels["rho00_re"],
                                     equilibrium=float(channels["rho00_re"][-1]),
                                     floor_log=config.tolerances["fit_floor_log"])
    weak = fits.detect_weak_limit(times,
                                  {"offdiag_modulus": channels["offdiag_modulus"]},
                                  epsilon=config.tolerances["weak_limit_epsilon"],
                                  recurrence_window=recurrence)
    summary = _summary(config, fit_d, fit_r, weak, recurrence, "offdiag_modulus")
    return series, summary


def _lorentzian_scenario(n, omega_max, center, width, cross_width, amplitude):
    # same center-of-mass profile as the gaussian family, lorentzian
    # cross profile; no closed-form envelope is asserted for the fit
    grid = EnergyGrid.uniform(0.0, omega_max, n)
    w = grid.omega
    mean = 0.5 * np.add.outer(w, w)
    diff = np.subtract.outer(w, w)
    profile = np.exp(-((mean - center) ** 2) / (2 * width ** 2)) \
        / (1.0 + (diff / cross_width) ** 2)
    rho_diag = np.exp(-((w - center) ** 2) / (2 * width ** 2))
    rho_diag = rho_diag / float(np.sum(grid.weights * rho_diag))
    state = VanHoveState(grid, rho_diag, amplitude * profile)
    obs_diag = np.exp(-((w - center) ** 2) / (2 * 1.5 ** 2))
    return state, VanHoveObservable(grid, obs_diag, profile)


def _table_scenario(n, omega_max, center, width, amplitude, kernel_csv):
    grid = EnergyGrid.uniform(0.0, omega_max, n)
    w = grid.omega
    kernel = load_table_kernel(kernel_csv, grid)
    rho_diag = np.exp(-((w - center) ** 2) / (2 * width ** 2))
    rho_diag = rho_diag / float(np.sum(grid.weights * rho_diag))
    state = VanHoveState(grid, rho_diag, amplitude * kernel)
    obs_diag = np.exp(-((w - center) ** 2) / (2 * 1.5 ** 2))
    return state, VanHoveObservable(grid, obs_diag, kernel)


def _run_sid(config):
    p = config.params
    if p["family"] == "gaussian":
        state, obs = gaussian_scenario(n=p["n"], omega_max=p["omega_max"],
                                       center=p["center"], width=p["width"],
                                       cross_width=p["cross_width"],
                                       amplitude=p["amplitude"])
    elif p["family"] == "lorentzian":
        state, obs = _lorentzian_scenario(p["n"], p["omega_max"], p["center"],
                                          p["width"], p["cross_width"],
                                          p["amplitude"])
    else:
        state, obs = _table_scenario(p["n"], p["omega_max"], p["center"],
                                     p["width"], p["amplitude"],
                                     p["kernel_csv"])

    times = np.linspace(0.0, config.t_max, config.samples)
    limit = sid_limit(state, obs)
    ham = hamiltonian_observable(state.grid)
    expect = np.array([expectation_sid(state, obs, t) for t in times])
    energy = np.array([expectation_sid(state, ham, t) for t in times])
    series = TimeSeries(times=times, channels={
        "expectation": expect,
        "offdiag_contrib": expect - limit,
        "energy": energy,
    })

    spacing = float(state.grid.omega[1] - state.grid.omega[0])
    recurrence = 2.0 * math.pi / spacing
    fit_d = fits.fit_decoherence_time(times, series.channels["offdiag_contrib"],
                                      floor_log=config.tolerances["fit_floor_log"])
    # the closed route has no dissipation channel: <H> is a constant of
    # motion and the populations never move, so t_R must come out n/a
    fit_r = fits.fit_relaxation_time(times, energy,
                                     equilibrium=energy_expectation(state))
    weak = fits.detect_weak_limit(times, {"expectation": expect},
                                  epsilon=config.tolerances["weak_limit_epsilon"],
                                  recurrence_window=recurrence)
    summary = _summary(config, fit_d, fit_r, weak, recurrence, "expectation")
    return series, summary


def _run_toy(config):
    p = config.params
    toy = dissipative_toy(gamma_decohere=p["gamma_decohere"],
                          gamma_relax=p["gamma_relax"])
    times = np.linspace(0.0, config.t_max, config.samples)
    states = evolve_linear_generator(toy.generator, toy.rho0, times)
    p_star = np.asarray(toy.equilibrium, dtype=float)

    pops = np.array([np.real(np.diag(r)) for r in states])
    offdiag = np.array([
        float(np.linalg.norm(r - np.diag(np.diag(r)))) for r in states
    ])
    diag_dist = np.linalg.norm(pops - p_star, axis=1)
    channels = {f"p{i}": pops[:, i] for i in range(p_star.size)}
    channels["offdiag_modulus"] = offdiag
    channels["diag_distance"] = diag_dist
    series = TimeSeries(times=times, channels=channels)

    fit_d = fits.fit_decoherence_time(times, offdiag,
                                      floor_log=config.tolerances["fit_floor_log"])
    fit_r = fits.fit_relaxation_time(times, diag_dist,
                                     floor_log=config.tolerances["fit_floor_log"])
    weak = fits.detect_weak_limit(
        times, {"offdiag_modulus": offdiag, "diag_distance": diag_dist},
        epsilon=config.tolerances["weak_limit_epsilon"])
    summary = _summary(config, fit_d, fit_r, weak, None, "diag_distance")
    return series, summary


_RUNNERS = {
    "eid-spin-bath": _run_eid,
    "sid-kernel": _run_sid,
    "master-eq-toy": _run_toy,
}


def run_scenario(config, out_dir):
    """Run one configured scenario and write its CSV record and JSON summary.

    Returns a :class:`ScenarioResult`; the files land in ``out_dir`` as
    ``<name>.csv`` and ``<name>.json``.  All randomness flows through the
    configured seed, so identical inputs reproduce identical bytes.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    series, summary = _RUNNERS[config.kind](config)
    csv_path = out / f"{config.name}.csv"
    json_path = out / f"{config.name}.json"
    series.to_csv(csv_path)
    with open(json_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ScenarioResult(series=series, summary=summary,
                          csv_path=csv_path, json_path=json_path)
