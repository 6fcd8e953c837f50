"""Command-line front end: run scenarios, fit records, compare reports.

Everything here is a thin shell over :mod:`decolab.scenarios` and
:mod:`decolab.fits`; library users can call those directly.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import scenarios
from .continuum import discretized_unitary_oracle, gaussian_scenario
from .fits import ordering_report
from .master_eq import dissipative_toy
from .open_system import SpinBathParams, spin_bath_coherence
from .timeseries import TimeSeries


def _tol_pair(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(
            f"expected KEY=VALUE, got {text!r}")
    key, _, raw = text.partition("=")
    try:
        return key.strip(), float(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"tolerance value in {text!r} is not a number") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="override the scenario seed")
    common.add_argument("--tol-override", metavar="KEY=VALUE", type=_tol_pair,
                        action="append", default=[],
                        help="override a tolerance (repeatable), e.g. "
                             "weak_limit_epsilon=1e-4")
    parser = argparse.ArgumentParser(
        prog="decolab",
        description="coarse-graining laboratory: run decoherence scenarios, "
                    "fit characteristic times, compare reports")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common],
                        help="run a scenario config; write CSV record and "
                             "JSON summary")
    run.add_argument("--config", required=True, help="scenario config file")
    run.add_argument("--out", required=True, help="output directory")

    fit = sub.add_parser("fit", parents=[common],
                         help="fit characteristic times from a CSV record")
    fit.add_argument("--series", required=True, help="CSV written by 'run'")
    fit.add_argument("--channel", default=None,
                     help="decay channel to fit (default: offdiag_modulus "
                          "or offdiag_contrib, whichever exists)")

    cmp_ = sub.add_parser("compare", parents=[common],
                          help="tabulate t_D vs t_R across summary JSONs")
    cmp_.add_argument("--reports", required=True,
                      help="directory of summary JSON files")
    cmp_.add_argument("--out", default=None,
                      help="path for the comparison JSON "
                           "(default: <reports>/comparison.json)")

    orc = sub.add_parser("oracle", parents=[common],
                         help="print the brute-force reference record for a "
                              "stock scenario")
    orc.add_argument("--scenario", required=True, choices=scenarios.KINDS)
    return parser


def _cmd_run(args):
    config = scenarios.parse_config(args.config, seed=args.seed,
                                    tol_overrides=dict(args.tol_override))
    result = scenarios.run_scenario(config, args.out)
    print(f"wrote {result.csv_path}")
    print(f"wrote {result.json_path}")
    print(json.dumps(result.summary, indent=2, sort_keys=True))
    return 0


def _cmd_fit(args):
    series = TimeSeries.from_csv(args.series)
    overrides = dict(args.tol_override)
    floor = overrides.get("fit_floor_log")
    kwargs = {} if floor is None else {"floor_log": floor}

    from .fits import fit_decoherence_time, fit_relaxation_time

    if args.channel is not None:
        channel = args.channel
    else:
        for candidate in ("offdiag_modulus", "offdiag_contrib"):
            if candidate in series.channels:
                channel = candidate
                break
        else:
            print("error: no decay channel found; pass --channel "
                  f"(available: {', '.join(series.channels)})",
                  file=sys.stderr)
            return 2
    out = {
        "series": args.series,
        "channel": channel,
        "t_D": fit_decoherence_time(series.times, series.channel(channel),
                                    **kwargs).as_dict(),
    }
    if "diag_distance" in series.channels:
        out["t_R"] = fit_relaxation_time(series.times,
                                         series.channel("diag_distance"),
                                         **kwargs).as_dict()
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _cmd_compare(args):
    reports = Path(args.reports)
    out_path = Path(args.out) if args.out else reports / "comparison.json"
    summaries = []
    for path in sorted(reports.glob("*.json")):
        if path.resolve() == out_path.resolve():
            continue
        with open(path) as fh:
            summaries.append(json.load(fh))
    report = ordering_report(summaries)
    print(report.text())
    with open(out_path, "w") as fh:
        json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out_path}")
    return 0 if report.ordering_satisfied else 1


def _print_record(names, times, columns):
    print(",".join(names))
    for k, t in enumerate(times):
        row = [t] + [col[k] for col in columns]
        print(",".join(repr(float(x)) for x in row))


def _cmd_oracle(args):
    # fixed reference configurations, small enough to check by eye
    seed = 0 if args.seed is None else args.seed
    if args.scenario == "eid-spin-bath":
        rng = np.random.default_rng(seed)
        n = 8
        params = SpinBathParams(couplings=rng.uniform(0.5, 1.5, n),
                                angles=np.full(n, math.pi / 2))
        times = np.linspace(0.0, 8.0, 81)
        coherence = np.abs(spin_bath_coherence(params, times))
        _print_record(["t", "coherence_modulus"], times, [coherence])
    elif args.scenario == "sid-kernel":
        state, obs = gaussian_scenario()
        times = np.linspace(0.0, 8.0, 81)
        values = [discretized_unitary_oracle(state, obs, t) for t in times]
        _print_record(["t", "expectation"], times, [values])
    else:
        # closed form for the toy: every coherence decays at the same
        # rate, the population gap closes at the relaxation rate
        toy = dissipative_toy()
        times = np.linspace(0.0, 30.0, 121)
        p0 = np.real(np.diag(toy.rho0))
        p_star = np.asarray(toy.equilibrium, dtype=float)
        off0 = toy.rho0 - np.diag(np.diag(toy.rho0))
        offdiag = float(np.linalg.norm(off0)) \
            * np.exp(-toy.gamma_decohere * times)
        diag_dist = float(np.linalg.norm(p0 - p_star)) \
            * np.exp(-toy.gamma_relax * times)
        _print_record(["t", "offdiag_modulus", "diag_distance"], times,
                      [offdiag, diag_dist])
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "fit": _cmd_fit,
    "compare": _cmd_compare,
    "oracle": _cmd_oracle,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except KeyError as exc:
        # str() on a KeyError wraps the message in repr quotes
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    except (scenarios.ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
