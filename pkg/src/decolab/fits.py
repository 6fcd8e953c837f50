"""Characteristic-time extraction from decay records.

Fits collapse envelopes to stretched exponentials, locates the onset of
stationarity inside a recurrence window, and tabulates how far apart the
dephasing and relaxation scales sit across scenarios.
"""

import math
from dataclasses import dataclass

import numpy as np

# envelope samples enter the fit while ln(env / max) stays above this
FIT_FLOOR_LOG = -2.0
# a channel must collapse at least this much before a decay fit is honest
MIN_DECAY_FACTOR = math.e
# below this amplitude a channel carries no signal worth fitting
SIGNAL_ATOL = 1e-9
# fraction of the in-window record used for the long-time mean
TAIL_FRACTION = 0.25


@dataclass(frozen=True)
class FitResult:
    """Outcome of a single envelope fit.

    value is the characteristic time (the e^-1 point of the fitted
    envelope A exp(-(t/value)^power)); status is "ok" when the fit is
    trustworthy and a reason string otherwise, in which case the numeric
    fields are None rather than fabricated.
    """

    value: float | None
    power: int | None
    amplitude: float | None
    r_squared: float | None
    status: str

    @property
    def ok(self):
        return self.status == "ok"

    def as_dict(self):
        return {
            "value": self.value,
            "power": self.power,
            "amplitude": self.amplitude,
            "r_squared": self.r_squared,
            "status": self.status,
        }


@dataclass(frozen=True)
class WeakLimitResult:
    """Onset of stationarity for a set of monitored channels."""

    t_star: float | None
    equilibrium: dict
    epsilon: float
    flags: tuple

    @property
    def converged(self):
        return self.t_star is not None

    def as_dict(self):
        return {
            "t_star": self.t_star,
            "equilibrium": dict(self.equilibrium),
            "epsilon": self.epsilon,
            "flags": list(self.flags),
        }


def _check_series(times, values):
    times = np.asarray(times, dtype=float)
    values = np.asarray(values)
    if times.ndim != 1 or values.shape != times.shape:
        raise ValueError("times and values must be 1-d arrays of equal length")
    if times.size < 4:
        raise ValueError("need at least 4 samples to fit a decay")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
        raise ValueError("series contains non-finite entries")
    return times, values


def envelope(times, values):
    """Non-increasing upper envelope of |values| on the sample grid.

    Nodes are the samples that dominate every later sample (records seen
    from the right); the envelope interpolates linearly between them.
    A monotone collapse is reproduced exactly, an oscillatory decay is
    bridged across its arches.
    """
    times, values = _check_series(times, values)
    v = np.abs(values).astype(float)
    suffix = np.maximum.accumulate(v[::-1])[::-1]
    nodes = np.nonzero(v >= suffix)[0]
    return np.interp(times, times[nodes], v[nodes])


def _window_fit(times, env, powers, floor_log):
    # contiguous prefix while the envelope stays above max * e^floor_log;
    # stopping there keeps late revivals and noise floors out of the fit
    amax = float(env.max())
    below = np.nonzero(env < amax * math.exp(floor_log))[0]
    stop = int(below[0]) if below.size else env.size
    stop = min(max(stop, 4), env.size)
    t = times[:stop]
    y = env[:stop]
    keep = y > 0
    if int(keep.sum()) < 3:
        return None
    t = t[keep]
    y = np.log(y[keep])
    best = None
    for p in powers:
        design = np.column_stack([t ** p, np.ones_like(t)])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        if coef[0] >= 0:
            continue
        resid = y - design @ coef
        total = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid ** 2)) / total if total > 0 else 1.0
        r2 = min(max(r2, 0.0), 1.0)
        tau = (-1.0 / float(coef[0])) ** (1.0 / p)
        if best is None or r2 > best.r_squared:
            best = FitResult(float(tau), int(p), float(math.exp(coef[1])),
                             float(r2), "ok")
    return best


def fit_decoherence_time(times, values, floor_log=FIT_FLOOR_LOG):
    """Fit the collapse of an off-diagonal channel.

    The upper envelope of |values| is fit to A exp(-(t/t_D)^p) with
    p in {1, 2}, the power chosen by r squared on the log-linear form.
    The returned value is t_D, the time at which the fitted envelope has
    fallen to A/e.  A channel that never collapses by a factor of e
    yields a no-fit result instead of a number.
    """
    times, values = _check_series(times, values)
    env = envelope(times, values)
    amax = float(env.max())
    if amax <= SIGNAL_ATOL:
        return FitResult(None, None, None, None, "no signal: channel is zero")
    if env[-1] * MIN_DECAY_FACTOR > amax:
        return FitResult(None, None, None, None,
                         "no fit: channel does not decay by a factor of e")
    best = _window_fit(times, env, (1, 2), floor_log)
    if best is None:
        return FitResult(None, None, None, None,
                         "no fit: envelope is not decaying")
    return best


def fit_relaxation_time(times, values, equilibrium=0.0, floor_log=FIT_FLOOR_LOG):
    """Fit the exponential approach of a population channel to equilibrium.

    values may be a distance-from-equilibrium record directly (the
    default equilibrium of zero) or a raw channel paired with its known
    limit.  A channel that never leaves equilibrium reports that
    relaxation is not applicable rather than inventing a time scale.
    """
    times, values = _check_series(times, values)
    dist = np.abs(np.asarray(values, dtype=float) - float(equilibrium))
    if float(dist.max()) <= SIGNAL_ATOL:
        return FitResult(None, None, None, None,
                         "not applicable (no dissipation)")
    env = envelope(times, dist)
    if env[-1] * MIN_DECAY_FACTOR > float(env.max()):
        return FitResult(None, None, None, None,
                         "no fit: channel does not decay by a factor of e")
    best = _window_fit(times, env, (1,), floor_log)
    if best is None:
        return FitResult(None, None, None, None,
                         "no fit: envelope is not decaying")
    return best


def detect_weak_limit(times, channels, epsilon, recurrence_window=None,
                      tail_fraction=TAIL_FRACTION):
    """Earliest time after which every channel stays near its long-time mean.

    Only samples inside the recurrence window count: the long-time mean
    is taken over the final stretch of the in-window record, and t_star
    is the earliest sample such that every channel remains within
    epsilon of its mean at all later in-window samples.  Samples beyond
    the window are ignored and flagged, and failure to settle is
    reported as non-convergence rather than a guessed time.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not isinstance(channels, dict):
        channels = {"channel": channels}
    if not channels:
        raise ValueError("need at least one monitored channel")
    names = list(channels)
    times, first = _check_series(times, channels[names[0]])
    data = {}
    for name in names:
        _, vals = _check_series(times, channels[name])
        data[name] = np.asarray(vals, dtype=float)

    flags = []
    mask = np.ones(times.size, dtype=bool)
    if recurrence_window is not None and math.isfinite(recurrence_window):
        if recurrence_window <= 0:
            raise ValueError("recurrence window must be positive")
        mask = times <= recurrence_window
        if times[-1] > recurrence_window:
            flags.append("series extends beyond the recurrence window; "
                         "later samples ignored")
    if int(mask.sum()) < 4:
        raise ValueError("recurrence window leaves fewer than 4 samples")

    t_in = times[mask]
    tail_n = max(3, int(math.ceil(tail_fraction * t_in.size)))
    equilibrium = {}
    deviation = np.zeros(t_in.size)
    for name in names:
        vals = data[name][mask]
        mean = float(np.mean(vals[-tail_n:]))
        equilibrium[name] = mean
        deviation = np.maximum(deviation, np.abs(vals - mean))

    suffix = np.maximum.accumulate(deviation[::-1])[::-1]
    settled = np.nonzero(suffix <= epsilon)[0]
    if settled.size:
        t_star = float(t_in[settled[0]])
    else:
        t_star = None
        flags.append("no convergence within the recurrence window")
    return WeakLimitResult(t_star, equilibrium, float(epsilon), tuple(flags))


@dataclass(frozen=True)
class OrderingRow:
    scenario: str
    kind: str
    t_decohere: float | None
    t_relax: float | None
    ratio: float | None
    status: str


@dataclass(frozen=True)
class OrderingReport:
    """Cross-scenario table of dephasing versus relaxation scales."""

    rows: tuple
    ordering_satisfied: bool

    def as_dict(self):
        return {
            "rows": [
                {
                    "scenario": r.scenario,
                    "kind": r.kind,
                    "t_D": r.t_decohere,
                    "t_R": r.t_relax,
                    "ratio": r.ratio,
                    "status": r.status,
                }
                for r in self.rows
            ],
            "ordering_satisfied": self.ordering_satisfied,
        }

    def text(self):
        header = (f"{'scenario':<24}{'kind':<18}{'t_D':>12}{'t_R':>12}"
                  f"{'t_R/t_D':>10}  ordering")
        lines = [header, "-" * len(header)]
        for r in self.rows:
            td = f"{r.t_decohere:.6g}" if r.t_decohere is not None else "n/a"
            tr = f"{r.t_relax:.6g}" if r.t_relax is not None else "n/a"
            ratio = f"{r.ratio:.4g}" if r.ratio is not None else "n/a"
            lines.append(f"{r.scenario:<24}{r.kind:<18}{td:>12}{tr:>12}"
                         f"{ratio:>10}  {r.status}")
        verdict = "yes" if self.ordering_satisfied else "no"
        lines.append(f"ordering t_D < t_R satisfied where both defined: {verdict}")
        return "\n".join(lines)


def _as_time(value):
    if isinstance(value, bool) or value is None:
        return None
    if isinstance(value, (int, float)) and math.isfinite(value):
        return float(value)
    return None


def ordering_report(summaries):
    """Tabulate t_D against t_R across scenario summaries.

    Each summary is a mapping with at least t_D and t_R entries (either
    may be None or a non-numeric placeholder when the scale does not
    exist for that scenario).  Rows with both times check t_D < t_R; a
    list in which no row carries any characteristic time is rejected.
    """
    summaries = list(summaries)
    if not summaries:
        raise ValueError("ordering report needs at least one fit summary")
    rows = []
    any_time = False
    satisfied = True
    for s in summaries:
        name = str(s.get("scenario") or s.get("name") or "?")
        kind = str(s.get("kind", "?"))
        td = _as_time(s.get("t_D"))
        tr = _as_time(s.get("t_R"))
        if td is not None or tr is not None:
            any_time = True
        if td is not None and tr is not None:
            ratio = tr / td
            status = "ok" if td < tr else "violation"
            if status == "violation":
                satisfied = False
        else:
            ratio = None
            status = "n/a"
        rows.append(OrderingRow(name, kind, td, tr, ratio, status))
    if not any_time:
        raise ValueError("no summary carries a characteristic time")
    return OrderingReport(tuple(rows), satisfied)
