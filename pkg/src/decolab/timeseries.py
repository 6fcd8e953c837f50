"""Sampled multi-channel records with deterministic CSV round trips.

Columns are written as shortest round-trip float reprs, so rerunning the
same deterministic producer yields byte-identical files.
"""

import re
from dataclasses import dataclass

import numpy as np

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class TimeSeries:
    """Strictly increasing sample times plus named real-valued channels.

    Channel insertion order fixes the CSV column order; complex data is
    stored by its producer as separate _re/_im channels.
    """

    times: np.ndarray
    channels: dict

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("need a 1-d time axis with at least 2 samples")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if not np.all(np.isfinite(t)):
            raise ValueError("sample times contain non-finite entries")
        if not self.channels:
            raise ValueError("need at least one channel")
        clean = {}
        for name, vals in self.channels.items():
            if not _NAME_RE.match(name):
                raise ValueError(f"channel name {name!r} is not an identifier")
            v = np.asarray(vals, dtype=float)
            if v.shape != t.shape:
                raise ValueError(
                    f"channel {name!r} has {v.size} samples, time axis has "
                    f"{t.size}"
                )
            if not np.all(np.isfinite(v)):
                raise ValueError(f"channel {name!r} contains non-finite entries")
            v = v.copy()
            v.setflags(write=False)
            clean[name] = v
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "channels", clean)

    @property
    def n_samples(self):
        return self.times.size

    @property
    def column_names(self):
        return ["t", *self.channels]

    def channel(self, name):
        try:
            return self.channels[name]
        except KeyError:
            raise KeyError(
                f"no channel {name!r}; available: {', '.join(self.channels)}"
            ) from None

    def to_csv(self, path):
        cols = [self.times, *self.channels.values()]
        with open(path, "w", newline="") as fh:
            fh.write(",".join(self.column_names) + "\n")
            for row in zip(*cols):
                fh.write(",".join(repr(float(x)) for x in row) + "\n")

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            header = fh.readline().strip()
            names = header.split(",")
            if not names or names[0] != "t":
                raise ValueError(f"{path}: first column must be 't', got {header!r}")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if data.shape[1] != len(names):
            raise ValueError(
                f"{path}: {data.shape[1]} data columns vs {len(names)} header names"
            )
        channels = {name: data[:, k] for k, name in enumerate(names[1:], start=1)}
        return cls(times=data[:, 0], channels=channels)
