"""Density curves and their CSV representation."""
import io
import json
from dataclasses import dataclass, field

import numpy as np

METHODS = ("halfdeg-kernel", "susy", "saddle", "mc")


@dataclass
class DensityCurve:
    """Values of the one-point density on a grid, with provenance metadata."""

    grid: np.ndarray
    values: np.ndarray
    method: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.shape != self.values.shape or self.grid.ndim != 1:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if self.grid.size > 1 and np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly ascending")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    def integral(self):
        """Trapezoidal integral over the grid (NaN points excluded)."""
        ok = np.isfinite(self.values)
        return float(np.trapezoid(self.values[ok], self.grid[ok]))

    def local_maxima(self):
        """Grid positions of strict interior local maxima, refined by a parabola."""
        v = self.values
        idx = np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:])) + 1
        out = []
        for i in idx:
            x0, x1, x2 = self.grid[i - 1:i + 2]
            y0, y1, y2 = v[i - 1:i + 2]
            den = (x0 - x1) * (x0 - x2) * (x1 - x2)
            A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
            B = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den
            out.append(-B / (2 * A) if A < 0 else x1)
        return np.array(out)

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"# method: {self.method}\n")
        for k in sorted(self.metadata):
            buf.write(f"# {k}: {json.dumps(self.metadata[k], sort_keys=True, default=_jsonable)}\n")
        buf.write("x,density\n")
        for x, y in zip(self.grid, self.values):
            buf.write(f"{x:.17g},{y:.17g}\n")
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text):
        meta = {}
        method = None
        xs, ys = [], []
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(": ")
                if key == "method":
                    method = val
                else:
                    meta[key] = json.loads(val)
                continue
            if line.startswith("x,"):
                continue
            x, y = line.split(",")
            xs.append(float(x))
            ys.append(float(y))
        return cls(np.array(xs), np.array(ys), method, meta)

    @classmethod
    def read_csv(cls, path):
        with open(path) as fh:
            return cls.from_csv(fh.read())


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialise {type(o)}")


def total_variation(p_mass, q_mass):
    """Half the L1 distance between two vectors of bin probabilities."""
    return 0.5 * float(np.sum(np.abs(np.asarray(p_mass) - np.asarray(q_mass))))
