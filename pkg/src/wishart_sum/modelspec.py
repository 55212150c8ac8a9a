"""JSON model files.

A model file looks like::

    {"dims": {"N": 9, "N_A": 35, "N_B": 40},
     "sigma_A": 1.0,
     "sigma_B": [0.02, 0.2, 0.3, 1.5, 2.01, 2.25, 2.27, 4.05, 4.13],
     "mode": "half-degenerate"}

``sigma_A``/``sigma_B`` are a number (times the identity), a list of N reals
(a diagonal matrix) or an N x N matrix written as nested rows whose entries
are numbers or [re, im] pairs.
"""
import json
from dataclasses import dataclass

import numpy as np

from .charpoly import CommutingCovariances
from .errors import SpecError
from .halfdeg import HalfDegenerateModel
from .sampler import CovariancePair

MODES = ("half-degenerate", "commuting", "general")


def _entry(v):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
        return complex(v[0], v[1])
    raise SpecError(f"matrix entry must be a number or [re, im], got {v!r}")


def _matrix(value, N, name):
    """Return (matrix, kind) with kind in {'scalar', 'diagonal', 'matrix'}."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value) * np.eye(N, dtype=complex), "scalar"
    if not isinstance(value, list) or not value:
        raise SpecError(f"{name} must be a number, a list of N reals or an N x N matrix")
    if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        if len(value) != N:
            raise SpecError(f"{name} has {len(value)} entries, expected N = {N}")
        return np.diag(np.asarray(value, dtype=float)).astype(complex), "diagonal"
    if len(value) != N or any(not isinstance(r, list) or len(r) != N for r in value):
        raise SpecError(f"{name} must be an {N} x {N} matrix")
    return np.array([[_entry(v) for v in row] for row in value]), "matrix"


@dataclass
class ModelSpec:
    N: int
    N_A: int
    N_B: int
    Sigma_A: np.ndarray
    Sigma_B: np.ndarray
    mode: str
    kind_A: str = "matrix"
    kind_B: str = "matrix"

    def pair(self):
        return CovariancePair(self.Sigma_A, self.Sigma_B, self.N_A, self.N_B)

    def halfdeg(self):
        """HalfDegenerateModel; raises SpecError unless the mode allows it."""
        if self.mode != "half-degenerate":
            raise SpecError(f"this computation needs mode 'half-degenerate', the model is '{self.mode}'")
        return HalfDegenerateModel(self.N, self.N_A, self.N_B, float(self.Sigma_A[0, 0].real),
                                   tuple(np.diag(self.Sigma_B).real))

    def commuting(self):
        """Paired eigenvalues from a joint eigenbasis of the two covariances."""
        if self.mode == "general":
            raise SpecError("this computation needs commuting covariances (mode 'half-degenerate' or 'commuting')")
        # a generic combination separates the joint eigenspaces
        _, U = np.linalg.eigh(self.Sigma_A + 0.7548776662 * self.Sigma_B)
        a = np.diag(U.conj().T @ self.Sigma_A @ U).real
        b = np.diag(U.conj().T @ self.Sigma_B @ U).real
        return CommutingCovariances(self.N, self.N_A, self.N_B, tuple(a), tuple(b))

    def scale(self):
        return float(self.N_A * np.linalg.norm(self.Sigma_A, 2) + self.N_B * np.linalg.norm(self.Sigma_B, 2))

    def spread(self):
        """Width of the upper spectral edge region."""
        return float(np.sqrt(self.N_A * np.linalg.norm(self.Sigma_A, 2) ** 2
                             + self.N_B * np.linalg.norm(self.Sigma_B, 2) ** 2))


def parse_spec(doc):
    """Validate a decoded JSON document and build a ModelSpec."""
    if not isinstance(doc, dict):
        raise SpecError("model file must hold a JSON object")
    for key in ("dims", "sigma_A", "sigma_B", "mode"):
        if key not in doc:
            raise SpecError(f"missing key {key!r}")
    dims = doc["dims"]
    try:
        N, N_A, N_B = (int(dims[k]) for k in ("N", "N_A", "N_B"))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError("dims needs integer N, N_A, N_B") from exc
    if N < 1 or N_A < N or N_B < N:
        raise SpecError(f"need N_A >= N and N_B >= N >= 1, got N={N}, N_A={N_A}, N_B={N_B}")
    mode = doc["mode"]
    if mode not in MODES:
        raise SpecError(f"mode must be one of {', '.join(MODES)}, got {mode!r}")
    SA, kA = _matrix(doc["sigma_A"], N, "sigma_A")
    SB, kB = _matrix(doc["sigma_B"], N, "sigma_B")
    spec = ModelSpec(N, N_A, N_B, SA, SB, mode, kA, kB)
    if mode == "half-degenerate":
        if kA != "scalar":
            raise SpecError("half-degenerate mode needs a scalar sigma_A")
        if kB == "scalar" or (kB == "matrix" and np.max(np.abs(SB - np.diag(np.diag(SB)))) > 0):
            raise SpecError("half-degenerate mode needs sigma_B as a vector of N distinct reals")
    # Hermitian / positive-definite checks happen here (raises NotHermitian etc.)
    pair = spec.pair()
    if mode == "commuting" and not pair.is_commuting(1e-10):
        raise SpecError("mode 'commuting' but sigma_A and sigma_B do not commute")
    if mode == "half-degenerate":
        spec.halfdeg()  # raises DegenerateSigma with the offending indices
    return spec


def load_spec(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: invalid JSON ({exc})") from exc
    return parse_spec(doc)


def spec_document(N, N_A, N_B, sigma_A, sigma_B, mode):
    """Inverse of parse_spec for scalars, lists and complex matrices."""
    def enc(v):
        if np.isscalar(v):
            return float(v)
        v = np.asarray(v)
        if v.ndim == 1:
            return [float(t) for t in v.real]
        return [[[float(z.real), float(z.imag)] for z in row] for row in v]
    return {"dims": {"N": N, "N_A": N_A, "N_B": N_B},
            "sigma_A": enc(sigma_A), "sigma_B": enc(sigma_B), "mode": mode}
