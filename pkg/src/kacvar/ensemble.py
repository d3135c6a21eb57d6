"""Random polynomial ensembles.

A polynomial ``P(x) = sum_j w_j x**j`` is described by its deterministic means
``m_j`` and scales ``v_j`` so that ``w_j = m_j + v_j * xi_j`` with ``xi_j``
independent, mean zero and unit variance.  Built-in ensembles are the Kac
polynomial (``v_j = 1``), the hyperbolic polynomial with parameter ``L`` and
an explicit table form.  All built-ins are non-centered by a common mean
``mu``: ``m_j = mu * v_j``.

Noise is drawn from a counter-based generator (Philox) keyed by
``(seed, degree, trial)``; coefficient ``j`` consumes exactly output ``j`` of
that stream, so each coefficient is a pure function of
``(seed, degree, trial, j)`` independent of scheduling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from ._io import dumps17
from .errors import DegenerateEnsemble, InvalidSpec

KINDS = ("kac", "hyperbolic", "generalized")
DISTRIBUTIONS = ("gaussian", "rademacher", "uniform")

# declared moment constants for the built-ins (validation reporting only)
DEFAULT_C0 = 4.0
DEFAULT_EPS0 = 1.0
DEFAULT_N0 = 0

_MASK64 = (1 << 64) - 1


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class EnsembleSpec:
    """Declarative description of a random polynomial ensemble."""

    kind: str = "kac"
    degree: int = 10
    ell: int = 0
    mu: float = 0.0
    dist: str = "gaussian"
    L: float = 1.0
    tau: float | None = None
    v_table: tuple | None = None
    m_table: tuple | None = None
    C0: float = DEFAULT_C0
    eps0: float = DEFAULT_EPS0
    N0: int = DEFAULT_N0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpec(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.dist not in DISTRIBUTIONS:
            raise InvalidSpec(f"dist must be one of {DISTRIBUTIONS}, got {self.dist!r}")
        if int(self.degree) != self.degree or self.degree < 1:
            raise InvalidSpec(f"degree must be a positive integer, got {self.degree!r}")
        if int(self.ell) != self.ell or self.ell < 0:
            raise InvalidSpec(f"ell must be a non-negative integer, got {self.ell!r}")
        if self.kind == "hyperbolic" and not self.L > 0:
            raise InvalidSpec(f"hyperbolic L must be positive, got {self.L!r}")
        if self.kind == "generalized":
            if self.tau is None or not self.tau > -0.5:
                raise InvalidSpec("generalized ensembles need tau > -1/2")
            if self.v_table is None:
                raise InvalidSpec("generalized ensembles need an explicit v_table")
            if len(self.v_table) < self.degree + 1:
                raise InvalidSpec("v_table shorter than degree + 1")
            if self.m_table is not None and len(self.m_table) < self.degree + 1:
                raise InvalidSpec("m_table shorter than degree + 1")
        if not (self.C0 > 0 and self.eps0 > 0 and self.N0 >= 0):
            raise InvalidSpec("moment constants need C0 > 0, eps0 > 0, N0 >= 0")

    @property
    def growth_order(self):
        """tau of the un-differentiated ensemble."""
        if self.kind == "kac":
            return 0.0
        if self.kind == "hyperbolic":
            return (self.L - 1.0) / 2.0
        return float(self.tau)

    def with_degree(self, n):
        return _replace(self, degree=int(n))

    def with_mu(self, mu):
        return _replace(self, mu=float(mu))


def _replace(spec, **kw):
    from dataclasses import replace

    return replace(spec, **kw)


@dataclass(frozen=True, eq=False)
class CoefficientProfile:
    n: int
    tau: float
    m: np.ndarray
    v: np.ndarray
    log_v: np.ndarray
    kind: str = "kac"
    L: float = 1.0
    ell: int = 0
    mu: float = 0.0
    dist: str = "gaussian"
    C0: float = DEFAULT_C0
    N0: int = DEFAULT_N0

    def __post_init__(self):
        if not (len(self.m) == len(self.v) == len(self.log_v) == self.n + 1):
            raise InvalidSpec("profile arrays must have length n + 1")

    @property
    def centered(self):
        return not np.any(self.m)

    def reversed(self):
        """Profile of the reciprocal polynomial x**n P(1/x)."""
        return CoefficientProfile(
            n=self.n, tau=self.tau, m=_frozen(self.m[::-1]), v=_frozen(self.v[::-1]),
            log_v=_frozen(self.log_v[::-1]), kind=self.kind, L=self.L, ell=self.ell,
            mu=self.mu, dist=self.dist, C0=self.C0, N0=self.N0,
        )

    def to_dict(self):
        return {
            "kind": self.kind, "L": float(self.L), "tau": float(self.tau), "n": int(self.n),
            "ell": int(self.ell), "mu": float(self.mu), "dist": self.dist,
            "v": self.v.tolist(), "m": self.m.tolist(),
        }

    def to_json(self, indent=2):
        return dumps17(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        v = np.asarray(d["v"], dtype=float)
        with np.errstate(divide="ignore"):
            log_v = np.log(np.abs(v))
        return cls(n=int(d["n"]), tau=float(d["tau"]), m=_frozen(d["m"]), v=_frozen(v),
                   log_v=_frozen(log_v), kind=d["kind"], L=float(d["L"]), ell=int(d["ell"]),
                   mu=float(d["mu"]), dist=d["dist"])


def hyperbolic_log_scales(L, n):
    """log v_j for the hyperbolic ensemble, j = 0..n.

    v_j**2 = L (L+1) ... (L+j-1) / j!; the log is accumulated from the exact
    successive ratios (L+j-1)/j, which equals the log-gamma difference
    lgamma(L+j) - lgamma(L) - lgamma(j+1) without its cancellation.
    """
    j = np.arange(1, n + 1, dtype=float)
    steps = 0.5 * np.log1p((L - 1.0) / j)
    return np.concatenate(([0.0], np.cumsum(steps)))


def build_profile(spec: EnsembleSpec) -> CoefficientProfile:
    n = int(spec.degree)
    if spec.kind == "kac":
        log_v = np.zeros(n + 1)
        v = np.ones(n + 1)
    elif spec.kind == "hyperbolic":
        log_v = hyperbolic_log_scales(float(spec.L), n)
        v = np.exp(log_v)
    else:
        v = np.asarray(spec.v_table[: n + 1], dtype=float)
        with np.errstate(divide="ignore"):
            log_v = np.log(np.abs(v))
    if spec.kind == "generalized" and spec.m_table is not None:
        m = np.asarray(spec.m_table[: n + 1], dtype=float)
    else:
        m = spec.mu * v
    prof = CoefficientProfile(
        n=n, tau=spec.growth_order, m=_frozen(m), v=_frozen(v), log_v=_frozen(log_v),
        kind=spec.kind, L=float(spec.L) if spec.kind == "hyperbolic" else 1.0, ell=0,
        mu=float(spec.mu), dist=spec.dist, C0=spec.C0, N0=spec.N0,
    )
    if spec.ell:
        prof = differentiate_profile(prof, spec.ell)
    return prof


def _log_falling(j, ell):
    """log((j+ell)! / j!) for an integer array j."""
    out = np.zeros(len(j))
    for i in range(1, ell + 1):
        out += np.log(j + i)
    return out


def differentiate_profile(profile: CoefficientProfile, ell: int) -> CoefficientProfile:
    """Profile of the ell-th derivative."""
    ell = int(ell)
    if ell < 0:
        raise InvalidSpec("derivative order must be non-negative")
    if ell == 0:
        return profile
    if profile.n < ell + 1:
        raise DegenerateEnsemble(
            f"degree {profile.n} leaves degree {profile.n - ell} < 1 after {ell} derivatives")
    n = profile.n - ell
    j = np.arange(n + 1, dtype=float)
    lf = _log_falling(j, ell)
    log_v = profile.log_v[ell:] + lf
    ff = np.exp(lf)
    v = profile.v[ell:] * ff
    m = profile.m[ell:] * ff
    return CoefficientProfile(
        n=n, tau=profile.tau + ell, m=_frozen(m), v=_frozen(v), log_v=_frozen(log_v),
        kind=profile.kind, L=profile.L, ell=profile.ell + ell, mu=profile.mu,
        dist=profile.dist, C0=profile.C0, N0=profile.N0,
    )


def validate_profile(profile: CoefficientProfile, C0=None, N0=None):
    """Check the polynomial-growth bounds; returns a dict of violations.

    Checked: |m_j|, |v_j| <= C0 (1+j)**tau for all j, and
    |v_j| >= (1+j)**tau / C0 for j >= N0.
    """
    C0 = profile.C0 if C0 is None else C0
    N0 = profile.N0 if N0 is None else N0
    j = np.arange(profile.n + 1, dtype=float)
    log_env = profile.tau * np.log1p(j)
    lc = math.log(C0)
    with np.errstate(divide="ignore"):
        log_m = np.log(np.abs(profile.m))
    upper_v = np.nonzero(profile.log_v > log_env + lc)[0]
    upper_m = np.nonzero(log_m > log_env + lc)[0]
    lower_v = np.nonzero((profile.log_v < log_env - lc) & (j >= N0))[0]
    return {
        "upper_v": upper_v.tolist(), "upper_m": upper_m.tolist(), "lower_v": lower_v.tolist(),
        "ok": not (len(upper_v) or len(upper_m) or len(lower_v)),
    }


def distribution_moments(dist):
    """Exact (mean, variance) of the standardized noise law."""
    if dist not in DISTRIBUTIONS:
        raise InvalidSpec(f"unknown distribution {dist!r}")
    # gaussian: N(0,1); rademacher: +-1; uniform on [-sqrt3, sqrt3]: var = 3/3
    return 0.0, 1.0


@dataclass(frozen=True, eq=False)
class PolynomialSample:
    coeffs: np.ndarray
    n: int
    provenance: tuple = field(default=(None, None, None))
    reciprocal: bool = False

    def __post_init__(self):
        if len(self.coeffs) != self.n + 1:
            raise InvalidSpec("sample must have n + 1 coefficients")

    @classmethod
    def from_coeffs(cls, coeffs, provenance=(None, None, None)):
        c = _frozen(coeffs)
        return cls(coeffs=c, n=len(c) - 1, provenance=tuple(provenance))


def reciprocal(sample: PolynomialSample) -> PolynomialSample:
    """Coefficients of x**n P(1/x) (reversed order)."""
    return PolynomialSample(coeffs=_frozen(sample.coeffs[::-1]), n=sample.n,
                            provenance=sample.provenance, reciprocal=not sample.reciprocal)


# --- counter-based noise -------------------------------------------------

def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def stream_key(seed, degree):
    s = int(seed) & _MASK64
    k0 = _splitmix64(s ^ _splitmix64(int(degree) & _MASK64))
    k1 = _splitmix64(k0 ^ 0xD1B54A32D192ED03)
    return [k0, k1]


def _stride(degree):
    """Philox blocks reserved per trial: ceil((degree + 1) / 4)."""
    return (int(degree) + 4) // 4


def _generator(seed, degree, first_trial):
    counter = np.array([(int(first_trial) * _stride(degree)) & _MASK64, 0, 0, 0], dtype=np.uint64)
    return np.random.Philox(key=np.array(stream_key(seed, degree), dtype=np.uint64), counter=counter)


def raw_block(seed, degree, first_trial, ntrials):
    """Raw words for trials first_trial .. first_trial+ntrials-1, shape (ntrials, 4*stride).

    Trial t owns Philox blocks t*S .. t*S+S-1 with S = ceil((degree+1)/4),
    so coefficient j of trial t is output j of its own block range.
    """
    width = 4 * _stride(degree)
    raw = _generator(seed, degree, first_trial).random_raw(width * int(ntrials))
    return raw.reshape(int(ntrials), width)


def raw_stream(seed, degree, trial, count):
    """First ``count`` 64-bit outputs of the (seed, degree, trial) stream."""
    if count > 4 * _stride(degree):
        raise InvalidSpec("stream of this degree holds at most degree + 4 words per trial")
    return raw_block(seed, degree, trial, 1)[0, :count]


def uniform_from_raw(raw):
    """Map uint64 words to doubles strictly inside (0, 1)."""
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def noise_from_raw(raw, dist):
    u = uniform_from_raw(raw)
    if dist == "gaussian":
        return ndtri(u)
    if dist == "rademacher":
        return np.where(u < 0.5, -1.0, 1.0)
    if dist == "uniform":
        return math.sqrt(3.0) * (2.0 * u - 1.0)
    raise InvalidSpec(f"unknown distribution {dist!r}")


def draw_noise(seed, degree, first_trial, ntrials, count, dist):
    """Noise matrix of shape (ntrials, count) for consecutive trials."""
    if count > 4 * _stride(degree):
        raise InvalidSpec("stream of this degree holds at most degree + 4 words per trial")
    raw = raw_block(seed, degree, first_trial, ntrials)[:, :count]
    return noise_from_raw(raw, dist)


def sample_polynomial(profile: CoefficientProfile, dist=None, stream=(0, None, 0), noise=None):
    """Draw w_j = m_j + v_j xi_j.

    ``stream`` is the key ``(seed, degree, trial)``; a ``None`` degree means
    the profile degree.  ``noise`` overrides the draw (test hook).
    """
    dist = profile.dist if dist is None else dist
    seed, degree, trial = stream
    degree = profile.n if degree is None else degree
    if noise is None:
        xi = noise_from_raw(raw_stream(seed, degree, trial, profile.n + 1), dist)
    else:
        xi = np.asarray(noise, dtype=float)
    return PolynomialSample(coeffs=_frozen(profile.m + profile.v * xi), n=profile.n,
                            provenance=(seed, degree, trial))


def sample_batch(profile: CoefficientProfile, dist, seed, first_trial, ntrials, degree=None):
    """Coefficient matrix (ntrials, n+1) for consecutive trials."""
    degree = profile.n if degree is None else degree
    xi = draw_noise(seed, degree, first_trial, ntrials, profile.n + 1, dist)
    return profile.m + profile.v * xi
