"""Parametric value distributions with hazard-rate and virtual-value machinery.

Three families are supported: uniform, exponential, and a truncated shifted
equal-revenue distribution.  Each exposes closed-form CDF / density / quantile
plus the derived quantities used by the auction code: inverse hazard rate
(information rent), virtual value, alpha-virtual value, and penalty fraction.
Monotone-hazard-rate and regularity certification is grid based: all supported
families have smooth closed forms, so grid witnesses suffice.

All evaluation methods accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

# Right endpoint used for grids/quadrature on the exponential; sampling is
# untruncated.
EXPONENTIAL_TRUNCATION_QUANTILE = 1.0 - 1e-9

DEFAULT_CERTIFICATION_GRID = 10_000


class DomainError(ValueError):
    """Value outside the distribution support (or a zero-density point)."""


class ParameterError(ValueError):
    """Parameter outside its admissible range."""


@dataclass(frozen=True)
class Tolerances:
    """Floating-point slack for identities the theory states exactly."""

    algebraic: float = 1e-12
    monotonicity: float = 1e-9
    transform: float = 1e-8


TOL = Tolerances()


@dataclass(frozen=True)
class CertificationResult:
    """Outcome of a grid certification; witness is a violating (v1, v2) pair."""

    holds: bool
    witness: Optional[Tuple[float, float]] = None

    def __bool__(self) -> bool:
        return self.holds


def _as_array(v: ArrayLike) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(v, dtype=float)
    return arr, arr.ndim == 0


def _maybe_scalar(arr: np.ndarray, scalar: bool) -> ArrayLike:
    return float(arr) if scalar else arr


class Distribution:
    """Common machinery; subclasses provide closed forms via _cdf/_pdf/_quantile."""

    #: closed interval [v_min, v_max]; v_max is the grid/quadrature endpoint
    support: Tuple[float, float]
    #: if False, values above support[1] are legal (truncation is numerical only)
    hard_upper_bound: bool = True
    kind: str = ""

    # -- closed forms (no domain checks), defined per subclass -----------------

    def _cdf(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _pdf(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _quantile(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- public surface --------------------------------------------------------

    def _check_support(self, arr: np.ndarray) -> None:
        lo, hi = self.support
        bad = arr < lo
        if self.hard_upper_bound:
            bad = bad | (arr > hi)
        if np.any(bad):
            raise DomainError(
                f"value outside support [{lo}, {hi}] of {self.kind}: "
                f"{np.asarray(arr)[np.asarray(bad)].flat[0]}"
            )

    def cdf(self, v: ArrayLike) -> ArrayLike:
        arr, scalar = _as_array(v)
        self._check_support(arr)
        return _maybe_scalar(self._cdf(arr), scalar)

    def pdf(self, v: ArrayLike) -> ArrayLike:
        arr, scalar = _as_array(v)
        self._check_support(arr)
        return _maybe_scalar(self._pdf(arr), scalar)

    def quantile(self, p: ArrayLike) -> ArrayLike:
        arr, scalar = _as_array(p)
        if np.any((arr < 0.0) | (arr > 1.0)):
            raise ParameterError("quantile argument must lie in [0, 1]")
        return _maybe_scalar(self._quantile(arr), scalar)

    def inverse_hazard_rate(self, v: ArrayLike) -> ArrayLike:
        """Information rent (1 - F(v)) / f(v)."""
        arr, scalar = _as_array(v)
        self._check_support(arr)
        dens = self._pdf(arr)
        if np.any(dens <= 0.0):
            raise DomainError("inverse hazard rate undefined where density is zero")
        return _maybe_scalar((1.0 - self._cdf(arr)) / dens, scalar)

    def virtual_value(self, v: ArrayLike) -> ArrayLike:
        arr, scalar = _as_array(v)
        return _maybe_scalar(arr - np.asarray(self.inverse_hazard_rate(arr)), scalar)

    def alpha_virtual_value(self, v: ArrayLike, alpha: float) -> ArrayLike:
        """v - alpha * rent; interpolates between value (alpha=0) and virtual value."""
        if not 0.0 <= alpha <= 1.0:
            raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
        arr, scalar = _as_array(v)
        return _maybe_scalar(
            arr - alpha * np.asarray(self.inverse_hazard_rate(arr)), scalar
        )

    def penalty_fraction(self, v: ArrayLike) -> ArrayLike:
        """Rent relative to the value, rent(v) / v."""
        arr, scalar = _as_array(v)
        if np.any(arr <= 0.0):
            raise DomainError("penalty fraction requires v > 0")
        return _maybe_scalar(np.asarray(self.inverse_hazard_rate(arr)) / arr, scalar)

    def sample(self, seed: int, n: int, stream: int = 0) -> np.ndarray:
        """Inverse-CDF sampling from a counter-based generator.

        Deterministic per (seed, stream); parallel workers partition streams.
        """
        if n < 0:
            raise ParameterError("sample size must be non-negative")
        key = np.array([seed, stream], dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(key=key))
        return self._quantile(rng.random(n))

    def interior_grid(self, grid_size: int) -> np.ndarray:
        """Evenly spaced interior points; support endpoints excluded."""
        if grid_size < 2:
            raise ParameterError("grid_size must be at least 2")
        lo, hi = self.support
        return np.linspace(lo, hi, grid_size + 2)[1:-1]

    def certify_mhr(
        self, grid_size: int = DEFAULT_CERTIFICATION_GRID
    ) -> CertificationResult:
        """Monotone hazard rate: rent non-increasing across an interior grid."""
        grid = self.interior_grid(grid_size)
        rent = np.asarray(self.inverse_hazard_rate(grid))
        return _certify_monotone(grid, rent, increasing=False)

    def certify_regular(
        self, grid_size: int = DEFAULT_CERTIFICATION_GRID
    ) -> CertificationResult:
        """Regularity: virtual value non-decreasing across an interior grid."""
        grid = self.interior_grid(grid_size)
        phi = np.asarray(self.virtual_value(grid))
        return _certify_monotone(grid, phi, increasing=True)

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.to_json()['params']})"


def _certify_monotone(
    grid: np.ndarray, values: np.ndarray, increasing: bool
) -> CertificationResult:
    diffs = np.diff(values)
    viol = diffs < -TOL.monotonicity if increasing else diffs > TOL.monotonicity
    if not np.any(viol):
        return CertificationResult(True)
    i = int(np.argmax(viol))
    return CertificationResult(False, witness=(float(grid[i]), float(grid[i + 1])))


@dataclass(frozen=True, repr=False)
class Uniform(Distribution):
    lo: float
    hi: float
    kind = "uniform"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ParameterError("uniform needs lo < hi")

    @property
    def support(self) -> Tuple[float, float]:
        return (self.lo, self.hi)

    def _cdf(self, v):
        return (v - self.lo) / (self.hi - self.lo)

    def _pdf(self, v):
        return np.full_like(v, 1.0 / (self.hi - self.lo))

    def _quantile(self, p):
        return self.lo + p * (self.hi - self.lo)

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def to_json(self) -> dict:
        return {"kind": "uniform", "params": {"lo": self.lo, "hi": self.hi}}


@dataclass(frozen=True, repr=False)
class Exponential(Distribution):
    rate: float
    kind = "exponential"
    hard_upper_bound = False

    def __post_init__(self):
        if not self.rate > 0:
            raise ParameterError("exponential needs rate > 0")

    @property
    def support(self) -> Tuple[float, float]:
        # finite right endpoint for grids/quadrature only
        upper = -math.log1p(-EXPONENTIAL_TRUNCATION_QUANTILE) / self.rate
        return (0.0, upper)

    def _cdf(self, v):
        return -np.expm1(-self.rate * v)

    def _pdf(self, v):
        return self.rate * np.exp(-self.rate * v)

    def _quantile(self, p):
        with np.errstate(divide="ignore"):
            return -np.log1p(-p) / self.rate

    # constant rent 1/rate; the generic (1-F)/f cancels catastrophically deep
    # in the tail
    def inverse_hazard_rate(self, v: ArrayLike) -> ArrayLike:
        arr, scalar = _as_array(v)
        self._check_support(arr)
        return _maybe_scalar(np.full_like(arr, 1.0 / self.rate), scalar)

    def mean(self) -> float:
        return 1.0 / self.rate

    def to_json(self) -> dict:
        return {"kind": "exponential", "params": {"rate": self.rate}}


@dataclass(frozen=True, repr=False)
class TruncatedShiftedEqualRevenue(Distribution):
    """Equal-revenue distribution truncated at H and shifted by |b|.

    CDF is (H/(H-1)) * (1 - 1/(v+b)) on support [1-b, H-b].  Truncation keeps
    the expectation finite; the untruncated equal-revenue law is deliberately
    not provided.  The canonical instance is H=1000, b=-1 with support [2, 1001].
    """

    H: float
    b: float
    kind = "tser"

    def __post_init__(self):
        if not self.H > 1:
            raise ParameterError("tser needs H > 1")

    @property
    def support(self) -> Tuple[float, float]:
        return (1.0 - self.b, self.H - self.b)

    @property
    def _c(self) -> float:
        return self.H / (self.H - 1.0)

    def _cdf(self, v):
        return np.clip(self._c * (1.0 - 1.0 / (v + self.b)), 0.0, 1.0)

    def _pdf(self, v):
        return self._c / (v + self.b) ** 2

    def _quantile(self, p):
        return 1.0 / (1.0 - p / self._c) - self.b

    # Closed forms: rent(v) = v - (v+b)^2/H + b, phi(v) = (v+b)^2/H - b.
    # They follow directly from the CDF; kept explicit for speed and to avoid
    # cancellation near the upper endpoint.

    def inverse_hazard_rate(self, v: ArrayLike) -> ArrayLike:
        arr, scalar = _as_array(v)
        self._check_support(arr)
        return _maybe_scalar(arr - (arr + self.b) ** 2 / self.H + self.b, scalar)

    def to_json(self) -> dict:
        return {"kind": "tser", "params": {"H": self.H, "b": self.b}}


_KINDS = {
    "uniform": lambda p: Uniform(lo=p["lo"], hi=p["hi"]),
    "exponential": lambda p: Exponential(rate=p["rate"]),
    "tser": lambda p: TruncatedShiftedEqualRevenue(H=p["H"], b=p["b"]),
}


def dist_from_json(obj: dict) -> Distribution:
    """Inverse of Distribution.to_json; {"kind": ..., "params": {...}}."""
    try:
        kind = obj["kind"]
        params = obj["params"]
    except (KeyError, TypeError) as exc:
        raise ParameterError(f"malformed distribution object: {obj!r}") from exc
    if kind not in _KINDS:
        raise ParameterError(f"unknown distribution kind {kind!r}")
    return _KINDS[kind](params)
