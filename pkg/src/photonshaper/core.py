"""Shared value types and elementary numerics.

Everything downstream works on uniformly sampled complex signals over a
time grid starting at t = 0.  Units: rates and frequencies in MHz
(inverse microseconds), time in microseconds, so omega * t is
dimensionless.

The one nontrivial primitive here is :func:`convolve_exponential`, the
exact exponential-integrator recurrence for kernels exp(-lam*(t-tau)).
It is exact for piecewise-linear input and unconditionally stable, which
is what makes the memory integrals of the Lorentzian baths cheap (O(n)
instead of O(n^2) history quadrature).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
from scipy.signal import lfilter


class GridMismatchError(ValueError):
    """Two signals that must share a TimeGrid do not."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid on [0, (n_samples-1)*dt], all times in microseconds."""

    dt: float
    n_samples: int
    t_start: float = 0.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_samples < 2:
            raise ValueError(f"n_samples must be >= 2, got {self.n_samples}")
        if self.t_start != 0.0:
            raise ValueError("grids start at t = 0")

    @classmethod
    def from_span(cls, t_max: float, dt: float) -> "TimeGrid":
        """Grid covering [0, t_max] (t_max rounded up to a whole step)."""
        n = int(math.ceil(t_max / dt - 1e-9)) + 1
        return cls(dt=dt, n_samples=max(n, 2))

    @cached_property
    def times(self) -> np.ndarray:
        t = np.arange(self.n_samples) * self.dt
        t.setflags(write=False)
        return t

    @property
    def t_end(self) -> float:
        return (self.n_samples - 1) * self.dt

    def extended(self, t_max: float) -> "TimeGrid":
        """Same step, horizon at least t_max."""
        if t_max <= self.t_end:
            return self
        return TimeGrid.from_span(t_max, self.dt)


@dataclass(frozen=True)
class ComplexSignal:
    """Complex samples on a TimeGrid.  Immutable after construction."""

    grid: TimeGrid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.complex128)
        if arr.shape != (self.grid.n_samples,):
            raise ValueError(
                f"samples shape {arr.shape} does not match grid "
                f"({self.grid.n_samples} samples)"
            )
        if not np.all(np.isfinite(arr.real) & np.isfinite(arr.imag)):
            raise ValueError("samples must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @classmethod
    def from_function(cls, grid: TimeGrid, func) -> "ComplexSignal":
        return cls(grid, np.asarray(func(grid.times), dtype=np.complex128))

    @classmethod
    def zeros(cls, grid: TimeGrid) -> "ComplexSignal":
        return cls(grid, np.zeros(grid.n_samples, dtype=np.complex128))

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def abs2(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    def require_same_grid(self, other: "ComplexSignal") -> None:
        if (self.grid.dt, self.grid.n_samples) != (other.grid.dt, other.grid.n_samples):
            raise GridMismatchError(
                f"grid mismatch: ({self.grid.dt}, {self.grid.n_samples}) vs "
                f"({other.grid.dt}, {other.grid.n_samples})"
            )


@dataclass(frozen=True)
class SystemParams:
    """Driven atom-cavity parameters (rates in MHz).

    g_c is the single-atom coupling; the dynamics only ever see the
    collective coupling g_c*sqrt(n_atoms).  delta1/delta2 are the drive
    and cavity detunings from the respective atomic transitions.
    """

    g_c: float
    n_atoms: int = 1
    gamma_prime: float = 0.0
    delta1: float = 0.0
    delta2: float = 0.0

    def __post_init__(self):
        if self.g_c <= 0:
            raise ValueError(f"g_c must be positive, got {self.g_c}")
        if self.gamma_prime < 0:
            raise ValueError(f"gamma_prime must be >= 0, got {self.gamma_prime}")
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")

    @property
    def delta_tilde(self) -> float:
        return self.delta2 - self.delta1

    @property
    def g_collective(self) -> float:
        return self.g_c * math.sqrt(self.n_atoms)


def quadrature(signal: ComplexSignal) -> complex:
    """Trapezoidal integral of the signal over its full grid, O(dt^2)."""
    return complex(np.trapezoid(signal.samples, dx=signal.grid.dt))


def differentiate(signal: ComplexSignal) -> ComplexSignal:
    """d/dt by central differences, second-order one-sided at the ends."""
    if signal.grid.n_samples < 3:
        raise ValueError("differentiate needs at least 3 samples")
    deriv = np.gradient(signal.samples, signal.grid.dt, edge_order=2)
    return ComplexSignal(signal.grid, deriv)


def cumulative_trapezoid(samples: np.ndarray, dt: float) -> np.ndarray:
    """Running trapezoidal integral, starting at 0."""
    samples = np.asarray(samples)
    out = np.empty(samples.shape, dtype=samples.dtype)
    out[0] = 0.0
    np.cumsum((samples[1:] + samples[:-1]) * (0.5 * dt), out=out[1:])
    return out


def _exp_step_weights(lam: float, dt: float) -> tuple[float, float, float]:
    """Decay factor and quadrature weights for one exponential-integrator step.

    Returns (E, c_prev, c_next) such that
        z[k+1] = E*z[k] + c_prev*s[k] + c_next*s[k+1]
    reproduces int_0^dt exp(-lam*(dt-u)) s(t_k+u) du exactly for s linear
    on the step.
    """
    x = lam * dt
    if x < 1e-3:
        # series forms, stable for tiny lam*dt
        i0 = dt * (1 - x / 2 + x * x / 6 - x**3 / 24 + x**4 / 120)
        j = dt * (0.5 - x / 3 + x * x / 8 - x**3 / 30 + x**4 / 144)
    else:
        e = math.exp(-x)
        i0 = -math.expm1(-x) / lam
        j = (1.0 - e * (1.0 + x)) / (lam * lam * dt)
    return math.exp(-x), j, i0 - j


def convolve_exponential(signal: ComplexSignal, lam: float, scale: complex = 1.0) -> ComplexSignal:
    """z(t) = scale * int_0^t exp(-lam*(t-tau)) s(tau) dtau.

    Computed by the exact recurrence for exponential kernels with the
    input linearly interpolated inside each step; unconditionally stable
    for any lam*dt.
    """
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    e, c_prev, c_next = _exp_step_weights(lam, signal.grid.dt)
    s = signal.samples
    b = np.array([c_next, c_prev], dtype=np.complex128) * scale
    a = np.array([1.0, -e], dtype=np.complex128)
    # initial filter state chosen so z[0] = 0
    z, _ = lfilter(b, a, s, zi=np.array([-b[0] * s[0]]))
    return ComplexSignal(signal.grid, z)


def convolve_exponential_future(
    signal: ComplexSignal, lam: float, scale: complex = 1.0
) -> ComplexSignal:
    """z(t) = scale * int_t^T exp(-lam*(tau-t)) s(tau) dtau.

    Anti-causal counterpart of :func:`convolve_exponential`; the signal
    is assumed negligible beyond the grid end.
    """
    rev = ComplexSignal(signal.grid, signal.samples[::-1])
    out = convolve_exponential(rev, lam, scale)
    return ComplexSignal(signal.grid, out.samples[::-1])


# 4-point cubic interpolation weights at the midpoint of a step
_MID_INNER = np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0
_MID_EDGE = np.array([5.0, 15.0, -5.0, 1.0]) / 16.0


def half_step_values(samples: np.ndarray) -> np.ndarray:
    """Values at the n-1 step midpoints via cubic interpolation (O(dt^4))."""
    s = np.asarray(samples)
    n = s.shape[0]
    if n < 2:
        raise ValueError("need at least 2 samples")
    if n < 4:
        return 0.5 * (s[:-1] + s[1:])
    mid = np.empty(n - 1, dtype=s.dtype)
    mid[1:-1] = (
        _MID_INNER[0] * s[:-3]
        + _MID_INNER[1] * s[1:-2]
        + _MID_INNER[2] * s[2:-1]
        + _MID_INNER[3] * s[3:]
    )
    mid[0] = _MID_EDGE @ s[:4]
    mid[-1] = _MID_EDGE @ s[-1:-5:-1]
    return mid


def upsample_to_half_grid(samples: np.ndarray) -> np.ndarray:
    """Interleave node values with midpoint values: length 2n-1 at dt/2."""
    s = np.asarray(samples)
    out = np.empty(2 * s.shape[0] - 1, dtype=s.dtype)
    out[::2] = s
    out[1::2] = half_step_values(s)
    return out
