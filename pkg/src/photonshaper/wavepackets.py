"""Target output photon shapes with analytic derivatives and normalization.

Built-in shapes (C is the normalization constant, z = Gamma + i*c_e):

    sin3:    C * exp(-z t) * sin(B t)^3
    t3sin3:  C * t^3 * exp(-z t) * sin(B t)^3
    sin4:    C * exp(-z t) * sin(B t)^4

All built-ins vanish to at least second order at t = 0, which is what a
physical emission transient requires (the cavity starts empty and so does
its rate of change).  The constant phase slope c_e leaves |alpha|
untouched and only matters for the drive design.

The `weight` field is the target value of int |alpha|^2 dt: weight = 1 is
a full single photon in one channel, fractional weights split one photon
across several channels.  Normalization constants come from closed-form
Laplace integrals of the squared envelopes and are cross-checked against
quadrature in the tests.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from .baths import EnvironmentSpec
from .core import ComplexSignal, TimeGrid, differentiate

ANALYTIC_KINDS = ("sin3", "t3sin3", "sin4")


@dataclass(frozen=True)
class WavepacketSpec:
    """Description of one target output wavepacket."""

    kind: str
    B: float = 0.0
    Gamma: float = 0.0
    weight: float = 1.0
    phase_ce: float = 0.0
    table: ComplexSignal | None = None

    def __post_init__(self):
        if self.kind not in ANALYTIC_KINDS + ("tabulated",):
            raise ValueError(f"unknown wavepacket kind {self.kind!r}")
        if self.kind == "tabulated":
            if self.table is None:
                raise ValueError("tabulated wavepacket needs samples")
        else:
            if self.B <= 0 or self.Gamma <= 0:
                raise ValueError("B and Gamma must be positive")
            if not 0 < self.weight <= 1:
                raise ValueError(f"weight must be in (0, 1], got {self.weight}")

    @classmethod
    def sin3(cls, B, Gamma, weight=1.0, phase_ce=0.0):
        return cls("sin3", B, Gamma, weight, phase_ce)

    @classmethod
    def t3sin3(cls, B, Gamma, weight=1.0, phase_ce=0.0):
        return cls("t3sin3", B, Gamma, weight, phase_ce)

    @classmethod
    def sin4(cls, B, Gamma, weight=1.0, phase_ce=0.0):
        return cls("sin4", B, Gamma, weight, phase_ce)

    @classmethod
    def tabulated(cls, table: ComplexSignal):
        return cls("tabulated", table=table)


# ---------------------------------------------------------------------------
# closed-form normalization integrals
#
# sin^6 x = (10 - 15 cos2x + 6 cos4x - cos6x) / 32
# sin^8 x = (35 - 56 cos2x + 28 cos4x - 8 cos6x + cos8x) / 128
# int_0^inf exp(-a t) cos(b t) dt        = a / (a^2 + b^2)
# int_0^inf t^6 exp(-a t) cos(b t) dt    = Re[ 720 / (a + i b)^7 ]
# ---------------------------------------------------------------------------

_SIN6 = ((10.0, 0), (-15.0, 2), (6.0, 4), (-1.0, 6))
_SIN8 = ((35.0, 0), (-56.0, 2), (28.0, 4), (-8.0, 6), (1.0, 8))


def _envelope_square_integral(kind: str, B: float, Gamma: float) -> float:
    """int_0^inf of the squared unit-amplitude envelope."""
    a = 2.0 * Gamma
    if kind == "sin3":
        return sum(c * a / (a * a + (n * B) ** 2) for c, n in _SIN6) / 32.0
    if kind == "sin4":
        return sum(c * a / (a * a + (n * B) ** 2) for c, n in _SIN8) / 128.0
    if kind == "t3sin3":
        total = 0.0
        for c, n in _SIN6:
            total += c * (720.0 / (a + 1j * n * B) ** 7).real
        return total / 32.0
    raise ValueError(f"no closed-form integral for kind {kind!r}")


def normalization_constant(spec: WavepacketSpec) -> float:
    """Constant C making int |alpha|^2 dt equal the spec weight."""
    if spec.kind == "tabulated":
        raise ValueError("tabulated shapes carry their own normalization")
    return math.sqrt(spec.weight / _envelope_square_integral(spec.kind, spec.B, spec.Gamma))


@dataclass(frozen=True)
class NormalizationConstants:
    """The closed-form constants in the forms the captions quote them.

    A1/A2: sin3 at unit weight; A3: the t3sin3 constant for an equal pair
    (weight 1/2 per channel); A4: sin4 at weight 1/3; E1 = A1*sqrt(nu1).
    d1..d4 belong to A3, a1/a2 to the width-constraint rational function.
    """

    A1: float
    A2: float
    A3: float
    A4: float
    E1: float
    d1: float
    d2: float
    d3: float
    d4: float
    a1: float
    a2: float


def paper_constants(B: float, Gamma: float, nu1: float, lambda1: float) -> NormalizationConstants:
    B2, G = B * B, Gamma
    poly6 = 36 * B**6 * G + 49 * B**4 * G**3 + 14 * B2 * G**5 + G**7
    a1_const = 2.0 * math.sqrt(2.0 * poly6) / (3.0 * math.sqrt(5.0) * B**3)

    d1 = 6 / (4 * B2 + G * G) ** 4 - 1 / (9 * B2 + G * G) ** 4 - 15 / (B2 + G * G) ** 4
    d2 = 192 * B**6 * (
        5 / (B2 + G * G) ** 7 - 128 / (4 * B2 + G * G) ** 7 + 243 / (9 * B2 + G * G) ** 7
    )
    d3 = 32 / (4 * B2 + G * G) ** 6 - 27 / (9 * B2 + G * G) ** 6 - 5 / (B2 + G * G) ** 6
    d4 = 5 / (B2 + G * G) ** 5 - 8 / (4 * B2 + G * G) ** 5 + 3 / (9 * B2 + G * G) ** 5
    a3_const = 2.0 * math.sqrt(2.0) / (
        45.0 * math.sqrt(1 / (72 * G**7) + G * (d1 + d2 + 240 * B**4 * d3 + 72 * B2 * d4) / 720)
    )

    poly8 = 576 * B**8 * G + 820 * B**6 * G**3 + 273 * B**4 * G**5 + 30 * B2 * G**7 + G**9
    a4_const = 2.0 * math.sqrt(poly8) / (3.0 * math.sqrt(105.0) * B**4)

    a1_aux = 5 * (B2 + G * G) * (9 * B2 + G * G) + (41 * B2 + 29 * G * G) * lambda1**2
    a2_aux = 9 * B2 + G * G + 5 * lambda1**2

    return NormalizationConstants(
        A1=a1_const,
        A2=a1_const,
        A3=a3_const,
        A4=a4_const,
        E1=a1_const * math.sqrt(nu1),
        d1=d1,
        d2=d2,
        d3=d3,
        d4=d4,
        a1=a1_aux,
        a2=a2_aux,
    )


# ---------------------------------------------------------------------------
# evaluation with analytic derivatives
# ---------------------------------------------------------------------------


def _envelope_derivatives(kind: str, B: float, t: np.ndarray) -> tuple[np.ndarray, ...]:
    """(f, f', f'', f''') of the real envelope, before the exp(-z t) factor."""
    s, c = np.sin(B * t), np.cos(B * t)
    if kind in ("sin3", "t3sin3"):
        g0 = s**3
        g1 = 3 * B * s * s * c
        g2 = 6 * B * B * s * c * c - 3 * B * B * s**3
        g3 = 6 * B**3 * c**3 - 21 * B**3 * s * s * c
        if kind == "sin3":
            return g0, g1, g2, g3
        t2, t3 = t * t, t**3
        return (
            t3 * g0,
            3 * t2 * g0 + t3 * g1,
            6 * t * g0 + 6 * t2 * g1 + t3 * g2,
            6 * g0 + 18 * t * g1 + 9 * t2 * g2 + t3 * g3,
        )
    if kind == "sin4":
        f0 = s**4
        f1 = 4 * B * s**3 * c
        f2 = 12 * B * B * s * s * c * c - 4 * B * B * s**4
        f3 = 24 * B**3 * s * c**3 - 40 * B**3 * s**3 * c
        return f0, f1, f2, f3
    raise ValueError(f"no analytic derivatives for kind {kind!r}")


def evaluate_at(spec: WavepacketSpec, order: int, t: np.ndarray) -> np.ndarray:
    """alpha and its time derivatives at arbitrary times (analytic kinds)."""
    if spec.kind == "tabulated":
        raise ValueError("tabulated shapes are evaluated on their own grid")
    if not 0 <= order <= 3:
        raise ValueError(f"order must be in 0..3, got {order}")
    C = normalization_constant(spec)
    z = spec.Gamma + 1j * spec.phase_ce
    f = _envelope_derivatives(spec.kind, spec.B, np.asarray(t, dtype=float))
    damp = C * np.exp(-z * np.asarray(t, dtype=float))
    if order == 0:
        return damp * f[0]
    if order == 1:
        return damp * (f[1] - z * f[0])
    if order == 2:
        return damp * (f[2] - 2 * z * f[1] + z * z * f[0])
    return damp * (f[3] - 3 * z * f[2] + 3 * z * z * f[1] - z**3 * f[0])


def evaluate(spec: WavepacketSpec, order: int, grid: TimeGrid) -> ComplexSignal:
    """Sample alpha (order 0) or one of its derivatives on a grid."""
    if spec.kind == "tabulated":
        table = spec.table
        if order == 0:
            if (table.grid.dt, table.grid.n_samples) != (grid.dt, grid.n_samples):
                raise ValueError("tabulated shape must be supplied on the run grid")
            return table
        if table.grid.n_samples < 3:
            raise ValueError("need at least 3 samples to differentiate a table")
        out = table
        for _ in range(order):
            out = differentiate(out)
        return out
    return ComplexSignal(grid, evaluate_at(spec, order, grid.times))


def grid_for_tail(spec: WavepacketSpec, dt: float = 1e-3, tail_mass: float = 1e-8,
                  t_min: float = 6.0) -> TimeGrid:
    """Grid long enough that the neglected |alpha|^2 tail is below tail_mass."""
    if spec.kind == "tabulated":
        return spec.table.grid
    C2 = normalization_constant(spec) ** 2
    a = 2.0 * spec.Gamma
    if spec.kind in ("sin3", "sin4"):
        t_max = math.log(max(C2 / (a * tail_mass), 2.0)) / a
    else:
        # |alpha|^2 <= C^2 t^6 exp(-a t); incomplete-gamma tail bound
        t_max = t_min
        while C2 * gammaincc(7, a * t_max) * 720.0 / a**7 > tail_mass:
            t_max *= 1.5
    return TimeGrid.from_span(max(t_max, t_min), dt)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Boundary values of the target at t = 0 and the implied cavity start."""

    alpha0: complex
    dalpha0: complex
    ddalpha0: complex
    beta_b0: complex
    beta_b_dot0: complex
    tol: float
    passed: bool


def check_admissible(spec: WavepacketSpec, env: EnvironmentSpec,
                     tol: float = 1e-9) -> AdmissibilityReport:
    """A target is emittable only if alpha, alpha', alpha'' all vanish at 0.

    The report also gives the cavity amplitude and its slope at t = 0
    that the first-order output relation would demand.
    """
    if spec.kind == "tabulated":
        table = spec.table
        vals = [table.samples[0]]
        d = table
        for _ in range(2):
            d = differentiate(d)
            vals.append(d.samples[0])
        a0, a1, a2 = vals
    else:
        t0 = np.zeros(1)
        a0 = complex(evaluate_at(spec, 0, t0)[0])
        a1 = complex(evaluate_at(spec, 1, t0)[0])
        a2 = complex(evaluate_at(spec, 2, t0)[0])
    denom = env.lam * math.sqrt(env.gamma)
    beta_b0 = (a1 + env.lam * a0) / denom
    beta_b_dot0 = (a2 + env.lam * a1) / denom
    passed = max(abs(a0), abs(a1), abs(a2)) <= tol
    return AdmissibilityReport(a0, a1, a2, beta_b0, beta_b_dot0, tol, passed)


def load_tabulated_csv(path, grid: TimeGrid) -> WavepacketSpec:
    """Read a (t, re[, im]) CSV sampled exactly on the run grid."""
    times, values = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                t = float(row[0])
            except ValueError:
                continue  # header
            times.append(t)
            re = float(row[1])
            im = float(row[2]) if len(row) > 2 else 0.0
            values.append(complex(re, im))
    times = np.asarray(times)
    if times.shape != grid.times.shape or not np.allclose(times, grid.times, atol=1e-9):
        raise ValueError(f"{path}: time column does not match the run grid")
    return WavepacketSpec.tabulated(ComplexSignal(grid, np.asarray(values)))
