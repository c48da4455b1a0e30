"""Lorentzian bath channels: spectral density, response and memory kernels.

Each output channel j couples the cavity to a continuum with coupling
profile v_j(w) = lam_j * sqrt(gamma_j / 2 pi) / (lam_j - i w), written in
the frame where the cavity frequency sits at w = 0.  That profile gives

    J_j(w)  = (gamma_j / 2 pi) * lam_j^2 / (lam_j^2 + w^2)
    k_j(t)  = lam_j * sqrt(gamma_j) * u(t) * exp(-lam_j t)
    F_j(t)  = (1/2) * lam_j * gamma_j * exp(-lam_j |t|)

with u the unit step (u(0) := 1, the kernel includes the instant of
emission).  In the wide-band limit lam -> inf both kernels collapse to
delta functions with weights sqrt(gamma) and gamma.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnvironmentSpec:
    """One Lorentzian channel: decay rate gamma and spectral width lam (MHz)."""

    gamma: float
    lam: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.lam <= 0:
            raise ValueError(f"lam must be positive, got {self.lam}")


class BathKind(enum.Enum):
    NON_MARKOVIAN = "non-markovian"
    MARKOVIAN = "markovian"


@dataclass(frozen=True)
class BathModel:
    """A channel together with the treatment applied to it.

    The Markovian kind keeps gamma but ignores lam in the dynamics: the
    kernels are replaced by their delta-function limits.
    """

    kind: BathKind
    env: EnvironmentSpec


def coupling_profile(env: EnvironmentSpec, omega) -> complex:
    """v(w), the complex cavity-continuum coupling at detuning w."""
    return env.lam * math.sqrt(env.gamma / (2.0 * math.pi)) / (env.lam - 1j * omega)


def spectral_density(env: EnvironmentSpec, omega) -> float:
    """Lorentzian J(w) = |v(w)|^2, peaked at w = 0."""
    return (env.gamma / (2.0 * math.pi)) * env.lam**2 / (env.lam**2 + omega**2)


def response_k(env: EnvironmentSpec, t):
    """Response kernel k(t); zero for t < 0, k(0) = lam*sqrt(gamma)."""
    t = np.asarray(t, dtype=float)
    out = np.where(
        t >= 0,
        env.lam * math.sqrt(env.gamma) * np.exp(-env.lam * np.clip(t, 0.0, None)),
        0.0,
    )
    return out if out.ndim else float(out)


def memory_F(env: EnvironmentSpec, t):
    """Memory kernel F(t), even in t, F(0) = lam*gamma/2."""
    t = np.asarray(t, dtype=float)
    out = 0.5 * env.lam * env.gamma * np.exp(-env.lam * np.abs(t))
    return out if out.ndim else float(out)


def markovian_limits(env: EnvironmentSpec) -> tuple[float, float]:
    """Delta-kernel weights (sqrt(gamma), gamma) of the wide-band limit."""
    return math.sqrt(env.gamma), env.gamma
