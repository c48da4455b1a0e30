"""Inverse design: from target output wavepackets to the driving field.

For prescribed outputs with no incoming field, the chain is algebraic:

    beta_b   = (alpha_out' + lam alpha_out) / (lam sqrt(gamma))
    beta_a~  = (-beta_b' - sum_j mem_j[beta_b]) / g
    rho_c    = 1 - |beta_a~|^2
               + int { 2 g Re[beta_a~ beta_b*] - 2 gamma' |beta_a~|^2 }
    Omega    = chi * (beta_a~' + i d2 beta_a~ - g beta_b + gamma' beta_a~)

with g the collective coupling, mem_j the exponential memory
convolutions, and chi the exponential of a running integral whose real
part telescopes to -log(rho_c)/2.  That identity is applied exactly
here (|chi| = rho_c^(-1/2)); only the genuinely new phase content is
accumulated by trapezoid.  This keeps the general, real-target and
resonant routes consistent with each other to roundoff rather than to
quadrature error.

rho_c is the population still waiting in the source state; once it is
exhausted no drive can continue the emission.  The drive is therefore
reported up to a floor on rho_c and zero-filled (and flagged truncated)
beyond it, together with the photon fraction emitted up to that point.

For real targets the drive splits into modulus and argument in closed
form; on double resonance (both detunings zero) the drive is real.  The
Markovian variant replaces the memory terms by gamma_j/2 damping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .baths import EnvironmentSpec
from .core import (
    ComplexSignal,
    SystemParams,
    TimeGrid,
    convolve_exponential,
    cumulative_trapezoid,
    differentiate,
)
from .wavepackets import WavepacketSpec, check_admissible, evaluate, evaluate_at


class DesignError(ValueError):
    """The requested targets cannot be realized as written."""


@dataclass(frozen=True)
class DesignResult:
    """Everything one design run produces, sampled on one grid."""

    grid: TimeGrid
    regime: str  # "nonmarkovian" | "markovian"
    beta_b: ComplexSignal
    beta_a_tilde: ComplexSignal
    beta_a_tilde_dot: ComplexSignal
    rho_c: np.ndarray
    chi: ComplexSignal
    drive: ComplexSignal
    alpha_phase: np.ndarray
    p_part: np.ndarray
    q_part: np.ndarray
    targets: tuple[ComplexSignal, ...]
    truncated: bool
    truncation_index: int | None
    truncation_time: float | None
    emitted_fraction: float

    def peak_drive(self) -> float:
        return float(np.max(np.abs(self.drive.samples)))

    def active_slice(self) -> slice:
        return slice(0, self.truncation_index if self.truncated else self.grid.n_samples)


def _target_signal(target, grid: TimeGrid) -> ComplexSignal:
    if isinstance(target, ComplexSignal):
        if (target.grid.dt, target.grid.n_samples) != (grid.dt, grid.n_samples):
            raise DesignError("target signal grid does not match the design grid")
        return target
    return evaluate(target, 0, grid)


def _target_derivative_stack(target, grid: TimeGrid, up_to: int) -> list[np.ndarray]:
    """alpha and derivatives up to the requested order, analytic if possible."""
    if isinstance(target, WavepacketSpec) and target.kind != "tabulated":
        return [evaluate_at(target, k, grid.times) for k in range(up_to + 1)]
    sig = _target_signal(target, grid)
    stack = [sig.samples]
    cur = sig
    for _ in range(up_to):
        cur = differentiate(cur)
        stack.append(cur.samples)
    return stack


def _require_admissible(target, env: EnvironmentSpec, grid: TimeGrid) -> None:
    if isinstance(target, WavepacketSpec):
        spec = target
        tol = 1e-9 if target.kind != "tabulated" else 1e-6
    else:
        spec = WavepacketSpec.tabulated(_target_signal(target, grid))
        tol = 1e-6
    report = check_admissible(spec, env, tol=tol)
    if not report.passed:
        raise DesignError(
            "target is not admissible: boundary values "
            f"(|alpha|, |alpha'|, |alpha''|)(0) = ({abs(report.alpha0):.3g}, "
            f"{abs(report.dalpha0):.3g}, {abs(report.ddalpha0):.3g}) exceed {tol:g}"
        )


def reconstruct_beta_b(target, env: EnvironmentSpec, grid: TimeGrid) -> ComplexSignal:
    """Cavity amplitude imposed by one target via the output relation."""
    _require_admissible(target, env, grid)
    a0, a1 = _target_derivative_stack(target, grid, 1)
    return ComplexSignal(grid, (a1 + env.lam * a0) / (env.lam * math.sqrt(env.gamma)))


def _memory_sum(beta_b: ComplexSignal, envs: Sequence[EnvironmentSpec]):
    """(sum_j z_j, sum_j dz_j/dt) for the exponential memory integrals z_j."""
    z_sum = np.zeros(beta_b.grid.n_samples, dtype=np.complex128)
    zdot_sum = np.zeros_like(z_sum)
    for env in envs:
        z = convolve_exponential(beta_b, env.lam, scale=0.5 * env.lam * env.gamma).samples
        z_sum += z
        zdot_sum += -env.lam * z + 0.5 * env.lam * env.gamma * beta_b.samples
    return z_sum, zdot_sum


def reconstruct_beta_a(
    beta_b: ComplexSignal,
    envs: Sequence[EnvironmentSpec],
    params: SystemParams,
    grid: TimeGrid,
) -> ComplexSignal:
    """Rotating-frame excited-state amplitude forced by the cavity history."""
    z_sum, _ = _memory_sum(beta_b, envs)
    bdot = differentiate(beta_b).samples
    return ComplexSignal(grid, (-bdot - z_sum) / params.g_collective)


def population_rho_c(
    beta_b: ComplexSignal,
    beta_a_tilde: ComplexSignal,
    params: SystemParams,
    grid: TimeGrid,
) -> np.ndarray:
    """Source-state population along the design; independent of detunings."""
    g = params.g_collective
    ba = beta_a_tilde.samples
    integrand = (
        2.0 * g * (ba * np.conj(beta_b.samples)).real
        - 2.0 * params.gamma_prime * np.abs(ba) ** 2
    )
    return 1.0 - np.abs(ba) ** 2 + cumulative_trapezoid(integrand, grid.dt)


@dataclass
class _Pipeline:
    """Shared intermediate quantities of all design routes."""

    grid: TimeGrid
    alphas: tuple[ComplexSignal, ...]
    beta_b: np.ndarray
    beta_b_dot: np.ndarray
    beta_a: np.ndarray
    beta_a_dot: np.ndarray
    rho_c: np.ndarray
    trunc: int | None

    @property
    def active(self) -> slice:
        return slice(0, self.trunc if self.trunc is not None else self.grid.n_samples)


def _prepare(
    targets: Sequence,
    envs: Sequence[EnvironmentSpec],
    params: SystemParams,
    grid: TimeGrid,
    rho_floor: float,
    chain_tol: float,
    markovian: bool,
) -> _Pipeline:
    targets = list(targets)
    if not targets:
        raise DesignError("need at least one target")
    if len(targets) != len(envs):
        raise DesignError(f"{len(targets)} targets for {len(envs)} channels")

    for target, env in zip(targets, envs):
        if markovian:
            # the memoryless relation only constrains alpha and alpha' at 0
            stack = _target_derivative_stack(target, grid, 1)
            if max(abs(stack[0][0]), abs(stack[1][0])) > 1e-6:
                raise DesignError("target must vanish with its slope at t = 0")
        else:
            _require_admissible(target, env, grid)
    alphas = tuple(_target_signal(t, grid) for t in targets)

    g = params.g_collective
    a0, a1, a2, a3 = _target_derivative_stack(targets[0], grid, 3)
    others = []
    if markovian:
        root = math.sqrt(envs[0].gamma)
        bb, bb_dot, bb_ddot = a0 / root, a1 / root, a2 / root
        for j in range(1, len(envs)):
            others.append(alphas[j].samples / math.sqrt(envs[j].gamma))
    else:
        denom = envs[0].lam * math.sqrt(envs[0].gamma)
        bb = (a1 + envs[0].lam * a0) / denom
        bb_dot = (a2 + envs[0].lam * a1) / denom
        bb_ddot = (a3 + envs[0].lam * a2) / denom
        for j in range(1, len(envs)):
            aj = alphas[j]
            dj = differentiate(aj).samples
            others.append(
                (dj + envs[j].lam * aj.samples) / (envs[j].lam * math.sqrt(envs[j].gamma))
            )

    if others:
        mismatch = max(float(np.max(np.abs(o - bb))) for o in others)
        if mismatch > chain_tol:
            raise DesignError(
                "targets do not share one cavity history: max beta_b mismatch "
                f"{mismatch:.3g} exceeds {chain_tol:g}"
            )

    if markovian:
        half_gamma = 0.5 * sum(e.gamma for e in envs)
        ba = (-bb_dot - half_gamma * bb) / g
        ba_dot = (-bb_ddot - half_gamma * bb_dot) / g
    else:
        z_sum, zdot_sum = _memory_sum(ComplexSignal(grid, bb), envs)
        ba = (-bb_dot - z_sum) / g
        ba_dot = (-bb_ddot - zdot_sum) / g

    integrand = 2.0 * g * (ba * np.conj(bb)).real - 2.0 * params.gamma_prime * np.abs(ba) ** 2
    rho = 1.0 - np.abs(ba) ** 2 + cumulative_trapezoid(integrand, grid.dt)

    if abs(rho[0] - 1.0) > 1e-9:
        raise DesignError(f"rho_c(0) = {rho[0]!r}, expected 1 (bad initial state)")
    below = np.nonzero(rho < rho_floor)[0]
    trunc = int(below[0]) if below.size else None
    check_to = trunc if trunc is not None else rho.size
    neg = np.nonzero(rho[:check_to] < -1e-6)[0]
    if neg.size:
        raise DesignError(
            f"rho_c drops below -1e-6 at t = {neg[0] * grid.dt:.6g} us (inconsistent target)"
        )

    return _Pipeline(grid, alphas, bb, bb_dot, ba, ba_dot, rho, trunc)


def _emitted_fraction(pipe: _Pipeline) -> float:
    stop = pipe.trunc if pipe.trunc is not None else pipe.grid.n_samples
    dt = pipe.grid.dt
    return float(sum(np.trapezoid(a.abs2()[:stop], dx=dt) for a in pipe.alphas))


def _padded(values: np.ndarray, n: int, sl: slice, dtype=None) -> np.ndarray:
    out = np.zeros(n, dtype=values.dtype if dtype is None else dtype)
    out[sl] = values
    return out


def _result(pipe: _Pipeline, regime, chi, drive, alpha_phase, p_part, q_part) -> DesignResult:
    grid = pipe.grid
    trunc = pipe.trunc
    return DesignResult(
        grid=grid,
        regime=regime,
        beta_b=ComplexSignal(grid, pipe.beta_b),
        beta_a_tilde=ComplexSignal(grid, pipe.beta_a),
        beta_a_tilde_dot=ComplexSignal(grid, pipe.beta_a_dot),
        rho_c=pipe.rho_c,
        chi=ComplexSignal(grid, chi),
        drive=ComplexSignal(grid, drive),
        alpha_phase=alpha_phase,
        p_part=p_part,
        q_part=q_part,
        targets=pipe.alphas,
        truncated=trunc is not None,
        truncation_index=trunc,
        truncation_time=None if trunc is None else trunc * grid.dt,
        emitted_fraction=_emitted_fraction(pipe),
    )


def design_drive_general(
    targets: Sequence,
    envs: Sequence[EnvironmentSpec],
    params: SystemParams,
    grid: TimeGrid,
    rho_floor: float = 1e-8,
    chain_tol: float = 1e-5,
) -> DesignResult:
    """Drive for arbitrary (complex) targets at arbitrary detunings."""
    pipe = _prepare(targets, envs, params, grid, rho_floor, chain_tol, markovian=False)
    g = params.g_collective
    sl = pipe.active
    ba, ba_dot = pipe.beta_a[sl], pipe.beta_a_dot[sl]
    bb, rho = pipe.beta_b[sl], pipe.rho_c[sl]
    d2, dtil, gp = params.delta2, params.delta_tilde, params.gamma_prime

    # imaginary part of the exponent integrand, minus the exact i*dtil piece
    im_rest = (
        (ba * np.conj(ba_dot)).imag - d2 * np.abs(ba) ** 2 - g * (ba * np.conj(bb)).imag
    ) / rho
    phase = dtil * pipe.grid.times[sl] + cumulative_trapezoid(im_rest, grid.dt)
    # real part telescopes to -log(rho)/2; applied exactly
    chi_act = np.exp(1j * phase) / np.sqrt(rho)
    drive_act = chi_act * (ba_dot + 1j * d2 * ba - g * bb + gp * ba)

    n = grid.n_samples
    chi = _padded(chi_act, n, sl)
    drive = _padded(drive_act, n, sl)
    alpha_phase = _padded(-phase, n, sl)
    return _result(pipe, "nonmarkovian", chi, drive, alpha_phase, drive.real.copy(), drive.imag.copy())


def chi_exponent_trapezoid(result: DesignResult, params: SystemParams) -> np.ndarray:
    """|chi| rebuilt by plain trapezoid accumulation of the exponent.

    Cross-check for the telescoping identity |chi| = rho_c^(-1/2): this
    route carries honest O(dt^2) quadrature error.
    """
    sl = result.active_slice()
    g = params.g_collective
    ba = result.beta_a_tilde.samples[sl]
    ba_dot = result.beta_a_tilde_dot.samples[sl]
    bb = result.beta_b.samples[sl]
    rho = result.rho_c[sl]
    re_part = (
        (ba * np.conj(ba_dot)).real
        - g * (ba * np.conj(bb)).real
        + params.gamma_prime * np.abs(ba) ** 2
    ) / rho
    out = np.zeros(result.grid.n_samples)
    out[sl] = np.exp(cumulative_trapezoid(re_part, result.grid.dt))
    return out


def _real_targets_or_raise(pipe: _Pipeline) -> None:
    worst = max(float(np.max(np.abs(a.samples.imag))) for a in pipe.alphas)
    if worst > 1e-12:
        raise DesignError("this route needs real targets (set phase_ce = 0)")


def _modulus_argument_route(pipe: _Pipeline, params: SystemParams, regime: str) -> DesignResult:
    """Closed-form modulus/argument drive for real targets."""
    _real_targets_or_raise(pipe)
    g = params.g_collective
    sl = pipe.active
    ba = pipe.beta_a[sl].real
    ba_dot = pipe.beta_a_dot[sl].real
    bb = pipe.beta_b[sl].real
    rho = pipe.rho_c[sl]
    root = np.sqrt(rho)
    d2, dtil, gp = params.delta2, params.delta_tilde, params.gamma_prime

    phase = -dtil * pipe.grid.times[sl] + d2 * cumulative_trapezoid(ba * ba / rho, pipe.grid.dt)
    cos_a, sin_a = np.cos(phase), np.sin(phase)
    radial = ba_dot - g * bb + gp * ba
    p = (radial * cos_a + d2 * ba * sin_a) / root
    q = (d2 * ba * cos_a - radial * sin_a) / root

    n = pipe.grid.n_samples
    drive = _padded(p + 1j * q, n, sl)
    chi = _padded(np.exp(-1j * phase) / root, n, sl)
    return _result(pipe, regime, chi, drive, _padded(phase, n, sl), _padded(p, n, sl), _padded(q, n, sl))


def design_drive_real_target(
    targets: Sequence,
    envs: Sequence[EnvironmentSpec],
    params: SystemParams,
    grid: TimeGrid,
    rho_floor: float = 1e-8,
    chain_tol: float = 1e-5,
) -> DesignResult:
    """Modulus/argument closed form; |Omega| depends on delta2 only."""
    pipe = _prepare(targets, envs, params, grid, rho_floor, chain_tol, markovian=False)
    return _modulus_argument_route(pipe, params, "nonmarkovian")


def design_drive_resonant(
    targets: Sequence,
    envs: Sequence[EnvironmentSpec],
    params: SystemParams,
    grid: TimeGrid,
    rho_floor: float = 1e-8,
    chain_tol: float = 1e-5,
) -> DesignResult:
    """Doubly-resonant special case: a real drive."""
    if params.delta1 != 0.0 or params.delta2 != 0.0:
        raise DesignError("resonant design requires delta1 = delta2 = 0")
    return design_drive_real_target(targets, envs, params, grid, rho_floor, chain_tol)


def design_drive_markovian(
    targets: Sequence,
    gammas: Sequence[float],
    params: SystemParams,
    grid: TimeGrid,
    rho_floor: float = 1e-8,
    chain_tol: float = 1e-5,
) -> DesignResult:
    """Memoryless design: beta_b = alpha_out/sqrt(gamma), gamma_j/2 damping."""
    envs = [EnvironmentSpec(gamma=float(gv), lam=1.0) for gv in gammas]  # lam unused
    pipe = _prepare(targets, envs, params, grid, rho_floor, chain_tol, markovian=True)
    return _modulus_argument_route(pipe, params, "markovian")


def drive_modulus_formula(result: DesignResult, params: SystemParams) -> np.ndarray:
    """|Omega| from the closed form, for cross-checks against |drive|."""
    sl = result.active_slice()
    ba = result.beta_a_tilde.samples[sl].real
    ba_dot = result.beta_a_tilde_dot.samples[sl].real
    bb = result.beta_b.samples[sl].real
    radial = ba_dot - params.g_collective * bb + params.gamma_prime * ba
    out = np.zeros(result.grid.n_samples)
    out[sl] = np.sqrt((radial**2 + params.delta2**2 * ba * ba) / result.rho_c[sl])
    return out
