"""Brute-force time stepping, used as the independent check on every
closed form in the package.

Two single-step schemes:

  midpoint: U_step = exp(-i h H(t + h/2)), second order.
  cf4: the fourth-order commutator-free scheme with two exponentials per
       step built from the Gauss-Legendre nodes t + (1/2 -+ sqrt(3)/6) h,

           U_step = exp(-i h (a1 H1 + a2 H2)) exp(-i h (a2 H1 + a1 H2)),
           a1 = (3 - 2 sqrt(3))/12,  a2 = (3 + 2 sqrt(3))/12,

       the right factor acting first (heavy weight on the early node).

Stepping happens at the padded dimension; trims are applied only at the
end.  Multi-period evolutions compose the one-period propagator instead of
re-stepping every period, which is exact for T-periodic Hamiltonians up to
floating-point reassociation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core_fock import (
    OscillatorParams,
    TruncatedOperator,
    Truncation,
    matrix_exp,
    number_basis_energies,
    xp_operators,
)
from .drive_model import DriveSpec, eval_drive

__all__ = [
    "hamiltonian_at",
    "propagate_generic",
    "PeriodStepper",
    "integrate",
    "EvolveResult",
    "evolve_state",
]

_SQRT3 = math.sqrt(3.0)
_CF4_A1 = (3.0 - 2.0 * _SQRT3) / 12.0
_CF4_A2 = (3.0 + 2.0 * _SQRT3) / 12.0
_CF4_C1 = 0.5 - _SQRT3 / 6.0
_CF4_C2 = 0.5 + _SQRT3 / 6.0

SCHEMES = ("midpoint", "cf4")


def hamiltonian_at(spec: DriveSpec, params: OscillatorParams, t: float, dim: int) -> np.ndarray:
    """H(t) = H_omega + f(t) x at the given dimension."""
    x, _ = xp_operators(params.omega, dim)
    h = np.diag(number_basis_energies(params.omega, dim)).astype(complex)
    return h + float(eval_drive(spec, t)) * x


def _step(h_builder, t0: float, h: float, scheme: str) -> np.ndarray:
    if scheme == "midpoint":
        return matrix_exp(-1j * h * h_builder(t0 + 0.5 * h))
    if scheme == "cf4":
        h1 = h_builder(t0 + _CF4_C1 * h)
        h2 = h_builder(t0 + _CF4_C2 * h)
        first = matrix_exp(-1j * h * (_CF4_A2 * h1 + _CF4_A1 * h2))
        second = matrix_exp(-1j * h * (_CF4_A1 * h1 + _CF4_A2 * h2))
        return second @ first
    raise ValueError(f"unknown scheme {scheme!r}, expected one of {SCHEMES}")


def propagate_generic(h_builder, dim: int, s: float, t: float, n_steps: int, scheme: str = "cf4") -> np.ndarray:
    """Propagator of a generic Hamiltonian h_builder(time) -> (dim, dim).

    Steps uniformly from s to t; works in either time direction.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    u = np.eye(dim, dtype=complex)
    if t == s:
        return u
    h = (t - s) / n_steps
    for j in range(n_steps):
        u = _step(h_builder, s + j * h, h, scheme) @ u
    return u


@dataclass
class PeriodStepper:
    """Stepping engine for one (drive, oscillator, truncation) triple.

    Exploits U(t + T, s + T) = U(t, s): propagators from time zero are the
    within-period partial product times powers of the monodromy.
    """

    spec: DriveSpec
    params: OscillatorParams
    trunc: Truncation
    steps_per_period: int = 128
    scheme: str = "cf4"
    _monodromy: np.ndarray | None = field(default=None, repr=False)
    _segment_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.steps_per_period < 16:
            raise ValueError(f"steps_per_period must be >= 16, got {self.steps_per_period}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def dim(self) -> int:
        return self.trunc.dim

    def _h(self, t: float) -> np.ndarray:
        return hamiltonian_at(self.spec, self.params, t, self.dim)

    def _steps_for(self, span: float) -> int:
        frac = abs(span) / self.spec.period
        return max(1, int(math.ceil(self.steps_per_period * frac - 1e-12)))

    def segment(self, start: float, span: float) -> np.ndarray:
        """U(start + span, start), cached by (start mod T, span)."""
        if span == 0.0:
            return np.eye(self.dim, dtype=complex)
        t_mod = math.fmod(start, self.spec.period)
        if t_mod < 0.0:
            t_mod += self.spec.period
        key = (round(t_mod / self.spec.period, 12), round(span / self.spec.period, 12))
        hit = self._segment_cache.get(key)
        if hit is not None:
            return hit
        u = propagate_generic(self._h, self.dim, t_mod, t_mod + span, self._steps_for(span), self.scheme)
        self._segment_cache[key] = u
        return u

    def monodromy(self) -> np.ndarray:
        if self._monodromy is None:
            self._monodromy = self.segment(0.0, self.spec.period)
        return self._monodromy

    def u_from_zero(self, t: float) -> np.ndarray:
        """U(t, 0) at the padded dimension."""
        big_t = self.spec.period
        n = math.floor(t / big_t)
        tau = t - n * big_t
        if tau >= big_t:  # guard against floating rollover
            tau -= big_t
            n += 1
        u = self.segment(0.0, tau) if tau > 0.0 else np.eye(self.dim, dtype=complex)
        if n == 0:
            return u
        m = self.monodromy()
        if n < 0:
            m = m.conj().T
            n = -n
        acc = np.eye(self.dim, dtype=complex)
        base = m
        # binary powering keeps 200-period runs cheap and deterministic
        while n:
            if n & 1:
                acc = base @ acc
            base = base @ base
            n >>= 1
        return u @ acc

    def u(self, t: float, s: float) -> np.ndarray:
        """U(t, s) = U(t, 0) U(s, 0)^dagger at the padded dimension."""
        if s == 0.0:
            return self.u_from_zero(t)
        return self.u_from_zero(t) @ self.u_from_zero(s).conj().T


def integrate(
    spec: DriveSpec,
    params: OscillatorParams,
    trunc: Truncation,
    t: float,
    s: float,
    steps_per_period: int = 128,
    scheme: str = "cf4",
) -> TruncatedOperator:
    """Brute-force U(t, s), trimmed to the kept block."""
    stepper = PeriodStepper(spec, params, trunc, steps_per_period, scheme)
    full = stepper.u(float(t), float(s))
    return TruncatedOperator(full[: trunc.n_keep, : trunc.n_keep].copy())


@dataclass
class EvolveResult:
    """States on a time grid, kept at the padded dimension.

    pad_population[i] is the probability weight sitting above the kept
    block at times[i]; edge_warning flips when the initial support starts
    near the truncation edge or the pad weight ever exceeds 1e-6.
    """

    times: np.ndarray
    states: np.ndarray
    norms: np.ndarray
    pad_population: np.ndarray
    edge_warning: bool


def evolve_state(
    spec: DriveSpec,
    params: OscillatorParams,
    trunc: Truncation,
    psi0: np.ndarray,
    t_grid,
    steps_per_period: int = 128,
    scheme: str = "cf4",
) -> EvolveResult:
    """Evolve a normalized state over an increasing time grid from t = 0."""
    psi0 = np.asarray(psi0, dtype=complex).ravel()
    if psi0.size > trunc.dim:
        raise ValueError(f"psi0 has {psi0.size} components, working dimension is {trunc.dim}")
    nrm = float(np.linalg.norm(psi0))
    if abs(nrm - 1.0) > 1e-12:
        raise ValueError(f"psi0 must be normalized, got norm {nrm}")
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) < 0):
        raise ValueError("t_grid must be a non-empty increasing 1-d array")

    psi = np.zeros(trunc.dim, dtype=complex)
    psi[: psi0.size] = psi0
    support = np.nonzero(np.abs(psi) > 1e-10)[0]
    edge_warning = bool(support.size and support[-1] > trunc.n_keep // 2)

    stepper = PeriodStepper(spec, params, trunc, steps_per_period, scheme)
    states = np.empty((times.size, trunc.dim), dtype=complex)
    t_cur = 0.0
    for i, ti in enumerate(times):
        span = ti - t_cur
        if span:
            # whole periods advance via the monodromy, remainder via one segment
            n_whole = int(math.floor(span / spec.period + 1e-12))
            for _ in range(n_whole):
                psi = stepper.segment(t_cur, spec.period) @ psi
                t_cur += spec.period
            rem = ti - t_cur
            if abs(rem) > 1e-12 * max(1.0, abs(ti)):
                psi = stepper.segment(t_cur, rem) @ psi
            t_cur = ti
        states[i] = psi

    norms = np.linalg.norm(states, axis=1)
    pad_pop = np.sum(np.abs(states[:, trunc.n_keep :]) ** 2, axis=1)
    if pad_pop.size and pad_pop.max() > 1e-6:
        edge_warning = True
    return EvolveResult(
        times=times, states=states, norms=norms, pad_population=pad_pop, edge_warning=edge_warning
    )
