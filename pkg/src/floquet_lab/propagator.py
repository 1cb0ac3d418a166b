"""Closed-form propagators for the linearly driven oscillator.

Two equivalent exact forms are provided.  The factored form

    U(t,s) = exp(-i phi1 x) exp(i (phi2/omega) p) exp(-i (t-s) H_omega - i psi)

holds for every (t, s).  For elapsed times split as
t - s = (2 pi/omega) N + Delta with Delta in (0, 2 pi/omega) the same
propagator collapses to a single displaced-oscillator exponential

    U(t,s) = (-1)^N exp(-i Delta H_omega + i (mu/omega) p + i nu x + i sigma),

using exp(-i (2 pi/omega) N H_omega) = (-1)^N, valid off resonance only.

The scalar conversions between the two forms are the Weyl-algebra splitting
identities: split_forward maps the exponent data (mu, nu, t) of a combined
exponential to the data (xi, eta, phase) of its ordered product form, and
split_inverse undoes it for |t| < 2 pi/omega.  Both are implemented with
series branches where naive evaluation would cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_fock import (
    OscillatorParams,
    TruncatedOperator,
    Truncation,
    matrix_exp,
    number_basis_energies,
    xp_operators,
)
from .drive_model import DriveSpec, MuNuSigma, mu_nu_sigma, phi12, psi
from .errors import DomainError

__all__ = [
    "split_forward",
    "split_inverse",
    "PropagatorFactors",
    "factored_factors",
    "single_exp_factors",
    "propagator_factored",
    "propagator_single_exp",
    "heisenberg_check",
]

_SERIES_CUT = 1e-4


def _sinc_half(u: float) -> float:
    """2 sin(u/2) / u, exact at u = 0."""
    return float(np.sinc(u / (2.0 * np.pi)))


def split_forward(mu: float, nu: float, t: float, omega: float) -> tuple[float, float, float]:
    """Order the combined exponential into p- and x-factors.

    exp(-i t H + i (mu/w) p + i nu x)
        = e^{-i phase} exp(i (xi/w) p) exp(i eta x) exp(-i t H)

    Returns (xi, eta, phase).  As t -> 0 the limits are xi -> mu,
    eta -> nu, phase -> mu nu / (2 omega), the last being the plain Weyl
    reordering phase of exp(i (mu/w) p + i nu x).
    """
    u = omega * t
    g = _sinc_half(u)
    ch = math.cos(0.5 * u)
    sh = math.sin(0.5 * u)
    xi = g * (ch * mu - sh * nu)
    eta = g * (sh * mu + ch * nu)
    if abs(u) < _SERIES_CUT:
        # phase = -(c1 mu^2 + c2 mu nu + c3 nu^2)/(4 w) with the u^2 removed
        c1 = -(2.0 / 3.0) * u + (7.0 / 30.0) * u**3 - (31.0 / 1260.0) * u**5
        c2 = -2.0 + (7.0 / 6.0) * u**2 - (31.0 / 180.0) * u**4
        c3 = (4.0 / 3.0) * u - (4.0 / 15.0) * u**3 + (8.0 / 315.0) * u**5
        phase = -(c1 * mu * mu + c2 * mu * nu + c3 * nu * nu) / (4.0 * omega)
    else:
        p1 = 2.0 * u - 4.0 * math.sin(u) + math.sin(2.0 * u)
        p2 = 2.0 - 4.0 * math.cos(u) + 2.0 * math.cos(2.0 * u)
        p3 = 2.0 * u - math.sin(2.0 * u)
        phase = -(p1 * mu * mu + p2 * mu * nu + p3 * nu * nu) / (4.0 * omega * u * u)
    return xi, eta, phase


def _half_cot_half(u: float) -> float:
    """(u/2) cot(u/2), series near 0, defined on |u| < 2 pi."""
    if abs(u) < _SERIES_CUT:
        return 1.0 - u * u / 12.0 - u**4 / 720.0
    return 0.5 * u * math.cos(0.5 * u) / math.sin(0.5 * u)


def _lambda_factor(u: float) -> float:
    """(u - sin u) / (8 sin^2(u/2)), series near 0."""
    if abs(u) < _SERIES_CUT:
        return u / 12.0 + u**3 / 360.0 + u**5 / 10080.0
    return (u - math.sin(u)) / (8.0 * math.sin(0.5 * u) ** 2)


def split_inverse(xi: float, eta: float, t: float, omega: float) -> tuple[float, float, float]:
    """Merge ordered factors back into one exponential, |t| < 2 pi/omega.

    exp(i (xi/w) p) exp(i eta x) exp(-i t H)
        = e^{i phase} exp(-i t H + i (mu/w) p + i nu x)

    Returns (mu, nu, phase); round-trips split_forward exactly, including
    the phase.  Outside |t| < 2 pi/omega the merge is not defined (the
    half-angle cotangent crosses its pole) and a DomainError is raised.
    """
    u = omega * t
    if abs(u) >= 2.0 * math.pi:
        raise DomainError(f"split_inverse needs |omega t| < 2 pi, got {u}")
    hc = _half_cot_half(u)
    mu = hc * xi + 0.5 * u * eta
    nu = -0.5 * u * xi + hc * eta
    phase = xi * eta / (2.0 * omega) - _lambda_factor(u) / omega * (xi * xi + eta * eta)
    return mu, nu, phase


@dataclass(frozen=True)
class PropagatorFactors:
    """Scalar data of a closed-form propagator over [s, t].

    form is "factored" or "single_exp"; the fields not used by a form are
    zero.  phase enters as exp(i phase) multiplying the operator part.
    """

    form: str
    t: float
    s: float
    phi1: float = 0.0
    phi2: float = 0.0
    psi: float = 0.0
    mu: float = 0.0
    nu: float = 0.0
    sigma: float = 0.0
    whole_periods: int = 0
    delta: float = 0.0


def factored_factors(spec: DriveSpec, params: OscillatorParams, t: float, s: float) -> PropagatorFactors:
    p1, p2 = phi12(spec, params, t, s)
    ps = psi(spec, params, t, s)
    return PropagatorFactors(form="factored", t=t, s=s, phi1=p1, phi2=p2, psi=ps)


def single_exp_factors(spec: DriveSpec, params: OscillatorParams, t: float, s: float) -> PropagatorFactors:
    mns: MuNuSigma = mu_nu_sigma(spec, params, t, s)
    return PropagatorFactors(
        form="single_exp",
        t=t,
        s=s,
        mu=mns.mu,
        nu=mns.nu,
        sigma=mns.sigma,
        whole_periods=mns.whole_periods,
        delta=mns.delta,
    )


def _factored_matrix(
    params: OscillatorParams, factors: PropagatorFactors, dim: int
) -> np.ndarray:
    x, p = xp_operators(params.omega, dim)
    energies = number_basis_energies(params.omega, dim)
    tau = factors.t - factors.s
    diag = np.exp(-1j * tau * energies - 1j * factors.psi)
    left = matrix_exp(-1j * factors.phi1 * x)
    midl = matrix_exp(1j * (factors.phi2 / params.omega) * p)
    return left @ midl @ np.diag(diag)


def _single_exp_matrix(
    params: OscillatorParams, factors: PropagatorFactors, dim: int
) -> np.ndarray:
    x, p = xp_operators(params.omega, dim)
    h = np.diag(number_basis_energies(params.omega, dim)).astype(complex)
    gen = (
        -1j * factors.delta * h
        + 1j * (factors.mu / params.omega) * p
        + 1j * factors.nu * x
        + 1j * factors.sigma * np.eye(dim)
    )
    sign = -1.0 if factors.whole_periods % 2 else 1.0
    return sign * matrix_exp(gen)


def propagator_factored(
    spec: DriveSpec, params: OscillatorParams, trunc: Truncation, t: float, s: float
) -> TruncatedOperator:
    """U(t,s) in the factored form, built at n_keep + n_pad and trimmed."""
    factors = factored_factors(spec, params, t, s)
    full = _factored_matrix(params, factors, trunc.dim)
    return TruncatedOperator(full[: trunc.n_keep, : trunc.n_keep].copy())


def propagator_single_exp(
    spec: DriveSpec, params: OscillatorParams, trunc: Truncation, t: float, s: float
) -> TruncatedOperator:
    """U(t,s) as a single displaced exponential; resonant elapsed times are
    rejected upstream with ResonantTimeError."""
    factors = single_exp_factors(spec, params, t, s)
    full = _single_exp_matrix(params, factors, trunc.dim)
    return TruncatedOperator(full[: trunc.n_keep, : trunc.n_keep].copy())


def heisenberg_check(params: OscillatorParams, trunc: Truncation, t: float) -> dict:
    """Deviation of the free Heisenberg rotation on the leading block.

    exp(i t H) x exp(-i t H) = cos(wt) x + sin(wt) p / w
    exp(i t H) p exp(-i t H) = -w sin(wt) x + cos(wt) p

    Computed at the padded dimension, compared on the kept block; returns
    the two maximal deviations.
    """
    w = params.omega
    dim = trunc.dim
    k = trunc.n_keep
    x, p = xp_operators(w, dim)
    energies = number_basis_energies(w, dim)
    u = np.diag(np.exp(1j * t * energies))
    udag = np.diag(np.exp(-1j * t * energies))
    x_rot = u @ x @ udag
    p_rot = u @ p @ udag
    x_ref = math.cos(w * t) * x + math.sin(w * t) / w * p
    p_ref = -w * math.sin(w * t) * x + math.cos(w * t) * p
    return {
        "x_deviation": float(np.abs((x_rot - x_ref)[:k, :k]).max()),
        "p_deviation": float(np.abs((p_rot - p_ref)[:k, :k]).max()),
    }
