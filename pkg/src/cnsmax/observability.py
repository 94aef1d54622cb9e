"""Ingham frame bounds, canonical-product interpolants, observability
constants, and the small-time lack-of-controllability scaling experiment.

All quadratic forms are assembled in closed form over flattened modal
indices; finite sections are always positive definite, so the reported
"constants" are trends in (N, T), not the theory's existential constants.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh
from scipy.special import gammaln

from ._gram import (
    build_branch_table,
    kernel_gram,
    terminal_gram,
    texp,
    windowed_gram,
)
from .errors import HypothesisViolated, NumericalFailure
from .model import FluidParams
from .spectral import TWO_PI, mode_eigenvalues_batch, solve_beta_cubic, z_weights


@dataclass
class ExpGram:
    """Hermitian Gram of the adjoint exponential family on [0, T]."""

    indices: list[tuple[int, int]]
    T: float
    entries: np.ndarray
    eig_min: float
    eig_max: float


@dataclass
class LackResult:
    N_list: list[int]
    ratios: list[float]
    slope: float


@lru_cache(maxsize=64)
def minimal_time(p: FluidParams) -> float:
    """Controllability waiting time 2*pi*(1/|beta_1| + 1/|beta_2| + 1/|beta_3|)."""
    roots = solve_beta_cubic(p)
    return float(TWO_PI * np.sum(1.0 / np.abs(np.asarray(roots.beta))))


def exponential_gram(lams, T: float) -> np.ndarray:
    """Gram of {e^{conj(lam_a)(T-t)}} in L^2(0, T), closed form."""
    lams = np.asarray(lams, dtype=complex)
    return texp(np.conj(lams)[None, :] + lams[:, None], T)


def exp_gram(p: FluidParams, N: int, T: float) -> ExpGram:
    """Gram of the 3*(2N) adjoint exponentials of modes 0 < |n| <= N."""
    tab = build_branch_table(p, N, "Zmm")
    g = exponential_gram(tab.lam, T)
    herm = np.max(np.abs(g - g.conj().T))
    if herm > 1e-12 * max(1.0, float(np.abs(g).max())):
        raise NumericalFailure(f"exponential Gram lost Hermitian symmetry: {herm:.2e}")
    ev = np.linalg.eigvalsh(0.5 * (g + g.conj().T))
    idx = list(zip(tab.idx_n.tolist(), (tab.idx_l + 1).tolist()))
    return ExpGram(indices=idx, T=T, entries=g,
                   eig_min=float(ev[0]), eig_max=float(ev[-1]))


def ingham_frame_bounds(p: FluidParams, N: int, T: float) -> tuple[float, float]:
    """Numerical frame constants of the adjoint exponential family on [0, T]."""
    g = exp_gram(p, N, T)
    return g.eig_min, g.eig_max


def _product_zeros(p: FluidParams, K: int) -> np.ndarray:
    """Nonzero zeros i*conj(lambda_n^j) of the canonical product, |n| <= K."""
    ns = np.concatenate([np.arange(-K, 0), np.arange(1, K + 1)])
    lam = mode_eigenvalues_batch(p, ns)
    return (1j * np.conj(lam)).ravel()


def canonical_product(p: FluidParams, z: complex, K: int) -> complex:
    """Truncated canonical product P(z) = z^3 prod (1 - z/(i conj(lambda))).

    Accumulates complex logarithms so that huge or tiny magnitudes cannot
    overflow; an exact hit on a zero returns 0.
    """
    zeros = _product_zeros(p, K)
    z = complex(z)
    if z == 0:
        return 0.0
    fac = 1.0 - z / zeros
    if np.any(fac == 0):
        return 0.0
    return complex(np.exp(3.0 * np.log(complex(z)) + np.sum(np.log(fac))))


def canonical_product_derivative(p: FluidParams, n: int, j: int, K: int) -> complex:
    """P'(z_m) at the zero z_m = i*conj(lambda_n^j), skipping its own factor."""
    zeros = _product_zeros(p, K)
    lam = mode_eigenvalues_batch(p, [n])[0][j]
    zm = 1j * np.conj(lam)
    dist = np.abs(zeros - zm)
    m = int(np.argmin(dist))
    if dist[m] > 1e-9 * (1.0 + abs(zm)):
        raise ValueError("(n, j) is not inside the truncated zero set")
    fac = 1.0 - zm / np.delete(zeros, m)
    logmag = 2.0 * np.log(complex(zm)) + np.sum(np.log(fac))
    return complex(-np.exp(logmag))


def psi_interpolant(p: FluidParams, nj: tuple[int, int], z: complex, K: int) -> complex:
    """Interpolant P(z)/((z - z_m) P'(z_m)) with z_m = i conj(lambda_n^j).

    Evaluating exactly at z_m returns the limiting value 1; at every other
    truncated zero the product vanishes, giving the Kronecker property.
    """
    n, j = nj
    dP = canonical_product_derivative(p, n, j, K)
    lam = mode_eigenvalues_batch(p, [n])[0][j]
    zm = 1j * np.conj(lam)
    z = complex(z)
    if z == zm:
        return 1.0
    val = canonical_product(p, z, K)
    return complex(val / ((z - zm) * dP))


def interior_observability_constant(
    p: FluidParams, N: int, T: float, interval: tuple[float, float]
):
    """Smallest generalized eigenvalue of the windowed density observation
    against the terminal energy Gram, over modes |n| <= N in the mean-free
    velocity/stress subspace.  Returns (lambda_min, lambda_max)."""
    lo, hi = interval
    tab = build_branch_table(p, N, "Zm")
    M = windowed_gram(tab, T, tab.sigma_coeff, lo, hi)
    R = terminal_gram(tab)
    vals = eigh(0.5 * (M + M.conj().T), 0.5 * (R + R.conj().T), eigvals_only=True)
    return float(vals[0]), float(vals[-1])


def boundary_observability_constant(p: FluidParams, N: int, T: float, kind: str):
    """As above with the scalar boundary observation functional."""
    from .control import boundary_observation_vector

    tab = build_branch_table(p, N, "Zmm")
    bv = boundary_observation_vector(tab, kind)
    M = kernel_gram(tab, T, bv)
    R = terminal_gram(tab)
    vals = eigh(0.5 * (M + M.conj().T), 0.5 * (R + R.conj().T), eigvals_only=True)
    return float(vals[0]), float(vals[-1])


def _bump_profile_coeffs(lo: float, hi: float, M: int = 1 << 14) -> np.ndarray:
    """Fourier coefficients (basis e^{inx}) of exp(-1/(1-s^2)) on (lo, hi)."""
    x = TWO_PI * np.arange(M) / M
    prof = np.zeros(M)
    ins = (x > lo) & (x < hi)
    s = 2.0 * (x[ins] - lo) / (hi - lo) - 1.0
    prof[ins] = np.exp(-1.0 / (1.0 - s**2))
    return np.fft.fft(prof) / M


def _log_pn(ns: np.ndarray, N: int) -> np.ndarray:
    """log |P^N(n)| = log prod_{j=-N}^{N} (n - j) for n > N."""
    return gammaln(ns + N + 1.0) - gammaln(ns - N + 0.0)


def lack_experiment(
    p: FluidParams,
    N_list,
    T: float,
    interval: tuple[float, float],
    band_mult: int = 4,
    support: tuple[float, float] | None = None,
    margin_frac: float = 0.05,
) -> LackResult:
    """Small-time non-controllability scaling of the observation ratio.

    For each N the terminal data is the high-pass polynomial image of a
    compactly supported bump carried by the slowest branch,
    sum_{|n| > N} a_n P^N(n) xi*_{n, l_hat}, with all coefficient scaling in
    log-magnitude space.  The observation energy over (0,T) x O is evaluated
    through its transport-comparison majorant in closed form: the windowed
    energy splits into the transported profile (identically zero off the
    characteristic strip) plus a full-circle Parseval residual of the exact
    minus asymptotic exponentials.  The reported ratio divides by the
    terminal energy norm squared, so the statistic is scale invariant.
    """
    lo, hi = interval
    if not (0.0 <= lo < hi <= TWO_PI):
        raise ValueError("interval must satisfy 0 <= l1 < l2 <= 2*pi")
    roots = solve_beta_cubic(p)
    beta = np.asarray(roots.beta)
    l_hat = int(np.argmin(np.abs(beta)))
    bhat = float(beta[l_hat])
    what = float(np.asarray(roots.omega)[l_hat])
    clearance = (TWO_PI - hi) if bhat < 0 else lo
    if abs(bhat) * T >= max(lo, TWO_PI - hi):
        raise HypothesisViolated(
            f"|beta_hat| T = {abs(bhat) * T:.3f} >= max(l1, 2 pi - l2) "
            f"= {max(lo, TWO_PI - hi):.3f}"
        )
    if support is None:
        if abs(bhat) * T >= clearance:
            raise HypothesisViolated(
                "the slow branch sweeps toward the wrong side of the window "
                f"(clearance {clearance:.3f} < |beta| T {abs(bhat) * T:.3f})"
            )
        pad = margin_frac * (clearance - abs(bhat) * T)
        if bhat < 0:
            a0, b0 = hi + abs(bhat) * T + pad, TWO_PI - pad
        else:
            a0, b0 = pad, lo - bhat * T - pad
    else:
        a0, b0 = support
    # does the swept support strip intersect the observation window?
    sweep_lo = a0 + min(bhat * T, 0.0)
    sweep_hi = b0 + max(bhat * T, 0.0)
    strip_hits = (sweep_lo < hi) and (lo < sweep_hi)

    coeffs = _bump_profile_coeffs(a0, b0)
    wz = z_weights(p)
    alinf = np.array(
        [
            1.0,
            -(bhat + p.u_s) / p.rho_s,
            -p.mu * (bhat + p.u_s) / (p.kappa * p.rho_s * bhat),
        ],
        dtype=complex,
    )

    ratios = []
    for N in N_list:
        ns = np.arange(N + 1, band_mult * N + 1)
        av = coeffs[ns % coeffs.size]
        logs = np.log(np.abs(av) + 1e-300) + _log_pn(ns.astype(float), N)
        logs -= logs.max()
        w = np.exp(logs)
        w /= np.sqrt(2.0 * np.sum(w**2))
        idx = np.concatenate([ns, -ns])
        w2 = np.concatenate([w, w]) ** 2
        lam = mode_eigenvalues_batch(p, idx)[:, l_hat]
        lam_b = np.conj(lam)
        inu = 1j * idx * p.u_s
        al = np.stack(
            [
                np.ones(idx.size, dtype=complex),
                (lam_b - inu) / (1j * idx * p.rho_s),
                -p.mu * (lam_b - inu) / (p.rho_s * (1.0 + p.kappa * lam_b)),
            ],
            axis=1,
        )
        mu_exp = -what - 1j * bhat * idx  # transported-branch exponent
        resid = np.zeros(idx.size)
        for comp in range(3):
            t1 = np.abs(al[:, comp]) ** 2 * np.real(texp(2.0 * lam_b.real, T))
            t2 = np.abs(alinf[comp]) ** 2 * np.real(texp(2.0 * mu_exp.real, T))
            t12 = -2.0 * np.real(
                al[:, comp] * np.conj(alinf[comp]) * texp(lam_b + np.conj(mu_exp), T)
            )
            resid += t1 + t2 + t12
        obs = 2.0 * float(np.sum(w2 * resid))
        if strip_hits:
            hat_en = float(
                np.sum(w2 * np.sum(np.abs(alinf) ** 2) * np.real(texp(2.0 * mu_exp.real, T)))
            )
            obs += 2.0 * hat_en
        den = TWO_PI * float(np.sum(w2 * (np.abs(al) ** 2 @ wz)))
        ratios.append(obs / den)

    slope = float(np.polyfit(np.log(np.asarray(N_list, float)), np.log(ratios), 1)[0])
    return LackResult(N_list=list(N_list), ratios=ratios, slope=slope)
