"""Per-mode spectral machinery: slope cubic, eigenvalues, biorthogonal bases.

For each Fourier mode n != 0 the generator restricts to a 3x3 block whose
characteristic cubic has three simple roots (for valid parameters).  The
three root branches follow -omega_j + i*beta_j*n as |n| grows, where the
beta_j are the real roots of a parameter cubic and the omega_j are positive
offsets.  This module computes those objects, the direct/adjoint eigenvector
coefficient triples with their biorthogonal normalization, the basis-change
matrix between the weighted Fourier frame and the eigenbasis, and the
eigenvalue-multiplicity detector used to reject degenerate parameter sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

from . import _kernels
from .errors import MultiplicityDetected, NumericalFailure
from .model import FluidParams

TWO_PI = 2.0 * np.pi

# defaults, overridable per call
TOL_MULT = 1e-8
TOL_PSI = 1e-10


@dataclass(frozen=True)
class CubicRoots:
    """Real slope-cubic roots beta (descending) with their omega offsets."""

    beta: tuple[float, float, float]
    omega: tuple[float, float, float]
    p_prime: tuple[float, float, float]


@dataclass(frozen=True)
class ModeEigenSystem:
    """Spectral data of one mode: eigenvalues, eigenvector coefficients.

    xi_coeffs[l] holds the components of the l-th direct eigenfunction before
    the e^{inx} factor (normalizer theta included); xi_star_coeffs[l] holds
    the raw adjoint coefficient triple (alpha^1, alpha^2, alpha^3), i.e. the
    adjoint eigenfunction is (1/psi_l) * alpha * e^{inx}.
    """

    n: int
    lambdas: np.ndarray          # (3,) complex, branch-paired
    xi_coeffs: np.ndarray        # (3, 3) complex: row l -> triple of xi_{n,l}
    theta: np.ndarray            # (3,) positive real
    xi_star_coeffs: np.ndarray   # (3, 3) complex: row l -> (alpha^1..3)
    psi: np.ndarray              # (3,) complex, nonzero for simple modes
    multiplicity_flag: bool


@dataclass(frozen=True)
class GammaMatrix:
    """Change of basis from weighted-Fourier to eigenbasis coordinates."""

    n: int
    entries: np.ndarray          # (3, 3) complex
    det_closed_form: complex


@dataclass(frozen=True)
class MultiplicityReport:
    n: int
    flag: bool
    min_gap: float
    min_q: float


def _beta_cubic_coeffs(p: FluidParams):
    b = p.b_eff
    return (
        2.0 * p.u_s,
        p.u_s**2 - b * p.rho_s - p.mu / (p.kappa * p.rho_s),
        -p.mu * p.u_s / (p.kappa * p.rho_s),
    )


def _char_cubic_coeffs(p: FluidParams, ns):
    """Monic characteristic-cubic coefficients (a2, a1, a0) for modes ns."""
    ns = np.asarray(ns, dtype=float)
    b = p.b_eff
    a2 = 1.0 / p.kappa + 2j * ns * p.u_s
    a1 = (b * p.rho_s + p.mu / (p.kappa * p.rho_s) - p.u_s**2) * ns**2 \
        + 2j * p.u_s * ns / p.kappa
    a0 = (b * p.rho_s - p.u_s**2) * ns**2 / p.kappa \
        + 1j * p.mu * p.u_s * ns**3 / (p.kappa * p.rho_s)
    return a2, a1, a0


@lru_cache(maxsize=64)
def solve_beta_cubic(p: FluidParams) -> CubicRoots:
    """Slope cubic roots, omega offsets, and derivative values.

    The omega_j are defined with the sign that makes them the limits of
    -Re(lambda) along each branch; this is cross-validated against an
    eigensolve at |n| = 10^4 (the printed closed form carries the opposite
    sign, which contradicts the negativity of the spectrum's real parts).
    """
    a2, a1, a0 = _beta_cubic_coeffs(p)
    beta = _kernels.real_cubic_roots([a2], [a1], [a0])[0]
    res = np.abs(((beta + a2) * beta + a1) * beta + a0)
    if not np.all(res <= 1e-12 * (1.0 + np.abs(beta) ** 3)):
        raise NumericalFailure(f"slope cubic residual too large: {res}")
    gaps = [abs(beta[i] - beta[j]) for i in range(3) for j in range(i + 1, 3)]
    if min(gaps) <= 1e-9 * (1.0 + np.max(np.abs(beta))):
        raise NumericalFailure("slope cubic roots not distinct")
    b = p.b_eff
    p_prime = 3.0 * beta**2 + 4.0 * p.u_s * beta + p.u_s**2 - b * p.rho_s \
        - p.mu / (p.kappa * p.rho_s)
    if np.any(np.abs(p_prime) == 0.0):
        raise NumericalFailure("slope cubic has a critical root")
    omega = -(b * p.rho_s - p.u_s**2 - 2.0 * p.u_s * beta - beta**2) / (p.kappa * p_prime)

    # sign cross-validation against the true real parts at a far mode
    n_chk = 10_000
    lam = _kernels.char_roots_batch(*_char_cubic_coeffs(p, [n_chk]))[0]
    pred = -omega + 1j * beta * n_chk
    cost = min(
        sum(abs(lam[list(perm)] - pred)) for perm in permutations(range(3))
    )
    cost_flip = min(
        sum(abs(lam[list(perm)] - (omega + 1j * beta * n_chk)))
        for perm in permutations(range(3))
    )
    if cost_flip < cost:
        raise NumericalFailure(
            "omega sign validation failed: eigensolve at |n|=1e4 favors the "
            f"opposite sign (costs {cost:.3e} vs {cost_flip:.3e})"
        )
    return CubicRoots(beta=tuple(beta), omega=tuple(omega), p_prime=tuple(p_prime))


def asymptotic_frequencies(p: FluidParams, roots: CubicRoots, n: int) -> np.ndarray:
    """Predicted eigenvalue triple -omega_j + i*beta_j*n for branch pairing."""
    if n == 0:
        raise ValueError("n must be nonzero")
    return -np.asarray(roots.omega) + 1j * np.asarray(roots.beta) * n


def mode_matrix(p: FluidParams, n: int) -> np.ndarray:
    """Generator block of mode n in the weighted orthonormal Fourier frame."""
    if n == 0:
        raise ValueError("n must be nonzero")
    b = p.b_eff
    sbr = np.sqrt(b * p.rho_s)
    smr = np.sqrt(p.mu / (p.kappa * p.rho_s))
    i_n = 1j * n
    return np.array(
        [
            [-i_n * p.u_s, -i_n * sbr, 0.0],
            [-i_n * sbr, -i_n * p.u_s, i_n * smr],
            [0.0, i_n * smr, -1.0 / p.kappa],
        ],
        dtype=complex,
    )


_PERMS = np.array(list(permutations(range(3))))


def _pair_to_predictions(lam: np.ndarray, pred: np.ndarray) -> np.ndarray:
    """Minimal-total-distance assignment of computed roots to predictions.

    lam, pred: (m, 3).  Exhaustive over the 6 permutations, vectorized in m.
    """
    costs = np.stack(
        [np.abs(lam[:, perm] - pred).sum(axis=1) for perm in _PERMS], axis=1
    )
    best = costs.argmin(axis=1)
    rows = np.arange(lam.shape[0])[:, None]
    return lam[rows, _PERMS[best]]


def _rc_identities_ok(p: FluidParams, ns, lam, rtol=1e-8) -> bool:
    """All six root-coefficient identities, relative to 1 + |rhs|."""
    ns = np.asarray(ns, dtype=float)
    b = p.b_eff
    eta, tau = lam.real, lam.imag
    e1, e2, e3 = eta.T
    t1, t2, t3 = tau.T
    # (terms of the lhs, rhs); the tolerance scales with the term magnitudes,
    # since several identities cancel large products down to a small rhs
    items = [
        ([e1, e2, e3], -1.0 / p.kappa * np.ones_like(ns)),
        ([t1, t2, t3], -2.0 * p.u_s * ns),
        (
            [e1 * e2, e1 * e3, e2 * e3, -t1 * t2, -t1 * t3, -t2 * t3],
            (b * p.rho_s + p.mu / (p.kappa * p.rho_s) - p.u_s**2) * ns**2,
        ),
        (
            [e1 * (t2 + t3), e2 * (t1 + t3), e3 * (t1 + t2)],
            2.0 * p.u_s * ns / p.kappa,
        ),
        (
            [e1 * e2 * e3, -e1 * t2 * t3, -e2 * t1 * t3, -e3 * t1 * t2],
            (p.u_s**2 - b * p.rho_s) * ns**2 / p.kappa,
        ),
        (
            [t1 * t2 * t3, -t1 * e2 * e3, -e1 * t2 * e3, -e1 * e2 * t3],
            p.mu * p.u_s * ns**3 / (p.kappa * p.rho_s),
        ),
    ]
    for terms, rhs in items:
        lhs = np.sum(terms, axis=0)
        scale = 1.0 + np.abs(rhs) + np.sum(np.abs(terms), axis=0)
        if not np.all(np.abs(lhs - rhs) <= rtol * scale):
            return False
    return True


def mode_eigenvalues_batch(p: FluidParams, ns) -> np.ndarray:
    """Branch-paired eigenvalue triples for an array of nonzero modes."""
    ns = np.asarray(ns, dtype=int)
    if np.any(ns == 0):
        raise ValueError("modes must be nonzero")
    a2, a1, a0 = _char_cubic_coeffs(p, ns)
    lam = _kernels.char_roots_batch(a2, a1, a0)
    scale = np.maximum.reduce(
        [np.abs(lam) ** 3, np.abs(a2[:, None] * lam**2), np.abs(a1[:, None] * lam),
         np.abs(a0[:, None]) * np.ones_like(lam.real)]
    )
    resid = np.abs(((lam + a2[:, None]) * lam + a1[:, None]) * lam + a0[:, None])
    if not np.all(resid <= 1e-11 * np.maximum(scale, 1.0)):
        raise NumericalFailure("characteristic cubic residual overflow")
    roots = solve_beta_cubic(p)
    pred = -np.asarray(roots.omega)[None, :] + 1j * np.outer(ns, roots.beta)
    lam = _pair_to_predictions(lam, pred)
    if not _rc_identities_ok(p, ns, lam):
        raise NumericalFailure("root-coefficient identities violated")
    return lam


def mode_eigenvalues(p: FluidParams, n: int, tol_mult: float = TOL_MULT) -> np.ndarray:
    """Branch-paired eigenvalues of one mode; rejects multiple eigenvalues."""
    lam = mode_eigenvalues_batch(p, [n])[0]
    rep = _multiplicity_report(p, n, lam, tol_mult)
    if rep.flag:
        raise MultiplicityDetected(n, rep.min_gap, rep.min_q)
    return lam


def q_degeneracy(p: FluidParams, n: int, lam) -> np.ndarray:
    """Double-root indicator: lam is a double characteristic root iff q = 0.

    This is also (up to a positive normalizer and conjugation) the adjoint
    normalizer psi, which is why psi doubles as a degeneracy sentinel.
    """
    lam = np.asarray(lam, dtype=complex)
    b = p.b_eff
    inu = 1j * n * p.u_s
    return (
        -b
        + (lam + inu) ** 2 / (p.rho_s * n**2)
        - p.mu * p.kappa * (lam + inu) ** 2 / (p.rho_s**2 * (1.0 + p.kappa * lam) ** 2)
    )


def _multiplicity_report(p, n, lam, tol_mult) -> MultiplicityReport:
    gaps = [abs(lam[i] - lam[j]) for i in range(3) for j in range(i + 1, 3)]
    min_gap = float(min(gaps))
    min_q = float(np.min(np.abs(q_degeneracy(p, n, lam))))
    scale = 1.0 + float(np.max(np.abs(lam)))
    flag = (min_gap < tol_mult * scale) or (min_q < tol_mult)
    return MultiplicityReport(n=n, flag=flag, min_gap=min_gap, min_q=min_q)


def detect_multiplicity(p: FluidParams, n: int, tol_mult: float = TOL_MULT) -> MultiplicityReport:
    """Check one mode for (near-)multiple eigenvalues; never raises."""
    lam = mode_eigenvalues_batch(p, [n])[0]
    return _multiplicity_report(p, n, lam, tol_mult)


def eigenvectors(
    p: FluidParams, n: int, lambdas=None, tol_psi: float = TOL_PSI
) -> ModeEigenSystem:
    """Direct and adjoint eigenvector coefficients of mode n.

    Biorthogonality <xi_{n,l}, xi*_{n,p}>_Z = delta_{lp} is built into the
    normalizers theta and psi.
    """
    if lambdas is None:
        lambdas = mode_eigenvalues(p, n)
    lam = np.asarray(lambdas, dtype=complex)
    b = p.b_eff
    inu = 1j * n * p.u_s
    lam_b = np.conj(lam)

    d2 = (
        b
        + np.abs(lam + inu) ** 2 / (p.rho_s * n**2)
        + p.kappa * p.mu * np.abs(lam + inu) ** 2
        / (p.rho_s**2 * np.abs(1.0 + p.kappa * lam) ** 2)
    )
    theta = np.sqrt(TWO_PI * d2)
    psi = np.sqrt(TWO_PI) * np.conj(q_degeneracy(p, n, lam)) / np.sqrt(d2)
    if np.any(np.abs(psi) < tol_psi):
        rep = _multiplicity_report(p, n, lam, TOL_MULT)
        raise MultiplicityDetected(n, rep.min_gap, rep.min_q)

    xi = np.stack(
        [
            -np.ones(3, dtype=complex),
            (lam + inu) / (1j * n * p.rho_s),
            p.mu * (lam + inu) / (p.rho_s * (1.0 + p.kappa * lam)),
        ],
        axis=1,
    ) / theta[:, None]
    alpha = np.stack(
        [
            np.ones(3, dtype=complex),
            (lam_b - inu) / (1j * n * p.rho_s),
            -p.mu * (lam_b - inu) / (p.rho_s * (1.0 + p.kappa * lam_b)),
        ],
        axis=1,
    )
    return ModeEigenSystem(
        n=n,
        lambdas=lam,
        xi_coeffs=xi,
        theta=theta.real,
        xi_star_coeffs=alpha,
        psi=psi,
        multiplicity_flag=False,
    )


def mode_system(p: FluidParams, n: int) -> ModeEigenSystem:
    """Eigenvalues and eigenvectors of mode n in one call."""
    return eigenvectors(p, n)


def z_weights(p: FluidParams) -> np.ndarray:
    """Component weights (b, rho_s, kappa/mu) of the energy inner product."""
    return np.array([p.b_eff, p.rho_s, p.kappa / p.mu])


def mode_inner(p: FluidParams, x, y) -> complex:
    """Energy inner product of two coefficient triples of the same mode.

    Triples are components before the e^{inx} factor.
    """
    w = z_weights(p)
    return TWO_PI * complex(np.sum(w * np.asarray(x) * np.conj(np.asarray(y))))


def biorthogonality_matrix(p: FluidParams, mode: ModeEigenSystem) -> np.ndarray:
    """Matrix of <xi_{n,l}, xi*_{n,q}>_Z; identity up to rounding."""
    w = z_weights(p)
    star = mode.xi_star_coeffs / mode.psi[:, None]
    return TWO_PI * np.einsum("lp,p,qp->lq", mode.xi_coeffs, w, np.conj(star))


def gamma_matrix(p: FluidParams, mode: ModeEigenSystem) -> GammaMatrix:
    """Basis-change matrix Gamma_n (weighted Fourier coords -> eigen coords)."""
    w = z_weights(p)
    entries = (
        np.sqrt(TWO_PI * w)[None, :]
        * np.conj(mode.xi_star_coeffs)
        / np.conj(mode.psi)[:, None]
    )
    lam = mode.lambdas
    l1, l2, l3 = lam
    kap, n = p.kappa, mode.n
    pref = TWO_PI * kap * np.sqrt(TWO_PI * p.b_eff * p.rho_s * kap * p.mu) / (
        1j * n * p.rho_s**2 * np.prod(np.conj(mode.psi))
    )
    det_cf = pref * (
        (l1 - l2) * (l1 - l3) * (l2 - l3) * (1.0 - kap * 1j * n * p.u_s)
    ) / ((1.0 + kap * l1) * (1.0 + kap * l2) * (1.0 + kap * l3))
    return GammaMatrix(n=mode.n, entries=entries, det_closed_form=complex(det_cf))


def riesz_frame_bounds(p: FluidParams, N: int) -> tuple[float, float]:
    """Extreme eigenvalues of the Gram matrix of the eigenbasis over |n| <= N.

    Cross-mode inner products vanish by Fourier orthogonality, so the Gram is
    block diagonal with 3x3 blocks (plus the normalized n = 0 direction).
    """
    w = z_weights(p)
    lo, hi = 1.0, 1.0  # the n = 0 block: <xi_0, xi_0>_Z = 1
    for n in range(1, N + 1):
        for sign in (n, -n):
            m = mode_system(p, sign)
            g = TWO_PI * np.einsum("lp,p,qp->lq", m.xi_coeffs, w, np.conj(m.xi_coeffs))
            ev = np.linalg.eigvalsh(g)
            lo = min(lo, float(ev[0]))
            hi = max(hi, float(ev[-1]))
    if lo <= 0:
        raise NumericalFailure("eigenbasis Gram lost positivity")
    return lo, hi


def min_eigenvalue_gap(p: FluidParams, N: int) -> float:
    """Empirical spectral gap: min |lambda_a - lambda_b| over |n| <= N pairs."""
    ns = np.concatenate([np.arange(-N, 0), np.arange(1, N + 1)])
    lam = mode_eigenvalues_batch(p, ns).ravel()
    best = np.inf
    chunk = 512
    for s in range(0, lam.size, chunk):
        blk = lam[s : s + chunk]
        d = np.abs(blk[:, None] - lam[None, :])
        iu = np.arange(s, s + blk.size)
        d[np.arange(blk.size), iu] = np.inf  # self-distances
        best = min(best, float(d.min()))
    return best


def spectrum_rows(p: FluidParams, N: int, tol_mult: float = TOL_MULT):
    """Rows (n, branch, re, im, theta, re_psi, im_psi, mult_flag) for |n| <= N."""
    rows = []
    for n in range(-N, N + 1):
        if n == 0:
            continue
        lam = mode_eigenvalues_batch(p, [n])[0]
        rep = _multiplicity_report(p, n, lam, tol_mult)
        m = eigenvectors(p, n, lam) if not rep.flag else None
        for l in range(3):
            theta = m.theta[l] if m else float("nan")
            psi = m.psi[l] if m else complex("nan")
            rows.append(
                (n, l + 1, lam[l].real, lam[l].imag, theta, psi.real, psi.imag,
                 int(rep.flag))
            )
    return rows


def branch_residual_slope(
    p: FluidParams, n_lo: int = 20, n_hi: int = 200
) -> tuple[float, np.ndarray, np.ndarray]:
    """Log-log slope of max_j |lambda_n^j - (-omega_j + i beta_j n)| in n."""
    roots = solve_beta_cubic(p)
    ns = np.arange(n_lo, n_hi + 1)
    lam = mode_eigenvalues_batch(p, ns)
    pred = -np.asarray(roots.omega)[None, :] + 1j * np.outer(ns, roots.beta)
    resid = np.abs(lam - pred).max(axis=1)
    slope = float(np.polyfit(np.log(ns), np.log(resid), 1)[0])
    return slope, ns, resid
