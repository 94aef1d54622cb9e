"""Shared closed-form Gram machinery over flattened (mode, branch) indices.

Exact-control synthesis, observability constants, Ingham frame bounds and
the feedback Gramian all reduce to Hermitian forms whose entries combine a
time integral of an exponential pair with a spatial overlap integral; both
have closed forms collected here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import FluidParams
from .spectral import TWO_PI, mode_system, z_weights


def texp(z, T: float):
    """Closed form of the time integral of e^{z s} over [0, T].

    The z -> 0 limit T replaces the removable singularity.
    """
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-14
    zs = np.where(small, 1.0, z)
    return np.where(small, T, (np.exp(zs * T) - 1.0) / zs)


def space_overlap(dn, lo: float, hi: float):
    """Closed form of the integral of e^{i dn x} over (lo, hi), dn integer."""
    dn = np.asarray(dn)
    zero = dn == 0
    dns = np.where(zero, 1, dn)
    return np.where(
        zero, hi - lo, (np.exp(1j * dns * hi) - np.exp(1j * dns * lo)) / (1j * dns)
    )


@dataclass
class BranchTable:
    """Flattened spectral data over modal indices a = (n, l), |n| <= N.

    For the mean-corrected subspace "Zm" a single n = 0 row is appended
    (lambda = 0, adjoint direction (1,0,0)/sqrt(2 pi b)); in "Zmm" there is
    no n = 0 row.
    """

    p: FluidParams
    idx_n: np.ndarray       # (K,) int
    idx_l: np.ndarray       # (K,) int, 0-based branch; -1 marks the n=0 row
    lam: np.ndarray         # (K,) complex
    alpha: np.ndarray       # (K, 3) complex adjoint coefficient triples
    psi: np.ndarray         # (K,) complex normalizers

    @property
    def size(self) -> int:
        return self.lam.size

    @property
    def sigma_coeff(self) -> np.ndarray:
        """Density component of each adjoint eigenfunction (alpha^1/psi)."""
        return self.alpha[:, 0] / self.psi


def build_branch_table(p: FluidParams, N: int, subspace: str = "Zmm") -> BranchTable:
    if subspace not in ("Zm", "Zmm"):
        raise ValidationError("branch table exists for Zm or Zmm only")
    idx_n, idx_l, lam, alpha, psi = [], [], [], [], []
    for n in [k for k in range(-N, N + 1) if k != 0]:
        m = mode_system(p, n)
        for l in range(3):
            idx_n.append(n)
            idx_l.append(l)
            lam.append(m.lambdas[l])
            alpha.append(m.xi_star_coeffs[l])
            psi.append(m.psi[l])
    if subspace == "Zm":
        idx_n.append(0)
        idx_l.append(-1)
        lam.append(0.0 + 0.0j)
        alpha.append(np.array([1.0, 0.0, 0.0], dtype=complex))
        psi.append(complex(np.sqrt(2.0 * p.b_eff * np.pi)))
    return BranchTable(
        p=p,
        idx_n=np.array(idx_n, dtype=int),
        idx_l=np.array(idx_l, dtype=int),
        lam=np.array(lam, dtype=complex),
        alpha=np.array(alpha, dtype=complex),
        psi=np.array(psi, dtype=complex),
    )


def terminal_gram(tab: BranchTable) -> np.ndarray:
    """Energy-inner-product Gram of the adjoint family {xi*_a}."""
    w = z_weights(tab.p)
    star = tab.alpha / tab.psi[:, None]
    g = TWO_PI * np.einsum("ap,p,cp->ca", star, w, np.conj(star))
    same_n = tab.idx_n[None, :] == tab.idx_n[:, None]
    return np.where(same_n, g, 0.0)


def exp_pair_integrals(tab: BranchTable, T: float) -> np.ndarray:
    """Matrix of the time integrals of e^{conj(lam_a)(T-t)} e^{lam_c (T-t)}."""
    return texp(np.conj(tab.lam)[None, :] + tab.lam[:, None], T)


def kernel_gram(tab: BranchTable, T: float, kernel_vals: np.ndarray) -> np.ndarray:
    """Hermitian Gram G[c, a] = conj(k_c) k_a * texp(conj(lam_a)+lam_c, T).

    kernel_vals[a] is the scalar observation of the a-th adjoint eigenmode
    (boundary functional value, or a spatial-overlap-free weight).
    """
    return (
        np.conj(kernel_vals)[:, None]
        * kernel_vals[None, :]
        * exp_pair_integrals(tab, T)
    )


def windowed_gram(
    tab: BranchTable, T: float, weights: np.ndarray, lo: float, hi: float
) -> np.ndarray:
    """Gram of kernels w_a e^{conj(lam_a)(T-t)} e^{i n_a x} over (0,T)x(lo,hi)."""
    si = space_overlap(tab.idx_n[None, :] - tab.idx_n[:, None], lo, hi)
    return (
        np.conj(weights)[:, None]
        * weights[None, :]
        * exp_pair_integrals(tab, T)
        * si
    )


def eigen_coefficients(tab: BranchTable, state) -> np.ndarray:
    """Direct-eigenbasis coordinates d_a = <z, xi*_a>_Z of a SpectralState."""
    w = z_weights(tab.p)
    d = np.zeros(tab.size, dtype=complex)
    star = tab.alpha / tab.psi[:, None]
    for a in range(tab.size):
        n = int(tab.idx_n[a])
        c = state.coeff(n) / np.sqrt(TWO_PI)
        d[a] = TWO_PI * np.sum(w * c * np.conj(star[a]))
    return d


def state_from_eigen(tab: BranchTable, d: np.ndarray, N: int):
    """Reassemble a SpectralState from direct-eigenbasis coordinates."""
    from .dynamics import SpectralState
    from .spectral import mode_system as _ms

    coeffs: dict[int, np.ndarray] = {}
    for a in range(tab.size):
        n = int(tab.idx_n[a])
        if n == 0:
            tri = np.array([1.0 / np.sqrt(2.0 * tab.p.b_eff * np.pi), 0.0, 0.0],
                           dtype=complex)
        else:
            m = _ms(tab.p, n)
            tri = m.xi_coeffs[tab.idx_l[a]]
        coeffs.setdefault(n, np.zeros(3, dtype=complex))
        coeffs[n] += d[a] * tri * np.sqrt(TWO_PI)
    return SpectralState(N=N, coeffs=coeffs, subspace="Z")
