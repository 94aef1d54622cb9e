import numpy as np
import pytest

from cnsmax.errors import MultiplicityDetected
from cnsmax.spectral import (
    asymptotic_frequencies,
    biorthogonality_matrix,
    branch_residual_slope,
    detect_multiplicity,
    eigenvectors,
    gamma_matrix,
    min_eigenvalue_gap,
    mode_eigenvalues,
    mode_eigenvalues_batch,
    mode_matrix,
    mode_system,
    riesz_frame_bounds,
    solve_beta_cubic,
    z_weights,
    TWO_PI,
)
from conftest import make_params


def test_beta_roots_p1(p1):
    r = solve_beta_cubic(p1)
    assert np.allclose(r.beta, (0.8019, -0.5550, -2.2470), atol=2e-4)
    # Vieta: sum = -2 u_s, product = mu u_s / (kappa rho_s)
    assert sum(r.beta) == pytest.approx(-2.0, abs=1e-12)
    assert np.prod(r.beta) == pytest.approx(1.0, abs=1e-12)


def test_omega_p1_against_large_n_eigensolve(p1):
    r = solve_beta_cubic(p1)
    assert np.allclose(r.omega, (0.5432, 0.3493, 0.1076), atol=1.5e-4)
    assert sum(r.omega) == pytest.approx(1.0, rel=1e-9)  # 1/kappa
    lam = mode_eigenvalues_batch(p1, [10_000])[0]
    assert np.allclose(-lam.real, r.omega, atol=1e-6)


def test_vieta_random_params():
    for seed in (1, 2, 3):
        p = make_params(seed)
        r = solve_beta_cubic(p)
        assert sum(r.beta) == pytest.approx(-2 * p.u_s, rel=1e-12, abs=1e-12)
        assert np.prod(r.beta) == pytest.approx(
            p.mu * p.u_s / (p.kappa * p.rho_s), rel=1e-10
        )
        assert sum(r.omega) == pytest.approx(1.0 / p.kappa, rel=1e-9)
        assert len({np.sign(w) for w in r.omega}) == 1 and r.omega[0] > 0


def test_omega_difference_identity(p1):
    # |omega_j - omega_l| agrees with the closed parameter expression
    p = p1
    r = solve_beta_cubic(p)
    beta, pp = np.asarray(r.beta), np.asarray(r.p_prime)
    b = p.b_eff
    for (j, l, q) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)]:
        expr = (beta[j] - beta[l]) / (p.kappa * pp[j] * pp[l]) * (
            2 * p.mu * p.u_s**2 / (p.kappa * p.rho_s * beta[q])
            + beta[q] * (2 * b * p.rho_s - 2 * p.u_s**2 - p.mu / (p.kappa * p.rho_s))
            + 2 * p.u_s * (b * p.rho_s - p.u_s**2)
        )
        assert abs(r.omega[j] - r.omega[l]) == pytest.approx(abs(expr), rel=1e-8)


def test_asymptotic_frequencies(p1):
    r = solve_beta_cubic(p1)
    pred = asymptotic_frequencies(p1, r, 10)
    assert pred[0] == pytest.approx(-0.5431 + 8.0194j, abs=2e-3)
    # real parts sum to -1/kappa for any n
    assert pred.real.sum() == pytest.approx(-1.0, rel=1e-9)
    # conjugate reflection between n and -n up to the O(1/n) residual
    lam_p = mode_eigenvalues_batch(p1, [10])[0]
    lam_m = mode_eigenvalues_batch(p1, [-10])[0]
    assert np.allclose(np.conj(lam_m), lam_p, atol=1e-12)
    with pytest.raises(ValueError):
        asymptotic_frequencies(p1, r, 0)


def test_mode_matrix(p1):
    A1 = mode_matrix(p1, 1)
    assert A1[2, 2] == pytest.approx(-1.0)
    # trace = -1/kappa - 2 i n u_s (matches the eigenvalue sum identities)
    A2 = mode_matrix(p1, 2)
    assert np.trace(A2) == pytest.approx(-1.0 - 4.0j)
    with pytest.raises(ValueError):
        mode_matrix(p1, 0)
    # eigenvalues of the matrix match the characteristic-cubic roots
    lam = np.sort_complex(np.linalg.eigvals(mode_matrix(p1, 7)))
    lam2 = np.sort_complex(mode_eigenvalues(p1, 7))
    assert np.allclose(lam, lam2, atol=1e-10)


def test_mode_eigenvalues_p1_n10(p1):
    lam = mode_eigenvalues(p1, 10)
    assert lam[0] == pytest.approx(-0.54326 + 8.00346j, abs=5e-4)
    assert lam.real.sum() == pytest.approx(-1.0, abs=1e-10)
    assert lam.imag.sum() == pytest.approx(-20.0, abs=1e-9)
    assert np.all(lam.real < 0)


def test_real_parts_negative_wide_range(p1):
    ns = np.concatenate([np.arange(-200, 0), np.arange(1, 201)])
    for p in [p1, make_params(5)]:
        lam = mode_eigenvalues_batch(p, ns)
        assert np.all(lam.real < 0)


def test_biorthogonality(p1):
    for n in list(range(1, 51)) + [-3, -17, -50]:
        m = mode_system(p1, n)
        err = np.max(np.abs(biorthogonality_matrix(p1, m) - np.eye(3)))
        assert err < 1e-9
        assert np.allclose(m.xi_star_coeffs[:, 0], 1.0)  # alpha^1 = 1 exactly


def test_normalizer_asymptotics(p1):
    # |theta|, |psi| approach the same branch-wise limit at |n| -> 200
    r = solve_beta_cubic(p1)
    beta = np.asarray(r.beta)
    b = p1.b_eff
    limit = np.sqrt(
        TWO_PI * (
            b
            + (beta + p1.u_s) ** 2 / p1.rho_s
            + p1.mu * (beta + p1.u_s) ** 2 / (p1.kappa * p1.rho_s**2 * beta**2)
        )
    )
    for n in (200, -200):
        m = mode_system(p1, n)
        assert np.allclose(m.theta, limit, rtol=2e-2)
        assert np.allclose(np.abs(m.psi), limit, rtol=2e-2)


def test_gamma_matrix_det(p1):
    m = mode_system(p1, 5)
    gm = gamma_matrix(p1, m)
    det = np.linalg.det(gm.entries)
    assert abs(det - gm.det_closed_form) <= 1e-9 * abs(det)
    # determinant magnitude settles at large |n|
    d100 = gamma_matrix(p1, mode_system(p1, 100)).det_closed_form
    d200 = gamma_matrix(p1, mode_system(p1, 200)).det_closed_form
    assert abs(abs(d100) - abs(d200)) / abs(d200) < 1e-2
    # invertibility with finite conditioning across a range
    conds = [
        np.linalg.cond(gamma_matrix(p1, mode_system(p1, n)).entries)
        for n in (1, 2, 5, 20, 100, -1, -20)
    ]
    assert max(conds) < 1e3


def test_gamma_diagonalizes_mode_matrix(p1):
    from scipy.linalg import expm

    m = mode_system(p1, 4)
    gm = gamma_matrix(p1, m)
    t = 0.37
    direct = expm(t * mode_matrix(p1, 4))
    via = np.linalg.solve(gm.entries, np.diag(np.exp(t * m.lambdas)) @ gm.entries)
    assert np.allclose(direct, via, atol=1e-12)


def test_riesz_frame_bounds(p1):
    # orthonormal sanity: the weighted Fourier frame has unit Gram by design
    w = z_weights(p1)
    phi = np.diag(1.0 / np.sqrt(TWO_PI * w))  # component triples of phi_{n,l}
    gram = TWO_PI * np.einsum("lp,p,qp->lq", phi, w, np.conj(phi))
    assert np.allclose(gram, np.eye(3), atol=1e-14)

    lo10, hi10 = riesz_frame_bounds(p1, 10)
    lo25, hi25 = riesz_frame_bounds(p1, 25)
    assert lo25 > 0
    # principal-submatrix nesting: bounds widen with N
    assert lo25 <= lo10 <= hi10 <= hi25


def test_detect_multiplicity_clean_spectrum(p1):
    for n in list(range(1, 201, 7)) + [200, -200]:
        rep = detect_multiplicity(p1, n)
        assert not rep.flag
        m = mode_system(p1, n)
        assert np.all(np.abs(m.psi) > 1e-10)
    # empirical spectral-gap floor over the full computed range
    gap = min_eigenvalue_gap(p1, 200)
    assert gap > 0


def test_multiplicity_guard_fires(p1):
    # synthetic degenerate triple: psi -> 0 must be caught
    lam = mode_eigenvalues(p1, 3)
    fake = np.array([lam[0], lam[1], lam[1]])
    with pytest.raises(MultiplicityDetected):
        eigenvectors(p1, 3, fake, tol_psi=1e30)


def test_branch_residual_slope(p1):
    slope, ns, resid = branch_residual_slope(p1, 20, 200)
    assert -1.3 <= slope <= -0.7
    assert np.all(resid > 0)
