import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cnsmax import FluidParams, ValidationError, derive_constants, validate


def test_big_d_unit_params(p1):
    # term-by-term oracle: 4*1*1*(1-1)^2 + 1 + 20 + 12 + 12 + 4 = 49
    dc = derive_constants(p1)
    assert dc.big_d == pytest.approx(49.0, abs=1e-10)
    assert dc.b == 1.0
    assert dc.inv_kappa == 1.0


def test_b_from_power_law():
    p = FluidParams(rho_s=1.0, u_s=1.0, kappa=1.0, mu=1.0, a=1.0, gamma=1.0)
    assert p.b_eff == pytest.approx(1.0)
    # consistent (a, gamma) matches a directly supplied b
    p2 = FluidParams(rho_s=2.0, u_s=1.0, kappa=1.0, mu=1.0, a=0.7, gamma=1.4)
    assert p2.b_eff == pytest.approx(0.7 * 1.4 * 2.0 ** (1.4 - 2.0))


def test_big_d_positive_off_unit():
    p = FluidParams(rho_s=2.0, u_s=1.0, kappa=1.0, mu=1.0, b=0.5)
    # first term vanishes (b rho_s = u_s^2); the remaining five keep D > 0
    assert derive_constants(p).big_d > 0


def test_validate_reports_violations():
    class Raw:
        rho_s, u_s, kappa, mu = -1.0, 1.0, 1.0, 1.0
        b, a, gamma = 1.0, None, None

    msgs = validate(Raw)
    assert msgs == ["rho_s must be positive"]

    class Raw2:
        rho_s, u_s, kappa, mu = 1.0, 1.0, 1.0, 1.0
        b, a, gamma = None, 1.0, 0.5

    assert validate(Raw2) == ["gamma must be >= 1"]


def test_constructor_rejects_invalid():
    with pytest.raises(ValidationError):
        FluidParams(rho_s=1.0, u_s=1.0, kappa=-2.0, mu=1.0, b=1.0)
    with pytest.raises(ValidationError):
        FluidParams(rho_s=1.0, u_s=1.0, kappa=1.0, mu=1.0)  # no pressure spec
    with pytest.raises(ValidationError):
        FluidParams(rho_s=1.0, u_s=1.0, kappa=1.0, mu=1.0, b=1.0, a=1.0, gamma=2.0)


def test_big_d_positive_on_1000_draws():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        vals = np.exp(rng.uniform(np.log(0.05), np.log(20.0), size=5))
        p = FluidParams(
            rho_s=vals[0], u_s=vals[1], kappa=vals[2], mu=vals[3], b=vals[4]
        )
        assert derive_constants(p).big_d > 0


@settings(max_examples=50, deadline=None)
@given(
    rho_s=st.floats(0.05, 20.0),
    u_s=st.floats(0.05, 20.0),
    kappa=st.floats(0.05, 20.0),
    mu=st.floats(0.05, 20.0),
    a=st.floats(0.05, 20.0),
    gamma=st.floats(1.0, 3.0),
)
def test_power_law_b_always_positive(rho_s, u_s, kappa, mu, a, gamma):
    p = FluidParams(rho_s=rho_s, u_s=u_s, kappa=kappa, mu=mu, a=a, gamma=gamma)
    assert p.b_eff > 0
    assert derive_constants(p).big_d > 0
