import numpy as np
import pytest

from cnsmax import FluidParams


@pytest.fixture(scope="session")
def p1() -> FluidParams:
    """Unit reference parameters used throughout the examples."""
    return FluidParams(rho_s=1.0, u_s=1.0, kappa=1.0, mu=1.0, b=1.0)


def make_params(seed: int) -> FluidParams:
    """Seeded random valid parameter set, moderate dynamic range."""
    rng = np.random.default_rng(seed)
    vals = np.exp(rng.uniform(np.log(0.5), np.log(2.0), size=5))
    return FluidParams(
        rho_s=float(vals[0]),
        u_s=float(vals[1]),
        kappa=float(vals[2]),
        mu=float(vals[3]),
        b=float(vals[4]),
    )
