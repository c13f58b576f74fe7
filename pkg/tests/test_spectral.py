import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from qpgreen import spectral
from qpgreen.errors import DomainError, ToleranceError

SQRT_4PI = math.sqrt(4 * math.pi)


def test_band_edge_root():
    k = math.pi / 2
    alpha = math.log(2) / SQRT_4PI
    q = spectral.SpectralQuery(k, alpha, spectral.bracket_for(k, alpha))
    assert abs(spectral.solve_point_interaction(q)) < 1e-12


def test_bound_state_at_minus_one():
    k = math.pi / 2
    alpha = math.log(2 * math.cosh(1.0)) / SQRT_4PI
    q = spectral.SpectralQuery(k, alpha, (-3.0, 0.5))
    assert spectral.solve_point_interaction(q) == pytest.approx(-1.0, abs=1e-12)
    assert spectral.invert_closed(k, alpha) == pytest.approx(-1.0, abs=1e-14)


@given(ka=st.floats(0.1, 3.1), a=st.floats(0.5, 2.0), alpha=st.floats(-2.0, 2.0))
@settings(max_examples=60, deadline=None)
def test_solver_matches_inversion(ka, a, alpha):
    k = ka / a
    try:
        z_ref = spectral.invert_closed(k, alpha, a)
    except DomainError:
        assume(False)
    z = spectral.solve_point_interaction(spectral.SpectralQuery(k, alpha, spectral.bracket_for(k, alpha, a)), a)
    assert abs(z - z_ref) <= 1e-12 * max(1.0, abs(z_ref))
    assert abs(spectral.d00_real(z, k, a) - alpha) <= 1e-12


@given(ka=st.floats(0.1, 3.1))
@settings(max_examples=30, deadline=None)
def test_gamma_hat_increasing(ka):
    zs = np.linspace(-30.0, ka * ka * (1 - 1e-6), 50)
    gam = [spectral.karpeshina_gamma(float(z), ka) for z in zs]
    assert np.all(np.diff(gam) > 0)


def test_roots_monotone_in_alpha():
    k = 1.2
    zs = [spectral.invert_closed(k, al) for al in np.linspace(-1.0, 0.3, 12)]
    assert np.all(np.diff(zs) < 0)


def test_sigma_of_z():
    assert spectral.sigma_of_z(4.0) == 2.0
    assert spectral.sigma_of_z(-4.0) == 2j


def test_query_validation():
    with pytest.raises(DomainError):
        spectral.SpectralQuery(1.0, 0.0, (0.5, 0.2))
    with pytest.raises(DomainError):
        spectral.SpectralQuery(1.0, 0.0, (-1.0, 1.5))


def test_no_sign_change():
    q = spectral.SpectralQuery(1.0, 10.0, (-2.0, -1.0))
    with pytest.raises(DomainError):
        spectral.solve_point_interaction(q)


def test_residual_check():
    k, alpha = 1.0, 0.1
    q = spectral.SpectralQuery(k, alpha, spectral.bracket_for(k, alpha))
    with pytest.raises(ToleranceError):
        spectral.solve_point_interaction(q, tol=1e-40)


def test_d00_real_domain():
    with pytest.raises(DomainError):
        spectral.d00_real(2.0, 1.0)
