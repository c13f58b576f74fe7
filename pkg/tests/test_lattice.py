import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpgreen.errors import DomainError, SingularInputError
from qpgreen.lattice import (
    BlochContext,
    Case,
    Cutoffs,
    build,
    chain,
    direct_points,
    kperp,
    recip_points,
    recip_within,
)


@pytest.mark.parametrize("text,case", [("1in2", Case.ONE_IN_TWO), ("1-in-3", Case.ONE_IN_THREE), ("2IN3", Case.TWO_IN_THREE)])
def test_case_parse(text, case):
    assert Case.parse(text) is case


def test_case_parse_rejects():
    with pytest.raises(DomainError):
        Case.parse("3in3")


def test_case_exponents():
    assert [c.c for c in Case] == [0.5, 1.0, 0.5]
    assert Case.ONE_IN_THREE.dimension == 3 and Case.ONE_IN_THREE.lattice_dim == 1


def test_chain_reciprocal():
    lat = chain("1in2", 1.0)
    assert lat.recip[0, 0] == pytest.approx(2 * math.pi)
    assert lat.v0 == 1.0


def test_square_reciprocal():
    lat = build("2in3", [[1, 0], [0, 1]])
    np.testing.assert_allclose(lat.recip, 2 * math.pi * np.eye(2), atol=1e-15)


def test_oblique_duality():
    lat = build("2in3", [[1, 0], [0.5, math.sqrt(3) / 2]])
    assert lat.v0 == pytest.approx(math.sqrt(3) / 2)
    n = np.array([[i, j] for i in range(-2, 3) for j in range(-2, 3)], dtype=float)
    dots = (n @ lat.basis) @ (n @ lat.recip).T / (2 * math.pi)
    assert np.max(np.abs(dots - np.round(dots))) < 1e-12


@pytest.mark.parametrize("basis", [[[1, 0], [2, 0]], [[0, 0], [0, 1]]])
def test_degenerate_basis(basis):
    with pytest.raises(DomainError):
        build("2in3", basis)


def test_bad_period():
    with pytest.raises(DomainError):
        build("1in3", -1.0)


def test_chain_points():
    pts = direct_points(chain("1in2"), 2.5)
    assert sorted(pts[:, 0].tolist()) == [-2.0, -1.0, 1.0, 2.0]


def test_square_points_brute_force():
    pts = direct_points(build("2in3", np.eye(2)), 1.5)
    brute = [(i, j) for i in range(-3, 4) for j in range(-3, 4) if 0 < math.hypot(i, j) <= 1.5]
    assert len(pts) == len(brute) == 8


@given(
    a1=st.tuples(st.floats(0.5, 2.0), st.floats(-0.2, 0.2)),
    a2=st.tuples(st.floats(-0.3, 0.3), st.floats(0.5, 2.0)),
    radius=st.floats(0.6, 6.0),
)
@settings(max_examples=40, deadline=None)
def test_points_inversion_symmetric_and_sorted(a1, a2, radius):
    lat = build("2in3", [a1, a2])
    pts = direct_points(lat, radius)
    norms = np.linalg.norm(pts, axis=1)
    assert np.all(np.diff(norms) >= -1e-12)
    a = {tuple(np.round(p, 12)) for p in pts}
    b = {tuple(np.round(-p, 12)) for p in pts}
    assert a == b
    assert np.all(norms <= radius * (1 + 1e-12))


def test_kperp_examples():
    assert kperp(5.0, 3.0) == pytest.approx(4.0)
    assert kperp(3.0, 5.0) == pytest.approx(4.0j)
    assert kperp(0.0, 2.0) == pytest.approx(2.0j)


@given(s=st.floats(0.0, 50.0), g=st.floats(0.0, 50.0), damp=st.floats(0.0, 0.5))
def test_kperp_upper_half_plane(s, g, damp):
    k = complex(kperp(s * (1 + 1j * damp), g))
    assert k.imag >= 0.0
    assert abs(k * k - (s * (1 + 1j * damp)) ** 2 + g * g) <= 1e-9 * max(1.0, s * s, g * g)


def test_grazing_detected():
    lat = chain("1in2")
    rp = recip_within(lat, [0.5], 2 * math.pi - 0.5, 20.0)
    assert rp.grazing.any()
    with pytest.raises(SingularInputError):
        rp.require_nongrazing()


def test_recip_points_cover_tolerance():
    lat = chain("1in2")
    ctx = BlochContext(3.0, [0.4], eta=0.05)
    rp = recip_points(lat, ctx)
    assert np.all(np.diff(rp.g) >= 0)
    gmax = rp.g.max()
    assert math.exp(-(gmax**2 - 9.0) * 0.05 / 2) <= 1e-15


def test_context_validation():
    with pytest.raises(DomainError):
        BlochContext(1.0, [0.0], eta=0.0)
    ctx = BlochContext(1.0, [0.0, 1.0])
    with pytest.raises(DomainError):
        ctx.check(chain("1in2"))
    with pytest.raises(DomainError):
        BlochContext(1 + 1j, [0.0]).sigma_real
    assert ctx.with_eta(0.3).eta == 0.3


@pytest.mark.parametrize("kw", [{"tol": 0.0}, {"tol": 2.0}, {"recip_radius": -1.0}, {"direct_radius": 0.0}])
def test_cutoffs_validation(kw):
    with pytest.raises(DomainError):
        Cutoffs(**kw)


def test_split_and_nearest():
    lat = build("2in3", [[1, 0], [0.3, 0.8]])
    par, perp = lat.split([0.1, 0.2, 0.7])
    np.testing.assert_array_equal(par, [0.1, 0.2])
    np.testing.assert_array_equal(perp, [0.7])
    assert lat.nearest_distance() == pytest.approx(math.hypot(0.3, 0.8))
