import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special
from scipy.integrate import dblquad

from drumcert.basis import (
    DEFAULT_DELTA,
    build_mfs,
    disk_mode,
    disk_spectrum,
    mode_basis,
)
from drumcert.errors import ChargePointInside, CoincidentPoint, ConfigError
from drumcert.geometry import build_domain


def _fd_laplacian(f, p, h=1e-3):
    x, y = p
    pts = np.array([[x, y], [x + h, y], [x - h, y], [x, y + h], [x, y - h]])
    v = f(pts)
    return (v[1] + v[2] + v[3] + v[4] - 4 * v[0]) / h**2, v[0]


def test_charge_points_outside(smooth3):
    b = build_mfs(smooth3, 50.0, 120)
    y = b.charge_points
    r = np.hypot(y[:, 0], y[:, 1])
    ang = np.arctan2(y[:, 1], y[:, 0])
    assert np.all(r > smooth3.r(ang))


def test_disk_charges_on_circle(disk):
    b = build_mfs(disk, 10.0, 40)
    r = np.hypot(b.charge_points[:, 0], b.charge_points[:, 1])
    assert np.allclose(r, np.exp(DEFAULT_DELTA), rtol=1e-14)


def test_nonpositive_delta_rejected(disk):
    with pytest.raises(ChargePointInside):
        build_mfs(disk, 10.0, 40, delta=0.0)


def test_basis_value_is_y0(disk):
    E = 17.0
    b = build_mfs(disk, E, 30)
    p = np.array([[0.1, -0.3]])
    V, _, _ = b.evaluate(p)
    d = np.hypot(*(p[0] - b.charge_points[7]))
    assert V[0, 7] == pytest.approx(special.y0(np.sqrt(E) * d), rel=1e-14)


def test_coincident_point_raises(disk):
    b = build_mfs(disk, 10.0, 20)
    with pytest.raises(CoincidentPoint):
        b.evaluate(b.charge_points[:1])


@pytest.mark.parametrize("E", [3.0, 40.0])
def test_basis_satisfies_helmholtz(smooth3, E):
    b = build_mfs(smooth3, E, 30)
    for n in (0, 11, 29):
        lap, v = _fd_laplacian(lambda P: b.evaluate(P)[0][:, n], (0.2, 0.1))
        assert abs(lap + E * v) < 1e-4 * max(1.0, E)


def test_basis_gradient_matches_finite_difference(smooth3):
    b = build_mfs(smooth3, 25.0, 16)
    p = np.array([[0.3, -0.4]])
    _, gx, gy = b.evaluate(p)
    h = 1e-6
    fx = (b.evaluate(p + [h, 0])[0] - b.evaluate(p - [h, 0])[0]) / (2 * h)
    fy = (b.evaluate(p + [0, h])[0] - b.evaluate(p - [0, h])[0]) / (2 * h)
    assert np.allclose(gx, fx, atol=1e-7)
    assert np.allclose(gy, fy, atol=1e-7)


def test_disk_mode_rejects_bad_indices():
    with pytest.raises(ConfigError):
        disk_mode(0, 1, "sin")
    with pytest.raises(ConfigError):
        disk_mode(1, 0)


@pytest.mark.parametrize("m,k,parity", [(0, 1, "cos"), (1, 1, "sin"), (3, 2, "cos")])
def test_disk_mode_is_normalized(m, k, parity):
    md = disk_mode(m, k, parity)
    val, _ = dblquad(lambda r, t: md.value(np.array([[r * np.cos(t), r * np.sin(t)]]))[0] ** 2 * r,
                     0, 2 * np.pi, 0, 1, epsabs=1e-11, epsrel=1e-11)
    assert val == pytest.approx(1.0, rel=1e-9)


def test_disk_mode_vanishes_on_boundary_and_solves_helmholtz():
    md = disk_mode(2, 3, "sin")
    t = np.linspace(0, 2 * np.pi, 50)
    assert np.max(np.abs(md.value(np.column_stack([np.cos(t), np.sin(t)])))) < 1e-13
    lap, v = _fd_laplacian(md.value, (0.3, 0.25), h=1e-3)
    assert abs(lap + md.E * v) < 1e-3 * md.E


def test_disk_mode_gradient_regular_at_origin():
    md = disk_mode(1, 1, "cos")
    _, gx, gy = md.evaluate(np.array([[0.0, 0.0]]))
    # u = c J_1(j r) cos(theta) ~ c j x / 2 near the origin
    assert gx[0] == pytest.approx(md.norm_const * md.j / 2, rel=1e-14)
    assert gy[0] == pytest.approx(0.0, abs=1e-15)


def test_boundary_trace_matches_radial_derivative():
    md = disk_mode(4, 2, "cos")
    t = np.linspace(0, 2 * np.pi, 17)
    _, gx, gy = md.evaluate(np.column_stack([np.cos(t), np.sin(t)]))
    assert np.allclose(md.boundary_trace(t), gx * np.cos(t) + gy * np.sin(t), atol=1e-12)


def test_disk_spectrum_lowest_values():
    spec = disk_spectrum(60.0)
    j = lambda m, k: special.jn_zeros(m, k)[-1]
    assert spec[0].E == pytest.approx(j(0, 1) ** 2, rel=1e-14)
    assert [md.label for md in spec[:3]] == ["m0k1cos", "m1k1cos", "m1k1sin"]
    ref = sorted([j(m, k) ** 2 for m in range(0, 10) for k in range(1, 6) for _ in range(1 if m == 0 else 2)
                  if j(m, k) ** 2 <= 60.0])
    assert np.allclose([md.E for md in spec], ref, rtol=1e-14)


@settings(max_examples=20, deadline=None)
@given(E_max=st.floats(6.0, 800.0))
def test_spectrum_sorted_and_bounded(E_max):
    spec = disk_spectrum(E_max)
    Ev = np.array([md.E for md in spec])
    assert np.all(np.diff(Ev) >= 0)
    assert Ev.max() <= E_max
    for md in spec:
        if md.m > 0:
            assert sum(1 for o in spec if o.m == md.m and o.k == md.k) == 2


def test_mode_basis_columns_match_modes():
    mods = [disk_mode(0, 1), disk_mode(2, 1, "sin")]
    b = mode_basis(mods)
    p = np.array([[0.1, 0.2], [-0.3, 0.5]])
    V, gx, _ = b.evaluate(p)
    assert np.allclose(V[:, 1], mods[1].value(p))
    assert np.allclose(gx[:, 0], mods[0].evaluate(p)[1])


def test_distinct_angular_parts_have_orthogonal_traces():
    from drumcert.qo import boundary_gram
    mods = [disk_mode(1, 2, "cos"), disk_mode(1, 2, "sin"), disk_mode(2, 1, "cos"), disk_mode(5, 1, "sin")]
    g = boundary_gram(mods)
    for G in (g.gram_plain, g.gram_weighted):
        assert np.max(np.abs(G - np.diag(np.diag(G)))) < 1e-12
