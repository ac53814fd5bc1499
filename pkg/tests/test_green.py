"""Green-function routes certify one another.

Layout mirrors the module: pinned closed-form values first, then the
cross-route agreements (the central correctness property), then the
derivative and the smeared ODE identity, then the bound envelopes.
Envelope constants are calibrated on a coarse lattice and asserted on a
disjoint finer one, so the checks validate the *shape* of each bound.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from camscat.green import (
    apply_green,
    green_angle_integral,
    green_cam,
    green_deriv,
    green_integer,
    green_ode_residual,
)
from camscat.space import SpaceParams, build_grid
from camscat.special import AngularIndex


# --------------------------------------------------------------- pinned values

def test_closed_form_pinned_value():
    # G_0(k=1; 1, 2) = -sin(1) e^{2i}
    got = green_integer(0, 1.0, 1.0, 2.0).value
    want = -np.sin(1.0) * np.exp(2j)
    assert abs(got - want) < 1e-14
    assert green_integer(0, 1.0, 1.0, 2.0).method_tag == "closed_form"


@settings(max_examples=60, deadline=None)
@given(
    ell=st.integers(min_value=0, max_value=6),
    R=st.floats(min_value=0.05, max_value=12.0),
    Rp=st.floats(min_value=0.05, max_value=12.0),
    kre=st.floats(min_value=-2.5, max_value=2.5),
    kim=st.floats(min_value=-2.5, max_value=2.5),
)
def test_swap_symmetry(ell, R, Rp, kre, kim):
    kv = complex(kre, kim)
    if abs(kv) < 0.05 or (kre < 0 and abs(kim) < 1e-6):
        return  # outside the cut k-plane
    a = green_integer(ell, kv, R, Rp).value
    b = green_integer(ell, kv, Rp, R).value
    # min/max form is symmetric up to multiplication order
    assert abs(a - b) <= 1e-14 * abs(a)


def test_angle_integral_matches_closed_form():
    for ell in (0, 1, 3, 5):
        for kv in (1.0, 2.0 + 0.3j, 0.6 - 0.4j):
            for R, Rp in ((1.0, 2.0), (0.3, 0.9), (4.0, 4.0)):
                a = green_integer(ell, kv, R, Rp).value
                b = green_angle_integral(ell, kv, R, Rp).value
                assert abs(a - b) <= 1e-10 * abs(a)


def test_cam_product_reduces_to_integer():
    for ell in (0, 1, 2, 4):
        for kv in (1.0 + 0.2j, 2j):
            a = green_cam(AngularIndex(float(ell)), kv, 0.8, 1.9).value
            b = green_integer(ell, kv, 0.8, 1.9).value
            assert abs(a - b) <= 1e-13 * abs(b)


# ------------------------------------------------------------ route agreement

def test_cam_trivial_interpolation_pin():
    # lambda = l = 1, k = i, R = R' = 1: both CAM paths hit the integer value
    want = green_integer(1, 1j, 1.0, 1.0).value
    got = green_cam(AngularIndex(1.0), 1j, 1.0, 1.0, method="integral").value
    assert abs(got - want) <= 1e-8 * abs(want)


def test_cam_method_agreement():
    # the module's central correctness property: the product form and the
    # discontinuity integral are independent evaluations of the same object
    samples = [
        (0.0, 1j, 1.0, 2.0),
        (0.25, 0.5j, 1.0, 2.0),
        (1.0 + 0.5j, 1j, 1.0, 2.0),
        (2.0 - 0.8j, 2j, 1.0, 2.0),
        (1.0, 1j, 1.3, 1.3),                          # diagonal (log endpoint)
        (1.5 + 0.4j, 2j * np.exp(0.5j), 1.0, 2.0),    # tilted k
        (0.3, 0.5j * np.exp(-0.78j), 1.0, 2.0),       # tilt near the pi/4 limit
        (0.25, 0.8j * np.exp(0.2j), 1.0, 1.0),        # tilted *and* diagonal
    ]
    for lv, kv, R, Rp in samples:
        a = green_cam(AngularIndex(lv), kv, R, Rp, method="product").value
        b = green_cam(AngularIndex(lv), kv, R, Rp, method="integral").value
        assert abs(a - b) <= 1e-7 * abs(a), (lv, kv)


def test_cam_integral_rejects_large_tilt():
    with pytest.raises(ValueError):
        green_cam(AngularIndex(1.0), 1.0, 1.0, 2.0, method="integral")


def test_domain_errors():
    with pytest.raises(ValueError):
        green_integer(-1, 1.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        green_integer(0, 1.0, -1.0, 2.0)
    with pytest.raises(ValueError):
        green_cam(AngularIndex(1.0), 1j, 1.0, 2.0, method="nope")
    with pytest.raises(ValueError):
        green_deriv(AngularIndex(1.0), 1j, 1.5, 1.5)


# ----------------------------------------------------------------- conjugation

def test_conjugation_symmetry_integer():
    # conj(G_l(k)) = G_l(-conj k)
    for ell in range(5):
        for kv in (1.0 + 0.5j, -0.8 + 1.1j, 0.3 - 0.9j, 2.0 - 0.1j):
            for R, Rp in ((0.5, 1.5), (3.0, 0.4)):
                a = np.conj(green_integer(ell, kv, R, Rp).value)
                b = green_integer(ell, -np.conj(kv), R, Rp).value
                assert abs(a - b) <= 1e-10 * abs(a)


def test_conjugation_symmetry_cam():
    # conj(G(lam,k)) = G(conj lam, -conj k) in the upper half k-plane
    for lv in (0.25, 1 + 0.5j, 2 - 0.8j, 0.6 - 1.1j):
        for kv in (1j, 0.7 + 0.9j, -1.2 + 0.4j, 2.0 + 0.1j):
            for R, Rp in ((0.5, 1.5), (2.0, 2.0), (0.2, 6.0)):
                a = np.conj(green_cam(AngularIndex(lv), kv, R, Rp).value)
                b = green_cam(
                    AngularIndex(np.conj(lv)), -np.conj(kv), R, Rp
                ).value
                assert abs(a - b) <= 1e-10 * abs(a)


# ------------------------------------------------------------------ derivative

def test_deriv_matches_finite_difference():
    cases = [
        (0.0, 1.0, 1.5, 0.7),            # integer order, R > R'
        (1.3 + 0.4j, 0.8 + 0.6j, 0.9, 2.1),
        (2.0, 1j, 0.4, 1.1),             # R < R' branch
    ]
    for lv, kv, R, Rp in cases:
        h = 1e-5
        gp = green_cam(AngularIndex(lv), kv, R + h, Rp).value
        gm = green_cam(AngularIndex(lv), kv, R - h, Rp).value
        fd = (gp - gm) / (2 * h)
        d = green_deriv(AngularIndex(lv), kv, R, Rp)
        assert abs(d - fd) <= 1e-5 * abs(fd)


def test_deriv_first_slot_only():
    a = green_deriv(AngularIndex(1.0), 1j, 0.7, 1.9)
    b = green_deriv(AngularIndex(1.0), 1j, 1.9, 0.7)
    assert abs(a - b) > 1e-3 * max(abs(a), abs(b))


def test_deriv_scaling_envelope():
    # |dG/dR| <= c1 (R'/R)^(1/2) at lam=1, k=i; calibrate c1 on a coarse
    # R-lattice, then check a finer disjoint one
    lam, kv = AngularIndex(1.0), 1j

    def ratios(r_values):
        out = []
        for R in r_values:
            for Rp in (0.5, 2.0):
                if abs(R - Rp) < 1e-9:
                    continue
                out.append(abs(green_deriv(lam, kv, R, Rp)) * np.sqrt(R / Rp))
        return out

    c1 = 1.05 * max(ratios(np.linspace(0.1, 10.0, 23)))
    fine = np.linspace(0.123, 9.917, 67)
    assert max(ratios(fine)) <= c1


# ----------------------------------------------------------- smeared identity

def _gauss_source(R):
    R = np.asarray(R)
    return R ** 2 * np.exp(-2.0 * R)


def test_ode_residual_smooth_source():
    lam, kv = AngularIndex(1.0), 1.0 + 0.2j
    r1 = green_ode_residual(
        lam, kv, _gauss_source, build_grid(SpaceParams(alpha=1.0, n_nodes=160))
    )
    assert r1 < 1e-3
    r2 = green_ode_residual(
        lam, kv, _gauss_source, build_grid(SpaceParams(alpha=1.0, n_nodes=320))
    )
    assert r2 <= 0.5 * r1


def test_ode_residual_zero_source():
    grid = build_grid(SpaceParams(alpha=1.0, n_nodes=160))
    zero = lambda R: np.zeros_like(np.asarray(R, dtype=float))
    assert green_ode_residual(AngularIndex(1.0), 1.0 + 0.2j, zero, grid) == 0.0


def test_ode_residual_rejects_coarse_grid():
    grid = build_grid(SpaceParams(alpha=1.0, n_nodes=25))
    with pytest.raises(ValueError):
        green_ode_residual(AngularIndex(1.0), 1j, _gauss_source, grid)


def test_outgoing_tail_decay():
    # lam = 0, k = i: psi vanishes at the origin and the far tail decays
    # at the exponential rate min(alpha, kappa) = 1
    grid = build_grid(SpaceParams(alpha=1.0, n_nodes=160))
    psi = apply_green(AngularIndex(0.0), 1j, _gauss_source, grid)
    assert abs(psi[0]) <= 1e-6 * np.max(np.abs(psi))
    R = grid.nodes
    sel = (R > 8.0) & (R < 14.0)
    slope = np.polyfit(R[sel], np.log(np.abs(psi[sel])), 1)[0]
    assert abs(slope + 1.0) < 0.05


# ---------------------------------------------------------- bound certificates

_UPPER_KS = [
    m * np.exp(1j * th) for m in (0.5, 2.0) for th in (0.15, 0.8, 1.57, 2.3, 2.99)
]
_LOWER_KS = [
    m * np.exp(1j * th) for m in (0.5, 2.0) for th in (-0.2, -1.0, -2.0, -2.9)
]
_FINE_UPPER_KS = [
    m * np.exp(1j * th) for m in (0.7, 1.4) for th in (0.3, 1.1, 1.9, 2.7)
]
_FINE_LOWER_KS = [
    m * np.exp(1j * th) for m in (0.7, 1.4) for th in (-0.5, -1.5, -2.5)
]


def test_integer_envelopes_direct():
    # |G_l| <= max(1, e^{-Im k (R+R')}) (1 + l pi)/|k|  and the global
    # uniform bound with the (1+R)^(1/2) factors hold with constant 1
    for ell in range(7):
        for kv in (1.0, 1 + 0.8j, 0.5 + 2j, 1 - 0.7j, -0.3 + 2j, 0.4 - 1.5j):
            for R in (0.1, 0.7, 2.0, 6.0):
                for Rp in (0.1, 0.7, 2.0, 6.0):
                    g = abs(green_integer(ell, kv, R, Rp).value)
                    pref = max(1.0, np.exp(-kv.imag * (R + Rp)))
                    assert g <= pref * (1 + ell * np.pi) / abs(kv)
                    cap = min(
                        (ell * np.pi + 1) / abs(kv),
                        0.5 * np.sqrt(np.pi / (2 * ell + 1)),
                    )
                    assert g <= pref * np.sqrt((1 + R) * (1 + Rp)) * cap


def _sup_ratio(points, rhs):
    sup = 0.0
    for args in points:
        g, bound = rhs(*args)
        sup = max(sup, g / bound)
    return sup


def test_envelope_half_width():
    # |G_l| <= c max(1, e^{-Im k(R+R')}) sqrt(pi R R' / (2l+1));
    # the shape is exact, the constant is calibrated (coarse -> fine)
    def rhs(ell, kv, R, Rp):
        g = abs(green_integer(ell, kv, R, Rp).value)
        pref = max(1.0, np.exp(-kv.imag * (R + Rp)))
        return g, pref * 0.5 * np.sqrt(np.pi * R * Rp / (2 * ell + 1))

    coarse = [
        (ell, kv, R, Rp)
        for ell in range(7)
        for kv in (1.0, 1 + 0.8j, 0.5 + 2j, 1 - 0.7j, 0.4 - 1.5j)
        for R in (0.1, 0.7, 2.0, 6.0)
        for Rp in (0.1, 0.7, 2.0, 6.0)
    ]
    c = 1.05 * _sup_ratio(coarse, rhs)
    fine = [
        (ell, kv, R, Rp)
        for ell in (0, 2, 5)
        for kv in (1.3 + 0.2j, 0.8 - 0.9j, 2.2j)
        for R in (0.23, 1.4, 4.8)
        for Rp in (0.31, 1.1, 5.3)
    ]
    assert _sup_ratio(fine, rhs) <= c


def test_envelope_reflection_decay():
    # |G(lam, i kappa)| <= c sqrt(RR')/(2 Re lam + 1) min(R/R',R'/R)^(Re lam+1/2)
    def rhs(lv, kap, R, Rp):
        g = abs(green_cam(AngularIndex(lv), 1j * kap, R, Rp).value)
        mn = min(R / Rp, Rp / R)
        return g, np.sqrt(R * Rp) / (2 * (2 * lv.real + 1)) * mn ** (lv.real + 0.5)

    lams = (0.25, 1 + 0.5j, 2 - 0.8j)
    kaps = (0.5, 1.0, 2.0)
    coarse = [
        (lv, kap, R, Rp)
        for lv in lams
        for kap in kaps
        for R in (0.3, 1.0, 2.7, 8.0)
        for Rp in (0.3, 1.0, 2.7, 8.0)
    ]
    c = 1.05 * _sup_ratio(coarse, rhs)
    fine = [
        (lv, kap, R, Rp)
        for lv in lams
        for kap in kaps
        for R in (0.45, 1.7, 5.2)
        for Rp in (0.61, 2.3, 6.8)
    ]
    assert _sup_ratio(fine, rhs) <= c


def test_envelope_origin_log():
    # two-branch bound with B(R) = 1 + ln(1+1/R) + sqrt(R): the
    # (2 Re lam + 1)^{-1} arm holds with constant 1; the kappa arm gets a
    # calibrated C, after which the min of the two arms is also certified
    B = lambda R: 1 + np.log(1 + 1 / R) + np.sqrt(R)

    def arm1(lv, kap, R, Rp):
        g = abs(green_cam(AngularIndex(lv), 1j * kap, R, Rp).value)
        return g, B(R) * B(Rp) / (2 * (2 * lv.real + 1))

    def arm2(lv, kap, R, Rp):
        g = abs(green_cam(AngularIndex(lv), 1j * kap, R, Rp).value)
        return g, B(R) * B(Rp) * (2 * (lv.real + 1) + np.log(1 + kap ** -2)) / kap

    lams = (0.25, 1.0, 1 + 0.5j, 2 - 0.8j, 4.0)
    kaps = (0.3, 1.0, 3.0)
    radii = (0.05, 0.3, 1.0, 2.7, 8.0, 15.0)
    coarse = [
        (lv, kap, R, Rp) for lv in lams for kap in kaps for R in radii for Rp in radii
    ]
    assert _sup_ratio(coarse, arm1) <= 1.0
    C = 1.05 * _sup_ratio(coarse, arm2)
    fine_radii = (0.08, 0.6, 1.9, 5.5, 12.0)
    fine = [
        (lv, kap, R, Rp)
        for lv in lams
        for kap in (0.5, 2.0)
        for R in fine_radii
        for Rp in fine_radii
    ]
    for lv, kap, R, Rp in fine:
        g, b1 = arm1(lv, kap, R, Rp)
        _, b2 = arm2(lv, kap, R, Rp)
        assert g <= min(b1, C * b2)


def test_envelope_upper_half_plane():
    # |G(lam,k)| <= c max(e^{2 Im lam phi}, 1)(1 + 1/(2 Re lam + 1))
    #               Phi^{-(Re lam + 1/2)} sqrt(RR') min^(Re lam+1/2),
    # phi = -Arg(-ik), Phi = 1 or sin 2|phi|; Im k > 0
    def rhs(lv, kv, R, Rp):
        g = abs(green_cam(AngularIndex(lv), kv, R, Rp).value)
        phi = -np.angle(-1j * kv)
        big_phi = 1.0 if abs(phi) <= np.pi / 4 else np.sin(2 * abs(phi))
        mn = min(R / Rp, Rp / R)
        bound = (
            max(np.exp(2 * lv.imag * phi), 1.0)
            * (1 + 1 / (2 * lv.real + 1))
            * big_phi ** -(lv.real + 0.5)
            * np.sqrt(R * Rp)
            * mn ** (lv.real + 0.5)
        )
        return g, bound

    lams = (0.25, 1.0, 1 + 0.5j, 2 - 0.8j, 0.5 + 1.2j)
    coarse = [
        (lv, complex(kv), R, Rp)
        for lv in lams
        for kv in _UPPER_KS
        for R in (0.3, 1.0, 3.0)
        for Rp in (0.3, 1.0, 3.0)
    ]
    c = 1.05 * _sup_ratio(coarse, rhs)
    fine = [
        (lv, complex(kv), R, Rp)
        for lv in lams
        for kv in _FINE_UPPER_KS
        for R in (0.5, 1.8)
        for Rp in (0.7, 2.4)
    ]
    assert _sup_ratio(fine, rhs) <= c


def test_envelope_closed_upper_half_plane():
    # |G(lam,k)| <= c e^{pi |Im lam|}(1 + 1/(2 Re lam+1)) sqrt(RR'), Im k >= 0
    def rhs(lv, kv, R, Rp):
        g = abs(green_cam(AngularIndex(lv), kv, R, Rp).value)
        bound = (
            np.exp(np.pi * abs(lv.imag))
            * (1 + 1 / (2 * lv.real + 1))
            * np.sqrt(R * Rp)
        )
        return g, bound

    lams = (0.25, 1.0, 1 + 0.5j, 2 - 0.8j, 0.5 + 1.2j)
    coarse = [
        (lv, complex(kv), R, Rp)
        for lv in lams
        for kv in _UPPER_KS + [0.5, 2.0]
        for R in (0.3, 1.0, 3.0)
        for Rp in (0.3, 1.0, 3.0)
    ]
    c = 1.05 * _sup_ratio(coarse, rhs)
    fine = [
        (lv, complex(kv), R, Rp)
        for lv in lams
        for kv in _FINE_UPPER_KS + [0.9, 1.7]
        for R in (0.5, 1.8)
        for Rp in (0.7, 2.4)
    ]
    assert _sup_ratio(fine, rhs) <= c


def test_envelope_lower_half_plane():
    # Im k < 0: |G| <= c sqrt(RR') cosh[Im k (R+R')] max(e^{3 pi Im lam}, 1)
    #                  (1 + 1/(2 Re lam + 1));  Im lam enters *signed*
    def rhs(lv, kv, R, Rp):
        g = abs(green_cam(AngularIndex(lv), kv, R, Rp).value)
        bound = (
            np.sqrt(R * Rp)
            * np.cosh(kv.imag * (R + Rp))
            * max(np.exp(3 * np.pi * lv.imag), 1.0)
            * (1 + 1 / (2 * lv.real + 1))
        )
        return g, bound

    lams = (0.25, 1.0, 1 + 0.5j, 2 - 0.8j, 0.5 + 1.2j)
    coarse = [
        (lv, complex(kv), R, Rp)
        for lv in lams
        for kv in _LOWER_KS
        for R in (0.3, 1.0, 3.0)
        for Rp in (0.3, 1.0, 3.0)
    ]
    c = 1.05 * _sup_ratio(coarse, rhs)
    fine = [
        (lv, complex(kv), R, Rp)
        for lv in lams
        for kv in _FINE_LOWER_KS
        for R in (0.5, 1.8)
        for Rp in (0.7, 2.4)
    ]
    assert _sup_ratio(fine, rhs) <= c
