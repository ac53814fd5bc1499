"""Angular-momentum Green functions G_l(k;R,R') and their interpolation
G(lambda,k;R,R') to complex angular momentum.

Four evaluation routes, kept deliberately independent so they can certify
one another:

``closed_form``
    G_l = -ik R R' j_l(k R_<) h^(1)_l(k R_>), integer l.
``angle_integral``
    the finite integral -(1/2) int_{|R-R'|}^{R+R'} e^{iku} P_l(cos
    theta(u)) du, integer l.  (The sign pairs it with the product form,
    whose distributional identity D G = +delta fixes the convention.)
``cam_product``
    the same product built from complex-order Bessel/Hankel functions;
    the production route for complex lambda.
``cam_integral``
    the discontinuity integral -(1/pi) int_0^inf cos(kappa u)
    Q_lambda(z_0 + u^2/(2RR')) du with z_0 = (R/R' + R'/R)/2, continued
    in k by rotating the u-ray.  Only offered for Arg(-ik) within pi/4
    of the imaginary axis, where the rotated path keeps the Legendre
    argument off the cut [-1, 1]; it is the oracle, not the fast path.

``apply_green`` integrates a smooth source against G with the kink at
R = R' split exactly (prefix sums over panels plus partial panels), so
downstream kernel compositions see only smooth integrands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from mpmath import mp
from numpy.polynomial.legendre import leggauss
from scipy.special import eval_legendre, spherical_jn

from .space import RadialGrid, _ORIGIN_POWER
from .special import (
    AngularIndex,
    CutMomentum,
    gl_panels,
    sph_bessel_j,
    sph_hankel1,
    sph_hankel1_complex,
)

__all__ = [
    "GreenEval",
    "green_integer",
    "green_angle_integral",
    "green_cam",
    "green_deriv",
    "green_matrix",
    "apply_green",
    "green_ode_residual",
]


@dataclass(frozen=True)
class GreenEval:
    value: complex
    method_tag: str


def _as_lambda(lam) -> AngularIndex:
    return lam if isinstance(lam, AngularIndex) else AngularIndex(lam)


def _as_momentum(k) -> CutMomentum:
    return k if isinstance(k, CutMomentum) else CutMomentum(k)


def _check_radii(R, Rp):
    if not (R > 0 and Rp > 0):
        raise ValueError("radii must be positive")


# ------------------------------------------------------------ integer routes

def green_integer(ell, k, R, Rp) -> GreenEval:
    """Closed product form for integer angular momentum."""
    ell = int(ell)
    if ell < 0:
        raise ValueError("ell must be a nonnegative integer")
    kv = _as_momentum(k).value
    _check_radii(R, Rp)
    lo, hi = min(R, Rp), max(R, Rp)
    val = -1j * kv * R * Rp * spherical_jn(ell, kv * lo) * sph_hankel1(ell, kv * hi)
    return GreenEval(complex(val), "closed_form")


def green_angle_integral(ell, k, R, Rp, n_nodes=400) -> GreenEval:
    """Finite-interval angle integral, integer angular momentum."""
    ell = int(ell)
    if ell < 0:
        raise ValueError("ell must be a nonnegative integer")
    kv = _as_momentum(k).value
    _check_radii(R, Rp)
    u, w = gl_panels(abs(R - Rp), R + Rp, max(4, n_nodes // 20), 20)
    ct = (R * R + Rp * Rp - u * u) / (2.0 * R * Rp)
    val = -0.5 * np.sum(w * np.exp(1j * kv * u) * eval_legendre(ell, ct))
    return GreenEval(complex(val), "angle_integral")


# ----------------------------------------------------------------- CAM routes

def _green_product(lam: AngularIndex, kv: complex, R, Rp) -> complex:
    lo, hi = min(R, Rp), max(R, Rp)
    return complex(
        -1j
        * kv
        * R
        * Rp
        * sph_bessel_j(lam, kv * lo)
        * sph_hankel1_complex(lam, kv * hi)
    )


def _q_near_one(nu, delta, dps: int = 30):
    """Q_nu(1 + delta) for |delta| << 1, where the argument would collapse
    onto the branch point in fixed precision.

    Uses the logarithmic solution of the degree-nu Legendre equation about
    the singular point:

        Q_nu(1+d) = -(1/2) P_nu ln(d/2) - (gamma + psi(nu+1)) P_nu
                    - (1/2) sum_{m>=1} p_m h_m (-d/2)^m

    with p_m the Legendre series coefficients and h_m the attached harmonic
    sums.  Integer nu is regularized by a perturbation far below the target
    accuracy (the pole of h_m against the zero of p_m has a finite limit).
    """
    with mp.workdps(dps):
        nuu = mp.mpc(nu)
        if nuu.imag == 0 and abs(nuu - mp.nint(nuu.real)) < mp.mpf(10) ** (-dps + 10):
            nuu = nuu + mp.mpf(10) ** (-dps + 10)
        a = -nuu
        b = nuu + 1
        d = mp.mpc(delta)
        w = -d / 2
        p_part = mp.mpf(1)
        term = mp.mpf(1)
        g_part = mp.mpf(0)
        h = mp.mpf(0)
        for m in range(1, 60):
            term = term * (a + m - 1) * (b + m - 1) / (m * m) * w
            h = h + 1 / (a + m - 1) + 1 / (b + m - 1) - mp.mpf(2) / m
            p_part = p_part + term
            g_part = g_part + term * h
            if abs(term) * (1 + abs(h)) < mp.mpf(10) ** (-dps - 5):
                break
        return (
            -p_part / 2 * mp.log(d / 2)
            - (mp.euler + mp.digamma(nuu + 1)) * p_part
            - g_part / 2
        )


def _green_cam_integral(lam: AngularIndex, kv: complex, R, Rp) -> complex:
    # G = -(1/pi) int_0^inf cos(kappa u) Q_lam(z_0 + u^2/(2RR')) du at
    # k = i kappa, with the u-ray rotated by e^{-i phi} for tilted k.
    # (The prefactor is pinned against the product form at integer lambda.)
    lv = lam.value
    z0 = 0.5 * (R / Rp + Rp / R)
    phi = np.angle(-1j * kv)
    if abs(phi) > np.pi / 4 + 1e-12:
        raise ValueError(
            "integral route is restricted to Arg(-ik) within pi/4 of the "
            "imaginary k-axis; use the product route elsewhere"
        )
    mod_k = abs(kv)
    # oscillatory tail decays only algebraically, ~ u^(-2 Re lam - 1):
    # Richardson extrapolation over half-periods handles it
    rot = complex(np.exp(-2j * phi))
    c2 = 2.0 * R * Rp
    z0m1 = (R - Rp) ** 2 / c2  # z0 - 1 without cancellation
    with mp.workdps(20):
        lmp = mp.mpc(lv)

        def f(u):
            delta = z0m1 + rot * u * u / c2
            if abs(delta) < 1e-6:
                return mp.cos(mod_k * u) * _q_near_one(lmp, delta)
            return mp.cos(mod_k * u) * mp.legenq(lmp, 0, 1 + mp.mpc(delta), type=3)

        # quadosc applies Gauss-Legendre to every segment, which converges
        # poorly against the logarithmic endpoint at u = 0 when R = R';
        # do the first half-period with tanh-sinh and hand over the rest
        u1 = mp.pi / (2 * mod_k)
        head = mp.quad(f, [0, u1])
        tail = mp.quadosc(f, [u1, mp.inf], period=2 * np.pi / mod_k)
        val = head + tail
    return complex(-np.exp(-1j * phi) / np.pi * complex(val))


def green_cam(lam, k, R, Rp, method="product") -> GreenEval:
    """Green function at complex angular momentum.

    ``method="product"`` is the fast default; ``method="integral"`` is the
    independent route used for cross-validation (k = i kappa, or k tilted
    from the imaginary axis by at most pi/4).
    """
    lam = _as_lambda(lam)
    kv = _as_momentum(k).value
    _check_radii(R, Rp)
    if method == "product":
        return GreenEval(_green_product(lam, kv, R, Rp), "cam_product")
    if method == "integral":
        return GreenEval(_green_cam_integral(lam, kv, R, Rp), "cam_integral")
    raise ValueError(f"unknown method {method!r}")


def green_deriv(lam, k, R, Rp) -> complex:
    """d/dR of the Green function (first slot), via the upward ladder
    d/dz[z f_lam(z)] = (lam+1) f_lam(z) - z f_{lam+1}(z), which stays in
    Re lambda > -1/2 for every admissible lambda."""
    lam = _as_lambda(lam)
    kv = _as_momentum(k).value
    _check_radii(R, Rp)
    if R == Rp:
        raise ValueError("d/dR jumps across R = R'; evaluate off the diagonal")
    lv = lam.value
    if lam.integer_flag:
        jlam, jlam1 = (lambda z: spherical_jn(lam.ell, z)), (
            lambda z: spherical_jn(lam.ell + 1, z)
        )
        hlam, hlam1 = (lambda z: sph_hankel1(lam.ell, z)), (
            lambda z: sph_hankel1(lam.ell + 1, z)
        )
    else:
        jlam, jlam1 = (lambda z: sph_bessel_j(lam, z)), (
            lambda z: sph_bessel_j(AngularIndex(lv + 1), z)
        )
        hlam, hlam1 = (lambda z: sph_hankel1_complex(lam, z)), (
            lambda z: sph_hankel1_complex(AngularIndex(lv + 1), z)
        )
    if R < Rp:
        z = kv * R
        ladder = (lv + 1) * jlam(z) - z * jlam1(z)
        return complex(-1j * kv * Rp * hlam(kv * Rp) * ladder)
    z = kv * R
    ladder = (lv + 1) * hlam(z) - z * hlam1(z)
    return complex(-1j * kv * Rp * jlam(kv * Rp) * ladder)


def green_matrix(lam, k, grid: RadialGrid) -> np.ndarray:
    """Dense node matrix G(R_i, R_j), vectorized at integer order.

    Complex orders fall back to the pointwise product rule; integer
    orders build -ik R R' j(kR<) h(kR>) from outer products.  Entries
    where the Hankel factor overflows are zeroed: that happens only
    where the Bessel factor underflows faster, so the true product is
    far below roundoff on any row that matters.
    """
    lam = _as_lambda(lam)
    kv = _as_momentum(k).value
    R = grid.nodes
    if lam.integer_flag:
        lo = np.minimum.outer(R, R)
        hi = np.maximum.outer(R, R)
        with np.errstate(over="ignore", invalid="ignore"):
            G = (-1j * kv * np.outer(R, R)
                 * spherical_jn(lam.ell, kv * lo)
                 * sph_hankel1(lam.ell, kv * hi))
        return np.where(np.isfinite(G), G, 0.0)
    n = grid.n
    G = np.empty((n, n), dtype=complex)
    for i in range(n):
        # symmetric in (R, R'): fill the upper triangle once
        for j in range(i, n):
            G[i, j] = green_cam(lam, kv, R[i], R[j]).value
            G[j, i] = G[i, j]
    return G


# --------------------------------------------------- smeared application of G

def _prefix_integrals(f, grid: RadialGrid, n_gl=20):
    """Prefix integrals I_lo(R_i) = int_0^{R_i} f, the panel containing
    R_i integrated partially.

    ``f`` must accept an ndarray of radii and be integrable down to R=0
    on the grid quadrature (regular solutions).  The first panel is
    handled in the u^m pulled-back variable so fractional powers at the
    origin keep their accuracy.
    """
    nodes = grid.nodes
    edges = grid.panel_edges
    q = grid.weights
    per = grid.nodes_per_panel
    n = nodes.size
    m = _ORIGIN_POWER
    e1 = edges[1]
    fn = np.asarray(f(nodes), dtype=complex)
    panel_int = np.add.reduceat(q * fn, np.arange(0, n, per))
    prefix = np.concatenate(([0.0], np.cumsum(panel_int)))
    panel_of = np.searchsorted(edges, nodes, side="right") - 1
    xg, wg = leggauss(n_gl)
    lo = edges[panel_of]
    # map [lo_i, R_i]; in the first panel integrate in u with R = e1 u^m
    a = np.where(panel_of == 0, 0.0, lo)
    b = np.where(panel_of == 0, (nodes / e1) ** (1.0 / m), nodes)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    XS = half[:, None] * xg[None, :] + mid[:, None]
    first = (panel_of == 0)[:, None]
    radii = np.where(first, e1 * XS ** m, XS)
    jac = np.where(first, e1 * m * XS ** (m - 1), 1.0)
    vals = np.asarray(f(radii.ravel()), dtype=complex).reshape(radii.shape)
    partial_lo = half * np.einsum("j,ij->i", wg, vals * jac)
    return prefix[panel_of] + partial_lo


def _suffix_integrals(f, grid: RadialGrid, n_gl=20, ladder_ratio=4.0):
    """Suffix integrals I_hi(R_i) = int_{R_i}^{rmax} f, accumulated from
    the outer edge inward.

    The running sums never include the first panel, and partial pieces
    inside it use a geometrically graded ladder of short GL rules.  This
    matters because the irregular solution at angular momentum lambda
    makes f rise like R^(-Re lambda) toward the origin: the suffix
    integral at each node is finite, but any rule that integrates f
    across R=0 (as a prefix construction would) produces a huge spurious
    head that wipes out everything else in the subtraction.
    """
    nodes = grid.nodes
    edges = grid.panel_edges
    q = grid.weights
    per = grid.nodes_per_panel
    n = nodes.size
    e1 = edges[1]
    with np.errstate(over="ignore", invalid="ignore"):
        fn = np.asarray(f(nodes), dtype=complex)
        panel_int = np.add.reduceat(q * fn, np.arange(0, n, per))
    # tail[p] = sum of panel integrals over panels >= p; the reversed
    # cumsum keeps the (possibly garbage) first-panel value out of every
    # entry except tail[0], which is never used.
    tail = np.concatenate((np.cumsum(panel_int[::-1])[::-1], [0.0]))
    panel_of = np.searchsorted(edges, nodes, side="right") - 1
    out = np.empty(n, dtype=complex)

    deep = panel_of >= 1
    if np.any(deep):
        a = nodes[deep]
        b = edges[panel_of[deep] + 1]
        xg, wg = leggauss(n_gl)
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        XS = half[:, None] * xg[None, :] + mid[:, None]
        vals = np.asarray(f(XS.ravel()), dtype=complex).reshape(XS.shape)
        out[deep] = tail[panel_of[deep] + 1] + half * np.einsum(
            "j,ij->i", wg, vals
        )

    head = np.nonzero(~deep)[0]
    if head.size:
        xg, wg = leggauss(16)
        seg_a, seg_b, owner = [], [], []
        for i in head:
            a = nodes[i]
            rungs = max(1, int(np.ceil(np.log(e1 / a) / np.log(ladder_ratio))))
            cuts = np.minimum(a * ladder_ratio ** np.arange(rungs + 1), e1)
            cuts[0] = a
            cuts[-1] = e1
            seg_a.append(cuts[:-1])
            seg_b.append(cuts[1:])
            owner.append(np.full(rungs, i))
        sa = np.concatenate(seg_a)
        sb = np.concatenate(seg_b)
        ow = np.concatenate(owner)
        half = 0.5 * (sb - sa)
        mid = 0.5 * (sa + sb)
        XS = half[:, None] * xg[None, :] + mid[:, None]
        vals = np.asarray(f(XS.ravel()), dtype=complex).reshape(XS.shape)
        seg = half * np.einsum("j,ij->i", wg, vals)
        acc = np.zeros(n, dtype=complex)
        np.add.at(acc, ow, seg)
        out[head] = tail[1] + acc[head]
    return out


def apply_green(lam, k, f, grid: RadialGrid):
    """psi(R_i) = int_0^rmax G(lambda,k;R_i,R') f(R') dR' for a smooth
    vectorized source f, splitting the integral at R' = R_i exactly."""
    lam = _as_lambda(lam)
    kv = _as_momentum(k).value
    lv = lam.value

    if lam.integer_flag:
        jfun = lambda R: spherical_jn(lam.ell, kv * np.asarray(R, dtype=complex))
        hfun = lambda R: sph_hankel1(lam.ell, kv * np.asarray(R, dtype=complex))
    else:
        jfun = lambda R: sph_bessel_j(lam, kv * np.asarray(R, dtype=complex))
        hfun = lambda R: sph_hankel1_complex(lam, kv * np.asarray(R, dtype=complex))

    # partial-panel rules must track the oscillation k * (panel width)
    w_top = grid.panel_edges[-1] - grid.panel_edges[-2]
    n_gl = max(20, min(160, int(6.0 + 0.9 * abs(kv) * w_top)))
    with np.errstate(over="ignore", invalid="ignore"):
        i_lo = _prefix_integrals(
            lambda R: np.asarray(R) * jfun(R) * np.asarray(f(R), dtype=complex),
            grid,
            n_gl,
        )
        h_hi = _suffix_integrals(
            lambda R: np.asarray(R) * hfun(R) * np.asarray(f(R), dtype=complex),
            grid,
            n_gl,
        )
        R = grid.nodes
        hv = hfun(R)
        psi = -1j * kv * R * (hv * i_lo + jfun(R) * h_hi)
    # At high angular momentum the irregular factor can overflow the
    # double range at the innermost nodes, exactly where the regular
    # factor underflows to zero; the true product there is O(R^2) and far
    # below the kernel's noise floor, so zero is the honest value.
    bad = ~(np.isfinite(hv) & np.isfinite(h_hi) & np.isfinite(psi))
    if np.any(bad):
        psi = np.where(bad, 0.0, psi)
    return psi


def green_ode_residual(lam, k, f, grid: RadialGrid):
    """Max-norm residual of psi'' + k^2 psi - lam(lam+1) psi/R^2 = f for
    psi = G f, with psi'' from a local quartic fit.  Shrinks under grid
    refinement when f is smooth."""
    lam = _as_lambda(lam)
    kv = _as_momentum(k).value
    if grid.n < 32:
        raise ValueError("grid too coarse for a second-derivative fit")
    psi = apply_green(lam, kv, f, grid)
    R = grid.nodes
    fv = np.asarray(f(R), dtype=complex)
    scale = np.max(np.abs(fv))
    if scale == 0.0:
        return float(np.max(np.abs(psi)))
    lv = lam.value
    half_w = 4
    resid = 0.0
    for i in range(half_w, grid.n - half_w):
        sel = slice(i - half_w, i + half_w + 1)
        dR = R[sel] - R[i]
        s = np.max(np.abs(dR))  # rescale before fitting; spacings vary by decades
        coef = np.polyfit(dR / s, psi[sel], 6)
        psi2 = 2.0 * coef[-3] / (s * s)
        r = psi2 + kv * kv * psi[i] - lv * (lv + 1.0) * psi[i] / R[i] ** 2 - fv[i]
        resid = max(resid, abs(r))
    return float(resid / scale)
