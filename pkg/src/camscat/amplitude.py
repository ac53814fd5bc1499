"""Physical layer: scattering solutions, amplitudes, phase shifts.

At fixed angular momentum the scattered channel solves

    x = v0 + g L x,    v0(R) = sum_m q_m V(R, R_m) * kR_m j(kR_m),

and the partial amplitude is the overlap

    T = -g int_0^inf R j(kR) x(R) dR ,        S = 1 + 2iT = e^{2i delta}.

Every amplitude is evaluated twice: once through the direct resolvent
solve above, and once through the entire-numerator representation
T = Theta/sigma with

    Theta = -g [ sigma <Rj, v0> + g <Rj, N v0> ],

where N is the entire numerator kernel and sigma the modified
determinant.  The two routes are algebraically identical, so their
floating-point disagreement is a genuine consistency check and is
enforced on every call.  At a determinant zero the pair (sigma, Theta)
distinguishes a spurious state (both vanish, T has a finite limit,
evaluated here by coupling-perturbed extrapolation) from a true pole
(sigma alone vanishes, raised as an error).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.optimize import brentq

from .fredholm import (
    OperatorL,
    SingularSigmaError,
    assemble_L,
    numerator_N,
    resolvent_apply,
    sigma,
)
from .green import green_matrix
from .potential import cam_potential, partial_potential
from .space import RadialGrid
from .special import AngularIndex, CutMomentum, sph_bessel_j, sph_hankel1

__all__ = [
    "PartialWaveResult",
    "WaveFunction",
    "TotalAmplitudeSeries",
    "PhaseShiftScan",
    "free_wave",
    "inhomogeneous_v0",
    "partial_amplitude",
    "total_amplitude",
    "wavefunction",
    "schrodinger_residual",
    "phase_shift_scan",
    "bound_state_scan",
    "write_amplitude_csv",
    "write_bound_states_json",
]

# Relative scale below which (sigma, Theta) counts as a determinant zero.
# Deliberately looser than the resolvent's own 1e-10 guard so the spurious
# branch engages before the linear solver starts refusing.
_ZERO_RTOL = 1e-8

# Coupling offset for the finite-limit extrapolation at a spurious state.
_LIMIT_STEP = 1e-4


def free_wave(lam, k, grid: RadialGrid):
    """Free radial wave kR j_lambda(kR) on the grid nodes."""
    lam = lam if isinstance(lam, AngularIndex) else AngularIndex(lam)
    kv = (k if isinstance(k, CutMomentum) else CutMomentum(k)).value
    R = grid.nodes
    return np.asarray(kv * R * sph_bessel_j(lam, kv * R), dtype=complex)


def inhomogeneous_v0(pot, lam, k, grid: RadialGrid):
    """Inhomogeneous term v0 = V (kR j) driving the scattering equation.

    For a separable kernel this contracts exactly: v0 = Ftilde(lambda)
    b(k) v with b(k) = sum_m q_m v(R_m) kR_m j(kR_m).  Other kinds use
    the literal node sum against the partial-wave (or CAM) matrix.
    """
    lam = lam if isinstance(lam, AngularIndex) else AngularIndex(lam)
    k = k if isinstance(k, CutMomentum) else CutMomentum(k)
    fw = free_wave(lam, k.value, grid)
    if pot.kind == "separable_cam":
        v = np.asarray(pot.form_factor(grid.nodes), dtype=float)
        b = complex(np.sum(grid.weights * v * fw))
        return complex(pot.cam_factor(lam.value)) * b * v.astype(complex)
    if lam.integer_flag:
        V = partial_potential(pot, lam.ell, grid).matrix.astype(complex)
    else:
        V = cam_potential(pot, lam, grid).matrix
    return V @ (grid.weights * fw)


@dataclass(frozen=True)
class PartialWaveResult:
    """Partial amplitude with its determinant bookkeeping.

    ``T = theta_num / sigma_det`` holds exactly as stored (except at a
    spurious state, where T carries the finite coupling limit and both
    sigma_det and theta_num are at roundoff level).
    """

    T: complex
    S: complex
    delta: float
    a: complex
    sigma_det: complex
    theta_num: complex


@dataclass(frozen=True)
class _Scattering:
    """Internal bundle shared by amplitude and wavefunction builders."""

    L: OperatorL
    kv: complex
    fw: np.ndarray      # kR j(kR)
    v0: np.ndarray
    x: np.ndarray       # (I - gL)^{-1} v0
    T: complex
    sigma: complex
    theta: complex
    spurious: bool


def _overlap(grid, fw, kv, y):
    # <Rj, y> = int R j(kR) y dR; the free wave carries the extra k
    return complex(np.sum(grid.weights * fw * y)) / kv


def _solve_scattering(pot, lam, k, g, grid, _allow_limit=True):
    L = assemble_L(pot, lam, k, grid)
    kv = L.k.value
    g = complex(g)
    fw = free_wave(L.lam, kv, grid)
    v0 = inhomogeneous_v0(pot, L.lam, kv, grid)
    sig = sigma(L, g)
    scale = 1.0 + abs(g) * L.hs

    if abs(sig) >= _ZERO_RTOL * scale:
        x = resolvent_apply(L, g, v0)
        T_direct = -g * _overlap(grid, fw, kv, x)
        N = numerator_N(L, g)
        Nv0 = N.matrix @ (grid.weights * v0)
        theta = -g * (sig * _overlap(grid, fw, kv, v0)
                      + g * _overlap(grid, fw, kv, Nv0))
        T = theta / sig
        denom = max(abs(T), abs(T_direct))
        # absolute accuracy floor of the overlap sum: below it both routes
        # return roundoff noise (e.g. when the free wave is orthogonal to
        # the driving term) and the relative comparison is meaningless
        floor = 1e-12 * abs(g) \
            * float(np.sum(grid.weights * np.abs(fw) * np.abs(x))) \
            / abs(kv)
        if denom > floor and abs(T - T_direct) > 1e-8 * denom:
            raise ArithmeticError(
                "amplitude routes disagree at lambda=%s, k=%s, g=%s: "
                "direct %s vs numerator %s"
                % (L.lam.value, kv, g, T_direct, T))
        return _Scattering(L, kv, fw, v0, x, T, sig, theta, False)

    if not _allow_limit:
        raise SingularSigmaError(L.lam.value, kv, g, sig)

    # Determinant zero.  Evaluate Theta (entire in g) from symmetric
    # coupling offsets; if it also vanishes the state is spurious and the
    # same offsets give the finite amplitude limit.
    h = _LIMIT_STEP * (1.0 + abs(g))
    lo = _solve_scattering(pot, lam, k, g - h, grid, _allow_limit=False)
    hi = _solve_scattering(pot, lam, k, g + h, grid, _allow_limit=False)
    theta = 0.5 * (lo.theta + hi.theta)
    theta_scale = (abs(g) * float(np.sum(grid.weights * np.abs(fw) * np.abs(v0)))
                   / max(abs(kv), 1e-300)) * scale
    if abs(theta) > _ZERO_RTOL * max(theta_scale, 1e-300):
        raise SingularSigmaError(
            L.lam.value, kv, g, sig,
            message=("true pole at lambda=%s, k=%s, g=%s: sigma vanishes "
                     "(|sigma|=%.3e) with nonzero numerator |Theta|=%.3e"
                     % (L.lam.value, kv, g, abs(sig), abs(theta))))
    T = 0.5 * (lo.T + hi.T)
    x = 0.5 * (lo.x + hi.x)
    return _Scattering(L, kv, fw, v0, x, T, sig, theta, True)


def partial_amplitude(pot, lam, k, g, grid: RadialGrid) -> PartialWaveResult:
    """Partial scattering amplitude T with S-matrix and phase shift.

    Both evaluation routes are computed and compared on every call; a
    relative disagreement beyond 1e-8 raises.  A determinant zero with
    vanishing numerator (spurious state) returns the finite limit taken
    from couplings g +- h; a zero with surviving numerator raises with
    the pole location.
    """
    sol = _solve_scattering(pot, lam, k, g, grid)
    S = 1.0 + 2.0j * sol.T
    delta = 0.5 * math.atan2(S.imag, S.real)
    return PartialWaveResult(
        T=sol.T,
        S=S,
        delta=delta,
        a=sol.T / sol.kv,
        sigma_det=sol.sigma,
        theta_num=sol.theta,
    )


def _legendre_value(ell, x):
    c = np.zeros(ell + 1)
    c[ell] = 1.0
    return np.polynomial.legendre.legval(x, c)


@dataclass(frozen=True)
class TotalAmplitudeSeries:
    """Partial-wave sum with its term-by-term record.

    ``truncation_estimate`` extrapolates the tail geometrically at the
    class decay rate beta(k) = arccosh(1 + 2 alpha^2/k^2), scaled by the
    Legendre growth factor when the angle leaves [-1, 1]; infinite when
    that ratio reaches 1 (outside the guaranteed ellipse).
    """

    value: complex
    terms: np.ndarray
    truncation_estimate: float


def total_amplitude(pot, k, cos_theta, g, ell_max, grid=None,
                    full_output=False):
    """Partial-wave expansion F = sum_{l<=ell_max} (2l+1) a_l P_l(cos theta).

    Raises when the terms stop decreasing beyond l = 4 for three
    consecutive orders (angle outside the convergence ellipse, or a
    kernel outside the class).  ``full_output=True`` returns the
    TotalAmplitudeSeries record instead of the bare sum.
    """
    from .space import SpaceParams, build_grid

    if grid is None:
        grid = build_grid(SpaceParams(alpha=pot.alpha, epsilon=pot.epsilon))
    kv = complex(k)
    terms = np.zeros(ell_max + 1, dtype=complex)
    total = 0.0 + 0.0j
    growing = 0
    peak = 0.0
    for ell in range(ell_max + 1):
        res = partial_amplitude(pot, ell, k, g, grid)
        terms[ell] = (2 * ell + 1) * res.a * _legendre_value(ell, cos_theta)
        total += terms[ell]
        mag = abs(terms[ell])
        peak = max(peak, mag)
        if ell >= 4 and mag >= abs(terms[ell - 1]) and mag > 1e-14 * peak:
            growing += 1
            if growing >= 3:
                raise ArithmeticError(
                    "partial-wave terms stopped decreasing at ell=%d "
                    "(|term|=%.3e): angle outside the convergence ellipse "
                    "or kernel outside the class" % (ell, mag))
        else:
            growing = 0
    beta = math.acosh(1.0 + 2.0 * pot.alpha ** 2 / abs(kv) ** 2)
    z = complex(cos_theta)
    gain = abs(z + np.sqrt(z * z - 1.0)) if abs(z) > 1.0 else 1.0
    ratio = math.exp(-beta) * gain
    if ratio < 1.0:
        estimate = abs(terms[-1]) * ratio / (1.0 - ratio)
    else:
        estimate = math.inf
    if full_output:
        return TotalAmplitudeSeries(value=total, terms=terms,
                                    truncation_estimate=estimate)
    return total


@dataclass(frozen=True)
class WaveFunction:
    """Scattering solution Psi = kRj + Phi with its radiation residual.

    ``radiation_residual`` is the maximum of |Phi - T ikR h(kR)| e^{alpha R}
    over nodes in [0.7, 0.9] r_max: zero coupling gives exactly zero, and
    the outgoing asymptotics keep it small for any class kernel.
    """

    psi: np.ndarray
    phi: np.ndarray
    radiation_residual: float


def wavefunction(pot, ell, k, g, grid: RadialGrid) -> WaveFunction:
    """Radial wavefunction Psi = kRj + Phi, Phi = g G x.

    Separable kernels get the scattered part exactly (x is proportional
    to the form factor, whose Green image is already the split-rule
    integral); other kinds use the node-sum Green product.
    """
    sol = _solve_scattering(pot, ell, k, g, grid)
    g = complex(g)
    kv = sol.kv
    R = grid.nodes
    q = grid.weights
    if sol.L.rank_one is not None:
        v = np.asarray(pot.form_factor(R), dtype=float)
        psi_v = sol.L.rank_one[1]
        xi = complex(np.sum(q * v * sol.x)) / float(np.sum(q * v * v))
        phi = g * xi * psi_v
    else:
        phi = g * (green_matrix(ell, kv, grid) @ (q * sol.x))
    psi = sol.fw + phi

    window = (R >= 0.7 * grid.r_max) & (R <= 0.9 * grid.r_max)
    with np.errstate(over="ignore", invalid="ignore"):
        outgoing = sol.T * (1j * kv * R[window]
                            * sph_hankel1(ell, kv * R[window]))
    resid = np.abs(phi[window] - outgoing) * np.exp(grid.alpha * R[window])
    return WaveFunction(psi=psi, phi=phi,
                        radiation_residual=float(np.max(resid)))


def schrodinger_residual(pot, ell, k, g, grid: RadialGrid, half_w=4):
    """Max-norm residual of Phi'' + k^2 Phi - l(l+1)Phi/R^2 = g(V Psi).

    The second derivative comes from a local polynomial fit on the
    nonuniform nodes, so this is an independent differential check of
    the integral-equation solution; it shrinks under node refinement.
    Stencils never cross a panel edge (node spacing jumps there) and the
    origin panel is skipped (its pullback nodes span many decades, which
    defeats any polynomial stencil).  Normalized by the source
    magnitude; zero coupling returns 0.
    """
    sol = _solve_scattering(pot, ell, k, g, grid)
    wf = wavefunction(pot, ell, k, g, grid)
    g = complex(g)
    kv = sol.kv
    R = grid.nodes
    source = g * sol.x           # V Psi = x by construction
    scale = float(np.max(np.abs(source)))
    if scale == 0.0:
        return float(np.max(np.abs(wf.phi)))
    npp = grid.nodes_per_panel
    width = 2 * half_w + 1
    if npp < width:
        raise ValueError("grid panels too small for the derivative stencil")
    resid = 0.0
    for p in range(1, grid.n // npp):
        for j in range(npp):
            i = p * npp + j
            start = p * npp + min(max(j - half_w, 0), npp - width)
            sel = slice(start, start + width)
            dR = R[sel] - R[i]
            s = np.max(np.abs(dR))
            coef = np.polyfit(dR / s, wf.phi[sel], 6)
            phi2 = 2.0 * coef[-3] / (s * s)
            r = (phi2 + kv * kv * wf.phi[i]
                 - ell * (ell + 1.0) * wf.phi[i] / R[i] ** 2 - source[i])
            resid = max(resid, abs(r))
    return float(resid / scale)


@dataclass(frozen=True)
class PhaseShiftScan:
    """Continuously unwrapped phase shift over a momentum scan.

    ``delta`` is anchored to the principal branch at the largest k (the
    high-energy limit vanishes mod pi) and unwrapped toward threshold.
    ``downward_crossings`` records every transversal passage of delta
    through a multiple of pi with delta decreasing in k, the signature
    of a spurious state crossing the real axis.
    """

    k: np.ndarray
    delta: np.ndarray
    downward_crossings: Tuple[dict, ...]


def _principal_delta(pot, ell, g, k, grid, cache):
    if k not in cache:
        cache[k] = partial_amplitude(pot, ell, k, g, grid).delta
    return cache[k]


def phase_shift_scan(pot, ell, g, k_grid, grid=None,
                     max_points=600) -> PhaseShiftScan:
    """Unwrapped phase shift delta_l(k) over real positive momenta.

    The k grid is refined by bisection until adjacent principal shifts
    move by less than pi/4 (so the pi-ambiguity of the branch choice is
    resolved); exceeding ``max_points`` raises with a refinement
    request.  Upward pi-crossings are impossible for class kernels and
    raise; downward crossings are flagged in the result.
    """
    from .space import SpaceParams, build_grid

    if grid is None:
        grid = build_grid(SpaceParams(alpha=pot.alpha, epsilon=pot.epsilon))
    ks = sorted(set(float(k) for k in np.asarray(k_grid, dtype=float)))
    if len(ks) < 2:
        raise ValueError("phase scan needs at least two momenta")
    if ks[0] <= 0.0:
        raise ValueError("phase scan momenta must be positive")

    cache = {}
    half = 0.5 * math.pi

    # refine until the wrapped change between neighbours is clearly
    # below the half-pi ambiguity
    while True:
        inserts = []
        for a, b in zip(ks[:-1], ks[1:]):
            da = _principal_delta(pot, ell, g, a, grid, cache)
            db = _principal_delta(pot, ell, g, b, grid, cache)
            wrapped = (db - da + half) % math.pi - half
            if abs(wrapped) >= 0.25 * math.pi:
                inserts.append(0.5 * (a + b))
        if not inserts:
            break
        ks = sorted(set(ks) | set(inserts))
        if len(ks) > max_points:
            raise RuntimeError(
                "phase unwrap did not stabilize within %d samples; "
                "refine the momentum grid" % max_points)

    karr = np.array(ks)
    princ = np.array([cache[k] for k in ks])
    delta = np.empty_like(princ)
    delta[-1] = princ[-1]
    for i in range(len(ks) - 2, -1, -1):
        delta[i] = princ[i] + math.pi * round((delta[i + 1] - princ[i]) / math.pi)

    crossings = []
    for i in range(len(ks) - 1):
        lo, hi = delta[i], delta[i + 1]
        m_lo = math.floor(min(lo, hi) / math.pi)
        m_hi = math.ceil(max(lo, hi) / math.pi)
        for m in range(m_lo, m_hi + 1):
            level = m * math.pi
            if (lo - level) * (hi - level) < 0.0:
                frac = (level - lo) / (hi - lo)
                rec = {
                    "k": float(karr[i] + frac * (karr[i + 1] - karr[i])),
                    "level": m,
                    "direction": "down" if hi < lo else "up",
                }
                if rec["direction"] == "up":
                    raise ArithmeticError(
                        "phase shift crossed %d*pi upward near k=%.6g; "
                        "class kernels admit only downward crossings"
                        % (m, rec["k"]))
                crossings.append(rec)
    return PhaseShiftScan(k=karr, delta=delta,
                          downward_crossings=tuple(crossings))


def _null_vector(L, g):
    A = np.eye(L.grid.n, dtype=complex) \
        - complex(g) * (L.kernel.matrix * L.grid.weights[None, :])
    _, _, vh = np.linalg.svd(A)
    return np.conj(vh[-1])


def bound_state_scan(pot, ell, g, kappa_range, grid=None, n_scan=60,
                     k_scan=None, b_rtol=1e-6):
    """Roots of sigma on the imaginary momentum axis, plus spurious states.

    ``kappa_range = (lo, hi)`` is scanned at k = i kappa where sigma is
    real for real coupling; sign changes are polished by bisection.
    Roots with kappa > 0 are bound states, kappa < 0 anti-bound states.
    When ``k_scan`` (real momenta) is given, determinant zeros on the
    real axis are located by Newton steps from |sigma| minima and tested
    against the free-wave orthogonality b = <kRj, x_0> = 0 that marks a
    spurious state.  Root-finder failures are reported per bracket.
    """
    from .space import SpaceParams, build_grid

    if isinstance(g, complex) and g.imag != 0.0:
        raise ValueError("bound-state scan requires a real coupling")
    g = float(np.real(g))
    if grid is None:
        grid = build_grid(SpaceParams(alpha=pot.alpha, epsilon=pot.epsilon))
    lo, hi = float(kappa_range[0]), float(kappa_range[1])
    if not lo < hi:
        raise ValueError("empty kappa range")

    def sig_imag_axis(kappa):
        L = assemble_L(pot, ell, 1j * kappa, grid)
        return sigma(L, g).real

    records = []
    if g != 0.0:
        gap = 1e-3
        segments = []
        if hi < -gap or lo > gap:
            segments.append((lo, hi))
        else:
            if lo < -gap:
                segments.append((lo, -gap))
            if hi > gap:
                segments.append((gap, hi))
        for a, b in segments:
            kk = np.linspace(a, b, max(2, int(n_scan * (b - a) / (hi - lo))))
            vals = np.array([sig_imag_axis(x) for x in kk])
            for i in range(len(kk) - 1):
                if vals[i] == 0.0:
                    root = kk[i]
                elif vals[i] * vals[i + 1] < 0.0:
                    try:
                        root = brentq(sig_imag_axis, kk[i], kk[i + 1],
                                      xtol=1e-13, rtol=1e-14)
                    except (RuntimeError, ValueError) as exc:
                        records.append({
                            "type": "error",
                            "bracket": [float(kk[i]), float(kk[i + 1])],
                            "message": str(exc),
                        })
                        continue
                else:
                    continue
                L = assemble_L(pot, ell, 1j * root, grid)
                records.append({
                    "type": "bound" if root > 0 else "antibound",
                    "ell": int(ell),
                    "g": g,
                    "kappa": float(root),
                    "k": {"re": 0.0, "im": float(root)},
                    "sigma_abs": abs(sigma(L, g)),
                })

    if k_scan is not None and g != 0.0:
        records.extend(_spurious_scan(pot, ell, g, np.asarray(k_scan, float),
                                      grid, b_rtol))
    return records


def _spurious_scan(pot, ell, g, k_scan, grid, b_rtol):
    sig_abs = []
    for k in k_scan:
        L = assemble_L(pot, ell, k, grid)
        sig_abs.append(abs(sigma(L, g)))
    sig_abs = np.array(sig_abs)
    out = []
    floor = max(np.median(sig_abs), 1e-300)
    for i in range(1, len(k_scan) - 1):
        if not (sig_abs[i] <= sig_abs[i - 1] and sig_abs[i] <= sig_abs[i + 1]):
            continue
        if sig_abs[i] > 0.5 * floor:
            continue
        # polish with complex Newton steps; a spurious state is a zero
        # sitting exactly on the real axis
        k = complex(k_scan[i])
        step = 1e-6 * max(1.0, abs(k))
        ok = True
        for _ in range(30):
            s0 = sigma(assemble_L(pot, ell, k, grid), g)
            sp = sigma(assemble_L(pot, ell, k + step, grid), g)
            sm = sigma(assemble_L(pot, ell, k - step, grid), g)
            ds = (sp - sm) / (2 * step)
            if ds == 0.0:
                ok = False
                break
            dk = s0 / ds
            k = k - dk
            if abs(dk) < 1e-12 * max(1.0, abs(k)):
                break
        else:
            ok = False
        if not ok:
            out.append({
                "type": "error",
                "bracket": [float(k_scan[i - 1]), float(k_scan[i + 1])],
                "message": "Newton polish of a |sigma| minimum failed",
            })
            continue
        if abs(k.imag) > 1e-6 * max(1.0, abs(k)):
            continue
        k = complex(k.real, 0.0)
        L = assemble_L(pot, ell, k, grid)
        x0 = _null_vector(L, g)
        fw = free_wave(ell, k, grid)
        b = complex(np.sum(grid.weights * fw * x0))
        scale = math.sqrt(float(np.sum(grid.weights * np.abs(fw) ** 2))
                          * float(np.sum(grid.weights * np.abs(x0) ** 2)))
        out.append({
            "type": "spurious" if abs(b) < b_rtol * scale else "real-k zero",
            "ell": int(ell),
            "g": float(g),
            "k": {"re": float(k.real), "im": float(k.imag)},
            "sigma_abs": abs(sigma(L, g)),
            "b_over_scale": abs(b) / scale,
        })
    return out


def write_amplitude_csv(path, k_values, results):
    """CSV table (k, re_T, im_T, delta, abs_S_minus_1), one row per k."""
    lines = ["k,re_T,im_T,delta,abs_S_minus_1"]
    for k, res in zip(k_values, results):
        lines.append("%.17g,%.17g,%.17g,%.17g,%.17g"
                     % (float(np.real(k)), res.T.real, res.T.imag,
                        res.delta, abs(abs(res.S) - 1.0)))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_bound_states_json(path, records):
    """JSON dump of bound/anti-bound/spurious records."""
    with open(path, "w") as fh:
        json.dump(list(records), fh, indent=2, sort_keys=True)
        fh.write("\n")
