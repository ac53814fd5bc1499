"""The scattering integral operator and its modified Fredholm determinant.

The central object is the Hilbert-Schmidt kernel

    L(lambda, k; R, R') = int_0^inf V(lambda; R, R'') G(lambda, k; R'', R') dR'',

assembled on the quadrature grid.  For a separable potential the R''
integral collapses onto the Green-function image of the form factor and
the kernel is exactly rank one; for tabulated or angle kernels the plain
Nystroem sum over grid nodes is used (accurate to the grid's handling of
the Green-function diagonal kink, which is why the separable path does
its integration with the exact split product rule instead).

Everything spectral runs through the measure-symmetrized matrix
M_ij = sqrt(mu_i/mu_j) sqrt(q_i q_j) L_ij: its Frobenius norm is the HS
norm on the weighted space, its eigenvalues approximate the operator
spectrum, and Tr M = sum q_i L_ii is the operator trace.  The modified
determinant is

    sigma(g) = det(I - g M) exp(g Tr M),

equal to the trace-renormalized series whose first coefficient vanishes;
the series coefficients come from the recursion
n c_n = -sum_{m=2..n} rho_m c_{n-m} with rho_m = Tr M^m, never from a
literal minor determinant.  Each coefficient obeys the Hadamard-type
term bound |c_n| <= (e/n)^(n/2) ||L||_HS^n, and the derived majorants

    Phi(z) = sum_{n>=1} (e/n)^(n/2) z^n,     Psi(z) = z (1 + e^(1/2) Phi(z))

control |sigma - 1| and the numerator norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.special import gamma as _gamma

from .green import apply_green, green_matrix
from .potential import cam_potential, partial_potential
from .space import Kernel, hs_matrix
from .special import AngularIndex, CutMomentum

__all__ = [
    "OperatorL",
    "FredholmState",
    "SingularSigmaError",
    "a_eps_sq",
    "assemble_L",
    "sigma",
    "sigma_coefficients",
    "smithies_sigma_series",
    "numerator_N",
    "resolvent_apply",
    "fredholm_state",
    "phi_majorant",
    "psi_majorant",
]

# |sigma| below this (relative to the natural scale) counts as a zero
_SIGMA_ZERO_RTOL = 1e-10
# determinant-series cost grows factorially in spirit; cap the order
_SERIES_MAX = 12


def a_eps_sq(epsilon):
    """The weight constant Gamma(eps)^2 / Gamma(2 eps).

    Majorizes int_0^inf R / w(R) dR and enters every norm certificate
    that converts a pointwise kernel envelope into an HS bound.
    """
    return float(_gamma(epsilon) ** 2 / _gamma(2.0 * epsilon))


class SingularSigmaError(ArithmeticError):
    """The modified determinant vanishes at this (lambda, k, g).

    Downstream this is a physical pole (bound state or resonance), not a
    numerical failure, so the location rides along for the caller.
    """

    def __init__(self, lam, k, g, sigma_value, message=None):
        self.lam = lam
        self.k = k
        self.g = g
        self.sigma_value = sigma_value
        if message is None:
            message = ("modified determinant vanishes at lambda=%s, k=%s, "
                       "g=%s (|sigma|=%.3e)" % (lam, k, g, abs(sigma_value)))
        super().__init__(message)


@dataclass(frozen=True)
class OperatorL:
    """Assembled kernel with its spectral data.

    Attributes
    ----------
    kernel : Kernel
        L(lambda, k; R_i, R_j) on the grid.
    lam, k : AngularIndex, CutMomentum
    hs : float
        Hilbert-Schmidt norm (Frobenius norm of ``sym``).
    trace : complex
        Operator trace sum q_i L_ii.
    sym : ndarray
        Measure-symmetrized matrix.
    eigs : ndarray
        Its eigenvalues; rank-one kernels show one eigenvalue ~= trace
        and the rest at roundoff level.
    rank_one : tuple or None
        (a, b) with L = outer(a, b) when the potential was separable.
    """

    kernel: Kernel
    lam: AngularIndex
    k: CutMomentum
    hs: float
    trace: complex
    sym: np.ndarray
    eigs: np.ndarray
    rank_one: Optional[Tuple[np.ndarray, np.ndarray]] = None

    @property
    def grid(self):
        return self.kernel.grid


@dataclass(frozen=True)
class FredholmState:
    """Per-(lambda, k, g) solver handle: determinant plus factorization."""

    sigma: complex
    g: complex
    factorization: tuple
    theta: Optional[complex] = None

    def solve(self, f):
        return lu_solve(self.factorization, np.asarray(f, dtype=complex))


def _green_matrix(lam, k, grid):
    return green_matrix(lam, k, grid)


def assemble_L(pot, lam, k, grid):
    """Assemble L(lambda, k) for a potential model on the grid.

    Separable models use the exact rank-one contraction: the inner R''
    integral is the Green image of the form factor, evaluated with the
    split product rule (the Nystroem sum would lose ~5 digits to the
    diagonal kink of G, which matters because the rank-one path is the
    precision anchor for everything downstream).  Other model kinds
    evaluate the literal node sum L_ij = sum_m q_m V_im G_mj.
    """
    lam = lam if isinstance(lam, AngularIndex) else AngularIndex(lam)
    k = k if isinstance(k, CutMomentum) else CutMomentum(k)
    rank_one = None
    if pot.kind == "separable_cam":
        v = np.asarray(pot.form_factor(grid.nodes), dtype=float)
        psi = apply_green(lam, k, pot.form_factor, grid)
        left = complex(pot.cam_factor(lam.value)) * v.astype(complex)
        mat = np.outer(left, psi)
        rank_one = (left, psi)
    else:
        if lam.integer_flag:
            V = partial_potential(pot, lam.ell, grid).matrix.astype(complex)
        else:
            V = cam_potential(pot, lam, grid).matrix
        G = _green_matrix(lam, k, grid)
        mat = (V * grid.weights[None, :]) @ G
    kern = Kernel(matrix=mat, grid=grid)
    sym = hs_matrix(kern)
    return OperatorL(
        kernel=kern,
        lam=lam,
        k=k,
        hs=float(np.linalg.norm(sym)),
        trace=complex(np.sum(grid.weights * np.diag(mat))),
        sym=sym,
        eigs=np.linalg.eigvals(sym),
        rank_one=rank_one,
    )


def sigma(L, g, method="lu"):
    """Modified Fredholm determinant sigma(g) = det(I - gM) e^{g Tr M}.

    ``method="lu"`` evaluates the determinant by LU factorization (the
    stable default); ``method="eig"`` forms the spectral product
    prod (1 - g mu_i) e^{g mu_i} from the eigenvalues cached at assembly.
    The two must agree to roundoff; their comparison (plus the truncated
    series) is the determinant audit used by the tests.
    """
    g = complex(g)
    if method == "lu":
        A = np.eye(L.grid.n, dtype=complex) - g * L.sym
        sign, logdet = np.linalg.slogdet(A)
        if sign == 0.0:
            return complex(0.0)
        return complex(sign * np.exp(logdet + g * L.trace))
    if method == "eig":
        z = g * L.eigs
        return complex(np.prod((1.0 - z) * np.exp(z)))
    raise ValueError("unknown sigma method %r" % (method,))


def sigma_coefficients(L, n_max):
    """Taylor coefficients c_0..c_{n_max} of sigma in g via trace recursion."""
    if not 0 <= n_max <= _SERIES_MAX:
        raise ValueError("series order must lie in [0, %d]" % _SERIES_MAX)
    c = np.zeros(n_max + 1, dtype=complex)
    c[0] = 1.0
    if n_max >= 2:
        rho = np.zeros(n_max + 1, dtype=complex)
        power = L.sym
        for m in range(2, n_max + 1):
            power = power @ L.sym
            rho[m] = np.trace(power)
        for n in range(2, n_max + 1):
            c[n] = -np.sum(rho[2:n + 1] * c[n - 2::-1]) / n
    return c


def smithies_sigma_series(L, g, n_max):
    """Partial determinant sum sum_{n<=n_max} c_n g^n (n_max <= 12)."""
    c = sigma_coefficients(L, n_max)
    return complex(np.polyval(c[::-1], complex(g)))


def _node_system(L, g):
    """I - g (L diag q), the node-space system matrix of the resolvent."""
    K = L.kernel.matrix
    return np.eye(L.grid.n, dtype=complex) - complex(g) * (K * L.grid.weights[None, :])


def _check_not_singular(L, g, sig):
    if abs(sig) < _SIGMA_ZERO_RTOL * (1.0 + abs(complex(g)) * L.hs):
        raise SingularSigmaError(L.lam.value, L.k.value, complex(g), sig)


def numerator_N(L, g):
    """Entire numerator kernel N = sigma (I - gL)^{-1} L.

    Satisfies N = sigma L + g L N; at g = 0 it reduces to L.  The direct
    formula needs sigma != 0; at a determinant zero the limit exists but
    must be taken by the caller (e.g. from nearby couplings), so this
    raises instead of returning 0 * inf garbage.
    """
    g = complex(g)
    sig = sigma(L, g)
    _check_not_singular(L, g, sig)
    A = _node_system(L, g)
    N = sig * np.linalg.solve(A, L.kernel.matrix.astype(complex))
    return Kernel(matrix=N, grid=L.grid)


def resolvent_apply(L, g, f):
    """Solve (I - gL) x = f on the grid; residual-checked."""
    g = complex(g)
    f = np.asarray(f, dtype=complex)
    sig = sigma(L, g)
    A = _node_system(L, g)
    if abs(sig) < _SIGMA_ZERO_RTOL * (1.0 + abs(g) * L.hs):
        raise SingularSigmaError(
            L.lam.value, L.k.value, g, sig,
            message=("resolvent is singular at lambda=%s, k=%s, g=%s: "
                     "|sigma|=%.3e, condition number %.3e"
                     % (L.lam.value, L.k.value, g, abs(sig), np.linalg.cond(A))))
    x = np.linalg.solve(A, f)
    scale = float(np.linalg.norm(f))
    if scale > 0.0:
        resid = float(np.linalg.norm(f - A @ x)) / scale
        if resid > 1e-10:
            raise ArithmeticError(
                "resolvent residual %.3e exceeds 1e-10 (condition number %.3e)"
                % (resid, np.linalg.cond(A)))
    return x


def fredholm_state(L, g):
    """Factorize (I - gL) once for reuse; carries sigma from the same LU."""
    g = complex(g)
    A = _node_system(L, g)
    lu, piv = lu_factor(A)
    diag = np.diag(lu)
    # permutation parity from the pivot vector
    swaps = int(np.sum(piv != np.arange(piv.size)))
    det = complex(np.prod(diag)) * (-1.0) ** swaps
    sig = det * np.exp(g * L.trace)
    _check_not_singular(L, g, sig)
    return FredholmState(sigma=sig, g=g, factorization=(lu, piv))


def phi_majorant(z):
    """Phi(z) = sum_{n>=1} (e/n)^(n/2) z^n, summed to convergence.

    The terms peak near n = z^2 and then die superexponentially, so the
    cutoff scales with z^2 instead of being a fixed order.  The
    certificates only ever use z <= 3, where 80 terms leave a tail below
    1e-16, but the sum stays honest for any z: once z >= 39 the peak
    term alone overflows a double, and the majorant is reported as inf.
    """
    z = float(z)
    if z < 0.0:
        raise ValueError("majorant argument must be >= 0")
    if z == 0.0:
        return 0.0
    if z >= 39.0:
        return math.inf
    lz = math.log(z)
    total = 0.0
    for n in range(1, max(400, int(9.0 * z * z) + 16)):
        term = math.exp(0.5 * n * (1.0 - math.log(n)) + n * lz)
        total += term
        if n > z * z + 4.0 and term < 1e-18 * total:
            break
    return total


def psi_majorant(z):
    """Psi(z) = z (1 + e^(1/2) Phi(z)); controls the numerator norm."""
    z = float(z)
    return z * (1.0 + math.exp(0.5) * phi_majorant(z))
