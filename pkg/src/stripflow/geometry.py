"""Interface geometry and the strip-flattening change of variables.

The moving domain  Omega = { (x, y) : 0 < y < h(x) }  under the graph of the
interface height h is pulled back to the fixed strip  Q = torus x (0, 1) by

    y_strip = 1 - y_phys / h(x),

so that the free boundary lands on y_strip = 0 and the flat bottom on
y_strip = 1.  This module owns the profile container, the forward/inverse
maps, the pushforward of fields, and the transformed second-order
coefficients together with their ellipticity audit.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDomainError, EllipticityError
from .grids import (spectral_derivative, spectral_tail_fraction, torus_nodes,
                    trig_interp)


class InterfaceProfile:
    """Periodic interface state: offset nu plus perturbation g.

    The physical height is the normalized Euclidean length of the value
    vector,  h(x) = ||nu * ones + g(x)|| / ||ones||,  which reduces to
    nu + g for a single real component.

    Parameters
    ----------
    nu : float
        Reference offset (> 0).
    L : float
        Torus circumference.
    g : (nx, m) array_like
        Perturbation samples on ``torus_nodes(L, nx)``.
    h_floor : float
        Degeneracy guard; construction fails if min h <= h_floor.
    """

    def __init__(self, nu, L, g, h_floor=1e-8):
        g = np.asarray(g, dtype=complex)
        if g.ndim == 1:
            g = g[:, None]
        if g.ndim != 2:
            raise ValueError(f"g must be (nx,) or (nx, m), got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("profile contains non-finite samples")
        if nu <= 0:
            raise ValueError(f"offset nu must be positive, got {nu}")
        self.nu = float(nu)
        self.L = float(L)
        self.g = g
        self.nx, self.m = g.shape
        self.x = torus_nodes(self.L, self.nx)
        self.g_x = spectral_derivative(g, self.L, 1, axis=0)
        self.g_xx = spectral_derivative(g, self.L, 2, axis=0)
        self.spectral_tail = spectral_tail_fraction(g, axis=0)

        f = self.nu + self.g  # value vector of the interface
        scale = np.sqrt(self.m)
        self.h = np.real(np.linalg.norm(f, axis=1)) / scale
        self.h_floor = float(h_floor)
        # the flattening needs the value vector to stay on the positive
        # side of the reference offset: a component whose real part crosses
        # zero folds the domain onto itself even though the Euclidean
        # height |f| stays away from zero
        re_min = float(np.min(np.real(f)))
        if min(np.min(self.h), re_min) <= self.h_floor:
            j = int(np.argmin(np.minimum(np.min(np.real(f), axis=1), self.h)))
            raise DegenerateDomainError(
                f"interface height {min(self.h[j], re_min):.3e} at "
                f"x={self.x[j]:.4f} is at or below the degeneracy guard "
                f"{self.h_floor:.1e}",
                h_min=min(float(np.min(self.h)), re_min),
                where=float(self.x[j]))
        self.h_x = np.real(spectral_derivative(self.h, self.L, 1, axis=0))
        self.h_xx = np.real(spectral_derivative(self.h, self.L, 2, axis=0))

    def with_g(self, new_g):
        """Same geometry parameters, new perturbation."""
        return InterfaceProfile(self.nu, self.L, new_g, self.h_floor)

    def height_at(self, x_eval):
        """Trigonometric interpolation of h at arbitrary points."""
        return np.real(trig_interp(self.h.astype(complex), self.L, x_eval))

    def __repr__(self):
        return (f"InterfaceProfile(nu={self.nu}, L={self.L:.4f}, nx={self.nx}, "
                f"m={self.m}, h_range=({self.h.min():.4f}, {self.h.max():.4f}))")


def map_forward(profile, x_phys, y_phys):
    """Physical (x, y) in Omega  ->  strip (x, y_strip) in closure(Q)."""
    x_phys = np.asarray(x_phys, dtype=float)
    y_phys = np.asarray(y_phys, dtype=float)
    h = profile.height_at(x_phys)
    if np.any(y_phys < -1e-12) or np.any(y_phys > h * (1 + 1e-12)):
        raise ValueError("point lies outside the physical domain")
    return x_phys, 1.0 - y_phys / h


def map_inverse(profile, x_strip, y_strip):
    """Strip (x, y_strip)  ->  physical (x, (1 - y_strip) * h(x))."""
    x_strip = np.asarray(x_strip, dtype=float)
    y_strip = np.asarray(y_strip, dtype=float)
    if np.any(y_strip < -1e-12) or np.any(y_strip > 1 + 1e-12):
        raise ValueError("strip coordinate outside [0, 1]")
    h = profile.height_at(x_strip)
    return x_strip, (1.0 - y_strip) * h


def pushforward(profile, func, x_nodes, y_nodes):
    """Sample a physical-domain field on the strip grid.

    ``func(x, y)`` must accept broadcast arrays and return (..., m) or
    scalar-per-point values; the result is the flattened field
    v(x, y_strip) = u(x, (1 - y_strip) h(x)) with shape (nx, ny, m).
    """
    X = np.asarray(x_nodes, dtype=float)[:, None]
    Y = np.asarray(y_nodes, dtype=float)[None, :]
    h = profile.height_at(x_nodes)[:, None]
    vals = np.asarray(func(np.broadcast_to(X, (X.size, Y.size)),
                           (1.0 - Y) * h), dtype=complex)
    if vals.ndim == 2:
        vals = vals[:, :, None]
    return vals


@dataclass
class TransformedCoefficients:
    """Coefficient fields of the flattened elliptic operator.

    Interior fields are (nx, ny, m); boundary fields are (nx, m).  For a
    field u on the strip the interior operator reads

        B u = -u_xx - 2 a12 u_xy - a22 u_yy + a2 u_y + A u,

    the free-boundary trace operator (at y_strip = 0) is

        B0 u = b10 u_x + b20 u_y,        b11 = 0 identically,

    and the bottom trace operator (at y_strip = 1) is  B1 u = b21 u_y.
    ``alpha_floor`` is the pointwise ellipticity weight
    1 / (1 + h^2 + beta^2 h_x^2) evaluated per component.
    """
    a12: np.ndarray
    a22: np.ndarray
    a2: np.ndarray
    b10: np.ndarray
    b20: np.ndarray
    b21: np.ndarray
    b11: np.ndarray
    alpha_floor: np.ndarray
    beta: np.ndarray       # 1 - y_strip, shape (ny,)
    w: np.ndarray          # per-component height nu + g, shape (nx, m)
    w_x: np.ndarray
    w_xx: np.ndarray


def coefficients(profile, y_nodes):
    """Transformed coefficients of the flattening on a given y-grid.

    Derived by the chain rule from y_phys = (1 - y_strip) * w(x) with the
    per-component height w = nu + g; beta = 1 - y_strip.
    """
    y = np.asarray(y_nodes, dtype=float)
    beta = (1.0 - y)[None, :, None]                      # (1, ny, 1)
    w = (profile.nu + profile.g)[:, None, :]             # (nx, 1, m)
    wx = profile.g_x[:, None, :]
    wxx = profile.g_xx[:, None, :]

    a12 = beta * wx / w
    a22 = (1.0 + beta ** 2 * wx ** 2) / w ** 2
    a2 = (beta / w) * (2.0 * wx ** 2 / w - wxx)
    alpha = 1.0 / (1.0 + w ** 2 + beta ** 2 * wx ** 2)

    b10 = -profile.g_x
    b20 = -(1.0 + profile.g_x ** 2) / (profile.nu + profile.g)
    b21 = 1.0 / (profile.nu + profile.g)
    b11 = np.zeros_like(b10)

    return TransformedCoefficients(
        a12=a12, a22=a22, a2=a2,
        b10=b10, b20=b20, b21=b21, b11=b11,
        alpha_floor=alpha, beta=(1.0 - y),
        w=profile.nu + profile.g, w_x=profile.g_x, w_xx=profile.g_xx)


@dataclass
class EllipticityReport:
    passed: bool
    margin: float
    floor: float
    witness: tuple
    direction_margin: float


def ellipticity_floor(coeffs, tol=1e-10):
    """Audit the principal symbol against its claimed pointwise floor.

    The 2x2 symbol  [[1, a12], [a12, a22]]  must have least eigenvalue at
    least alpha_floor at every node and component.  Complex-valued profiles
    are audited through the real parts (the floor statement is about the
    real quadratic form); large imaginary parts fail loudly.  A 16-direction
    Rayleigh sweep cross-checks the closed-form eigenvalue.
    """
    a12 = coeffs.a12
    a22 = coeffs.a22
    if max(np.max(np.abs(np.imag(a12))), np.max(np.abs(np.imag(a22)))) > 1e-8 * (
            1.0 + np.max(np.abs(a22))):
        raise EllipticityError("principal coefficients have significant imaginary parts")
    p12, p22 = np.real(a12), np.real(a22)
    tr = 1.0 + p22
    # discriminant written cancellation-free: tr^2 - 4 det == (1-a22)^2 + 4a12^2
    disc = (1.0 - p22) ** 2 + 4.0 * p12 ** 2
    lam_min = 0.5 * (tr - np.sqrt(disc))
    gap = lam_min - np.real(coeffs.alpha_floor)
    margin = float(np.min(gap))
    idx = np.unravel_index(np.argmin(gap), gap.shape)

    # Rayleigh quotients over a fixed fan of directions; min over the fan
    # upper-bounds lam_min and must stay above the floor too.
    angles = np.linspace(0.0, np.pi, 16, endpoint=False)
    dir_margin = np.inf
    for th in angles:
        c, s = np.cos(th), np.sin(th)
        q = c * c + 2.0 * p12 * c * s + p22 * s * s
        dir_margin = min(dir_margin, float(np.min(q - np.real(coeffs.alpha_floor))))
    passed = margin >= -tol
    return EllipticityReport(bool(passed), margin,
                             float(np.min(np.real(coeffs.alpha_floor))),
                             tuple(int(i) for i in idx), float(dir_margin))


def require_elliptic(coeffs, tol=1e-10):
    rep = ellipticity_floor(coeffs, tol)
    if not rep.passed:
        raise EllipticityError(
            f"principal symbol dips {abs(rep.margin):.3e} below its floor "
            f"at node index {rep.witness}")
    return rep
