"""Convex bodies and their geometric functionals.

Every body exposes vectorised evaluators that accept a single direction of
shape ``(n,)`` or a stack of directions ``(m, n)``; directions are normalised on
entry. Radial functions are taken with respect to the origin, which must be an
interior point.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np
from scipy import optimize

from .errors import (CenterNotInterior, DomainError, InvalidBody, NoConvergence, NotSmooth,
                     OutOfSlab, SingularMap, Unsupported)
from .quadrature import (SphereRule, default_rule, gauss_legendre, log_graded_nodes,
                         sqrt_end_nodes, unit_ball_volume)

# smallest depth resolved by the default slice measures
DEFAULT_MIN_DEPTH = 1e-40


def _directions(u, n: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(u, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[-1] != n:
        raise DomainError(f"expected directions in R^{n}, got shape {arr.shape}")
    norms = np.linalg.norm(arr, axis=1)
    if np.any(norms == 0):
        raise DomainError("zero vector is not a direction")
    return arr / norms[:, None], single


def _out(values, single):
    values = np.asarray(values, dtype=float)
    return float(values[0]) if single else values


def angle_directions(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


class ConvexBody:
    """Base class. Subclasses implement ``_support`` and ``_radial`` on
    normalised direction stacks; smooth bodies add curvature evaluators."""

    dim: int

    # -- evaluators working on (m, n) unit-direction arrays -----------------
    def _support(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _radial(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _curvature(self, U: np.ndarray) -> np.ndarray:
        raise NotSmooth(f"{type(self).__name__} has no curvature evaluator")

    def _boundary(self, U: np.ndarray) -> np.ndarray:
        raise NotSmooth(f"{type(self).__name__} has no boundary parametrisation")

    def _section_at_depth(self, U: np.ndarray, w: np.ndarray) -> np.ndarray:
        """(n-1)-volume of the slice at distance ``w`` below the supporting
        hyperplane with normal ``U``; ``w`` broadcasts against ``U[:, :1]``."""
        if self.dim != 2:
            raise Unsupported(f"sections of {type(self).__name__} need n = 2")
        h = self._support(U)
        w = np.broadcast_to(np.asarray(w, dtype=float), np.broadcast_shapes(np.shape(w), (len(U), 1)) if np.ndim(w) > 1 else (len(U),))
        out = np.empty(w.shape)
        for idx in np.ndindex(w.shape):
            row = idx[0]
            out[idx] = chord_length(self, U[row], h[row] - w[idx])
        return out

    # -- public API ---------------------------------------------------------
    def support(self, u):
        U, single = _directions(u, self.dim)
        return _out(self._support(U), single)

    def radial(self, u):
        U, single = _directions(u, self.dim)
        return _out(self._radial(U), single)

    def curvature_function(self, u):
        U, single = _directions(u, self.dim)
        return _out(self._curvature(U), single)

    def boundary_point(self, u):
        U, single = _directions(u, self.dim)
        pts = self._boundary(U)
        return pts[0] if single else pts

    def width(self, u):
        U, single = _directions(u, self.dim)
        return _out(self._support(U) + self._support(-U), single)

    def section_volume(self, u, s):
        U, single = _directions(u, self.dim)
        s = np.asarray(s, dtype=float)
        top = self._support(U)
        bottom = -self._support(-U)
        top_b, bot_b = (top[0], bottom[0]) if single else (top, bottom)
        slack = 1e-12 * (np.abs(top_b) + np.abs(bot_b))
        if np.any(s > top_b + slack) or np.any(s < bot_b - slack):
            raise OutOfSlab(f"section level outside the support slab [{bot_b}, {top_b}]")
        w = np.clip(top_b - s, 0.0, top_b - bot_b)
        if single:
            val = self._section_at_depth(U, np.atleast_1d(w))
            return float(val[0]) if np.ndim(s) == 0 else val
        return self._section_at_depth(U, w)

    def volume(self, rule: SphereRule | None = None) -> float:
        rule = rule or default_rule(self.dim)
        r = self._radial(rule.nodes)
        return rule.integrate(r**self.dim) / self.dim

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        norms = np.linalg.norm(x, axis=1)
        inside = np.ones(len(x), dtype=bool)
        nz = norms > 0
        if np.any(nz):
            inside[nz] = norms[nz] <= self._radial(x[nz] / norms[nz, None])
        return inside

    @property
    def is_symmetric(self) -> bool:
        return False

    def translate(self, c) -> ConvexBody:
        return affine_image(self, np.eye(self.dim), c)

    def slice_measure(self, U: np.ndarray, min_depth: float = DEFAULT_MIN_DEPTH):
        """Discrete measure on depth below the supporting hyperplane.

        Returns ``(depth, log_mass, sign)`` arrays of shape ``(m, N)`` such that
        ``sum(sign * exp(log_mass) * F(depth))`` approximates the integral of
        ``g(w) F(w)`` over ``0 <= w <= width``, where ``g`` is the section
        volume at depth ``w``. Nodes are log-graded from ``min_depth`` so that
        ``F`` may vary on any scale above roughly ``1e13 * min_depth``. Masses
        are kept as logarithms because near ``min_depth`` they fall far below
        the smallest double.
        """
        U, _ = _directions(U, self.dim)
        W = self._support(U) + self._support(-U)
        lo = np.full(len(U), min_depth) * np.maximum(W, 1e-300)
        a_nodes, a_w = log_graded_nodes(lo, 0.5 * W)
        b_nodes, b_w = sqrt_end_nodes(0.5 * W, W)
        nodes = np.concatenate([a_nodes, b_nodes], axis=1)
        weights = np.concatenate([a_w, b_w], axis=1)
        g = self._section_at_depth(U, nodes)
        with np.errstate(divide="ignore"):
            return nodes, np.log(weights) + np.log(g), np.ones_like(g)


# ---------------------------------------------------------------------------
# ellipsoids
# ---------------------------------------------------------------------------


class Ellipsoid(ConvexBody):
    """The body ``A(B(0,1)) + center``."""

    def __init__(self, matrix, center=None):
        A = np.array(matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DomainError("ellipsoid matrix must be square")
        n = A.shape[0]
        if n < 2:
            raise DomainError("dimension must be >= 2")
        det = float(np.linalg.det(A))
        if not abs(det) > 1e-300 or not np.isfinite(det):
            raise SingularMap("ellipsoid matrix is singular")
        self.dim = n
        self.matrix = A
        self.center = np.zeros(n) if center is None else np.array(center, dtype=float)
        self.det = abs(det)
        self.gram = A @ A.T
        self.cholesky = np.linalg.cholesky(self.gram)
        self.inverse = np.linalg.inv(A)

    def __repr__(self):
        return f"Ellipsoid(matrix={self.matrix.tolist()}, center={self.center.tolist()})"

    def _norm_t(self, U):
        return np.sqrt(np.einsum("ij,jk,ik->i", U, self.gram, U))

    def _support(self, U):
        return self._norm_t(U) + U @ self.center

    def _radial(self, U):
        # |A^{-1}(lam u - c)| = 1
        p = U @ self.inverse.T
        q = self.inverse @ self.center
        a = np.einsum("ij,ij->i", p, p)
        b = p @ q
        c = q @ q - 1.0
        if c >= 0:
            raise CenterNotInterior("origin is not interior to the ellipsoid")
        return (b + np.sqrt(b * b - a * c)) / a

    def _curvature(self, U):
        return self.det**2 / self._norm_t(U) ** (self.dim + 1)

    def _boundary(self, U):
        return self.center + (U @ self.gram) / self._norm_t(U)[:, None]

    def _section_at_depth(self, U, w):
        H = self._norm_t(U)
        w = np.asarray(w, dtype=float)
        Hb = H[:, None] if w.ndim == 2 else H
        ww = np.clip(w, 0.0, 2 * Hb)
        base = np.maximum(ww * (2 * Hb - ww), 0.0) / Hb**2
        return (unit_ball_volume(self.dim - 1) * self.det / Hb) * base ** ((self.dim - 1) / 2)

    def volume(self, rule=None):
        return unit_ball_volume(self.dim) * self.det

    @property
    def is_symmetric(self):
        return bool(np.all(self.center == 0))

    def translate(self, c):
        return Ellipsoid(self.matrix, self.center + np.asarray(c, dtype=float))

    def polar(self, point=None):
        """Polar body ``(E - point)^0``, again an ellipsoid.

        About the centre this is ``Ellipsoid((A^T)^{-1})``. For another interior
        point ``x`` with ``c' = center - x`` the polar is
        ``{z : z^T (A A^T - c' c'^T) z + 2 <c', z> <= 1}``.
        """
        x = self.center if point is None else np.asarray(point, dtype=float)
        cp = self.center - x
        if not np.any(cp):
            return Ellipsoid(self.inverse.T)
        if np.linalg.norm(self.inverse @ cp) >= 1:
            raise CenterNotInterior("polar centre is not interior to the ellipsoid")
        Q = self.gram - np.outer(cp, cp)
        Qinv_c = np.linalg.solve(Q, cp)
        kappa = 1.0 + cp @ Qinv_c
        S = kappa * np.linalg.inv(Q)
        return Ellipsoid(np.linalg.cholesky(0.5 * (S + S.T)), -Qinv_c)


class Ball(Ellipsoid):
    def __init__(self, dim: int, radius: float = 1.0):
        if dim < 2:
            raise DomainError("dimension must be >= 2")
        if not radius > 0:
            raise DomainError("radius must be positive")
        self.radius = float(radius)
        super().__init__(self.radius * np.eye(dim))

    def __repr__(self):
        return f"Ball(dim={self.dim}, radius={self.radius})"

    def polar(self, point=None):
        if point is None or not np.any(point):
            return Ball(self.dim, 1.0 / self.radius)
        return super().polar(point)


# ---------------------------------------------------------------------------
# planar bodies given by a trigonometric support function
# ---------------------------------------------------------------------------


_SMALL_TERMS = 14


def _sin_series_small(k, phi):
    """``(1-k)/2 sin((k+1)phi) + (1+k)/2 sin((k-1)phi)`` by its Taylor series;
    the O(phi) terms cancel exactly, so this keeps relative accuracy for small
    ``phi``. ``k`` and ``phi`` are broadcast together."""
    k = np.asarray(k, dtype=float)
    phi = np.asarray(phi, dtype=float)
    out = np.zeros(np.broadcast_shapes(k.shape, phi.shape))
    sign, fact = -1.0, 6.0
    power = phi**3
    p2 = phi * phi
    for m in range(1, _SMALL_TERMS):
        coeff = ((1 - k) * (k + 1) ** (2 * m + 1) + (1 + k) * (k - 1) ** (2 * m + 1)) / 2.0
        out = out + sign * coeff * power / fact
        sign = -sign
        power = power * p2
        fact *= (2 * m + 2) * (2 * m + 3)
    return out


_CAP_ARC_ORDER = 96


class FourierBody2D(ConvexBody):
    """Planar convex body with support function
    ``h(theta) = a0 + sum_k (a_k cos k theta + b_k sin k theta)``.

    ``b`` lists the sine coefficients for k = 1..K. Construction checks that
    ``h > 0`` (origin interior) and ``h + h'' > 0`` (strict convexity with
    positive curvature) on a 4096-point grid with margin 1e-8.
    """

    dim = 2
    CHECK_POINTS = 4096
    MARGIN = 1e-8

    def __init__(self, a, b=(), validate: bool = True):
        a = np.array(a, dtype=float).ravel()
        b = np.array(b, dtype=float).ravel()
        if len(a) == 0:
            raise InvalidBody("need at least the constant coefficient")
        if len(b) == len(a) and len(a) > 0:
            if b[0] != 0:
                raise InvalidBody("constant sine coefficient must be zero")
            b = b[1:]
        K = max(len(a) - 1, len(b))
        self.a = np.zeros(K + 1)
        self.a[: len(a)] = a
        self.b = np.zeros(K + 1)
        self.b[1 : len(b) + 1] = b
        self.k = np.arange(K + 1, dtype=float)
        if validate:
            theta = 2 * np.pi * np.arange(self.CHECK_POINTS) / self.CHECK_POINTS
            if self.h(theta).min() <= self.MARGIN:
                raise InvalidBody("support function is not positive: origin not interior")
            if self.radius_of_curvature(theta).min() <= self.MARGIN:
                raise InvalidBody("h + h'' is not positive: body is not strictly convex")

    def __repr__(self):
        return f"FourierBody2D(a={self.a.tolist()}, b={self.b[1:].tolist()})"

    @property
    def degree(self) -> int:
        return len(self.a) - 1

    def _series(self, theta, ca, cb):
        # cos/sin of k*theta by repeated rotation; error grows like k * 1e-16
        theta = np.asarray(theta, dtype=float)
        c1, s1 = np.cos(theta), np.sin(theta)
        ck, sk = np.ones_like(theta), np.zeros_like(theta)
        out = ca[0] * ck
        for k in range(1, len(self.a)):
            ck, sk = ck * c1 - sk * s1, sk * c1 + ck * s1
            if ca[k] != 0 or cb[k] != 0:
                out = out + ca[k] * ck + cb[k] * sk
        return out

    def h(self, theta):
        return self._series(theta, self.a, self.b)

    def dh(self, theta):
        return self._series(theta, self.k * self.b, -self.k * self.a)

    def d2h(self, theta):
        k2 = self.k**2
        return self._series(theta, -k2 * self.a, -k2 * self.b)

    def radius_of_curvature(self, theta):
        fac = 1.0 - self.k**2
        return self._series(theta, fac * self.a, fac * self.b)

    def point(self, theta):
        theta = np.asarray(theta, dtype=float)
        h, dh = self.h(theta), self.dh(theta)
        c, s = np.cos(theta), np.sin(theta)
        return np.stack([h * c - dh * s, h * s + dh * c], axis=-1)

    @staticmethod
    def _angles(U):
        return np.arctan2(U[:, 1], U[:, 0])

    def _support(self, U):
        return self.h(self._angles(U))

    def _curvature(self, U):
        return self.radius_of_curvature(self._angles(U))

    def _boundary(self, U):
        return self.point(self._angles(U))

    def _radial(self, U):
        target = self._angles(U)
        return self.radial_angle(target)

    def radial_angle(self, target):
        """Radial function at polar angles ``target`` via Newton on the normal angle."""
        target = np.asarray(target, dtype=float)
        tc, ts = np.cos(target), np.sin(target)
        theta = self._normal_angle_guess(target)
        for _ in range(100):
            x = self.point(theta)
            cross = tc * x[..., 1] - ts * x[..., 0]
            dot = tc * x[..., 0] + ts * x[..., 1]
            resid = np.arctan2(cross, dot)
            r2 = x[..., 0] ** 2 + x[..., 1] ** 2
            deriv = self.radius_of_curvature(theta) * self.h(theta) / r2
            step = np.clip(resid / deriv, -0.5, 0.5)
            theta = theta - step
            if np.all(np.abs(step) <= 1e-15 * (1 + np.abs(theta))):
                break
        else:
            if np.max(np.abs(step)) > 1e-12:
                raise NoConvergence("radial Newton iteration did not converge")
        x = self.point(theta)
        return tc * x[..., 0] + ts * x[..., 1]

    @cached_property
    def _angle_table(self):
        # the polar angle of the boundary point is increasing in the normal angle
        normals = 2 * np.pi * np.arange(4097) / 4096
        x = self.point(normals)
        pos = np.unwrap(np.arctan2(x[:, 1], x[:, 0]))
        pos = pos - 2 * np.pi * np.floor(pos[0] / (2 * np.pi) + 0.5)
        return pos, normals

    def _normal_angle_guess(self, target):
        pos, normals = self._angle_table
        tt = np.mod(target - pos[0], 2 * np.pi) + pos[0]
        return np.interp(tt, pos, normals)

    # -- slices -------------------------------------------------------------
    def _rotated(self, theta_v):
        kt = np.multiply.outer(theta_v, self.k)
        c, s = np.cos(kt), np.sin(kt)
        A = self.a * c + self.b * s
        B = -self.a * s + self.b * c
        return A, B  # shape (..., K+1)

    def _phi_table(self, phi):
        """Per-harmonic factors ``(alpha, beta, gamma, delta)``, shape
        ``(4, K+1, len(phi))`` for 1-D ``phi``, with
        ``depth = sum A_k alpha_k - B_k beta_k`` and
        ``offset = sum A_k gamma_k + B_k delta_k`` in rotated coefficients.

        Depth terms are written with squared half-angle sines, which are
        positive, so relative accuracy survives for small ``phi``.
        """
        k = self.k[:, None]
        half = 0.5 * phi[None, :]
        sm = np.sin((k - 1) * half) ** 2
        sp = np.sin((k + 1) * half) ** 2
        sin_p = np.sin((k + 1) * phi[None, :])
        sin_m = np.sin((k - 1) * phi[None, :])
        tab = np.empty((4, len(self.k), len(phi)))
        tab[0] = (1 + k) * sm + (1 - k) * sp
        tab[1] = (1 - k) / 2 * sin_p + (1 + k) / 2 * sin_m
        small = (np.abs(phi)[None, :] * (k + 1) < 0.5) & (k > 1)
        if np.any(small):
            kk, jj = np.nonzero(small)
            tab[1][kk, jj] = _sin_series_small(self.k[kk], phi[jj])
        tab[2] = (1 - k) / 2 * sin_p - (1 + k) / 2 * sin_m
        tab[3] = -(1 + k) * sm - (k - 1) * sp
        return tab

    def _depth_and_offset(self, theta_v, phi, chunk: int = 4096):
        """Depth below the top and signed offset along the tangent of the
        boundary point with normal angle ``theta_v + phi`` (cancellation-free)."""
        theta_v = np.asarray(theta_v, dtype=float)
        phi = np.asarray(phi, dtype=float)
        if phi.ndim > theta_v.ndim:
            theta_v = theta_v[..., None]
        shape = np.broadcast_shapes(theta_v.shape, phi.shape)
        tv = np.broadcast_to(theta_v, shape).ravel()
        ph = np.broadcast_to(phi, shape).ravel()
        depth = np.empty(tv.size)
        offset = np.empty(tv.size)
        for i in range(0, tv.size, chunk):
            sl = slice(i, i + chunk)
            A, B = self._rotated(tv[sl])
            tab = self._phi_table(ph[sl])
            depth[sl] = np.einsum("ik,ki->i", A, tab[0]) - np.einsum("ik,ki->i", B, tab[1])
            offset[sl] = np.einsum("ik,ki->i", A, tab[2]) + np.einsum("ik,ki->i", B, tab[3])
        return depth.reshape(shape), offset.reshape(shape)

    def _branch_tables(self, theta_v, psi):
        """Depth, offset and curvature radius at normal angles ``theta_v + psi``
        for one shared 1-D node set ``psi``: all three are products of the
        rotated coefficients with per-node tables."""
        A, B = self._rotated(theta_v)
        tab = self._phi_table(psi)
        depth = A @ tab[0] - B @ tab[1]
        offset = A @ tab[2] + B @ tab[3]
        kp = np.multiply.outer(self.k, psi)
        fac = (1.0 - self.k**2)[None, :]
        curv = (A * fac) @ np.cos(kp) + (B * fac) @ np.sin(kp)
        return depth, offset, curv

    def _branch_angle(self, theta_v, w, sign):
        """Solve depth(sign * psi) = w for psi in [0, pi] (vectorised, safeguarded Newton)."""
        theta_v = np.asarray(theta_v, dtype=float)
        w = np.asarray(w, dtype=float)
        tv = np.broadcast_to(theta_v[..., None] if w.ndim > theta_v.ndim else theta_v, w.shape)
        f0 = self.radius_of_curvature(tv)
        lo = np.zeros(w.shape)
        hi = np.full(w.shape, np.pi)
        psi = np.clip(np.sqrt(2 * np.maximum(w, 0) / f0), 0.0, np.pi * 0.999)
        for _ in range(200):
            d, _ = self._depth_and_offset(tv, sign * psi)
            val = d - w
            lo = np.where(val <= 0, psi, lo)
            hi = np.where(val > 0, psi, hi)
            dd = self.radius_of_curvature(tv + sign * psi) * np.sin(psi)
            with np.errstate(divide="ignore", invalid="ignore"):
                new = psi - val / dd
            bad = ~np.isfinite(new) | (new <= lo) | (new >= hi)
            new = np.where(bad, 0.5 * (lo + hi), new)
            done = np.abs(new - psi) <= 1e-15 * np.maximum(psi, 1e-300) + 1e-300
            psi = new
            if np.all(done):
                break
        return psi

    def _section_at_depth(self, U, w):
        theta_v = self._angles(U)
        w = np.asarray(w, dtype=float)
        if w.ndim == 2:
            tv = np.broadcast_to(theta_v[:, None], w.shape)
        else:
            tv = theta_v
        W = self.h(tv) + self.h(tv + np.pi)
        w = np.clip(w, 0.0, W)
        p1 = self._branch_angle(tv, w, 1.0)
        p2 = self._branch_angle(tv, w, -1.0)
        _, off1 = self._depth_and_offset(tv, p1)
        _, off2 = self._depth_and_offset(tv, -p2)
        return np.abs(off1 - off2)

    def _cap_area(self, theta_v, eta):
        """Area of ``{<x, u> >= h(u) - eta}`` and its chord length, vectorised.

        Measured from the chord endpoint ``p`` the area is
        ``1/2 int rho(t) (h(t) - <p, u(t)>) dt`` over the arc, whose integrand
        is nonnegative, so small caps lose no digits to cancellation.
        """
        tv = np.atleast_1d(np.asarray(theta_v, dtype=float))
        w = np.atleast_1d(np.asarray(eta, dtype=float))
        tv = np.broadcast_to(tv, w.shape)
        t1 = tv + self._branch_angle(tv, w, 1.0)
        t2 = tv - self._branch_angle(tv, w, -1.0)
        p, q = self.point(t2), self.point(t1)
        x, wq = gauss_legendre(_CAP_ARC_ORDER)
        t = 0.5 * (t1 - t2)[:, None] * x + 0.5 * (t1 + t2)[:, None]
        integrand = self.radius_of_curvature(t) * (
            self.h(t) - p[:, 0, None] * np.cos(t) - p[:, 1, None] * np.sin(t))
        area = 0.25 * (t1 - t2) * (integrand @ wq)
        return area, np.linalg.norm(q - p, axis=-1)

    def slice_measure(self, U, min_depth: float = DEFAULT_MIN_DEPTH):
        # Parametrise each half of the boundary by the normal angle, so no
        # chord root-finding is needed: w = depth(psi), dw = f sin(psi) dpsi.
        U, _ = _directions(U, 2)
        theta_v = self._angles(U)
        f0 = self.radius_of_curvature(theta_v)
        W = self.h(theta_v) + self.h(theta_v + np.pi)
        # one node set shared by all directions, graded down to the smallest
        # angle any of them needs
        psi_lo = float(np.sqrt(2 * min_depth * np.maximum(W, 1e-300) / f0).min())
        # log grading only below the scale on which the series can oscillate;
        # above it, panels short enough to resolve the top frequency
        deg = max(self.degree, 4)
        psi_c = min(np.pi / 2, 4.0 / deg)
        a_nodes, a_w = log_graded_nodes(psi_lo, psi_c)
        panels = int(np.ceil((np.pi - psi_c) * deg / 8.0))
        x, wq = gauss_legendre(24)
        edges = np.linspace(psi_c, np.pi, panels + 1)
        half = 0.5 * np.diff(edges)
        b = ((edges[:-1] + half)[:, None] + half[:, None] * x[None, :]).ravel()
        bw = (half[:, None] * wq[None, :]).ravel()
        psi = np.concatenate([a_nodes[0], b])
        wpsi = np.concatenate([a_w[0], bw])
        depths, masses, signs = [], [], []
        for sign in (1.0, -1.0):
            d, off, curv = self._branch_tables(theta_v, sign * psi)
            depths.append(d)
            # both offsets are signed: a chord need not straddle the top point
            mass = sign * off * curv
            with np.errstate(divide="ignore"):
                masses.append(np.log(np.abs(mass)) + np.log(np.sin(psi) * wpsi)[None, :])
            signs.append(np.sign(mass))
        return (np.concatenate(depths, axis=1), np.concatenate(masses, axis=1),
                np.concatenate(signs, axis=1))

    @property
    def is_symmetric(self):
        odd = self.k % 2 == 1
        return bool(np.all(self.a[odd] == 0) and np.all(self.b[odd] == 0))

    def translate(self, c):
        c = np.asarray(c, dtype=float)
        a = self.a.copy()
        b = self.b.copy()
        if len(a) < 2:
            a = np.append(a, 0.0)
            b = np.append(b, 0.0)
        a[1] += c[0]
        b[1] += c[1]
        return FourierBody2D(a, b[1:])

    def scaled(self, lam: float):
        return FourierBody2D(lam * self.a, lam * self.b[1:])


# ---------------------------------------------------------------------------
# affine images and polar bodies
# ---------------------------------------------------------------------------


class AffineImage(ConvexBody):
    """The set ``L(base) + a`` for a body without a closed-form image."""

    def __init__(self, base: ConvexBody, L, a=None):
        L = np.array(L, dtype=float)
        n = base.dim
        if L.shape != (n, n):
            raise DomainError(f"map must be {n}x{n}")
        det = float(np.linalg.det(L))
        if abs(det) < 1e-300:
            raise SingularMap("linear part is singular")
        self.dim = n
        self.base = base
        self.L = L
        self.Linv = np.linalg.inv(L)
        self.det = abs(det)
        self.a = np.zeros(n) if a is None else np.array(a, dtype=float)
        if np.linalg.norm(self.a) > 0 and self._gauge(-self.Linv @ self.a) >= 1:
            raise CenterNotInterior("origin is not interior to the affine image")

    def __repr__(self):
        return f"AffineImage({self.base!r}, L={self.L.tolist()}, a={self.a.tolist()})"

    def _gauge(self, y):
        y = np.atleast_2d(y)
        norms = np.linalg.norm(y, axis=1)
        out = np.zeros(len(y))
        nz = norms > 0
        out[nz] = norms[nz] / self.base._radial(y[nz] / norms[nz, None])
        return out if len(out) > 1 else out[0]

    def _pulled(self, U):
        V = U @ self.L
        nv = np.linalg.norm(V, axis=1)
        return V / nv[:, None], nv

    def _support(self, U):
        V, nv = self._pulled(U)
        return self.base._support(V) * nv + U @ self.a

    def _radial(self, U):
        Y = U @ self.Linv.T
        if not np.any(self.a):
            return 1.0 / np.atleast_1d(self._gauge(Y))
        b = self.Linv @ self.a
        out = np.empty(len(U))
        for i, y in enumerate(Y):
            def fn(lam):
                return self._gauge(lam * y - b) - 1.0
            hi = 1.0
            while fn(hi) < 0:
                hi *= 2.0
            out[i] = optimize.brentq(fn, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        return out

    def _curvature(self, U):
        V, nv = self._pulled(U)
        return self.det**2 * self.base._curvature(V) / nv ** (self.dim + 1)

    def _boundary(self, U):
        V, _ = self._pulled(U)
        return self.base._boundary(V) @ self.L.T + self.a

    def _section_at_depth(self, U, w):
        V, nv = self._pulled(U)
        w = np.asarray(w, dtype=float)
        nvb = nv[:, None] if w.ndim == 2 else nv
        return self.base._section_at_depth(V, w / nvb) * self.det / nvb

    def slice_measure(self, U, min_depth=DEFAULT_MIN_DEPTH):
        U, _ = _directions(U, self.dim)
        V, nv = self._pulled(U)
        d, log_m, sgn = self.base.slice_measure(V, min_depth)
        return d * nv[:, None], log_m + math.log(abs(self.det)), sgn

    @property
    def is_symmetric(self):
        return self.base.is_symmetric and not np.any(self.a)


class PolarView(ConvexBody):
    """Polar body ``(base - center)^0``.

    The radial function is exact (reciprocal of the shifted support). The
    support function is found by maximising ``<u, v> r(v)`` over a 512-point
    direction grid followed by golden-section refinement (planar case).
    """

    GRID = 512

    def __init__(self, base: ConvexBody, center=None):
        self.base = base
        self.dim = base.dim
        self.center = np.zeros(self.dim) if center is None else np.array(center, dtype=float)
        if np.any(self.center) and not base.contains(self.center)[0]:
            raise CenterNotInterior("polar centre is not interior to the base body")
        if not np.any(self.center):
            r0 = base._radial(default_rule(self.dim).nodes[:8])
            if np.any(r0 <= 0):
                raise CenterNotInterior("origin is not interior to the base body")

    def __repr__(self):
        return f"PolarView({self.base!r}, center={self.center.tolist()})"

    def _shifted_support(self, U):
        h = self.base._support(U) - U @ self.center
        if np.any(h <= 0):
            raise CenterNotInterior("polar centre is not interior to the base body")
        return h

    def _radial(self, U):
        return 1.0 / self._shifted_support(U)

    def _support(self, U):
        if self.dim == 2:
            return self._support_2d(U)
        return self._support_nd(U)

    def _support_2d(self, U):
        target = np.arctan2(U[:, 1], U[:, 0])
        grid = 2 * np.pi * np.arange(self.GRID) / self.GRID
        rg = self._radial(angle_directions(grid))
        vals = np.cos(target[:, None] - grid[None, :]) * rg[None, :]
        j = np.argmax(vals, axis=1)
        step = 2 * np.pi / self.GRID
        lo = grid[j] - step
        hi = grid[j] + step

        def F(phi):
            return np.cos(target - phi) * self._radial(angle_directions(phi))

        # vectorised golden-section search
        g = (math.sqrt(5) - 1) / 2
        x1 = hi - g * (hi - lo)
        x2 = lo + g * (hi - lo)
        f1, f2 = F(x1), F(x2)
        for _ in range(80):
            left = f1 >= f2
            hi = np.where(left, x2, hi)
            lo = np.where(left, lo, x1)
            nx1 = np.where(left, hi - g * (hi - lo), x2)
            nx2 = np.where(left, x1, lo + g * (hi - lo))
            nf1 = np.where(left, F(nx1), f2)
            nf2 = np.where(left, f1, F(nx2))
            x1, x2, f1, f2 = nx1, nx2, nf1, nf2
            if np.all(hi - lo < 1e-13):
                break
        return np.maximum(np.maximum(f1, f2), F(0.5 * (lo + hi)))

    def _support_nd(self, U):
        rule = default_rule(self.dim)
        grid = rule.nodes
        rg = self._radial(grid)
        out = np.empty(len(U))
        for i, u in enumerate(U):
            vals = grid @ u * rg
            v0 = grid[np.argmax(vals)]

            def neg(v):
                v = v / np.linalg.norm(v)
                return -(v @ u) * self._radial(v[None, :])[0]

            res = optimize.minimize(neg, v0, method="Nelder-Mead",
                                    options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
            out[i] = max(-res.fun, vals.max())
        return out

    def _shifted_base(self) -> ConvexBody:
        if not np.any(self.center):
            return self.base
        return self.base.translate(-self.center)

    @cached_property
    def fourier(self) -> FourierBody2D:
        """Trigonometric reconstruction of the polar (planar case only).

        ``h_polar = 1 / r_shifted_base`` is sampled, transformed with an FFT
        and truncated once coefficients fall below 1e-15 relative; the sample
        count doubles until the truncated tail is negligible.
        """
        if self.dim != 2:
            raise Unsupported("trigonometric reconstruction is planar only")
        shifted = self._shifted_base()
        m = 1024
        while True:
            theta = 2 * np.pi * np.arange(m) / m
            hs = 1.0 / shifted._radial(angle_directions(theta))
            c = np.fft.rfft(hs) / m
            mags = np.abs(c)
            tail = mags[m // 4 :].max()
            if tail < 1e-15 * mags[0] or m >= 2**16:
                break
            m *= 2
        keep = np.nonzero(mags > 1e-15 * mags[0])[0]
        K = int(keep.max()) if len(keep) else 0
        K = min(K, m // 4)
        a = np.concatenate([[c[0].real], 2 * c[1 : K + 1].real])
        b = -2 * c[1 : K + 1].imag
        return FourierBody2D(a, b)

    def _curvature(self, U):
        return self.fourier._curvature(U)

    def _boundary(self, U):
        return self.fourier._boundary(U)

    def _section_at_depth(self, U, w):
        return self.fourier._section_at_depth(U, w)

    def slice_measure(self, U, min_depth=DEFAULT_MIN_DEPTH):
        return self.fourier.slice_measure(U, min_depth)

    @property
    def is_symmetric(self):
        return self.base.is_symmetric and not np.any(self.center)


class BinetEllipsoid(ConvexBody):
    """``{x : x^T M x <= 1}``, the unit ball of ``||u||^2 = u^T M u``."""

    def __init__(self, matrix):
        M = np.array(matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DomainError("matrix must be square")
        if np.max(np.abs(M - M.T)) > 1e-12 * max(1.0, np.abs(M).max()):
            raise DomainError("Binet matrix must be symmetric")
        M = 0.5 * (M + M.T)
        evals, evecs = np.linalg.eigh(M)
        if np.any(evals <= 0):
            raise DomainError("Binet matrix must be positive definite")
        self.dim = M.shape[0]
        self.matrix = M
        self._ellipsoid = Ellipsoid(evecs @ np.diag(evals**-0.5) @ evecs.T)

    def __repr__(self):
        return f"BinetEllipsoid(matrix={self.matrix.tolist()})"

    def norm(self, u):
        U = np.atleast_2d(np.asarray(u, dtype=float))
        out = np.sqrt(np.einsum("ij,jk,ik->i", U, self.matrix, U))
        return float(out[0]) if np.ndim(u) == 1 else out

    def as_ellipsoid(self) -> Ellipsoid:
        return self._ellipsoid

    def _support(self, U):
        return self._ellipsoid._support(U)

    def _radial(self, U):
        return 1.0 / np.sqrt(np.einsum("ij,jk,ik->i", U, self.matrix, U))

    def _curvature(self, U):
        return self._ellipsoid._curvature(U)

    def _boundary(self, U):
        return self._ellipsoid._boundary(U)

    def _section_at_depth(self, U, w):
        return self._ellipsoid._section_at_depth(U, w)

    def volume(self, rule=None):
        return self._ellipsoid.volume()

    @property
    def is_symmetric(self):
        return True


# ---------------------------------------------------------------------------
# functional API
# ---------------------------------------------------------------------------


def support(body: ConvexBody, u):
    return body.support(u)


def radial(body: ConvexBody, u):
    return body.radial(u)


def curvature_function(body: ConvexBody, u):
    return body.curvature_function(u)


def boundary_point(body: ConvexBody, u):
    return body.boundary_point(u)


def section_volume(body: ConvexBody, u, s):
    return body.section_volume(u, s)


def volume(body: ConvexBody, rule: SphereRule | None = None) -> float:
    return body.volume(rule)


def polar(body: ConvexBody, center=None) -> ConvexBody:
    """Polar body ``(body - center)^0``; closed forms for centred ellipsoids."""
    c = np.zeros(body.dim) if center is None else np.asarray(center, dtype=float)
    if isinstance(body, Ellipsoid):
        return body.polar(c)
    if isinstance(body, PolarView) and not np.any(c) and not np.any(body.center):
        return body.base
    return PolarView(body, c)


def affine_image(body: ConvexBody, L, a=None) -> ConvexBody:
    """The set ``L(body) + a``."""
    L = np.asarray(L, dtype=float)
    n = body.dim
    if L.shape != (n, n):
        raise DomainError(f"map must be {n}x{n}")
    if abs(np.linalg.det(L)) < 1e-300:
        raise SingularMap("linear part is singular")
    a = np.zeros(n) if a is None else np.asarray(a, dtype=float)
    if isinstance(body, Ellipsoid):
        return Ellipsoid(L @ body.matrix, L @ body.center + a)
    if isinstance(body, FourierBody2D) and np.allclose(L, np.eye(2), rtol=0, atol=0):
        return body.translate(a)
    if isinstance(body, AffineImage):
        return AffineImage(body.base, L @ body.L, L @ body.a + a)
    return AffineImage(body, L, a)


def chord_length(body: ConvexBody, u, s: float) -> float:
    """Length of ``{x in body : <x,u> = s}`` in the plane, located by root
    finding on the gauge along the line. Slow; used as an independent check."""
    if body.dim != 2:
        raise Unsupported("chord_length is planar only")
    U, _ = _directions(u, 2)
    u = U[0]
    perp = np.array([-u[1], u[0]])
    top = body._support(U)[0]
    bottom = -body._support(-U)[0]
    if s >= top or s <= bottom:
        return 0.0

    def gauge(tau):
        x = s * u + tau * perp
        nx = np.linalg.norm(x)
        if nx == 0:
            return 0.0
        return nx / body._radial((x / nx)[None, :])[0]

    R = 2 * max(abs(top), abs(bottom), body._support(perp[None, :])[0],
                body._support(-perp[None, :])[0]) + 1.0
    res = optimize.minimize_scalar(gauge, bounds=(-R, R), method="bounded",
                                   options={"xatol": 1e-14})
    t0 = res.x
    if gauge(t0) >= 1:
        return 0.0
    hi = t0 + 1.0
    while gauge(hi) < 1:
        hi += R
    lo = t0 - 1.0
    while gauge(lo) < 1:
        lo -= R
    t_plus = optimize.brentq(lambda t: gauge(t) - 1, t0, hi, xtol=1e-15)
    t_minus = optimize.brentq(lambda t: gauge(t) - 1, lo, t0, xtol=1e-15)
    return t_plus - t_minus


def polar_volume(body: ConvexBody, x=None, rule: SphereRule | None = None) -> float:
    """``|K^x| = (1/n) * integral of (h_K(u) - <x,u>)^(-n)`` over the sphere."""
    rule = rule or default_rule(body.dim)
    U = rule.nodes
    x = np.zeros(body.dim) if x is None else np.asarray(x, dtype=float)
    gap = body._support(U) - U @ x
    if np.any(gap <= 0):
        raise CenterNotInterior("point is not interior to the body")
    return rule.integrate(gap ** (-body.dim)) / body.dim


def binet_ellipsoid(body: ConvexBody, rule: SphereRule | None = None) -> BinetEllipsoid:
    """Second-moment (Binet) ellipsoid ``||u||^2 = (1/|K|) int_K <x,u>^2 dx``,
    by polar-coordinate quadrature of ``r^(n+2) u u^T``."""
    rule = rule or default_rule(body.dim)
    n = body.dim
    U = rule.nodes
    r = body._radial(U)
    vol = rule.integrate(r**n) / n
    weighted = rule.weights * r ** (n + 2) / (n + 2)
    M = (U * weighted[:, None]).T @ U / vol
    return BinetEllipsoid(0.5 * (M + M.T))


def santalo_point(body: ConvexBody, rule: SphereRule | None = None, tol: float = 1e-10,
                  max_iter: int = 100) -> np.ndarray:
    """Minimiser of ``x -> |K^x|``, by damped Newton on the support-function
    form of the polar volume; falls back to Nelder-Mead if Newton stalls.

    At the minimiser the polar body ``K^x`` has its centroid at ``x``.
    """
    rule = rule or default_rule(body.dim)
    n = body.dim
    U, wts = rule.nodes, rule.weights
    h = body._support(U)
    if np.any(h <= 0):
        raise CenterNotInterior("origin must be interior as a starting point")

    def F(x):
        gap = h - U @ x
        if np.any(gap <= 0):
            return np.inf
        return float(wts @ gap ** (-n)) / n

    x = np.zeros(n)
    scale = float(wts @ h ** (-(n + 1)))
    for _ in range(max_iter):
        gap = h - U @ x
        grad = (U * (wts * gap ** (-(n + 1)))[:, None]).sum(axis=0)
        if np.linalg.norm(grad) < tol * max(1.0, scale):
            return x
        hess = (n + 1) * (U * (wts * gap ** (-(n + 2)))[:, None]).T @ U
        step = -np.linalg.solve(hess, grad)
        f0, alpha = F(x), 1.0
        while alpha > 1e-12 and not F(x + alpha * step) <= f0:
            alpha *= 0.5
        if alpha <= 1e-12:
            break
        x = x + alpha * step
    res = optimize.minimize(F, x, method="Nelder-Mead",
                            options={"xatol": 1e-14, "fatol": 1e-16, "maxiter": 20000})
    x = res.x
    gap = h - U @ x
    grad = (U * (wts * gap ** (-(n + 1)))[:, None]).sum(axis=0)
    if np.linalg.norm(grad) >= 1e3 * tol * max(1.0, scale):
        raise NoConvergence("Santalo point iteration did not converge")
    return x


def polar_centroid(body: ConvexBody, x, rule: SphereRule | None = None) -> np.ndarray:
    """Centroid of ``K^x`` (relative to ``x``)."""
    rule = rule or default_rule(body.dim)
    n = body.dim
    U = rule.nodes
    gap = body._support(U) - U @ np.asarray(x, dtype=float)
    r = 1.0 / gap
    vol = rule.integrate(r**n) / n
    return (U * (rule.weights * r ** (n + 1))[:, None]).sum(axis=0) / ((n + 1) * vol)


def centered(body: ConvexBody, rule: SphereRule | None = None) -> tuple[ConvexBody, np.ndarray]:
    """Translate ``body`` so that its Santalo point sits at the origin."""
    x = santalo_point(body, rule)
    if np.linalg.norm(x) <= 1e-14 * max(1.0, float(body._support(np.eye(body.dim)).max())):
        return body, np.zeros(body.dim)
    return body.translate(-x), x


def polar_for_slices(body: ConvexBody) -> ConvexBody:
    """Polar about the origin in a representation with slice evaluators.

    The result is memoised on the (immutable) body.
    """
    cached = body.__dict__.get("_polar_slices")
    if cached is not None:
        return cached
    P = polar(body)
    if isinstance(P, PolarView):
        if body.dim != 2:
            raise Unsupported("polar slices of general bodies are planar only")
        P = P.fourier
    body.__dict__["_polar_slices"] = P
    return P


# ---------------------------------------------------------------------------
# body description files
# ---------------------------------------------------------------------------


def body_from_dict(desc: dict) -> ConvexBody:
    """Build a body from ``{"kind": "ball"|"ellipsoid"|"fourier2d", ...}``."""
    kind = desc.get("kind")
    if kind == "ball":
        return Ball(int(desc.get("dim", 2)), float(desc.get("radius", 1.0)))
    if kind == "ellipsoid":
        body = Ellipsoid(desc["matrix"], desc.get("center"))
        if "dim" in desc and int(desc["dim"]) != body.dim:
            raise DomainError("dim does not match matrix size")
        return body
    if kind == "fourier2d":
        coeffs = desc["coeffs"]
        if int(desc.get("dim", 2)) != 2:
            raise DomainError("fourier2d bodies are planar")
        return FourierBody2D(coeffs.get("a", []), coeffs.get("b", []))
    raise DomainError(f"unknown body kind {kind!r}")


def body_to_dict(body: ConvexBody) -> dict:
    if isinstance(body, Ball):
        return {"kind": "ball", "dim": body.dim, "radius": body.radius}
    if isinstance(body, Ellipsoid):
        out = {"kind": "ellipsoid", "dim": body.dim, "matrix": body.matrix.tolist()}
        if np.any(body.center):
            out["center"] = body.center.tolist()
        return out
    if isinstance(body, FourierBody2D):
        return {"kind": "fourier2d", "dim": 2,
                "coeffs": {"a": body.a.tolist(), "b": body.b[1:].tolist()}}
    raise Unsupported(f"{type(body).__name__} has no file representation")
