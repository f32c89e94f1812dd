"""Convex floating bodies of symmetric bodies and the polar-volume limit."""

from __future__ import annotations

import threading

import numpy as np
from scipy import optimize

from .errors import CapTooLarge, DomainError, NoConvergence, SymmetryRequired
from .geometry import ConvexBody, FourierBody2D, _directions
from .quadrature import (LimitEstimate, SphereRule, default_rule, fit_power_law_limit,
                         gauss_legendre, unit_ball_volume)
from .surface import o_p

_CAP_ORDER = 64


def _cap_by_depth(body: ConvexBody, U: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Volume of ``{x : <x,u> >= h(u) - eta}`` for ``0 <= eta <= width / 2``.

    With ``w = eta tau^2`` the section's ``w^((n-1)/2)`` behaviour becomes a
    smooth ``tau^n`` factor, so fixed Gauss-Legendre is enough.
    """
    eta = np.asarray(eta, dtype=float)
    if isinstance(body, FourierBody2D):
        th = float(np.arctan2(U[0, 1], U[0, 0]))
        return body._cap_area(th, eta)[0]
    x, wq = gauss_legendre(_CAP_ORDER)
    tau = 0.5 * (x + 1.0)
    eta = np.asarray(eta, dtype=float)
    depth = eta[:, None] * tau[None, :] ** 2
    g = body._section_at_depth(U, depth)
    return (g * (eta[:, None] * tau[None, :]) * wq[None, :]).sum(axis=1)


def cap_volume(body: ConvexBody, u, a) -> float:
    """Volume of the cap ``{x in K : <x, u> >= a}``."""
    U, _ = _directions(u, body.dim)
    h = body._support(U)
    W = h + body._support(-U)
    eta = float(h[0] - a)
    if eta <= 0:
        return 0.0
    if eta >= W[0]:
        return float(body.volume())
    if eta <= 0.5 * W[0]:
        return float(_cap_by_depth(body, U, np.array([eta]))[0])
    rest = _cap_by_depth(body, -U, np.array([W[0] - eta]))[0]
    return float(body.volume()) - float(rest)


def cap_height(base: ConvexBody, u, capvol: float, volume: float | None = None) -> float:
    """The level ``a`` whose cap ``{<x,u> >= a}`` has volume ``capvol``."""
    vol = float(base.volume()) if volume is None else volume
    if not capvol > 0:
        raise DomainError("cap volume must be positive")
    if capvol > 0.5 * vol * (1 + 1e-14):
        raise CapTooLarge(f"cap volume {capvol} must not exceed |K|/2 = {0.5 * vol}")
    U, _ = _directions(u, base.dim)
    h = float(base._support(U)[0])
    W = h + float(base._support(-U)[0])

    def F(eta):
        return cap_volume(base, U[0], h - eta) - capvol

    eta = optimize.brentq(F, 0.0, W, xtol=1e-300, rtol=1e-15, maxiter=200)
    return h - eta


def _fourier_cap_depths(body: FourierBody2D, U: np.ndarray, capvol: float) -> np.ndarray:
    """Depths ``eta`` with cap area ``capvol`` for all directions at once:
    Newton on the area, whose derivative is the chord length, kept inside a
    shrinking bracket ``[0, W/2]`` (valid because ``capvol <= |K|/2`` and the
    body is symmetric)."""
    th = np.arctan2(U[:, 1], U[:, 0])
    W = body.h(th) + body.h(th + np.pi)
    lo, hi = np.zeros(len(th)), 0.5 * W
    # leading-order cap area 4/3 sqrt(2 rho) eta^(3/2)
    rho = body.radius_of_curvature(th)
    eta = np.clip((0.75 * capvol / np.sqrt(2 * rho)) ** (2 / 3), 1e-300, 0.5 * W)
    for _ in range(100):
        area, chord = body._cap_area(th, eta)
        val = area - capvol
        lo = np.where(val <= 0, eta, lo)
        hi = np.where(val > 0, eta, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            new = eta - val / chord
        bad = ~np.isfinite(new) | (new <= lo) | (new >= hi)
        new = np.where(bad, 0.5 * (lo + hi), new)
        done = np.abs(new - eta) <= 4e-16 * eta
        eta = new
        if np.all(done):
            return eta
    raise NoConvergence("cap depth iteration did not converge")


class FloatingProfile:
    """Cap heights ``a_delta(u)`` for ``K_{delta |K|}`` of a symmetric body;
    for such bodies these are exactly the support values of the floating body.
    Heights are cached per direction."""

    def __init__(self, base: ConvexBody, delta: float):
        if not base.is_symmetric:
            raise SymmetryRequired("floating profiles are implemented for symmetric bodies")
        if not 0 < delta < 0.5:
            raise DomainError("delta must lie in (0, 1/2)")
        self.base = base
        self.delta = float(delta)
        self.volume = float(base.volume())
        self.capvol = self.delta * self.volume
        self._cache: dict[tuple, float] = {}
        self._lock = threading.Lock()

    def heights(self, U) -> np.ndarray:
        U, _ = _directions(U, self.base.dim)
        if isinstance(self.base, FourierBody2D):
            return self.base.h(np.arctan2(U[:, 1], U[:, 0])) - _fourier_cap_depths(
                self.base, U, self.capvol)
        out = np.empty(len(U))
        for i, u in enumerate(U):
            key = tuple(u)
            val = self._cache.get(key)
            if val is None:
                val = cap_height(self.base, u, self.capvol, self.volume)
                with self._lock:
                    self._cache.setdefault(key, val)
            out[i] = val
        return out


def floating_polar_excess(base: ConvexBody, delta: float, rule: SphereRule | None = None) -> float:
    """``|(K_{delta |K|})^0| - |K^0|`` as one integral of
    ``a_delta^(-n) - h^(-n)``."""
    n = base.dim
    rule = rule or default_rule(n)
    prof = FloatingProfile(base, delta)
    U = rule.nodes
    h = base._support(U)
    a = prof.heights(U)
    eta = h - a
    diff = h ** (-n) * np.expm1(-n * np.log1p(-eta / h))
    return rule.integrate(diff) / n


def theorem8_constant(n: int, corrected: bool = False) -> float:
    """``2 v_{n-1} / (n + 1)``; with ``corrected`` the constant
    ``2^((n-1)/(n+1)) (2 v_{n-1}/(n+1))^(2/(n+1))`` that the limit actually
    requires (see the project notes)."""
    c = 2 * unit_ball_volume(n - 1) / (n + 1)
    if corrected:
        return 2 ** ((n - 1) / (n + 1)) * c ** (2 / (n + 1))
    return c


def theorem8_rhs(base: ConvexBody, rule: SphereRule | None = None) -> dict:
    """Constant, the integral ``int f^(-1/(n+1)) h^(-(n+1))`` and the same
    quantity evaluated as ``O_{-n(n+2)}``."""
    n = base.dim
    rule = rule or default_rule(n)
    U = rule.nodes
    f = base._curvature(U)
    h = base._support(U)
    rhs = rule.integrate(f ** (-1.0 / (n + 1)) * h ** (-(n + 1)))
    return {"constant": theorem8_constant(n), "rhs": rhs,
            "o_p": o_p(base, -n * (n + 2), rule, extended=True), "p": -n * (n + 2)}


def theorem8_samples(base, delta_grid, rule=None, corrected=False):
    n = base.dim
    c = theorem8_constant(n, corrected)
    vol = float(base.volume())
    return [(float(d), c * floating_polar_excess(base, d, rule) / (d * vol) ** (2 / (n + 1)))
            for d in delta_grid]


def theorem8_estimate(base: ConvexBody, delta_grid, rule: SphereRule | None = None,
                      corrected: bool = False) -> LimitEstimate:
    """Fit of ``c_n * excess / (delta |K|)^(2/(n+1))`` as ``delta -> 0``."""
    delta_grid = np.sort(np.asarray(delta_grid, dtype=float))
    if delta_grid.min() <= 1e-6 or delta_grid.max() >= 1e-2 * (1 + 1e-12):
        raise DomainError("delta grid must lie within (1e-6, 1e-2]")
    return fit_power_law_limit(theorem8_samples(base, delta_grid, rule, corrected),
                               "decreasing_delta")
