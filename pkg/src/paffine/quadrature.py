"""Numerical kernels: sphere rules, 1D integration, special functions and
power-law limit extrapolation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError, IllConditionedFit, ToleranceNotMet, Unsupported

MAX_SPHERE_DIM = 8


def unit_ball_volume(n: int) -> float:
    """Volume of the n-dimensional Euclidean unit ball, pi^(n/2) / Gamma(n/2 + 1)."""
    if n < 1:
        raise DomainError(f"dimension must be >= 1, got {n}")
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def beta_fn(x: float, y: float) -> float:
    """Euler Beta function B(x, y) = Gamma(x)Gamma(y)/Gamma(x+y), via log-gamma."""
    if not (x > 0 and y > 0):
        raise DomainError(f"beta_fn requires x > 0 and y > 0, got ({x}, {y})")
    return float(np.exp(special.betaln(x, y)))


@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


# --------------------------------------------------------------------------
# sphere rules
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SphereRule:
    """Quadrature rule on S^{n-1}: ``sum(weights * f(nodes))`` approximates
    the integral of f against spherical Lebesgue measure."""

    dim: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    level: int = 0

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def angles(self) -> np.ndarray:
        """Polar angles of the nodes (2D rules only)."""
        if self.dim != 2:
            raise Unsupported("angles are only defined for circle rules")
        return np.arctan2(self.nodes[:, 1], self.nodes[:, 0])

    def integrate(self, values) -> float:
        values = np.asarray(values, dtype=float)
        return float(np.dot(self.weights, values))


def _circle(m: int) -> tuple[np.ndarray, np.ndarray]:
    theta = 2.0 * np.pi * np.arange(m) / m
    nodes = np.column_stack([np.cos(theta), np.sin(theta)])
    return nodes, np.full(m, 2.0 * np.pi / m)


def _product_sphere(n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    # u = (sqrt(1 - z^2) v, z) with v on S^{n-2}; d sigma = (1 - z^2)^((n-3)/2) dz d sigma'
    if n == 2:
        return _circle(2 * m)
    alpha = (n - 3) / 2.0
    z, wz = special.roots_jacobi(m, alpha, alpha)
    inner, winner = _product_sphere(n - 1, m)
    radial = np.sqrt(1.0 - z**2)
    nodes = np.concatenate(
        [np.column_stack([r * inner, np.full(len(inner), zi)]) for r, zi in zip(radial, z)]
    )
    weights = np.concatenate([wzi * winner for wzi in wz])
    return nodes, weights


@lru_cache(maxsize=32)
def sphere_rule(n: int, level: int = 2) -> SphereRule:
    """Positive-weight quadrature on S^{n-1}.

    For n = 2 this is the uniform trapezoid rule with ``64 * 2**level`` nodes,
    spectrally accurate for smooth periodic integrands. For n >= 3 it is a
    product of Gauss-Jacobi rules in the last coordinate with the rule on
    S^{n-2}; the number of nodes per factor is ``8 * 2**level``.
    """
    if n < 2:
        raise DomainError(f"sphere rules need n >= 2, got {n}")
    if n > MAX_SPHERE_DIM:
        raise Unsupported(f"sphere rules are capped at n = {MAX_SPHERE_DIM}")
    if level < 1:
        raise DomainError(f"level must be >= 1, got {level}")
    if n == 2:
        nodes, weights = _circle(64 * 2**level)
    else:
        nodes, weights = _product_sphere(n, 8 * 2**level)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return SphereRule(n, nodes, weights, level)


def default_rule(n: int) -> SphereRule:
    return sphere_rule(n, 2 if n == 2 else 3 if n == 3 else 1)


# --------------------------------------------------------------------------
# one-dimensional integration
# --------------------------------------------------------------------------


def _is_half_integer(e: float) -> bool:
    return abs(2 * e - round(2 * e)) < 1e-12 and round(2 * e) % 2 == 1


def adaptive_1d(f, a: float, b: float, tol: float = 1e-12, endpoint_exponent: float = 0.0,
                limit: int = 400) -> float:
    """Adaptive integral of a scalar function over [a, b].

    When the integrand vanishes like ``(s - a)**e`` / ``(b - s)**e`` with a
    half-integer ``e`` the substitution ``s = m - r cos(phi)`` is applied first,
    which makes such integrands smooth in ``phi``. The remaining work is done by
    QUADPACK's adaptive Gauss-Kronrod scheme. ``tol`` is used both as absolute
    and relative tolerance.
    """
    if not a < b:
        raise DomainError(f"need a < b, got [{a}, {b}]")
    if _is_half_integer(endpoint_exponent):
        mid, rad = 0.5 * (a + b), 0.5 * (b - a)

        def g(phi):
            return f(mid - rad * math.cos(phi)) * rad * math.sin(phi)

        lo, hi, fn = 0.0, math.pi, g
    else:
        lo, hi, fn = a, b, f
    val, err, info = integrate.quad(fn, lo, hi, epsabs=tol, epsrel=tol, limit=limit,
                                    full_output=1)[:3]
    if err > tol * max(1.0, abs(val)) * 10:
        raise ToleranceNotMet(f"adaptive_1d: error estimate {err:.3g} exceeds tolerance {tol:.3g}")
    return float(val)


def log_graded_nodes(lo, hi, order: int = 16, width: float = 1.0):
    """Composite Gauss-Legendre nodes for integrals over [lo, hi] after w = exp(z).

    ``lo`` and ``hi`` may be arrays (one row per integral). Every row gets the
    same number of panels, each at most ``width`` wide in log space, so
    integrands with features at every scale between lo and hi are resolved.
    Returned weights include the Jacobian ``dw = w dz``.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    zlo, zhi = np.log(lo), np.log(hi)
    span = zhi - zlo
    panels = max(1, int(np.ceil(span.max() / width)))
    x, w = gauss_legendre(order)
    h = span / panels
    starts = zlo[:, None] + h[:, None] * np.arange(panels)[None, :]
    z = starts[:, :, None] + 0.5 * h[:, None, None] * (x + 1.0)[None, None, :]
    z = z.reshape(len(lo), -1)
    wz = np.broadcast_to(0.5 * h[:, None, None] * w[None, None, :],
                         (len(lo), panels, order)).reshape(len(lo), -1)
    nodes = np.exp(z)
    return nodes, wz * nodes


def sqrt_end_nodes(a, b, order: int = 48):
    """Gauss-Legendre nodes for integrals over [a, b] whose integrand behaves
    like a half-integer power of (b - w) at the upper end.

    Uses ``b - w = (b - a) tau**2``; ``a``, ``b`` may be arrays of rows.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    x, w = gauss_legendre(order)
    tau = 0.5 * (x + 1.0)
    length = (b - a)[:, None]
    nodes = b[:, None] - length * tau[None, :] ** 2
    weights = length * tau[None, :] * w[None, :]  # 2 (b - a) tau * (1/2) w
    return nodes, weights


# --------------------------------------------------------------------------
# limit extrapolation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LimitEstimate:
    """Result of fitting ``value = limit + coefficient * s**exponent`` where
    ``s = 1/t`` (mode ``increasing_t``) or ``s = delta`` (``decreasing_delta``).

    ``exponent`` is NaN when the samples are constant to rounding.
    """

    samples: tuple[tuple[float, float], ...]
    limit: float
    exponent: float
    residual: float
    coefficient: float = 0.0
    mode: str = "increasing_t"
    monotone: bool = True

    def to_dict(self) -> dict:
        return {
            "samples": [list(p) for p in self.samples],
            "limit": self.limit,
            "exponent": None if math.isnan(self.exponent) else self.exponent,
            "coefficient": self.coefficient,
            "residual": self.residual,
            "mode": self.mode,
            "monotone": self.monotone,
        }


def _linear_fit(s, v, q):
    basis = np.column_stack([np.ones_like(s), s**q])
    coef, *_ = np.linalg.lstsq(basis, v, rcond=None)
    resid = v - basis @ coef
    return coef, float(np.dot(resid, resid))


def fit_power_law_limit(samples, mode: str = "increasing_t") -> LimitEstimate:
    """Least-squares fit of a single power-law correction to a limit.

    ``samples`` is a sequence of ``(parameter, value)`` pairs on a geometric
    grid. The exponent is fitted by variable projection: for each trial
    exponent the limit and coefficient solve a linear least-squares problem,
    and the exponent minimising the residual is refined with a bounded scalar
    search followed by a joint nonlinear polish.
    """
    if mode not in ("increasing_t", "decreasing_delta"):
        raise DomainError(f"unknown mode {mode!r}")
    pts = sorted((float(p), float(v)) for p, v in samples)
    if len(pts) < 4:
        raise DomainError("fit_power_law_limit needs at least 4 samples")
    par = np.array([p for p, _ in pts])
    val = np.array([v for _, v in pts])
    if np.any(np.diff(par) <= 0) or np.any(par <= 0):
        raise DomainError("sample parameters must be positive and strictly monotone")
    if not np.all(np.isfinite(val)):
        raise IllConditionedFit("non-finite sample values")

    diffs = np.diff(val)
    monotone = bool(np.all(diffs >= 0) or np.all(diffs <= 0))
    spread = float(val.max() - val.min())
    scale = max(1.0, float(np.abs(val).max()))
    tup = tuple(pts)
    if spread <= 1e-12 * scale:
        return LimitEstimate(tup, float(val.mean()), float("nan"),
                             float(np.sqrt(np.mean((val - val.mean()) ** 2))), 0.0, mode, monotone)

    s = 1.0 / par if mode == "increasing_t" else par
    s = s / s.max()
    logq = np.linspace(np.log(0.02), np.log(8.0), 400)
    rss = [_linear_fit(s, val, math.exp(lq))[1] for lq in logq]
    k = int(np.argmin(rss))
    lo, hi = logq[max(k - 1, 0)], logq[min(k + 1, len(logq) - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(lambda lq: _linear_fit(s, val, math.exp(lq))[1],
                                       bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-12})
        q = math.exp(res.x)
    else:
        q = math.exp(logq[k])
    (L, C), _ = _linear_fit(s, val, q)

    def model_resid(params):
        return params[0] + params[1] * s ** params[2] - val

    polished = optimize.least_squares(model_resid, x0=[L, C, q],
                                      bounds=([-np.inf, -np.inf, 1e-3], [np.inf, np.inf, 20.0]),
                                      xtol=1e-15, ftol=1e-15, gtol=1e-15)
    if np.sum(polished.fun**2) <= np.sum(model_resid([L, C, q]) ** 2):
        L, C, q = polished.x
    dev = model_resid([L, C, q])
    residual = float(np.sqrt(np.mean(dev**2)))
    if residual > 0.1 * spread:
        raise IllConditionedFit(f"fit residual {residual:.3g} exceeds 10% of spread {spread:.3g}")
    # undo the normalisation of s so that value = L + C' * s_raw**q
    s_raw_max = (1.0 / par).max() if mode == "increasing_t" else par.max()
    coefficient = float(C / s_raw_max**q)
    return LimitEstimate(tup, float(L), float(q), residual, coefficient, mode, monotone)
