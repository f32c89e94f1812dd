"""p-affine surface areas and their normalised and dual forms."""

from __future__ import annotations

import numpy as np
from scipy import optimize
from scipy.special import logsumexp

from .errors import DomainError
from .geometry import ConvexBody, angle_directions, polar
from .quadrature import SphereRule, default_rule


def _check_p(n: int, p: float, extended: bool) -> None:
    if not np.isfinite(p):
        raise DomainError("p must be finite")
    if p == -n:
        raise DomainError("the integral form is undefined at p = -n; use tilde_o_minus_n")
    if p < -n and not extended:
        raise DomainError(f"p must exceed -n = {-n} (pass extended=True for p < -n)")


def _log_integrand(body: ConvexBody, U: np.ndarray, p: float) -> np.ndarray:
    n = body.dim
    f = body._curvature(U)
    h = body._support(U)
    return (n / (n + p)) * np.log(f) - (n * (p - 1) / (n + p)) * np.log(h)


def log_o_p(body: ConvexBody, p: float, rule: SphereRule | None = None,
            extended: bool = False) -> float:
    """Natural logarithm of :func:`o_p`, evaluated with log-sum-exp so that
    exponents near ``p = -n`` do not overflow."""
    _check_p(body.dim, p, extended)
    rule = rule or default_rule(body.dim)
    return float(logsumexp(_log_integrand(body, rule.nodes, p) + np.log(rule.weights)))


def o_p(body: ConvexBody, p: float, rule: SphereRule | None = None,
        extended: bool = False) -> float:
    """p-affine surface area ``int f^(n/(n+p)) h^(-n(p-1)/(n+p)) dsigma``.

    Parameters
    ----------
    body : smooth body with positive curvature and the origin in its interior.
    p : exponent, ``p > -n``. With ``extended=True`` values ``p < -n`` are
        accepted and the same integral is evaluated (``p = -n(n+2)`` appears as
        the limit of polar floating-body volumes).
    """
    _check_p(body.dim, p, extended)
    rule = rule or default_rule(body.dim)
    return rule.integrate(np.exp(_log_integrand(body, rule.nodes, p)))


def tilde_o_p(body: ConvexBody, p: float, rule: SphereRule | None = None) -> float:
    """Normalised ``O_p^((n+p)/(n-p))``, homogeneous of degree n."""
    n = body.dim
    if p == n:
        raise DomainError("normalisation is undefined at p = n")
    _check_p(n, p, extended=False)
    return float(np.exp(log_o_p(body, p, rule) * (n + p) / (n - p)))


def _log_peak(body: ConvexBody, U: np.ndarray) -> np.ndarray:
    n = body.dim
    return 0.5 * np.log(body._curvature(U)) + 0.5 * (n + 1) * np.log(body._support(U))


def tilde_o_minus_n(body: ConvexBody, rule: SphereRule | None = None) -> float:
    """``max_u f(u)^(1/2) h(u)^((n+1)/2)``: grid search, then local refinement
    around the best node (bounded Brent in the plane, Nelder-Mead on the sphere)."""
    rule = rule or default_rule(body.dim)
    vals = _log_peak(body, rule.nodes)
    j = int(np.argmax(vals))
    best = float(vals[j])
    if body.dim == 2:
        theta = rule.angles
        step = 2 * np.pi / len(theta)

        def neg(t):
            return -_log_peak(body, angle_directions(np.array([t])))[0]

        res = optimize.minimize_scalar(neg, bounds=(theta[j] - step, theta[j] + step),
                                       method="bounded", options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    else:
        def neg(v):
            v = np.asarray(v, dtype=float)
            return -_log_peak(body, (v / np.linalg.norm(v))[None, :])[0]

        res = optimize.minimize(neg, rule.nodes[j], method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
        best = max(best, -float(res.fun))
    return float(np.exp(best))


def duality_residual(body: ConvexBody, p: float, rule: SphereRule | None = None) -> float:
    """``|O_p(K) - O_{n^2/p}(K^0)| / O_p(K)`` with the polar taken at the origin."""
    if not p > 0:
        raise DomainError("duality check needs p > 0")
    n = body.dim
    lhs = o_p(body, p, rule)
    rhs = o_p(polar(body), n * n / p, rule)
    return abs(lhs - rhs) / lhs
