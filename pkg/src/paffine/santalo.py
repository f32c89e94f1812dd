"""The functional Phi_K, generalised Santalo bodies S_beta(K, t) and the
experiments built on them.

Along a ray ``x = lam * u`` the integral over the polar body reduces to a
one-dimensional integral over parallel sections of ``K^0``. Writing
``eps = 1 - lam * h_{K^0}(u)`` for the relative gap to the boundary and ``w``
for the depth below the supporting line of ``K^0``, the kernel becomes
``(eps + (1 - eps) w / h)^(-beta)``. Root finding runs in ``log(eps)``, which
keeps the problem well scaled when the level set hugs the boundary of ``K``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import logsumexp

from .errors import (DenominatorUnderflow, DomainError, IntegralDiverged, LevelBelowMinimum,
                     NoConvergence, NotSmooth, PointNotInterior, PreconditionViolated,
                     Unsupported)
from .geometry import (ConvexBody, PolarView, _directions, affine_image, angle_directions,
                       binet_ellipsoid, polar, polar_for_slices, polar_volume, santalo_point)
from .quadrature import (LimitEstimate, SphereRule, adaptive_1d, beta_fn, default_rule,
                         fit_power_law_limit, sqrt_end_nodes, unit_ball_volume)
from .surface import o_p, tilde_o_minus_n

# log(eps) is never pushed below this; deeper levels underflow the slice grid
_LOG_EPS_FLOOR = -600.0


@dataclass(frozen=True)
class PhiBeta:
    """Kernel ``phi_beta(s) = (1 - s)^(-beta)`` with ``beta >= (n+1)/2``."""

    beta: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("dimension must be >= 2")
        if not self.beta >= (self.n + 1) / 2:
            raise DomainError(f"beta must be >= (n+1)/2 = {(self.n + 1) / 2}")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s >= 1):
            raise IntegralDiverged("phi_beta is infinite for s >= 1")
        return (1.0 - s) ** (-self.beta)

    def log(self, s):
        return -self.beta * np.log1p(-np.asarray(s, dtype=float))


def _check_beta(n: int, beta: float) -> None:
    PhiBeta(beta, n)


class _RayProblem:
    """Slice data of ``K^0`` along a fixed set of directions."""

    def __init__(self, base: ConvexBody, U: np.ndarray):
        self.base = base
        self.U = U
        self.polar = polar_for_slices(base)
        self.h = self.polar._support(U)  # h_{K^0}(u) = 1 / r_K(u)
        self._measures: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def measure(self, min_depth: float):
        if min_depth not in self._measures:
            self._measures[min_depth] = self.polar.slice_measure(self.U, min_depth)
        return self._measures[min_depth]

    def log_phi(self, log_eps: np.ndarray, beta: float, min_depth: float) -> np.ndarray:
        depth, log_mass, sign = self.measure(min_depth)
        eps = np.exp(log_eps)[:, None]
        ratio = depth / self.h[:, None]
        logk = -beta * np.log(eps + (1.0 - eps) * ratio)
        val, sgn = logsumexp(log_mass + logk, axis=1, b=sign, return_sign=True)
        return np.where(sgn > 0, val, -np.inf)


def _min_depth_for(log_eps: float) -> float:
    return float(min(1e-40, math.exp(log_eps) * 1e-16))


def _solve_log_gaps(prob: _RayProblem, beta: float, t: float) -> np.ndarray:
    """``log(1 - lam* h_{K^0}(u))`` for the level ``Phi(lam* u) = t``."""
    m = len(prob.U)
    log_t = math.log(t)
    phi0 = prob.log_phi(np.zeros(m), beta, 1e-40)
    if np.any(phi0 > log_t + 1e-13 * max(1.0, abs(log_t))):
        raise LevelBelowMinimum(f"t = {t} is below Phi_K(0) = {float(np.exp(phi0.max()))}")
    lo = -40.0
    while True:
        md = _min_depth_for(lo)
        flo = prob.log_phi(np.full(m, lo), beta, md) - log_t
        if np.all(flo > 0):
            break
        if lo <= _LOG_EPS_FLOOR:
            raise DenominatorUnderflow("level set lies closer to the boundary than exp(-600)")
        lo = max(2.0 * lo, _LOG_EPS_FLOOR)
    # Illinois variant of regula falsi, vectorised over directions
    za, fa = np.full(m, lo), flo
    zb = np.zeros(m)
    fb = prob.log_phi(zb, beta, md) - log_t
    fb = np.minimum(fb, 0.0)
    side = np.zeros(m)
    z = zb.copy()
    for _ in range(300):
        width = zb - za
        eps_b = np.exp(zb)
        rel = np.abs(width) * eps_b / np.maximum(-np.expm1(zb), 1e-300)
        # relative accuracy in both lam and eps (the deficit is linear in eps)
        done = ((rel < 1e-14) & (np.abs(width) <= 1e-13 * np.maximum(1.0, np.abs(zb)))) \
            | (fb == 0) | (fa == 0)
        if np.all(done):
            break
        denom = fb - fa
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(denom != 0, zb - fb * (zb - za) / denom, 0.5 * (za + zb))
        bad = ~np.isfinite(z) | (z <= np.minimum(za, zb)) | (z >= np.maximum(za, zb))
        z = np.where(bad, 0.5 * (za + zb), z)
        z = np.where(done, zb, z)
        fz = prob.log_phi(z, beta, md) - log_t
        fz = np.where(done, fb, fz)
        pos = fz > 0  # root lies in (z, zb)
        # keep za on the positive side, zb on the non-positive side
        new_za = np.where(pos, z, za)
        new_fa = np.where(pos, fz, fa)
        new_zb = np.where(pos, zb, z)
        new_fb = np.where(pos, fb, fz)
        # Illinois: halve the stale endpoint's value when the same side repeats
        stale_b = pos & (side == 1)
        stale_a = ~pos & (side == -1)
        new_fb = np.where(stale_b & ~done, 0.5 * new_fb, new_fb)
        new_fa = np.where(stale_a & ~done, 0.5 * new_fa, new_fa)
        side = np.where(pos, 1, -1)
        za, fa, zb, fb = new_za, new_fa, new_zb, new_fb
    else:
        raise NoConvergence("level-set root finding did not converge")
    # pick the endpoint with the smaller residual
    return np.where(np.abs(fa) < np.abs(fb), za, zb)


def phi(base: ConvexBody, x, beta: float) -> float:
    """``Phi_K(x) = int_{K^0} (1 - <x, y>)^(-beta) dy``."""
    n = base.dim
    _check_beta(n, beta)
    x = np.asarray(x, dtype=float)
    lam = float(np.linalg.norm(x))
    if lam == 0:
        return float(polar_for_slices(base).volume())
    U = (x / lam)[None, :]
    prob = _RayProblem(base, U)
    eps = 1.0 - lam * prob.h[0]
    if eps <= 0:
        raise PointNotInterior("point is not interior to the body")
    log_eps = math.log(eps)
    val = prob.log_phi(np.array([log_eps]), beta, _min_depth_for(min(log_eps, -40.0)))
    return float(np.exp(val[0]))


def phi_sections(base: ConvexBody, x, beta: float, tol: float = 1e-11) -> float:
    """Independent evaluation of ``Phi_K(x)`` by adaptive integration of the
    section function of ``K^0`` against the kernel. Slower; used as a check."""
    n = base.dim
    _check_beta(n, beta)
    x = np.asarray(x, dtype=float)
    lam = float(np.linalg.norm(x))
    P = polar_for_slices(base)
    if lam == 0:
        return float(P.volume())
    u = x / lam
    top = P.support(u)
    bottom = -P.support(-u)
    if lam * top >= 1:
        raise PointNotInterior("point is not interior to the body")

    def integrand(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        vals = P.section_volume(np.tile(u, (len(s), 1)), s)
        return vals * (1.0 - lam * s) ** (-beta)

    # sections vanish like a square root at both ends of the slab
    f = lambda s: float(integrand(s)[0])  # noqa: E731
    return adaptive_1d(f, bottom, top, tol, endpoint_exponent=(n - 1) / 2)


class LevelSetBody(ConvexBody):
    """``S_beta(K, t) = {x in K : Phi_K(x) <= t}`` held as a lazily evaluated
    radial function. Rays are cached by direction; the cache is append-only
    and guarded by a lock, so concurrent readers are safe."""

    def __init__(self, base: ConvexBody, beta: float, t: float):
        _check_beta(base.dim, beta)
        self.base = base
        self.dim = base.dim
        self.beta = float(beta)
        self.t = float(t)
        self.phi0 = float(polar_for_slices(base).volume())
        if self.t < self.phi0 * (1 - 1e-13):
            raise LevelBelowMinimum(f"t = {t} is below Phi_K(0) = {self.phi0}")
        self._cache: dict[tuple, tuple[float, float]] = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return f"LevelSetBody({self.base!r}, beta={self.beta}, t={self.t})"

    def log_gaps(self, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(log eps, h_{K^0})`` per direction."""
        keys = [tuple(row) for row in U]
        missing = [i for i, k in enumerate(keys) if k not in self._cache]
        if missing:
            prob = _RayProblem(self.base, U[missing])
            z = _solve_log_gaps(prob, self.beta, self.t)
            with self._lock:
                for j, i in enumerate(missing):
                    self._cache.setdefault(keys[i], (float(z[j]), float(prob.h[j])))
        z = np.array([self._cache[k][0] for k in keys])
        h = np.array([self._cache[k][1] for k in keys])
        return z, h

    def _radial(self, U):
        z, h = self.log_gaps(U)
        return -np.expm1(z) / h

    def _support(self, U):
        raise Unsupported("support of a level-set body is not evaluated")

    def _curvature(self, U):
        raise NotSmooth("level-set bodies carry no curvature evaluator")

    def _boundary(self, U):
        raise NotSmooth("level-set bodies carry no boundary parametrisation")


def santalo_body(base: ConvexBody, beta: float, t: float) -> LevelSetBody:
    return LevelSetBody(base, beta, t)


def santalo_radial(base: ConvexBody, beta: float, t: float, u):
    """Radial function of ``S_beta(K, t)``: the ``lam`` with ``Phi(lam u) = t``."""
    U, single = _directions(u, base.dim)
    r = LevelSetBody(base, beta, t)._radial(U)
    return float(r[0]) if single else r


def _log_deficit_terms(base, beta, t, rule):
    n = base.dim
    S = LevelSetBody(base, beta, t)
    z, h = S.log_gaps(rule.nodes)
    # r_K^n * (1 - (1 - eps)^n), with r_K = 1 / h_{K^0}
    frac = -np.expm1(n * np.log1p(-np.exp(z)))
    return np.log(rule.weights) - n * np.log(h) + np.log(frac) - math.log(n)


def volume_deficit(base: ConvexBody, beta: float, t: float, rule: SphereRule | None = None) -> float:
    """``|K| - |S_beta(K, t)|`` as a single integral of radial differences."""
    rule = rule or default_rule(base.dim)
    return float(np.exp(logsumexp(_log_deficit_terms(base, beta, t, rule))))


def log_volume_deficit(base, beta, t, rule=None) -> float:
    rule = rule or default_rule(base.dim)
    return float(logsumexp(_log_deficit_terms(base, beta, t, rule)))


# ---------------------------------------------------------------------------
# volume-deficit limit
# ---------------------------------------------------------------------------


def theorem6_constant(n: int, beta: float) -> float:
    """``c_{n,beta} = 2^((n-1)/2) v_{n-1} B((n+1)/2, beta - (n+1)/2)``."""
    if not beta > (n + 1) / 2:
        raise DomainError("the deficit limit needs beta > (n+1)/2")
    return 2 ** ((n - 1) / 2) * unit_ball_volume(n - 1) * beta_fn((n + 1) / 2, beta - (n + 1) / 2)


@dataclass(frozen=True)
class Theorem6Rhs:
    constant: float
    rhs: float
    o_p_polar: float
    p: float

    def to_dict(self):
        return {"constant": self.constant, "rhs": self.rhs, "o_p_polar": self.o_p_polar, "p": self.p}


def theorem6_rhs(base: ConvexBody, beta: float, rule: SphereRule | None = None) -> Theorem6Rhs:
    """Constant and limiting integral
    ``int f_{K^0}^(1/(2 beta - n - 1)) h_{K^0}^(-(n - (n+1)/(2 beta - n - 1)))``,
    together with ``O_{n(2 beta - n - 2)}(K^0)`` from the surface module."""
    n = base.dim
    c = theorem6_constant(n, beta)
    rule = rule or default_rule(n)
    P = polar_for_slices(base)
    U = rule.nodes
    e = 1.0 / (2 * beta - n - 1)
    f = P._curvature(U)
    h = P._support(U)
    rhs = rule.integrate(np.exp(e * np.log(f) - (n - (n + 1) * e) * np.log(h)))
    p = n * (2 * beta - n - 2)
    return Theorem6Rhs(c, rhs, o_p(P, p, rule), p)


def theorem6_samples(base, beta, t_grid, rule=None):
    n = base.dim
    c = theorem6_constant(n, beta)
    expo = 1.0 / (beta - (n + 1) / 2)
    return [(float(t), (t / c) ** expo * volume_deficit(base, beta, t, rule)) for t in t_grid]


def theorem6_estimate(base: ConvexBody, beta: float, t_grid, rule: SphereRule | None = None) -> LimitEstimate:
    """Fit of ``(t / c_{n,beta})^(1/(beta-(n+1)/2)) * deficit(t)`` as t grows."""
    t_grid = np.asarray(t_grid, dtype=float)
    phi0 = polar_for_slices(base).volume()
    if t_grid.min() < 10 * phi0:
        raise PreconditionViolated(f"t grid must start at >= 10 Phi(0) = {10 * phi0}")
    return fit_power_law_limit(theorem6_samples(base, beta, t_grid, rule), "increasing_t")


def eq1_radial(base: ConvexBody, t: float, u, rule: SphereRule | None = None):
    """Radial function of ``{x : |K| |K^x| / v_n^2 <= t}`` computed directly
    from polar volumes (support-function quadrature plus Brent's method)."""
    U, single = _directions(u, base.dim)
    n = base.dim
    rule = rule or default_rule(n)
    scale = base.volume(rule) / unit_ball_volume(n) ** 2
    r = base._radial(U)
    out = np.empty(len(U))
    for i, v in enumerate(U):
        def F(lam):
            return scale * polar_volume(base, lam * v, rule) - t

        if F(0.0) > 0:
            raise LevelBelowMinimum("threshold below the value at the origin")
        hi = r[i]
        k = 1
        while F(hi * (1 - 2.0**-k)) < 0:
            k += 1
            if k > 60:
                raise NoConvergence("level not bracketed")
        out[i] = optimize.brentq(F, 0.0, hi * (1 - 2.0**-k), xtol=1e-16, rtol=1e-15)
    return float(out[0]) if single else out


def eq1_residual(base: ConvexBody, t: float, directions: int = 32,
                 rule: SphereRule | None = None) -> float:
    """Max relative gap between the polar-volume level set at threshold ``t``
    and ``S_{n+1}(K, t v_n^2 / |K|)`` on evenly spread rays."""
    n = base.dim
    rule = rule or default_rule(n)
    U = spread_directions(n, directions)
    direct = eq1_radial(base, t, U, rule)
    level = t * unit_ball_volume(n) ** 2 / base.volume(rule)
    via_phi = santalo_radial(base, n + 1, level, U)
    return float(np.max(np.abs(direct - via_phi) / direct))


def spread_directions(n: int, m: int) -> np.ndarray:
    """``m`` deterministic, well spread unit vectors (equal angles in the
    plane, a golden spiral on S^2, Gaussian quasi-random points above)."""
    if n == 2:
        return angle_directions(2 * np.pi * np.arange(m) / m)
    if n == 3:
        k = np.arange(m) + 0.5
        z = 1 - 2 * k / m
        phi_ = np.pi * (1 + 5**0.5) * k
        rho = np.sqrt(1 - z * z)
        return np.stack([rho * np.cos(phi_), rho * np.sin(phi_), z], axis=1)
    rng = np.random.default_rng(12345)
    V = rng.standard_normal((m, n))
    return V / np.linalg.norm(V, axis=1)[:, None]


# ---------------------------------------------------------------------------
# exponential regime beta = (n+1)/2
# ---------------------------------------------------------------------------


def prop7_exponent_scale(n: int, corrected: bool = False) -> float:
    """Scale ``c`` in ``exp(-t / (c h^((n+1)/2) f^(1/2)))``: ``2^((n-1)/2)``
    as stated, times ``v_{n-1}`` when ``corrected`` (the rate realised by the
    deficit; see the project notes)."""
    c = 2 ** ((n - 1) / 2)
    return c * unit_ball_volume(n - 1) if corrected else c


def prop7_log_denominator(base: ConvexBody, t: float, rule: SphereRule | None = None,
                          corrected: bool = False) -> float:
    n = base.dim
    rule = rule or default_rule(n)
    P = polar_for_slices(base)
    U = rule.nodes
    f = P._curvature(U)
    h = P._support(U)
    c = prop7_exponent_scale(n, corrected)
    terms = (np.log(rule.weights) + np.log(f) / (n - 1) - (n + 1) * np.log(h)
             - t / (c * h ** ((n + 1) / 2) * np.sqrt(f)))
    val = float(logsumexp(terms))
    if not np.isfinite(val):
        raise DenominatorUnderflow("denominator underflows even in log space")
    return val


def prop7_ratio(base: ConvexBody, t: float, rule: SphereRule | None = None,
                corrected: bool = False) -> float:
    """``n * deficit(t)`` over the exponential comparison integral, with
    ``beta = (n+1)/2``; both sides are formed in log space."""
    n = base.dim
    phi0 = polar_for_slices(base).volume()
    if t < 10 * phi0:
        raise PreconditionViolated(f"t must be >= 10 Phi(0) = {10 * phi0}")
    num = math.log(n) + log_volume_deficit(base, (n + 1) / 2, t, rule)
    return float(np.exp(num - prop7_log_denominator(base, t, rule, corrected)))


def prop7_rate_target(base: ConvexBody, rule: SphereRule | None = None,
                      corrected: bool = False) -> float:
    """``1 / (c max_u h_{K^0}^((n+1)/2) f_{K^0}^(1/2))``."""
    P = polar_for_slices(base)
    return 1.0 / (prop7_exponent_scale(base.dim, corrected) * tilde_o_minus_n(P, rule))


def prop7_log_rate(base: ConvexBody, t_grid, rule: SphereRule | None = None) -> LimitEstimate:
    """Fit of ``(1/t) ln(1/deficit(t))`` at ``beta = (n+1)/2``."""
    n = base.dim
    t_grid = np.asarray(t_grid, dtype=float)
    phi0 = polar_for_slices(base).volume()
    if t_grid.min() < 10 * phi0:
        raise PreconditionViolated(f"t grid must start at >= 10 Phi(0) = {10 * phi0}")
    samples = [(float(t), -log_volume_deficit(base, (n + 1) / 2, t, rule) / t) for t in t_grid]
    return fit_power_law_limit(samples, "increasing_t")


def log_rate_from_samples(samples) -> LimitEstimate:
    """Rate fit for user-supplied ``(t, deficit)`` pairs."""
    pts = [(float(t), -math.log(d) / t) for t, d in samples]
    return fit_power_law_limit(pts, "increasing_t")


# ---------------------------------------------------------------------------
# one-dimensional integrals behind the limits
# ---------------------------------------------------------------------------


def _w_integral(gamma: float, alpha: float, power: float) -> float:
    """``int_0^{alpha/(1-alpha)} w^gamma (2 - w (1-alpha)/alpha)^gamma (1+w)^(-power) dw``.

    Split at ``w = 1``: an algebraic-weight rule near zero and a logarithmic
    substitution for the long tail.
    """
    from scipy import integrate

    k = (1.0 - alpha) / alpha
    W = 1.0 / k

    def core(w):
        return (2.0 - w * k) ** gamma * (1.0 + w) ** (-power)

    split = min(1.0, W)
    head, err1 = integrate.quad(core, 0.0, split, weight="alg", wvar=(gamma, 0.0),
                                epsabs=0.0, epsrel=1e-13, limit=200)
    tail = 0.0
    if W > 1.0:
        def g(y):
            w = math.exp(y)
            return w ** (gamma + 1) * core(w)

        tail, err2 = integrate.quad(g, 0.0, math.log(W), epsabs=0.0, epsrel=1e-13, limit=400)
    return head + tail


def lemma5_I(gamma: float, beta: float, alpha: float) -> float:
    if not gamma > -1 or not beta > gamma + 1:
        raise DomainError("need gamma > -1 and beta > gamma + 1")
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    B = beta_fn(gamma + 1, beta - gamma - 1)
    return _w_integral(gamma, alpha, beta) / (2**gamma * B)


def lemma5_J(gamma: float, alpha: float) -> float:
    if not gamma > 0:
        raise DomainError("need gamma > 0")
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    L = -math.log1p(-alpha)
    return alpha ** (-gamma - 1) * _w_integral(gamma, alpha, gamma + 1) / (2**gamma * L)


def lemma5(gamma: float, beta: float, alpha: float) -> tuple[float, float]:
    """``(I(alpha), J(alpha))``. ``J`` needs ``gamma > 0``; it is NaN otherwise.

    Both integrals use the substitution ``x = 1 - w (1 - alpha) / alpha``,
    which moves the near-singular end to a smooth, slowly decaying tail.
    """
    I = lemma5_I(gamma, beta, alpha)
    J = lemma5_J(gamma, alpha) if gamma > 0 else float("nan")
    return I, J


def lemma5_J_bound(gamma: float, alpha: float) -> float:
    return 1.0 + 1.0 / ((gamma + 1) * -math.log1p(-alpha))


# ---------------------------------------------------------------------------
# ellipsoid sandwich
# ---------------------------------------------------------------------------


def prop4_constants(n: int, beta: float, t: float, polar_vol: float,
                    symmetric: bool = False) -> dict:
    """Inner factor ``d_n`` and outer factor ``c_n`` (with the symmetric
    alternative when requested)."""
    if not (n + 1) / 2 <= beta <= n + 1:
        raise DomainError(f"beta must lie in [(n+1)/2, n+1] = [{(n + 1) / 2}, {n + 1}]")
    q = n * polar_vol / (t * (beta - 1))
    if not q < 1:
        raise PreconditionViolated(
            f"t = {t} must exceed n|K^0|/(beta-1) = {n * polar_vol / (beta - 1)} for d_n to be real")
    d = (1.0 / (math.sqrt(3) * n)) * math.sqrt(1.0 - q)
    ratio = polar_vol / t
    c_gen = (2 * math.sqrt(2) / math.sqrt((math.e - 2) * beta * (beta + 1))
             * math.sqrt(1.0 / ratio) * math.sqrt(1.0 - ratio))
    c_sym = math.sqrt(2) * math.sqrt(1.0 - ratio ** (1.0 / (beta - 1))) if symmetric else math.inf
    return {"d": d, "c": min(c_gen, c_sym), "c_general": c_gen,
            "c_symmetric": c_sym if symmetric else None}


@dataclass
class Prop4Report:
    beta: float
    t: float
    polar_volume: float
    d: float
    c: float
    c_general: float
    c_symmetric: float | None
    binet_matrix: np.ndarray
    directions: np.ndarray
    radial: np.ndarray
    ellipsoid_radial: np.ndarray
    inner_margin: np.ndarray = field(repr=False)
    outer_margin: np.ndarray = field(repr=False)

    @property
    def holds(self) -> bool:
        return bool(np.all(self.inner_margin >= 0) and np.all(self.outer_margin >= 0))

    @property
    def min_margin(self) -> float:
        return float(min(self.inner_margin.min(), self.outer_margin.min()))

    def to_dict(self):
        return {"beta": self.beta, "t": self.t, "polar_volume": self.polar_volume, "d": self.d,
                "c": self.c, "c_general": self.c_general, "c_symmetric": self.c_symmetric,
                "min_inner_margin": float(self.inner_margin.min()),
                "min_outer_margin": float(self.outer_margin.min()), "holds": self.holds}


def prop4_check(base: ConvexBody, beta: float, t: float, directions: int = 64,
                rule: SphereRule | None = None) -> Prop4Report:
    """Check ``d E(K^0) <= S_beta(K, t) <= c E(K^0)`` along sampled rays.

    Margins are ``lam* - d r_E`` and ``c r_E - lam*``; all must be >= 0.
    """
    n = base.dim
    rule = rule or default_rule(n)
    P = polar(base)
    pv = P.volume(rule)
    consts = prop4_constants(n, beta, t, pv, symmetric=base.is_symmetric)
    E = binet_ellipsoid(P, rule)
    U = spread_directions(n, directions)
    lam = santalo_radial(base, beta, t, U)
    rE = E._radial(U)
    return Prop4Report(beta, t, pv, consts["d"], consts["c"], consts["c_general"],
                       consts["c_symmetric"], E.matrix, U, lam, rE,
                       lam - consts["d"] * rE, consts["c"] * rE - lam)


# ---------------------------------------------------------------------------
# affine covariance
# ---------------------------------------------------------------------------


def covariance_residual(base: ConvexBody, L, a, beta: float, t: float,
                        directions: int = 32) -> float:
    """Discrepancy between ``S(A K, t)`` and ``A S(K, |det L| t)`` for
    ``A x = L x + a``.

    The image body is recentred at its own (numerically located) Santalo
    point, and both boundaries are compared along rays from that point.
    """
    n = base.dim
    L = np.asarray(L, dtype=float)
    a = np.asarray(a, dtype=float)
    image = affine_image(base, L, a)
    # a = A(0) is interior to the image, so the search starts from there
    x_star = a + santalo_point(image.translate(-a))
    shifted = image.translate(-x_star)
    U = spread_directions(n, directions)
    lam1 = santalo_radial(shifted, beta, t, U)
    detL = abs(float(np.linalg.det(L)))
    Y = U @ np.linalg.inv(L).T
    ny = np.linalg.norm(Y, axis=1)
    lam2 = santalo_radial(base, beta, detL * t, Y / ny[:, None])
    pred = lam2 / ny
    gap = np.linalg.norm((x_star - a)[None, :] + (lam1 - pred)[:, None] * U, axis=1)
    return float(np.max(gap / pred))
