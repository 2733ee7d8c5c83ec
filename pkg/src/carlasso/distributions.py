"""Random variate generators used by the Gibbs kernels.

All generators take a ``numpy.random.Generator``. Streams come from
:func:`rng_stream`, which keys a PCG64 bit generator on ``(seed, stream_id)``;
PCG64 output is integer arithmetic and identical across platforms, and the
float transforms used here are plain IEEE operations plus ``log``/``exp``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DomainError

TRUNC_TAIL_BOUND = 5.0


def rng_stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Independent PCG64 stream for ``(seed, stream_id)``."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.PCG64(ss))


def sample_inverse_gaussian(mean, shape, rng: np.random.Generator, size=None):
    """Inverse-Gaussian draws by transformation with root selection.

    Uses the Michael-Schucany-Haas construction: the smaller root of the
    chi-square(1) transform is kept with probability mean / (mean + root),
    otherwise mean**2 / root. The smaller root is written as
    ``mean / (1 + t + sqrt(t * (t + 2)))`` with ``t = mean * nu / (2 * shape)``
    to avoid cancellation when ``mean / shape`` is large.
    """
    mean = np.asarray(mean, dtype=float)
    shape = np.asarray(shape, dtype=float)
    if np.any(~(mean > 0)) or np.any(~(shape > 0)):
        raise DomainError("inverse Gaussian needs mean > 0 and shape > 0")
    if size is None:
        size = np.broadcast(mean, shape).shape
    nu = rng.standard_normal(size) ** 2
    u = rng.random(size)
    t = mean * nu / (2.0 * shape)
    x = mean / (1.0 + t + np.sqrt(t * (t + 2.0)))
    out = np.where(u <= mean / (mean + x), x, mean * mean / x)
    return out if out.ndim else float(out)


def _gig_log_kernel(x: float, lam: float, omega: float) -> float:
    return (lam - 1.0) * math.log(x) - 0.5 * omega * (x + 1.0 / x)


def _gig_mode(lam: float, omega: float) -> float:
    if lam >= 1.0:
        return (math.sqrt((lam - 1.0) ** 2 + omega * omega) + (lam - 1.0)) / omega
    return omega / (math.sqrt((1.0 - lam) ** 2 + omega * omega) + (1.0 - lam))


def gig_rou_bounds(lam: float, omega: float) -> tuple[float, float, float, float]:
    """Bounding rectangle for ratio-of-uniforms with mode shift.

    Returns ``(mode, u_minus, u_plus, v_plus)`` for the two-parameter kernel
    ``x**(lam-1) * exp(-omega/2 * (x + 1/x))`` normalized to 1 at the mode.
    The u-bounds are the extrema of ``(x - mode) * sqrt(kernel(x))``; their
    abscissae are the two outer roots of the cubic
    ``x^3 + a x^2 + b x + c`` with the coefficients below.
    """
    m = _gig_mode(lam, omega)
    a = -(2.0 * (lam + 1.0) / omega + m)
    b = 2.0 * (lam - 1.0) * m / omega - 1.0
    c = m
    p = b - a * a / 3.0
    q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    arg = -q / 2.0 * math.sqrt(-27.0 / p ** 3)
    phi = math.acos(min(1.0, max(-1.0, arg)))
    fd = math.sqrt(-4.0 / 3.0 * p)
    x_minus = fd * math.cos(phi / 3.0 + 4.0 / 3.0 * math.pi) - a / 3.0
    x_plus = fd * math.cos(phi / 3.0) - a / 3.0
    log_fm = _gig_log_kernel(m, lam, omega)
    u_minus = (x_minus - m) * math.exp(0.5 * (_gig_log_kernel(x_minus, lam, omega) - log_fm))
    u_plus = (x_plus - m) * math.exp(0.5 * (_gig_log_kernel(x_plus, lam, omega) - log_fm))
    return m, u_minus, u_plus, 1.0


def _gig_rou_shift(lam: float, omega: float, rng: np.random.Generator) -> float:
    m, u_minus, u_plus, _ = gig_rou_bounds(lam, omega)
    log_fm = _gig_log_kernel(m, lam, omega)
    while True:
        u = u_minus + (u_plus - u_minus) * rng.random()
        v = rng.random()
        if v == 0.0:
            continue
        x = u / v + m
        if x > 0 and 2.0 * math.log(v) <= _gig_log_kernel(x, lam, omega) - log_fm:
            return x


def _gig_rou_noshift(lam: float, omega: float, rng: np.random.Generator) -> float:
    # u in (0, u_plus), u_plus = max x * sqrt(kernel(x))
    m = _gig_mode(lam, omega)
    log_fm = _gig_log_kernel(m, lam, omega)
    x0 = ((lam + 1.0) + math.sqrt((lam + 1.0) ** 2 + omega * omega)) / omega
    u_plus = x0 * math.exp(0.5 * (_gig_log_kernel(x0, lam, omega) - log_fm))
    while True:
        u = u_plus * rng.random()
        v = rng.random()
        if v == 0.0 or u == 0.0:
            continue
        x = u / v
        if 2.0 * math.log(v) <= _gig_log_kernel(x, lam, omega) - log_fm:
            return x


def sample_gig(p: float, a: float, b: float, rng: np.random.Generator) -> float:
    """One draw from the GIG law with density ``x**(p-1) * exp(-(a*x + b/x)/2)``.

    ``a`` (psi) must be positive; ``b`` (chi) may be zero when ``p > 0``, in
    which case the law is Gamma(p, rate a/2). Small ``sqrt(a*b)`` uses an exact
    Gamma-proposal rejection step (acceptance ``exp(-b / (2x))``); otherwise
    ratio-of-uniforms, with mode shift when ``p >= 1`` or ``sqrt(a*b) > 1``.
    """
    if not (a >= 0 and b >= 0) or (a == 0 and b == 0):
        raise DomainError(f"GIG needs a, b >= 0 not both zero (a={a}, b={b})")
    if p < 0:
        # 1/X ~ GIG(-p, b, a)
        return 1.0 / sample_gig(-p, b, a, rng)
    if b == 0.0:
        if p <= 0 or a <= 0:
            raise DomainError("GIG with b == 0 needs p > 0 and a > 0")
        return rng.gamma(p, 2.0 / a)
    if a == 0.0:
        raise DomainError("GIG with a == 0 needs p < 0")
    omega = math.sqrt(a * b)
    eta = math.sqrt(b / a)
    if omega < 0.5 and p > 0:
        while True:
            x = rng.gamma(p, 2.0 / a)
            if x > 0 and rng.random() <= math.exp(-b / (2.0 * x)):
                return x
    if p >= 1.0 or omega > 1.0:
        return eta * _gig_rou_shift(p, omega, rng)
    return eta * _gig_rou_noshift(p, omega, rng)


def truncnorm_lower(a, rng: np.random.Generator) -> np.ndarray:
    """Standard normal draws conditioned on ``X >= a`` (elementwise ``a``).

    Inversion through the upper tail probability for ``a <= 5``; beyond that
    exponential-proposal rejection with the optimal rate
    ``(a + sqrt(a**2 + 4)) / 2``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    out = np.empty_like(a)
    tail = a > TRUNC_TAIL_BOUND
    body = ~tail
    if body.any():
        u = rng.random(int(body.sum()))
        upper = ndtr(-a[body])
        # X = -Phi^{-1}(U * Phi(-a)), exact in the upper tail
        out[body] = -ndtri(u * upper)
        # guard the u == 0 corner
        out[body] = np.maximum(out[body], a[body])
    idx = np.flatnonzero(tail)
    while idx.size:
        at = a[idx]
        alpha = 0.5 * (at + np.sqrt(at * at + 4.0))
        x = at + rng.standard_exponential(idx.size) / alpha
        u = rng.random(idx.size)
        ok = np.log(u) <= -0.5 * (x - alpha) ** 2
        out[idx[ok]] = x[ok]
        idx = idx[~ok]
    return out


def sample_laplace_mixture(rate: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Laplace(rate) draws via the Gaussian scale mixture used for coefficients.

    tau2 ~ Exponential(rate**2 / 2), beta | tau2 ~ N(0, tau2).
    """
    tau2 = rng.exponential(2.0 / rate ** 2, size)
    return rng.standard_normal(size) * np.sqrt(tau2)
