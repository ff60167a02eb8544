"""
Special functions - Bessel J0/J1, somb and encircled-energy quadrature

J0 and J1 use their power series for |x| <= 8 and the Cephes rational
asymptotic form (Moshier, Cephes Math Library 2.1) beyond. All functions
accept scalars or numpy arrays and return the same shape.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq

import config
from errors import ConvergenceError, DomainError, RangeError, ValidationError

logger = logging.getLogger(__name__)

# First positive zero of J1, i.e. of somb
J1_FIRST_ZERO = 3.8317059702075125

SQ2OPI = 7.9788456080286535587989E-1  # sqrt(2/pi)
PIO4 = 7.85398163397448309616E-1      # pi/4
THPIO4 = 2.35619449019234492885       # 3*pi/4

# ========== CEPHES COEFFICIENTS ==========
# J0, x > 8
PP0 = np.array([7.96936729297347051624E-4, 8.28352392107440799803E-2,
                1.23953371646414299388E0, 5.44725003058768775090E0,
                8.74716500199817011941E0, 5.30324038235394892183E0,
                9.99999999999999997821E-1])
PQ0 = np.array([9.24408810558863637013E-4, 8.56288474354474431428E-2,
                1.25352743901058953537E0, 5.47097740330417105182E0,
                8.76190883237069594232E0, 5.30605288235394617618E0,
                1.00000000000000000218E0])
QP0 = np.array([-1.13663838898469149931E-2, -1.28252718670509318512E0,
                -1.95539544257735972385E1, -9.32060152123768231369E1,
                -1.77681167980488050595E2, -1.47077505154951170175E2,
                -5.14105326766599330220E1, -6.05014350600728481186E0])
QQ0 = np.array([6.43178256118178023184E1, 8.56430025976980587198E2,
                3.88240183605401609683E3, 7.24046774195652478189E3,
                5.93072701187316984827E3, 2.06209331660327847417E3,
                2.42005740240291393179E2])

# J1, x > 8
PP1 = np.array([7.62125616208173112003E-4, 7.31397056940917570436E-2,
                1.12719608129684925192E0, 5.11207951146807644818E0,
                8.42404590141772420927E0, 5.21451598682361504063E0,
                1.00000000000000000254E0])
PQ1 = np.array([5.71323128072548699714E-4, 6.88455908754495404082E-2,
                1.10514232634061696926E0, 5.07386386128601488557E0,
                8.39985554327604159757E0, 5.20982848682361821619E0,
                9.99999999999999997461E-1])
QP1 = np.array([5.10862594750176621635E-2, 4.98213872951233449420E0,
                7.58238284132545283818E1, 3.66779609360150777800E2,
                7.10856304998926107277E2, 5.97489612400613639965E2,
                2.11688757100572135698E2, 2.52070205858023719784E1])
QQ1 = np.array([7.42373277035675149943E1, 1.05644886038262816351E3,
                4.98641058337653607651E3, 9.56231892404756170795E3,
                7.99704160447350683650E3, 2.82619278517639096600E3,
                3.36093607810698293419E2])


def polevl(x: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """Evaluate coef[0] x^n + ... + coef[n] by Horner's rule."""
    ans = np.full_like(x, coef[0])
    for c in coef[1:]:
        ans = ans * x + c
    return ans


def p1evl(x: np.ndarray, coef: np.ndarray) -> np.ndarray:
    """Same as polevl with an implicit leading coefficient of 1."""
    ans = x + coef[0]
    for c in coef[1:]:
        ans = ans * x + c
    return ans


def _as_finite(x) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("Bessel/somb argument must be finite")
    return arr, arr.ndim == 0


def _finish(out: np.ndarray, scalar: bool):
    return float(out) if scalar else out


def _series(x: np.ndarray, order: int) -> np.ndarray:
    """Power series sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!) for n = 0, 1."""
    half = 0.5 * x
    quarter_sq = half * half
    term = half ** order / math.factorial(order)
    total = term.copy()
    for k in range(1, config.SERIES_TERMS + 1):
        term = -term * quarter_sq / (k * (k + order))
        total = total + term
    return total


def _asymptotic(ax: np.ndarray, order: int) -> np.ndarray:
    w = 5.0 / ax
    z = w * w
    if order == 0:
        p = polevl(z, PP0) / polevl(z, PQ0)
        q = polevl(z, QP0) / p1evl(z, QQ0)
        xn = ax - PIO4
    else:
        p = polevl(z, PP1) / polevl(z, PQ1)
        q = polevl(z, QP1) / p1evl(z, QQ1)
        xn = ax - THPIO4
    return SQ2OPI * (p * np.cos(xn) - w * q * np.sin(xn)) / np.sqrt(ax)


def _bessel(x, order: int):
    arr, scalar = _as_finite(x)
    ax = np.abs(np.atleast_1d(arr))
    out = np.empty_like(ax)
    near = ax <= config.SERIES_LIMIT
    if np.any(near):
        out[near] = _series(ax[near], order)
    if np.any(~near):
        out[~near] = _asymptotic(ax[~near], order)
    if order == 1:
        out = np.where(np.atleast_1d(arr) < 0, -out, out)
    return _finish(out.reshape(arr.shape), scalar)


def bessel_j0(x):
    """Bessel function of the first kind, order 0."""
    return _bessel(x, 0)


def bessel_j1(x):
    """Bessel function of the first kind, order 1 (odd: J1(-x) = -J1(x))."""
    return _bessel(x, 1)


def somb(x):
    """Airy amplitude 2 J1(x)/x, even in x, exactly 1 at the origin."""
    arr, scalar = _as_finite(x)
    ax = np.abs(np.atleast_1d(arr))
    out = np.empty_like(ax)
    small = ax < config.SOMB_SERIES_LIMIT
    sq = ax[small] ** 2
    out[small] = 1.0 - sq / 8.0 + sq * sq / 192.0
    big = ax[~small]
    out[~small] = 2.0 * np.asarray(bessel_j1(big)) / big
    return _finish(out.reshape(arr.shape), scalar)


def somb_power(x, exponent: int):
    """somb(x) ** exponent, signed for odd exponents."""
    return somb(x) ** exponent


@lru_cache(maxsize=64)
def j1_zero(s: int) -> float:
    """s-th positive zero of J1, from McMahon's expansion refined by brentq."""
    if s < 1:
        raise RangeError(f"zero index must be >= 1, got {s}")
    beta = (s + 0.25) * math.pi
    guess = beta - 3.0 / (8.0 * beta)
    return brentq(bessel_j1, guess - 0.3, guess + 0.3, xtol=1e-15)


# ========== ENCIRCLED ENERGY ==========

@dataclass(frozen=True)
class RadialProfile:
    """Radial intensity somb(r)**exponent and the quadrature used to integrate it."""
    exponent: int
    cutoff_radius: float
    node_count: int = config.PROFILE_NODES

    def __post_init__(self):
        if int(self.exponent) != self.exponent or self.exponent < 2 or self.exponent % 2:
            raise ValidationError(f"exponent must be an even integer >= 2, got {self.exponent}")
        if not (np.isfinite(self.cutoff_radius) and self.cutoff_radius > 0):
            raise ValidationError(f"cutoff_radius must be positive, got {self.cutoff_radius}")
        if self.node_count < config.MIN_PROFILE_NODES:
            raise ValidationError(f"node_count must be >= {config.MIN_PROFILE_NODES}, got {self.node_count}")

    @classmethod
    def for_photon_number(cls, n: int, node_count: int = config.PROFILE_NODES,
                          cutoff_scale: float = 1.0) -> 'RadialProfile':
        """Profile of somb^(2N) with the default cutoff 50 j11 / sqrt(N)."""
        if n < 1:
            raise RangeError(f"photon number must be >= 1, got {n}")
        cutoff = cutoff_scale * config.CUTOFF_ZEROS * J1_FIRST_ZERO / math.sqrt(n)
        return cls(exponent=2 * n, cutoff_radius=cutoff, node_count=node_count)

    @property
    def step(self) -> float:
        return self.cutoff_radius / self.node_count

    def integrand(self, r):
        return np.asarray(somb(r)) ** self.exponent * r


@lru_cache(maxsize=32)
def _running_integral(profile: RadialProfile) -> np.ndarray:
    """Unnormalized Simpson integral of the profile at every panel edge."""
    h = profile.step
    edges = np.arange(profile.node_count + 1) * h
    f_edge = profile.integrand(edges)
    f_mid = profile.integrand(edges[:-1] + 0.5 * h)
    panels = h / 6.0 * (f_edge[:-1] + 4.0 * f_mid + f_edge[1:])
    running = np.concatenate(([0.0], np.cumsum(panels)))
    running.setflags(write=False)
    logger.debug("[Quadrature] exponent=%d cutoff=%.3f nodes=%d total=%.12g", profile.exponent,
                 profile.cutoff_radius, profile.node_count, running[-1])
    return running


def encircled_energy(profile: RadialProfile, radius: float) -> float:
    """Fraction of the somb^(2N) energy inside ``radius`` (relative to the cutoff disk)."""
    if not (0.0 <= radius <= profile.cutoff_radius):
        raise RangeError(f"radius {radius} outside [0, {profile.cutoff_radius}]")
    if radius == profile.cutoff_radius:
        return 1.0
    running = _running_integral(profile)
    h = profile.step
    i = min(int(radius / h), profile.node_count - 1)
    lo = i * h
    t = radius - lo
    inside = running[i]
    if t > 0.0:
        # Simpson on the partial panel [lo, radius] keeps the result continuous at panel edges
        f0, fm, f1 = profile.integrand(np.array([lo, lo + 0.5 * t, radius]))
        inside = min(inside + t / 6.0 * (f0 + 4.0 * fm + f1), running[i + 1])
    return float(inside / running[-1])


@lru_cache(maxsize=1)
def first_ring_fraction() -> float:
    """Energy of the N = 1 Airy pattern inside its first dark ring, on the default quadrature."""
    return encircled_energy(RadialProfile.for_photon_number(1), J1_FIRST_ZERO)


def radius_for_fraction(profile: RadialProfile, fraction: Optional[float] = None) -> float:
    """Smallest radius whose encircled energy reaches ``fraction``.

    ``fraction`` defaults to the first-ring fraction, so the N = 1 profile
    returns the first zero of somb.
    """
    if fraction is None:
        fraction = first_ring_fraction()
    if not (0.0 < fraction < 1.0):
        raise RangeError(f"fraction must lie in (0, 1), got {fraction}")
    running = _running_integral(profile)
    cum = running / running[-1]
    if fraction > cum[-2]:
        raise ConvergenceError(
            f"fraction {fraction:.9f} is not reached below the cutoff radius "
            f"{profile.cutoff_radius:.4f}; raise cutoff_radius")
    h = profile.step
    j = int(np.searchsorted(cum, fraction, side='left'))
    lo, hi = (j - 1) * h, j * h
    for _ in range(config.BISECTION_MAX_ITER):
        if hi - lo <= config.BISECTION_RTOL * hi:
            return hi
        mid = 0.5 * (lo + hi)
        if encircled_energy(profile, mid) >= fraction:
            hi = mid
        else:
            lo = mid
    raise ConvergenceError(
        f"bisection for fraction {fraction} did not converge below cutoff {profile.cutoff_radius:.4f}")
