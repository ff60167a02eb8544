"""
Optics - lens geometry, point-spread functions, the Rayleigh bound, the
focusing kernel and the scalar efficiency factors of the N-photon sources.

PSFs are peak-normalized to 1; physical prefactors are exposed as separate
scalars (usually in log form, they underflow quickly with N).
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

import config
from errors import RangeError, RegimeError, ValidationError
from specfun import J1_FIRST_ZERO, somb

logger = logging.getLogger(__name__)

RAYLEIGH_FACTOR = 0.61 * 2.0 * math.pi


def _require_positive(name: str, value: float) -> None:
    if not (np.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class OpticalConfig:
    """Thin-lens imaging geometry. The magnification and focal length are derived."""
    k: float = config.WAVENUMBER
    R: float = config.LENS_RADIUS
    D_o: float = config.OBJECT_DISTANCE
    D_i: float = config.OBJECT_DISTANCE * config.MAGNIFICATION
    theta: float = 0.0

    def __post_init__(self):
        for name in ('k', 'R', 'D_o', 'D_i'):
            _require_positive(name, getattr(self, name))
        if self.R / self.D_o >= config.PARAXIAL_LIMIT:
            logger.warning("[Optics] R/D_o = %.3f is outside the paraxial range (< %.2f)",
                           self.R / self.D_o, config.PARAXIAL_LIMIT)

    @classmethod
    def from_ratio(cls, do_over_r: float = config.OBJECT_DISTANCE / config.LENS_RADIUS,
                   m: float = config.MAGNIFICATION, k: float = config.WAVENUMBER,
                   R: float = config.LENS_RADIUS) -> 'OpticalConfig':
        _require_positive('m', m)
        return cls(k=k, R=R, D_o=do_over_r * R, D_i=m * do_over_r * R)

    @property
    def m(self) -> float:
        return self.D_i / self.D_o

    @property
    def f(self) -> float:
        return 1.0 / (1.0 / self.D_o + 1.0 / self.D_i)

    @property
    def argument_scale(self) -> float:
        """Factor turning an object-registered distance into the somb argument."""
        return self.R * self.k / self.D_o

    def with_wavenumber(self, k: float) -> 'OpticalConfig':
        return replace(self, k=k)


@dataclass(frozen=True)
class SourceConfig:
    """Illumination of the N-photon engines and the detector it is paired with."""
    N: int = 1
    delta_k_t: float = config.FOCUSING_BANDWIDTH
    alpha_sq: float = config.MEAN_PHOTONS
    mu: float = config.TRANSMISSIVITY
    delta_omega_dt: float = config.MONOCHROMATICITY
    eta: float = config.QUANTUM_EFFICIENCY
    s_over_A: float = config.PIXEL_TO_OBJECT_AREA
    I_o: float = config.OBJECT_INTENSITY
    area_A: float = config.OBJECT_AREA
    delta_t: float = config.TIME_WINDOW

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValidationError(f"N must be a positive integer, got {self.N}")
        for name in ('delta_k_t', 'delta_omega_dt', 's_over_A', 'I_o', 'area_A', 'delta_t'):
            _require_positive(name, getattr(self, name))
        if not (np.isfinite(self.alpha_sq) and self.alpha_sq >= 0):
            raise ValidationError(f"alpha_sq must be >= 0, got {self.alpha_sq}")
        if not 0.0 < self.mu <= 1.0:
            raise ValidationError(f"mu must lie in (0, 1], got {self.mu}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValidationError(f"eta must lie in [0, 1], got {self.eta}")
        focusing = math.pi * self.delta_k_t ** 2 * self.area_A
        if focusing < config.FOCUSING_MIN:
            logger.warning("[Source] pi*dk_t^2*A = %.3g is not >> 1; focused-state results are unreliable",
                           focusing)
        if self.delta_omega_dt >= 1.0:
            logger.warning("[Source] delta_omega*delta_t = %.3g; the source is not quasi-monochromatic",
                           self.delta_omega_dt)

    def with_photons(self, n: int) -> 'SourceConfig':
        return replace(self, N=n)

    @property
    def kernel_first_zero(self) -> float:
        """Distance of the first zero of the focusing kernel."""
        return 2.0 * J1_FIRST_ZERO / self.delta_k_t


# ========== PSF ==========

def rayleigh_radius(cfg: OpticalConfig) -> float:
    """Rayleigh bound 0.61 * 2 pi m D_o / (k R) in image-plane units."""
    return RAYLEIGH_FACTOR * cfg.m * cfg.D_o / (cfg.k * cfg.R)


def _distance(displacement) -> np.ndarray:
    d = np.asarray(displacement, dtype=float)
    if d.shape[-1:] != (2,):
        raise ValidationError(f"displacement must have a trailing axis of length 2, got shape {d.shape}")
    return np.hypot(d[..., 0], d[..., 1])


def psf_radial(cfg: OpticalConfig, distance):
    """Peak-normalized PSF somb(R k d / D_o) at object-registered distance d."""
    return somb(cfg.argument_scale * np.asarray(distance, dtype=float))


def psf(cfg: OpticalConfig, displacement):
    """PSF at displacement r_o + r_i/m. Prefactor and phase are not applied."""
    return psf_radial(cfg, _distance(displacement))


def heisenberg_config(cfg: OpticalConfig, n: int) -> OpticalConfig:
    if int(n) != n or n < 1:
        raise RangeError(f"N must be a positive integer, got {n}")
    return cfg.with_wavenumber(n * cfg.k)


def psf_heisenberg(cfg: OpticalConfig, n: int, displacement):
    """PSF of an N-photon absorber: the same lens at wavenumber N k."""
    return psf(heisenberg_config(cfg, n), displacement)


def psf_prefactor(cfg: OpticalConfig, area_A: float = config.OBJECT_AREA) -> float:
    """R^2 k^2 A / (4 pi D_o D_i), the amplitude factor dropped by psf."""
    return cfg.R ** 2 * cfg.k ** 2 * area_A / (4.0 * math.pi * cfg.D_o * cfg.D_i)


# ========== FOCUSED SOURCES ==========

def focusing_kernel(src: SourceConfig, distance):
    """Peak-normalized focusing spot somb(dk_t d / 2)."""
    return somb(0.5 * src.delta_k_t * np.asarray(distance, dtype=float))


def efficiency_xi(src: SourceConfig) -> float:
    """eta (dw dt) / (pi dk_t^2 A) * S/A, typically very small."""
    return (src.eta * src.delta_omega_dt / (math.pi * src.delta_k_t ** 2 * src.area_A)) * src.s_over_A


def log_source_efficiency(src: SourceConfig) -> float:
    """log of (mu |alpha|^2)^N / N!; -inf for a dark source."""
    mean = src.mu * src.alpha_sq
    if mean == 0.0:
        return -math.inf
    return src.N * math.log(mean) - math.lgamma(src.N + 1)


def source_efficiency(src: SourceConfig) -> float:
    """(mu |alpha|^2)^N / N!, the count-rate factor of the coherent-state mixture."""
    return math.exp(log_source_efficiency(src))


def fock_norm(src: SourceConfig) -> float:
    return 16.0 * math.pi * src.area_A / src.delta_k_t ** 2


def heisenberg_gamma(cfg: OpticalConfig, s_F: float, n: int) -> float:
    """(s_F / pi R^2)^N for an absorber screen of area s_F behind the lens."""
    pupil = math.pi * cfg.R ** 2
    if not 0.0 < s_F <= pupil:
        raise RangeError(f"s_F must lie in (0, pi R^2 = {pupil}], got {s_F}")
    return (s_F / pupil) ** n


def conventional_log_scale(src: SourceConfig, cfg: OpticalConfig, coherent: bool) -> float:
    """log of the detection prefactor of the single-photon images (c = 1)."""
    s_area = src.s_over_A * src.area_A
    scale = src.eta * s_area * src.delta_t * src.I_o
    if scale == 0.0:
        return -math.inf
    if not coherent:
        scale /= 2.0 * math.pi * cfg.k ** 2 * src.area_A
    return math.log(scale)


def sql_log_scale(src: SourceConfig) -> float:
    """log of (dk_t^2 A / 16 pi) xi^N."""
    xi = efficiency_xi(src)
    if xi == 0.0:
        return -math.inf
    return math.log(src.delta_k_t ** 2 * src.area_A / (16.0 * math.pi)) + src.N * math.log(xi)


def check_focusing(cfg: OpticalConfig, src: SourceConfig, enforce: bool = True) -> bool:
    """Gate for the engines that pull h out of the Q integral.

    Returns True when D_o/R > k/dk_t. A violation raises RegimeError, or is
    logged and tolerated when ``enforce`` is False.
    """
    ratio = cfg.D_o / cfg.R
    bound = cfg.k / src.delta_k_t
    if ratio > bound:
        return True
    message = (f"focused-spot regime violated: D_o/R = {ratio:.4g} but the approximation "
               f"requires D_o/R ≫ k/Δk_t = {bound:.4g}")
    if enforce:
        raise RegimeError(message)
    logger.warning("[Optics] %s; continuing without the check", message)
    return False
