"""
Spectral Residual
2-D DFT and the spectral-residual saliency pipeline that produces the
density map steering seeding and the per-centre search radius
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import fft as sfft
from scipy import ndimage

from superpixels.config import SpectralParams
from superpixels.errors import ParameterError
from superpixels.imagecore import RasterImage, luminance

logger = logging.getLogger(__name__)

DENSITY_CLAMP = 3.0


class Direction(str, Enum):
    FORWARD = "forward"
    INVERSE = "inverse"


class SignConvention(str, Enum):
    LITERAL = "literal"
    INVERTED = "inverted"


@dataclass(frozen=True)
class ComplexField:
    data: np.ndarray

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class SpectralDecomposition:
    log_amplitude: np.ndarray
    phase: np.ndarray
    local_average: np.ndarray
    residual: np.ndarray


@dataclass(frozen=True)
class SaliencyMap:
    values: np.ndarray
    sigma: float


@dataclass(frozen=True)
class DensityMap:
    values: np.ndarray
    convention: SignConvention = SignConvention.INVERTED

    @classmethod
    def uniform(cls, height: int, width: int) -> "DensityMap":
        return cls(np.ones((height, width)), SignConvention.INVERTED)

    @property
    def shape(self):
        return self.values.shape

    def at(self, x: float, y: float) -> float:
        """Density at the pixel nearest to (x, y), halves rounded up, clamped to the grid"""
        h, w = self.values.shape
        col = min(max(math.floor(x + 0.5), 0), w - 1)
        row = min(max(math.floor(y + 0.5), 0), h - 1)
        return float(self.values[row, col])


def dft2(field: np.ndarray, direction: Direction = Direction.FORWARD,
         workers: Optional[int] = None) -> ComplexField:
    """
    Row-column 2-D DFT. Forward is unnormalised, inverse carries 1/(W*H).
    Each 1-D pass handles arbitrary lengths exactly (mixed radix with a
    Bluestein fallback for large prime factors).
    """
    field = np.asarray(field)
    if field.ndim != 2 or field.size == 0:
        raise ParameterError(f"dft2 needs a non-empty 2-D field, got shape {field.shape}")

    transform = sfft.fft if Direction(direction) is Direction.FORWARD else sfft.ifft
    rows = transform(field.astype(np.complex128), axis=1, workers=workers)
    return ComplexField(transform(rows, axis=0, workers=workers))


def decompose(lum: np.ndarray, n: int = 3, eps: float = 1e-8) -> SpectralDecomposition:
    if n < 1 or n % 2 == 0:
        raise ParameterError(f"averaging window must be odd and positive, got {n}")
    if eps <= 0:
        raise ParameterError(f"eps must be positive, got {eps}")

    spectrum = dft2(lum, Direction.FORWARD).data
    log_amplitude = np.log(np.abs(spectrum) + eps)
    phase = np.angle(spectrum)
    local_average = ndimage.uniform_filter(log_amplitude, size=n, mode="nearest")
    return SpectralDecomposition(
        log_amplitude=log_amplitude,
        phase=phase,
        local_average=local_average,
        residual=log_amplitude - local_average,
    )


def gaussian_smooth(values: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian blur truncated at ceil(3 sigma), unit mass, replicate border"""
    radius = max(1, math.ceil(3.0 * sigma))
    return ndimage.gaussian_filter(values, sigma=sigma, mode="nearest", radius=radius)


def saliency(dec: SpectralDecomposition, sigma: float = 20.0) -> SaliencyMap:
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")

    spectrum = np.exp(dec.residual) * (np.cos(dec.phase) + 1j * np.sin(dec.phase))
    reconstruction = dft2(spectrum, Direction.INVERSE).data
    energy = reconstruction.real ** 2 + reconstruction.imag ** 2
    smoothed = gaussian_smooth(energy, sigma)
    # blurring a non-negative field with a unit-mass kernel can still leave -0.0
    return SaliencyMap(np.maximum(smoothed, 0.0), sigma)


def density_map(sal: SaliencyMap, convention=SignConvention.INVERTED,
                clamp: Optional[float] = DENSITY_CLAMP) -> DensityMap:
    values = np.asarray(sal.values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ParameterError("saliency map contains non-finite values")

    convention = SignConvention(convention)
    centred = values - values.mean()
    exponent = centred if convention is SignConvention.LITERAL else -centred
    if clamp is not None:
        exponent = np.clip(exponent, -clamp, clamp)
    return DensityMap(np.exp(exponent), convention)


def _resample(values: np.ndarray, shape) -> np.ndarray:
    zoom = (shape[0] / values.shape[0], shape[1] / values.shape[1])
    out = ndimage.zoom(values, zoom, order=1, mode="nearest", grid_mode=True)
    if out.shape != tuple(shape):
        # zoom rounds the output size; pad or crop the last row/column
        out = np.pad(out, [(0, max(0, s - o)) for s, o in zip(shape, out.shape)], mode="edge")
        out = out[:shape[0], :shape[1]]
    return out


def normalize_saliency(sal: SaliencyMap) -> SaliencyMap:
    values = sal.values
    span = float(values.max() - values.min())
    if span <= 0:
        return SaliencyMap(np.zeros_like(values), sal.sigma)
    return SaliencyMap((values - values.min()) / span, sal.sigma)


def compute_saliency(img: RasterImage, params: Optional[SpectralParams] = None) -> SaliencyMap:
    params = params or SpectralParams()
    lum = luminance(img)

    if np.ptp(lum) == 0:
        logger.info("Flat luminance, saliency is identically zero")
        return SaliencyMap(np.zeros_like(lum), params.sigma)

    factor = params.downsample_factor
    if factor > 1:
        small_shape = (max(2, lum.shape[0] // factor), max(2, lum.shape[1] // factor))
        work = _resample(lum, small_shape)
        sigma = params.sigma / factor
    else:
        work = lum
        sigma = params.sigma

    dec = decompose(work, n=params.n, eps=params.eps)
    sal = saliency(dec, sigma=sigma)
    if factor > 1:
        sal = SaliencyMap(np.maximum(_resample(sal.values, lum.shape), 0.0), params.sigma)
    else:
        sal = SaliencyMap(sal.values, params.sigma)

    if params.normalize:
        sal = normalize_saliency(sal)
    return sal


def compute_density(img: RasterImage, params: Optional[SpectralParams] = None) -> DensityMap:
    params = params or SpectralParams()
    sal = compute_saliency(img, params)
    density = density_map(sal, params.convention)
    logger.info(
        f"Density map {img.width}x{img.height}: sigma={params.sigma}, "
        f"convention={params.convention}, downsample={params.downsample_factor}, "
        f"range=[{density.values.min():.4f}, {density.values.max():.4f}]"
    )
    return density
