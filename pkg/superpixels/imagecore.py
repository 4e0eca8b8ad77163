"""
Image Core
Raster and label-map types, colour conversion, gradients and file I/O
"""

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from PIL import Image, UnidentifiedImageError
from skimage.segmentation import find_boundaries

from superpixels.errors import BoundsError, ImageFormatError, ParameterError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# IEC 61966-2-1 linear sRGB -> XYZ. The D65 white is taken as the image of
# RGB (1, 1, 1) so that white maps to a = b = 0 exactly.
SRGB_TO_XYZ = np.array([
    [0.4124, 0.3576, 0.1805],
    [0.2126, 0.7152, 0.0722],
    [0.0193, 0.1192, 0.9505],
])
D65_WHITE = SRGB_TO_XYZ @ np.ones(3)

LAB_EPSILON = 216.0 / 24389.0
LAB_KAPPA = 24389.0 / 27.0

MAX_PNG_LABELS = 65536
DEFAULT_BOUNDARY_COLOR = (255, 255, 0)


class ColorSpace(str, Enum):
    SRGB8 = "sRGB8"
    LAB = "LabF64"


def _freeze(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class RasterImage:
    """H x W x 3 pixel grid, x = column, y = row, origin top-left"""

    data: np.ndarray
    colorspace: ColorSpace = ColorSpace.SRGB8

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3 or data.shape[2] != 3:
            raise ParameterError(f"expected an H x W x 3 array, got shape {data.shape}")
        if data.shape[0] < 2 or data.shape[1] < 2:
            raise ParameterError(f"image must be at least 2x2, got {data.shape[1]}x{data.shape[0]}")
        dtype = np.uint8 if self.colorspace is ColorSpace.SRGB8 else np.float64
        object.__setattr__(self, "data", _freeze(data.astype(dtype, copy=True)))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape[:2]

    @property
    def num_pixels(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class LabelMap:
    labels: np.ndarray
    num_labels: int

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ParameterError(f"label map must be 2-D, got shape {labels.shape}")
        if self.num_labels < 1:
            raise ParameterError("label map needs at least one label")
        if labels.min() < 0 or labels.max() >= self.num_labels:
            raise ParameterError(f"label values must lie in [0, {self.num_labels})")
        counts = np.bincount(labels.ravel(), minlength=self.num_labels)
        if np.any(counts == 0):
            missing = int(np.flatnonzero(counts == 0)[0])
            raise ParameterError(f"label {missing} does not occur in the map")
        object.__setattr__(self, "labels", _freeze(labels.astype(np.int64, copy=True)))

    @classmethod
    def from_array(cls, labels: np.ndarray) -> "LabelMap":
        """Build a label map from arbitrary integer ids, compacting them to 0..k-1"""
        unique, compact = np.unique(np.asarray(labels), return_inverse=True)
        return cls(compact.reshape(np.shape(labels)), len(unique))

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.labels.shape


@dataclass(frozen=True)
class GroundTruth:
    regions: LabelMap

    @property
    def width(self) -> int:
        return self.regions.width

    @property
    def height(self) -> int:
        return self.regions.height

    @property
    def num_regions(self) -> int:
        return self.regions.num_labels


def _stored_bit_depth(pil_image: Image.Image) -> int:
    """
    Bits per sample as stored in the file. Pillow reports 16-bit RGB PNG and
    PPM as mode RGB, so the depth is read from the decoder arguments, which
    are only available before load().
    """
    for tile in pil_image.tile:
        args = tile[3]
        rawmode, maxval = (args[0], args[1] if len(args) > 1 else None) if isinstance(args, tuple) else (args, None)
        if isinstance(maxval, int) and maxval > 255:
            return 16
        if isinstance(rawmode, str) and ";16" in rawmode:
            return 16
    return 8


def load_image(path: PathLike) -> RasterImage:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Image not found: {path}")

    try:
        with Image.open(path) as pil_image:
            depth = _stored_bit_depth(pil_image)
            if depth != 8:
                raise ImageFormatError(f"unsupported bit depth {depth} in {path}; expected 8-bit RGB or grayscale")
            pil_image.load()
            mode = pil_image.mode
            if mode in ("RGB", "L"):
                converted = pil_image.convert("RGB")
            elif mode in ("P", "RGBA", "LA"):
                logger.warning(f"Converting {mode} image to RGB: {path}")
                converted = pil_image.convert("RGB")
            else:
                raise ImageFormatError(f"unsupported pixel format {mode} in {path}; expected 8-bit RGB or grayscale")
            data = np.asarray(converted, dtype=np.uint8)
    except ImageFormatError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as e:
        raise ImageFormatError(f"cannot decode {path}: {e}") from e

    logger.info(f"Loaded image {path.name}: {data.shape[1]}x{data.shape[0]}")
    return RasterImage(data, ColorSpace.SRGB8)


def save_image(img: RasterImage, path: PathLike):
    if img.colorspace is not ColorSpace.SRGB8:
        raise ParameterError("only sRGB8 images can be written")
    Image.fromarray(np.asarray(img.data)).save(Path(path))


def srgb_to_lab(img: RasterImage) -> RasterImage:
    if img.colorspace is not ColorSpace.SRGB8:
        raise ParameterError(f"expected an sRGB8 image, got {img.colorspace.value}")

    rgb = img.data.astype(np.float64) / 255.0
    linear = np.where(rgb > 0.04045, ((rgb + 0.055) / 1.055) ** 2.4, rgb / 12.92)
    xyz = linear @ SRGB_TO_XYZ.T / D65_WHITE

    f = np.where(xyz > LAB_EPSILON, np.cbrt(xyz), (LAB_KAPPA * xyz + 16.0) / 116.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return RasterImage(lab, ColorSpace.LAB)


def luminance(img: RasterImage) -> np.ndarray:
    if img.colorspace is ColorSpace.LAB:
        return np.array(img.data[..., 0], dtype=np.float64)
    rgb = img.data.astype(np.float64)
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def gradient_field(img: RasterImage) -> np.ndarray:
    """
    Squared central-difference gradient over all channels.
    Border pixels, where the stencil is undefined, hold +inf.
    """
    data = np.asarray(img.data, dtype=np.float64)
    grad = np.full(img.shape, np.inf)
    dx = data[1:-1, 2:] - data[1:-1, :-2]
    dy = data[2:, 1:-1] - data[:-2, 1:-1]
    grad[1:-1, 1:-1] = np.sum(dx * dx, axis=2) + np.sum(dy * dy, axis=2)
    return grad


def gradient_magnitude(img: RasterImage, x: int, y: int) -> float:
    if not (1 <= x <= img.width - 2 and 1 <= y <= img.height - 2):
        raise BoundsError(f"({x}, {y}) is not an interior pixel of a {img.width}x{img.height} image")
    data = img.data
    dx = data[y, x + 1].astype(np.float64) - data[y, x - 1]
    dy = data[y + 1, x].astype(np.float64) - data[y - 1, x]
    return float(np.sum(dx * dx) + np.sum(dy * dy))


def boundary_mask(labels: LabelMap) -> np.ndarray:
    """Pixels with at least one 4-neighbour carrying a different label"""
    return find_boundaries(np.asarray(labels.labels), connectivity=1, mode="thick")


def _parse_seg(path: Path) -> np.ndarray:
    header = {}
    lines = path.read_text(encoding="utf-8").splitlines()
    data_start = None
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "data":
            data_start = line_no
            break
        key, _, value = line.partition(" ")
        header[key] = value.strip()

    if data_start is None:
        raise ImageFormatError(f"missing 'data' line in {path.name}", line=len(lines))
    try:
        width = int(header["width"])
        height = int(header["height"])
    except KeyError as e:
        raise ImageFormatError(f"header lacks {e.args[0]}", line=data_start) from e
    except ValueError as e:
        raise ImageFormatError(f"bad image size in header: {e}", line=data_start) from e
    if width < 1 or height < 1:
        raise ImageFormatError(f"bad image size {width}x{height}", line=data_start)

    labels = np.full((height, width), -1, dtype=np.int64)
    for line_no in range(data_start + 1, len(lines) + 1):
        line = lines[line_no - 1].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 4:
            raise ImageFormatError(f"expected 'segment row colStart colEnd', got {line!r}", line=line_no)
        try:
            segment, row, col_start, col_end = (int(v) for v in fields)
        except ValueError as e:
            raise ImageFormatError(f"non-integer field in {line!r}", line=line_no) from e
        if segment < 0 or not (0 <= row < height) or not (0 <= col_start <= col_end < width):
            raise ImageFormatError(f"run {line!r} lies outside the {width}x{height} image", line=line_no)
        run = labels[row, col_start:col_end + 1]
        if np.any(run >= 0):
            raise ImageFormatError(f"run {line!r} overlaps an earlier run", line=line_no)
        run[:] = segment

    if np.any(labels < 0):
        ys, xs = np.nonzero(labels < 0)
        raise ImageFormatError(
            f"{len(ys)} pixels not covered by any run, first at ({xs[0]}, {ys[0]})",
            line=len(lines),
        )
    return labels


def _read_label_png(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as pil_image:
            pil_image.load()
            if pil_image.mode not in ("I;16", "I;16B", "I;16L", "I", "L"):
                raise ImageFormatError(f"label map {path.name} has mode {pil_image.mode}; expected 16-bit grayscale")
            return np.asarray(pil_image).astype(np.int64)
    except ImageFormatError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as e:
        raise ImageFormatError(f"cannot decode {path}: {e}") from e


def read_ground_truth(path: PathLike) -> GroundTruth:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Ground truth not found: {path}")

    if path.suffix.lower() == ".seg":
        raw = _parse_seg(path)
    else:
        raw = _read_label_png(path)

    regions = LabelMap.from_array(raw)
    logger.info(f"Loaded ground truth {path.name}: {regions.num_labels} regions")
    return GroundTruth(regions)


def write_label_map(labels: LabelMap, path: PathLike):
    if labels.num_labels > MAX_PNG_LABELS:
        raise ParameterError(f"{labels.num_labels} labels do not fit a 16-bit PNG")
    Image.fromarray(np.asarray(labels.labels, dtype=np.uint16)).save(Path(path))
    logger.info(f"Wrote label map with {labels.num_labels} labels to {path}")


def overlay_boundaries(img: RasterImage, labels: LabelMap,
                       color: Tuple[int, int, int] = DEFAULT_BOUNDARY_COLOR) -> RasterImage:
    if img.colorspace is not ColorSpace.SRGB8:
        raise ParameterError("overlays are drawn on sRGB8 images")
    if img.shape != labels.shape:
        raise ParameterError(f"image {img.shape} and labels {labels.shape} differ in size")
    canvas = np.array(img.data)
    canvas[boundary_mask(labels)] = color
    return RasterImage(canvas, ColorSpace.SRGB8)


def render_overlay(img: RasterImage, labels: LabelMap, path: PathLike,
                   color: Tuple[int, int, int] = DEFAULT_BOUNDARY_COLOR):
    save_image(overlay_boundaries(img, labels, color), path)


def write_scalar_png(field: np.ndarray, path: PathLike):
    """Min-max normalised 8-bit visualisation of a scalar field"""
    field = np.asarray(field, dtype=np.float64)
    span = float(field.max() - field.min())
    if span > 0:
        scaled = (field - field.min()) / span
    else:
        scaled = np.zeros_like(field)
    Image.fromarray(np.round(scaled * 255.0).astype(np.uint8)).save(Path(path))


def mark_points(img: RasterImage, points, color: Tuple[int, int, int] = (255, 0, 0),
                radius: int = 1) -> RasterImage:
    """Copy of img with a filled square of the given radius drawn at each (x, y)"""
    canvas = np.array(img.data)
    for x, y in points:
        canvas[max(0, y - radius):y + radius + 1, max(0, x - radius):x + radius + 1] = color
    return RasterImage(canvas, img.colorspace)


def resolve_color(name: Optional[str]) -> Tuple[int, int, int]:
    """Parse '#rrggbb' or 'r,g,b'; None gives the default boundary colour"""
    if not name:
        return DEFAULT_BOUNDARY_COLOR
    text = name.strip()
    try:
        if text.startswith("#") and len(text) == 7:
            return tuple(int(text[i:i + 2], 16) for i in (1, 3, 5))
        parts = tuple(int(v) for v in text.split(","))
    except ValueError as e:
        raise ParameterError(f"cannot parse colour {name!r}") from e
    if len(parts) != 3 or any(not 0 <= v <= 255 for v in parts):
        raise ParameterError(f"cannot parse colour {name!r}")
    return parts
