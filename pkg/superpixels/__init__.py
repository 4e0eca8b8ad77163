# Superpixels package
__version__ = "1.0.0"

from superpixels.clustering import SegmentationResult, SuperpixelSegmenter, segment
from superpixels.config import BenchConfig, ClusteringParams, SeedingParams, SpectralParams
from superpixels.imagecore import GroundTruth, LabelMap, RasterImage, load_image, read_ground_truth
from superpixels.metrics import SegmentationMetrics, evaluate
from superpixels.spectral import DensityMap, compute_density
