"""
Configuration
Environment loading, logging setup and the parameter models shared by the
library, the CLI and the benchmark harness
"""

import logging
import os
from pathlib import Path
from typing import List, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_K_VALUES = [100, 200, 300, 400, 500, 600]

Method = Literal["slic", "dsr"]
SignConvention = Literal["literal", "inverted"]


def configure_logging(level: Optional[str] = None):
    level_name = (level or os.getenv("DSR_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def env_threads() -> Optional[int]:
    """Worker count from DSR_THREADS, or None when unset or unparsable"""
    raw = os.getenv("DSR_THREADS")
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"Ignoring DSR_THREADS={raw!r}: not an integer")
        return None
    if value < 1:
        logger.warning(f"Ignoring DSR_THREADS={value}: must be at least 1")
        return None
    return value


class SpectralParams(BaseModel):
    sigma: float = Field(default=20.0, gt=0)
    n: int = Field(default=3, ge=1)
    eps: float = Field(default=1e-8, gt=0)
    convention: SignConvention = "inverted"
    downsample_factor: Literal[1, 2, 4] = 1
    normalize: bool = True

    @field_validator("n")
    @classmethod
    def _odd_window(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError("averaging window n must be odd")
        return value


class SeedingParams(BaseModel):
    tau: float = Field(default=6.5, gt=0)


class ClusteringParams(BaseModel):
    k: int = Field(ge=4)
    m: float = Field(default=10.0, gt=0)
    max_iters: int = Field(default=10, ge=1)
    convergence_tol: float = Field(default=0.25, ge=0)
    method: Method = "slic"


class BenchConfig(BaseModel):
    image_dir: Path
    gt_dir: Path
    k_values: List[int] = Field(default_factory=lambda: list(DEFAULT_K_VALUES), min_length=1)
    methods: List[Method] = Field(default_factory=lambda: ["slic", "dsr"], min_length=1)
    m: float = Field(default=10.0, gt=0)
    max_iters: int = Field(default=10, ge=1)
    convergence_tol: float = Field(default=0.25, ge=0)
    spectral: SpectralParams = Field(default_factory=SpectralParams)
    seeding: SeedingParams = Field(default_factory=SeedingParams)
    out_path: Path = Path("bench_report")
    parallelism: int = Field(default=1, ge=1)

    def clustering_params(self, k: int, method: Method) -> ClusteringParams:
        return ClusteringParams(
            k=k,
            m=self.m,
            max_iters=self.max_iters,
            convergence_tol=self.convergence_tol,
            method=method,
        )
