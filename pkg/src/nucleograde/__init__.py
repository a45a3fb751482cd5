"""Detection, segmentation and pleomorphism scoring of nuclei in H&E images."""

from .config import PipelineConfig, load_config
from .errors import NucleogradeError
from .pipeline import evaluate, process_image, quarter_image, run_pipeline

__version__ = "0.1.0"

__all__ = ["NucleogradeError", "PipelineConfig", "evaluate", "load_config", "process_image",
           "quarter_image", "run_pipeline"]
