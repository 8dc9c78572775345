from .core import StanceLab, run_pipeline
from .__about__ import __version__
