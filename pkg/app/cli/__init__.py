from .config import parse_config
from .main import run

__all__ = ["parse_config", "run"]
