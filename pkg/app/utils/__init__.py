from .images import load_png, resize_bilinear, save_png
from .logger import setup_logger

__all__ = ["setup_logger", "load_png", "save_png", "resize_bilinear"]
