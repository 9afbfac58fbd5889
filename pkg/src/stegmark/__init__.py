"""Steganography, reversible data hiding and fragile watermarking for 8-bit Netpbm images."""

from ._accel import backend
from .imagecore import RasterImage, Region, load_image, save_image
from .keystream import StegoKey

__all__ = ["RasterImage", "Region", "StegoKey", "backend", "load_image", "save_image"]
__version__ = "0.1.0"
