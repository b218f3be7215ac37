"""Synthetic document-binarization datasets via adaptive thresholding and seamless cloning."""

__version__ = "0.1.0"
