"""Scar quantification on atrial surfaces, distance-map losses, domain
discrepancy metrics and segmentation evaluation metrics."""

__version__ = "0.1.0"
