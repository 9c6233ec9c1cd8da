"""claimcheck: evidence-based verification of image-caption claims."""

__version__ = "0.1.0"
