"""segmark: segmentation of mixed human/AI-authored text under syntactic attacks."""

__version__ = "0.1.0"
