"""glyphforge: style-consistent glyph generation with a conditioned
Wasserstein GAN, evaluation metrics, and an inference service."""

__version__ = "0.1.0"
