"""brailletk: braille ASCII codec, KB-driven tokenization, prior-based
embedding initialization, corpus augmentation, and translation metrics."""

__version__ = "0.1.0"
