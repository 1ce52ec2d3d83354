"""Compute sentence embeddings for phrase lists and write them in the
ontology pipeline's embeddings file format (header line with the
dimension, then ``phrase<TAB>v1 v2 ... vd``)."""

__version__ = "0.1.0"

from .encoders import HashEncoder, make_encoder

__all__ = ["HashEncoder", "make_encoder", "__version__"]
