"""HTTP sidecar wrapping a sentence-embedding model.

Serves POST /embed and GET /health, and builds binary embedding caches
for dataset directories so the graph pipeline never needs a live model.
"""

from .app import create_app
from .cache import build_cache
from .encoder import HashEncoder, SentenceTransformerEncoder, make_encoder

__all__ = [
    "create_app",
    "build_cache",
    "HashEncoder",
    "SentenceTransformerEncoder",
    "make_encoder",
]
