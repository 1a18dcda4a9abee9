"""Embedding extraction and few-shot task sampling.

Walks an image dataset, encodes images and class prompts into unit-norm
embedding files in the textprobe binary formats, and samples balanced
few-shot tasks from them. textprobe is consumed only through its public
loaders, writers, and error types, so anything emitted here is readable
by the probe CLI unchanged.
"""

from .encoders import ClipEncoder, StubEncoder, UnreadableImageError, get_encoder
from .extract import ExtractResult, extract_images, extract_text, list_images, read_lines
from .sampling import SampleResult, sample_task

__all__ = [
    "ClipEncoder",
    "ExtractResult",
    "SampleResult",
    "StubEncoder",
    "UnreadableImageError",
    "extract_images",
    "extract_text",
    "get_encoder",
    "list_images",
    "read_lines",
    "sample_task",
]

__version__ = "0.1.0"
