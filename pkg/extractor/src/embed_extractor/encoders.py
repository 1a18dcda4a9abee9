"""Image and text encoders behind a small batch interface.

An encoder exposes `dim`, `load_image(path)` (decode one file, raising
`UnreadableImageError` on anything that is not a valid image), and
`encode_image_batch` / `encode_text_batch` (stacked unit-norm-ish rows;
the caller renormalizes before writing).

`StubEncoder` is deterministic and offline: the sha256 digest of the
decoded pixels (or of the prompt text) seeds a fixed-dimension Gaussian
draw, so equal content yields equal embeddings regardless of path,
process, or platform. `ClipEncoder` wraps a Hugging Face CLIP
checkpoint and imports its heavy dependencies only when constructed.
"""

import hashlib

import numpy as np

from textprobe.errors import InputError, ResourceError

DEFAULT_STUB_DIM = 64


class UnreadableImageError(Exception):
    """A file could not be decoded as an image."""


def _digest_vector(digest, dim):
    # digest seeds the generator, so the row is stable across runs
    seed = int.from_bytes(digest[:8], "little")
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


class StubEncoder:
    """Hash-seeded deterministic encoder for tests and offline runs."""

    def __init__(self, dim=DEFAULT_STUB_DIM):
        dim = int(dim)
        if dim < 2:
            raise InputError(f"encoder dim must be >= 2, got {dim}")
        self.dim = dim
        self.name = f"stub{dim}"

    def load_image(self, path):
        from PIL import Image, UnidentifiedImageError

        try:
            with Image.open(path) as img:
                rgb = img.convert("RGB")
                header = rgb.size[0].to_bytes(4, "little") + rgb.size[1].to_bytes(4, "little")
                return hashlib.sha256(header + rgb.tobytes()).digest()
        except (OSError, UnidentifiedImageError, ValueError) as err:
            raise UnreadableImageError(f"{path}: {err}") from err

    def encode_image_batch(self, samples):
        return np.stack([_digest_vector(digest, self.dim) for digest in samples])

    def encode_text_batch(self, prompts):
        digests = [hashlib.sha256(("text:" + p).encode("utf-8")).digest() for p in prompts]
        return np.stack([_digest_vector(digest, self.dim) for digest in digests])


class ClipEncoder:
    """CLIP image/text towers via transformers; constructed lazily."""

    def __init__(self, checkpoint="openai/clip-vit-base-patch32", device="cpu"):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as err:
            raise ResourceError(f"clip encoder needs torch and transformers: {err}") from err
        try:
            self._model = CLIPModel.from_pretrained(checkpoint).to(device).eval()
            self._processor = CLIPProcessor.from_pretrained(checkpoint)
        except Exception as err:
            raise ResourceError(f"could not load clip checkpoint {checkpoint!r}: {err}") from err
        self._torch = torch
        self._device = device
        self.dim = int(self._model.config.projection_dim)
        self.name = f"clip:{checkpoint}"

    def load_image(self, path):
        from PIL import Image, UnidentifiedImageError

        try:
            with Image.open(path) as img:
                return img.convert("RGB").copy()
        except (OSError, UnidentifiedImageError, ValueError) as err:
            raise UnreadableImageError(f"{path}: {err}") from err

    def encode_image_batch(self, samples):
        inputs = self._processor(images=samples, return_tensors="pt").to(self._device)
        with self._torch.no_grad():
            out = self._model.get_image_features(**inputs)
        return out.cpu().numpy().astype(np.float64)

    def encode_text_batch(self, prompts):
        inputs = self._processor(
            text=prompts, return_tensors="pt", padding=True, truncation=True
        ).to(self._device)
        with self._torch.no_grad():
            out = self._model.get_text_features(**inputs)
        return out.cpu().numpy().astype(np.float64)


def get_encoder(name, dim=None):
    """Resolve an encoder by name: "stub" or "clip[:checkpoint]"."""
    if name == "stub":
        return StubEncoder(dim if dim is not None else DEFAULT_STUB_DIM)
    if name == "clip" or name.startswith("clip:"):
        if dim is not None:
            raise InputError("dim is fixed by the clip checkpoint; only the stub takes --dim")
        _, _, checkpoint = name.partition(":")
        if checkpoint:
            return ClipEncoder(checkpoint)
        return ClipEncoder()
    raise InputError(f"unknown encoder {name!r}; expected 'stub' or 'clip[:checkpoint]'")
