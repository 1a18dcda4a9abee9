import numpy as np
import pytest

from embed_extractor import StubEncoder, extract_text
from textprobe.errors import InputError, NumericError
from textprobe.io import load_text_bank


class ScaledEncoder:
    """Returns rows of wildly different norms to expose the averaging rule."""

    def __init__(self, rows):
        self.rows = {text: np.asarray(row, dtype=np.float64) for text, row in rows.items()}
        self.dim = len(next(iter(self.rows.values())))
        self.name = "scaled"

    def encode_text_batch(self, prompts):
        return np.stack([self.rows[p] for p in prompts])


def test_per_template_normalization_equalizes_weights(tmp_path):
    # one template yields a huge row; after per-prompt normalization it
    # must not dominate the class mean
    enc = ScaledEncoder(
        {
            "photo heron": [1000.0, 0.0, 0.0],
            "sketch heron": [0.0, 0.001, 0.0],
            "photo lynx": [0.0, 0.0, 2.0],
            "sketch lynx": [0.0, 6.0, 0.0],
        }
    )
    out = extract_text(["heron", "lynx"], ["photo {}", "sketch {}"], enc, tmp_path / "text.lpeb")
    bank = load_text_bank(out)
    expected_heron = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
    expected_lynx = np.array([0.0, 1.0, 1.0]) / np.sqrt(2.0)
    np.testing.assert_allclose(bank.data[0], expected_heron, rtol=0, atol=1e-6)
    np.testing.assert_allclose(bank.data[1], expected_lynx, rtol=0, atol=1e-6)


def test_stub_text_bank_matches_manual_blend(tmp_path):
    enc = StubEncoder(dim=32)
    classes = ["heron", "lynx", "otter"]
    templates = ["a photo of a {}.", "a drawing of a {}."]
    out = extract_text(classes, templates, enc, tmp_path / "text.lpeb")
    bank = load_text_bank(out)
    assert bank.classes == 3 and bank.dim == 32
    for i, name in enumerate(classes):
        prompts = [t.replace("{}", name) for t in templates]
        rows = enc.encode_text_batch(prompts)
        rows = rows / np.linalg.norm(rows, axis=1, keepdims=True)
        mean = rows.mean(axis=0)
        np.testing.assert_allclose(
            bank.data[i], mean / np.linalg.norm(mean), rtol=0, atol=1e-6
        )


def test_single_template_row_is_just_the_prompt_embedding(tmp_path):
    enc = StubEncoder(dim=16)
    out = extract_text(["heron"], ["a photo of a {}."], enc, tmp_path / "t.lpeb")
    bank = load_text_bank(out)
    direct = enc.encode_text_batch(["a photo of a heron."])[0]
    np.testing.assert_allclose(bank.data[0], direct, rtol=0, atol=1e-6)


def test_input_validation(tmp_path):
    enc = StubEncoder()
    with pytest.raises(InputError):
        extract_text([], ["a photo of a {}."], enc, tmp_path / "t.lpeb")
    with pytest.raises(InputError):
        extract_text(["heron"], [], enc, tmp_path / "t.lpeb")
    with pytest.raises(InputError):
        extract_text(["heron"], ["a photo of a bird."], enc, tmp_path / "t.lpeb")


def test_cancelling_prompts_raise(tmp_path):
    enc = ScaledEncoder({"plus heron": [1.0, 0.0], "minus heron": [-1.0, 0.0]})
    with pytest.raises(NumericError):
        extract_text(["heron"], ["plus {}", "minus {}"], enc, tmp_path / "t.lpeb")
