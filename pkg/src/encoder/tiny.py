"""
Small convolutional encoder followed by query cross-attention.

The image is kept as an (H*W, C) matrix with row index y*W + x so every
convolution is a ``patches`` gather followed by one matmul.
"""
import logging
from typing import Dict, List, Tuple

import numpy as np

from ..errors import ShapeError
from ..ndgrad import Array2, Parameter, concat_cols, matmul, patches, relu, scale, slice_cols, softmax_rows
from ..preprocess import IMAGE_SIZE, InputImage
from .config import EncoderConfig

logger = logging.getLogger(__name__)

KERNEL = 3
STRIDE = 2
PAD = 1


def conv_index(height: int, width: int, kernel: int = KERNEL, stride: int = STRIDE, pad: int = PAD) -> Tuple[np.ndarray, int, int]:
    """Row indices of every kernel tap for every output pixel; -1 marks padding"""
    out_h = (height + 2 * pad - kernel) // stride + 1
    out_w = (width + 2 * pad - kernel) // stride + 1
    oy, ox = np.meshgrid(np.arange(out_h), np.arange(out_w), indexing="ij")
    ky, kx = np.meshgrid(np.arange(kernel), np.arange(kernel), indexing="ij")
    iy = oy.reshape(-1, 1) * stride - pad + ky.reshape(1, -1)
    ix = ox.reshape(-1, 1) * stride - pad + kx.reshape(1, -1)
    inside = (iy >= 0) & (iy < height) & (ix >= 0) & (ix < width)
    return np.where(inside, iy * width + ix, -1), out_h, out_w


def sinusoidal_2d(height: int, width: int, channels: int) -> np.ndarray:
    """Fixed sine/cosine positional code, first half of the channels for y, second for x"""
    quarter = channels // 4
    freqs = 1.0 / (10000.0 ** (np.arange(quarter) / quarter))
    ys, xs = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    parts = []
    for coord in (ys.reshape(-1, 1), xs.reshape(-1, 1)):
        angle = coord * freqs.reshape(1, -1)
        parts.extend([np.sin(angle), np.cos(angle)])
    return np.concatenate(parts, axis=1)


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class TinyEncoder:
    """Image (256 x 256 x input_channels) -> m room codes of size q"""

    def __init__(self, config: EncoderConfig):
        self.config = config
        rng = np.random.default_rng([config.seed, 101])
        self.params: Dict[str, Parameter] = {}

        in_c = config.input_channels
        for i, width in enumerate(config.conv_widths):
            self._add(f"encoder/conv{i}/weight", _xavier(rng, KERNEL * KERNEL * in_c, width))
            self._add(f"encoder/conv{i}/bias", np.zeros((1, width)))
            in_c = width
        q = config.q
        self._add("encoder/proj/weight", _xavier(rng, in_c, q))
        self._add("encoder/proj/bias", np.zeros((1, q)))
        self._add("encoder/queries", rng.normal(0.0, 1.0, size=(config.m, q)))
        for j in range(config.attention_layers):
            for name in ("wq", "wk", "wv", "wo", "ffn1", "ffn2"):
                self._add(f"encoder/attn{j}/{name}", _xavier(rng, q, q))
            self._add(f"encoder/attn{j}/ffn1_bias", np.zeros((1, q)))
            self._add(f"encoder/attn{j}/ffn2_bias", np.zeros((1, q)))

        self._indices: List[np.ndarray] = []
        h = w = IMAGE_SIZE
        for _ in config.conv_widths:
            index, h, w = conv_index(h, w)
            self._indices.append(index)
        self.grid = (h, w)
        self._pos = Array2(sinusoidal_2d(h, w, q))
        logger.debug(f"TinyEncoder: {len(self.params)} parameter arrays, feature grid {h}x{w}")

    def _add(self, name: str, value: np.ndarray):
        self.params[name] = Parameter(value, name=name)

    def parameters(self) -> List[Parameter]:
        return list(self.params.values())

    def _attention(self, j: int, queries: Array2, features: Array2) -> Array2:
        p = self.params
        heads = self.config.heads
        dh = self.config.q // heads
        qs = queries @ p[f"encoder/attn{j}/wq"]
        ks = features @ p[f"encoder/attn{j}/wk"]
        vs = features @ p[f"encoder/attn{j}/wv"]
        outs = []
        for h in range(heads):
            lo, hi = h * dh, (h + 1) * dh
            logits = scale(matmul(slice_cols(qs, lo, hi), slice_cols(ks, lo, hi).T), 1.0 / np.sqrt(dh))
            outs.append(softmax_rows(logits) @ slice_cols(vs, lo, hi))
        return concat_cols(outs) @ p[f"encoder/attn{j}/wo"]

    def encode(self, image: InputImage) -> Array2:
        in_c = self.config.input_channels
        if image.data.shape[:2] != (IMAGE_SIZE, IMAGE_SIZE) or image.data.shape[2] < in_c:
            raise ShapeError(f"Encoder expects an image of shape {(IMAGE_SIZE, IMAGE_SIZE, in_c)}, got {image.data.shape}")
        p = self.params
        # a density-only encoder reads the first channel of a two-channel image
        x = Array2(image.data[:, :, :in_c].reshape(-1, in_c))
        for i, index in enumerate(self._indices):
            x = relu(patches(x, index) @ p[f"encoder/conv{i}/weight"] + p[f"encoder/conv{i}/bias"])
        features = x @ p["encoder/proj/weight"] + p["encoder/proj/bias"] + self._pos

        codes: Array2 = p["encoder/queries"]
        for j in range(self.config.attention_layers):
            codes = codes + self._attention(j, codes, features)
            hidden = relu(codes @ p[f"encoder/attn{j}/ffn1"] + p[f"encoder/attn{j}/ffn1_bias"])
            codes = codes + hidden @ p[f"encoder/attn{j}/ffn2"] + p[f"encoder/attn{j}/ffn2_bias"]
        return codes
