"""MNIST IDX loading and pixel-to-drive encoding.

IDX layout (big-endian): a 4-byte magic whose last byte is the number of
dimensions, one uint32 per dimension, then raw uint8 data. Images use magic
0x00000803 (N x rows x cols), labels 0x00000801 (N).
"""
from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import BadMagic, DimensionMismatch, LabelOutOfRange, TruncatedFile

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
DATA_DIR_ENV = "VO2SNN_DATA_DIR"
DEFAULT_WINDOW = 50e-6

_NAMES = {
    ("train", "images"): ("train-images-idx3-ubyte", "train-images.idx3-ubyte"),
    ("train", "labels"): ("train-labels-idx1-ubyte", "train-labels.idx1-ubyte"),
    ("test", "images"): ("t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"),
    ("test", "labels"): ("t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"),
}


def _read_bytes(path) -> bytes:
    path = str(path)
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rb") as fh:
        return fh.read()


def _parse_header(buf: bytes, magic: int, ndim: int, path):
    if len(buf) < 4:
        raise TruncatedFile(f"{path}: {len(buf)} bytes, no IDX header")
    (got,) = struct.unpack(">I", buf[:4])
    if got != magic:
        raise BadMagic(f"{path}: magic 0x{got:08x}, expected 0x{magic:08x}")
    end = 4 + 4 * ndim
    if len(buf) < end:
        raise TruncatedFile(f"{path}: header cut short")
    dims = struct.unpack(f">{ndim}I", buf[4:end])
    return dims, end


def load_idx_images(path, shape=(28, 28)) -> np.ndarray:
    """Return the raw uint8 image tensor, N x rows x cols."""
    buf = _read_bytes(path)
    (n, rows, cols), off = _parse_header(buf, IMAGE_MAGIC, 3, path)
    if shape is not None and (rows, cols) != tuple(shape):
        raise DimensionMismatch(f"{path}: images are {rows}x{cols}, expected {shape[0]}x{shape[1]}")
    need = n * rows * cols
    have = len(buf) - off
    if have < need:
        raise TruncatedFile(f"{path}: {have} data bytes, header declares {need}")
    if have > need:
        raise DimensionMismatch(f"{path}: {have - need} bytes beyond the declared {n} images")
    return np.frombuffer(buf, dtype=np.uint8, count=need, offset=off).reshape(n, rows, cols)


def load_idx_labels(path) -> np.ndarray:
    buf = _read_bytes(path)
    (n,), off = _parse_header(buf, LABEL_MAGIC, 1, path)
    have = len(buf) - off
    if have < n:
        raise TruncatedFile(f"{path}: {have} labels, header declares {n}")
    if have > n:
        raise DimensionMismatch(f"{path}: {have - n} bytes beyond the declared {n} labels")
    labels = np.frombuffer(buf, dtype=np.uint8, count=n, offset=off)
    if labels.size and labels.max() > 9:
        raise LabelOutOfRange(f"{path}: label {int(labels.max())} outside 0..9")
    return labels


@dataclass(frozen=True)
class Dataset:
    images: np.ndarray  # (N, 784) float32 in [0, 1]
    labels: np.ndarray  # (N,) uint8
    split: str

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise DimensionMismatch(
                f"{self.images.shape[0]} images vs {self.labels.shape[0]} labels"
            )

    def __len__(self):
        return self.labels.shape[0]

    def subset(self, n: int, start: int = 0) -> "Dataset":
        sl = slice(start, start + n)
        return Dataset(self.images[sl], self.labels[sl], self.split)


def pair(images: np.ndarray, labels: np.ndarray, split: str) -> Dataset:
    """Normalize raw bytes to [0, 1] and pair with labels."""
    if images.shape[0] != labels.shape[0]:
        raise DimensionMismatch(f"{images.shape[0]} images vs {labels.shape[0]} labels")
    flat = images.reshape(images.shape[0], -1).astype(np.float32) / np.float32(255.0)
    return Dataset(flat, labels, split)


def resolve_data_dir(data_dir=None) -> Path:
    if data_dir is None:
        data_dir = os.environ.get(DATA_DIR_ENV)
    if data_dir is None:
        raise FileNotFoundError(f"no MNIST directory: pass --data-dir or set ${DATA_DIR_ENV}")
    return Path(data_dir)


def _find(root: Path, split: str, kind: str) -> Path:
    for stem in _NAMES[(split, kind)]:
        for name in (stem, stem + ".gz"):
            if (root / name).exists():
                return root / name
    raise FileNotFoundError(f"{kind} file for the {split} split not found in {root}")


def load_split(split: str, data_dir=None, limit: Optional[int] = None) -> Dataset:
    if split not in ("train", "test"):
        raise ValueError("split must be 'train' or 'test'")
    root = resolve_data_dir(data_dir)
    ds = pair(
        load_idx_images(_find(root, split, "images")),
        load_idx_labels(_find(root, split, "labels")),
        split,
    )
    return ds.subset(limit) if limit is not None else ds


@dataclass(frozen=True)
class EncodedInput:
    drive: np.ndarray  # volts, one per input neuron
    window: float = DEFAULT_WINDOW

    def __post_init__(self):
        if self.window <= 0:
            raise ValueError("window must be positive")


def encode_rate(image, transfer, window: float = DEFAULT_WINDOW) -> EncodedInput:
    """Map pixels in [0, 1] linearly onto [v_lo, v_hi] of the transfer."""
    x = np.asarray(image, dtype=float).reshape(-1)
    if x.size and (x.min() < 0 or x.max() > 1):
        raise ValueError("pixels must lie in [0, 1]")
    return EncodedInput(transfer.v_lo + x * (transfer.v_hi - transfer.v_lo), window)


def decode_rate(encoded: EncodedInput, transfer) -> np.ndarray:
    return (encoded.drive - transfer.v_lo) / (transfer.v_hi - transfer.v_lo)
