"""MNIST two-digit task from IDX files, with an optional checksummed fetch."""

from __future__ import annotations

import gzip
import hashlib
import math
import os
import tempfile
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
from filelock import FileLock

from ..core import Dataset
from ..errors import ChecksumError, ConfigError, DataFormatError, FetchError, InvalidInputError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


@dataclass(frozen=True)
class MnistSource:
    """Where the four IDX files live and how to turn them into a binary task.

    ``root`` holds the files under their standard uncompressed names. When
    ``mirror_url`` is set, ``fetch_mnist`` downloads ``<mirror_url>/<name>.gz``
    and checks each decompressed file against ``sha256[name]``.
    """

    root: str = "data/mnist"
    mirror_url: Optional[str] = None
    sha256: Dict[str, str] = field(default_factory=dict)
    subsample_fraction: float = 0.1
    digits: Tuple[int, int] = (0, 1)
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.subsample_fraction <= 1.0):
            raise InvalidInputError(f"subsample_fraction must lie in (0, 1], got {self.subsample_fraction}")
        a, b = self.digits
        if a == b:
            raise InvalidInputError(f"digits must be distinct, got {self.digits}")
        if not all(0 <= int(x) <= 9 for x in self.digits):
            raise InvalidInputError(f"digits must lie in 0..9, got {self.digits}")
        object.__setattr__(self, "digits", (int(a), int(b)))

    def path(self, key: str) -> Path:
        return Path(self.root) / FILES[key]


def parse_idx(raw: bytes, expect_magic: int) -> np.ndarray:
    """Decode an unsigned-byte IDX payload into an array of its declared shape."""
    if len(raw) < 4:
        raise DataFormatError("IDX file is shorter than its magic number")
    magic = int.from_bytes(raw[:4], "big")
    if magic != expect_magic:
        raise DataFormatError(f"bad IDX magic 0x{magic:08x}, expected 0x{expect_magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise DataFormatError("IDX header is truncated")
    dims = [int.from_bytes(raw[4 + 4 * k: 8 + 4 * k], "big") for k in range(ndim)]
    count = math.prod(dims)
    if len(raw) - header < count:
        raise DataFormatError(f"IDX body is truncated: need {count} bytes, found {len(raw) - header}")
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=header).reshape(dims)


def _read(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except FileNotFoundError:
        raise FileNotFoundError(f"MNIST file not found: {path} (run the fetch-mnist command or set root)") from None


def _binary_split(images: np.ndarray, labels: np.ndarray, digits) -> Dataset:
    if images.shape[0] != labels.shape[0]:
        raise DataFormatError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    pos, neg = digits
    for dgt in digits:
        if not (labels == dgt).any():
            raise DataFormatError(f"digit {dgt} does not occur in the data")
    keep = (labels == pos) | (labels == neg)
    X = images[keep].reshape(int(keep.sum()), -1).astype(np.float64) / 255.0
    y = np.where(labels[keep] == pos, 1.0, -1.0)
    return Dataset(X, y)


def load_mnist(source: MnistSource) -> Tuple[Dataset, Dataset]:
    """(train, test) for the two configured digits; train is subsampled without replacement."""
    split = {}
    for part in ("train", "test"):
        images = parse_idx(_read(source.path(f"{part}_images")), IMAGE_MAGIC)
        labels = parse_idx(_read(source.path(f"{part}_labels")), LABEL_MAGIC)
        if images.ndim != 3 or labels.ndim != 1:
            raise DataFormatError("expected 3-D image and 1-D label arrays")
        split[part] = _binary_split(images, labels, source.digits)
    train = split["train"]
    size = int(math.floor(source.subsample_fraction * train.n))
    if size < train.n:
        if size < 2:
            raise InvalidInputError(f"subsample of {size} points is too small")
        rng = np.random.default_rng(source.seed)
        idx = np.sort(rng.choice(train.n, size=size, replace=False))
        train = train.subset(idx)
    return train, split["test"]


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _download(url: str, timeout: float) -> bytes:
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            return resp.read()
    except (urllib.error.URLError, OSError) as exc:
        raise FetchError(f"could not download {url}: {exc}") from exc


def fetch_mnist(source: MnistSource, timeout: float = 60.0) -> Dict[str, Path]:
    """Download, decompress and verify the four IDX files; no-op when they already verify."""
    if not source.mirror_url:
        raise ConfigError("fetch_mnist needs mirror_url")
    missing = [name for name in FILES.values() if name not in source.sha256]
    if missing:
        raise ConfigError(f"no sha256 digest configured for {', '.join(missing)}")
    for name in FILES.values():
        digest = source.sha256[name]
        if len(digest) != 64 or any(ch not in "0123456789abcdef" for ch in digest):
            raise ConfigError(f"sha256 for {name} must be 64 lowercase hex characters")

    root = Path(source.root)
    root.mkdir(parents=True, exist_ok=True)
    out = {}
    for key, name in FILES.items():
        target = root / name
        expected = source.sha256[name]
        with FileLock(str(target) + ".lock"):
            if target.exists() and _sha256(target) == expected:
                out[key] = target
                continue
            url = source.mirror_url.rstrip("/") + "/" + urllib.parse.quote(name) + ".gz"
            payload = _download(url, timeout)
            try:
                payload = gzip.decompress(payload)
            except (OSError, EOFError) as exc:
                raise DataFormatError(f"{url} is not a valid gzip stream: {exc}") from exc
            got = hashlib.sha256(payload).hexdigest()
            if got != expected:
                raise ChecksumError(f"{name}: sha256 {got} does not match configured {expected}")
            fd, tmp = tempfile.mkstemp(dir=root, prefix=name + ".", suffix=".part")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(payload)
                os.replace(tmp, target)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
        out[key] = target
    return out
