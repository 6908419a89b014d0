"""IDX image corpora (MNIST, Fashion-MNIST, EMNIST letters) and seeded splits.

Files are looked up under ``<data_dir>/<dataset>/`` where ``data_dir``
defaults to ``$QINSPIRED_DATA`` or ``./data``. Both raw and ``.gz`` files
are accepted. Nothing is downloaded.
"""
from __future__ import annotations

import gzip
import hashlib
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import FormatError, SizeError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
DATA_ENV = "QINSPIRED_DATA"

# (images, labels) file stems; every pair found is pooled before splitting
SOURCES = {
    "mnist": [
        ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
        ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
    ],
    "fmnist": [
        ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
        ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
    ],
    "letter": [
        ("emnist-letters-train-images-idx3-ubyte", "emnist-letters-train-labels-idx1-ubyte"),
        ("emnist-letters-test-images-idx3-ubyte", "emnist-letters-test-labels-idx1-ubyte"),
    ],
}
LETTER_CLASSES = "ABCDEFGHIJ"


@dataclass
class ImageSet:
    images: np.ndarray  # (N, 28, 28), float64 in [0, 1]
    labels: np.ndarray  # (N,), int64 in 0..9
    provenance: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise SizeError(f"{len(self.images)} images but {len(self.labels)} labels")

    def __len__(self):
        return len(self.labels)


def default_data_dir() -> Path:
    return Path(os.environ.get(DATA_ENV, "data"))


def _open(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def read_idx(path) -> np.ndarray:
    """Parse an IDX file.

    Image files (magic 0x803) come back as float64 arrays scaled to [0, 1];
    label files (magic 0x801) as int64 vectors.
    """
    with _open(path) as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise FormatError(f"{path}: truncated header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic == IMAGE_MAGIC:
        ndim = 3
    elif magic == LABEL_MAGIC:
        ndim = 1
    else:
        raise FormatError(f"{path}: bad magic 0x{magic:08X}")
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise FormatError(f"{path}: truncated header")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    count = int(np.prod(dims))
    payload = raw[header:]
    if len(payload) < count:
        raise FormatError(f"{path}: expected {count} payload bytes, found {len(payload)}")
    data = np.frombuffer(payload, dtype=np.uint8, count=count).reshape(dims)
    if ndim == 1:
        return data.astype(np.int64)
    return data / 255.0


def write_idx(path, array) -> None:
    """Reference writer: uint8 labels (1-D) or images (3-D)."""
    arr = np.asarray(array)
    if arr.ndim == 1:
        magic = LABEL_MAGIC
    elif arr.ndim == 3:
        magic = IMAGE_MAGIC
    else:
        raise ValueError("only 1-D label and 3-D image arrays are supported")
    if arr.dtype != np.uint8:
        if arr.min() < 0 or arr.max() > 255:
            raise ValueError("values must fit in uint8")
        arr = arr.astype(np.uint8)
    blob = struct.pack(">I", magic) + struct.pack(f">{arr.ndim}I", *arr.shape) + arr.tobytes()
    if str(path).endswith(".gz"):
        # no name or timestamp in the header, so equal arrays give equal bytes
        with open(path, "wb") as raw, gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as fh:
            fh.write(blob)
    else:
        with open(path, "wb") as fh:
            fh.write(blob)


def _find(directory: Path, stem: str) -> Optional[Path]:
    for name in (stem, stem + ".gz"):
        if (directory / name).exists():
            return directory / name
    return None


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def load_corpus(dataset: str, data_dir=None) -> ImageSet:
    """All samples of a corpus, pooled across its train/test files."""
    if dataset not in SOURCES:
        raise ValueError(f"unknown dataset {dataset!r}; choose from {', '.join(SOURCES)}")
    directory = Path(data_dir) if data_dir is not None else default_data_dir()
    directory = directory / dataset
    images, labels, provenance = [], [], {"source": dataset}
    for img_stem, lab_stem in SOURCES[dataset]:
        img_path, lab_path = _find(directory, img_stem), _find(directory, lab_stem)
        if img_path is None and lab_path is None:
            continue
        missing = img_stem if img_path is None else lab_stem if lab_path is None else None
        if missing:
            raise FileNotFoundError(str(directory / missing))
        imgs, labs = read_idx(img_path), read_idx(lab_path)
        if len(imgs) != len(labs):
            raise FormatError(f"{img_path.name} and {lab_path.name} disagree on sample count")
        images.append(imgs)
        labels.append(labs)
        provenance[img_path.name] = _digest(img_path)
        provenance[lab_path.name] = _digest(lab_path)
    if not images:
        raise FileNotFoundError(str(directory / SOURCES[dataset][0][0]))
    imgs, labs = np.concatenate(images), np.concatenate(labels)
    if dataset == "letter":
        # EMNIST letters are labelled 1..26 and stored transposed
        keep = (labs >= 1) & (labs <= len(LETTER_CLASSES))
        imgs = np.ascontiguousarray(imgs[keep].transpose(0, 2, 1))
        labs = labs[keep] - 1
    return ImageSet(imgs, labs, provenance)


def load_split(dataset: str, n_train: int, n_test: int, seed: int, data_dir=None) -> Tuple[ImageSet, ImageSet]:
    """Disjoint, seeded train/test subsets drawn from the pooled corpus."""
    if n_train <= 0 or n_test <= 0:
        raise SizeError("n_train and n_test must be positive")
    corpus = load_corpus(dataset, data_dir)
    total = len(corpus)
    if n_train + n_test > total:
        raise SizeError(f"{dataset} has {total} samples, {n_train + n_test} requested")
    order = np.random.default_rng(seed).permutation(total)
    tr, te = order[:n_train], order[n_train : n_train + n_test]
    meta = dict(corpus.provenance, seed=str(seed))
    return (
        ImageSet(corpus.images[tr], corpus.labels[tr], dict(meta, split="train")),
        ImageSet(corpus.images[te], corpus.labels[te], dict(meta, split="test")),
    )
