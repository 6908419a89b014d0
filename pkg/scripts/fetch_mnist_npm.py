"""Build IDX files from the MNIST digits bundled in the ``mnist`` npm package.

The npm package (MIT licensed) ships 10,000 MNIST digits as JSON arrays of
pixel intensities divided by 255 and rounded to three decimals, which is
enough resolution to recover the original bytes. Usage::

    python scripts/fetch_mnist_npm.py [--tarball mnist-1.1.0.tgz] [--out data/mnist]

Without ``--tarball`` the script runs ``npm pack mnist@1.1.0`` in a temp dir.
"""
import argparse
import json
import subprocess
import sys
import tarfile
import tempfile
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
from qinspired.datasets import write_idx  # noqa: E402


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tarball", type=Path)
    ap.add_argument("--out", type=Path, default=Path("data/mnist"))
    args = ap.parse_args(argv)
    with tempfile.TemporaryDirectory() as tmp:
        tarball = args.tarball
        if tarball is None:
            subprocess.run(["npm", "pack", "mnist@1.1.0"], cwd=tmp, check=True, stdout=subprocess.DEVNULL)
            tarball = Path(tmp) / "mnist-1.1.0.tgz"
        images, labels = [], []
        with tarfile.open(tarball) as tf:
            for digit in range(10):
                member = tf.extractfile(f"package/src/digits/{digit}.json")
                data = np.asarray(json.load(member)["data"], dtype=float)
                pix = np.rint(data * 255).astype(np.uint8).reshape(-1, 28, 28)
                images.append(pix)
                labels.append(np.full(len(pix), digit, dtype=np.uint8))
    images, labels = np.concatenate(images), np.concatenate(labels)
    args.out.mkdir(parents=True, exist_ok=True)
    write_idx(args.out / "train-images-idx3-ubyte.gz", images)
    write_idx(args.out / "train-labels-idx1-ubyte.gz", labels)
    print(f"wrote {len(labels)} samples to {args.out}")


if __name__ == "__main__":
    main()
