#!/usr/bin/env python3
"""Download the four MNIST IDX files into a directory.

The files come from the ``MNIST-dir`` package on PyPI, whose wheel ships
them uncompressed. Usage: ``python3 scripts/fetch_mnist.py DEST``.
"""
import hashlib
import io
import json
import sys
import urllib.request
import zipfile
from pathlib import Path

INDEX = "https://pypi.org/pypi/MNIST-dir/0.2.0/json"
NAMES = (
    "train-images.idx3-ubyte",
    "train-labels.idx1-ubyte",
    "t10k-images.idx3-ubyte",
    "t10k-labels.idx1-ubyte",
)


def main(dest: str) -> None:
    out = Path(dest)
    out.mkdir(parents=True, exist_ok=True)
    with urllib.request.urlopen(INDEX) as r:
        meta = json.load(r)
    wheel = next(u for u in meta["urls"] if u["filename"].endswith(".whl"))
    with urllib.request.urlopen(wheel["url"]) as r:
        blob = r.read()
    if hashlib.sha256(blob).hexdigest() != wheel["digests"]["sha256"]:
        sys.exit("checksum mismatch on the downloaded wheel")
    with zipfile.ZipFile(io.BytesIO(blob)) as zf:
        for member in zf.namelist():
            name = member.rsplit("/", 1)[-1]
            if name in NAMES:
                (out / name).write_bytes(zf.read(member))
                print(out / name)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/mnist")
