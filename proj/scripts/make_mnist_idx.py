#!/usr/bin/env python3
"""Regenerate data/mnist/*.idx from the npm `mnist` package (MIT, cazala/mnist).

The package ships 10,000 MNIST digits as JSON, one file per digit class, each
pixel stored as round(k/255, 3).  Because the rounding error is at most
0.0005 * 255 = 0.1275 < 0.5, round(v * 255) recovers the original byte
exactly, so the IDX files produced here are pixel-exact MNIST images.

Usage:
    npm pack mnist@1.1.0 && tar xf mnist-1.1.0.tgz
    python3 scripts/make_mnist_idx.py package/src/digits data/mnist
"""
import json
import os
import struct
import sys
from collections import deque


def main(digits_dir: str, out_dir: str) -> None:
    queues = {}
    for d in range(10):
        with open(os.path.join(digits_dir, f"{d}.json")) as f:
            data = json.load(f)["data"]
        n = len(data) // 784
        q = deque()
        for i in range(n):
            q.append(bytes(round(v * 255) for v in data[i * 784 : (i + 1) * 784]))
        queues[d] = q

    # Round-robin interleave so the file is not sorted by class; order within
    # each digit is preserved from the package.  Fully deterministic.
    out = []
    while any(queues.values()):
        for d in range(10):
            if queues[d]:
                out.append((d, queues[d].popleft()))

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "mnist-10k-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(out), 28, 28))
        for _, px in out:
            f.write(px)
    with open(os.path.join(out_dir, "mnist-10k-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x801, len(out)))
        f.write(bytes(lab for lab, _ in out))
    print(f"wrote {len(out)} images to {out_dir}")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
