#!/usr/bin/env python3
"""Build the 1000-sample MNIST IDX subset shipped in tests/data.

Source: the `mnist` npm package (MIT), which bundles MNIST digits as JSON
arrays of 784 pixel intensities normalized to [0, 1] with three decimals.
Usage: npm pack mnist && tar xzf mnist-*.tgz
       python3 tools/make_mnist_subset.py package/src/digits tests/data
"""
import json
import struct
import sys
from pathlib import Path

PER_DIGIT = 100
PIXELS = 28 * 28


def main(digits_dir: Path, out_dir: Path) -> None:
    per_digit = []
    for d in range(10):
        raw = json.loads((digits_dir / f"{d}.json").read_text())["data"]
        count = len(raw) // PIXELS
        if count < PER_DIGIT:
            raise SystemExit(f"digit {d}: only {count} samples")
        per_digit.append([raw[i * PIXELS:(i + 1) * PIXELS] for i in range(PER_DIGIT)])

    images = bytearray()
    labels = bytearray()
    # interleave digits so any prefix is class balanced
    for i in range(PER_DIGIT):
        for d in range(10):
            images += bytes(min(255, max(0, round(v * 255))) for v in per_digit[d][i])
            labels.append(d)

    n = 10 * PER_DIGIT
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "mnist1k-images-idx3-ubyte").write_bytes(
        struct.pack(">IIII", 0x803, n, 28, 28) + bytes(images))
    (out_dir / "mnist1k-labels-idx1-ubyte").write_bytes(
        struct.pack(">II", 0x801, n) + bytes(labels))


if __name__ == "__main__":
    main(Path(sys.argv[1]), Path(sys.argv[2]))
