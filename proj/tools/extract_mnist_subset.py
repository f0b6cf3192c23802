#!/usr/bin/env python3
# Copyright 2026 The fisherprune Authors. All Rights Reserved.
# Licensed under the Apache License, Version 2.0.
"""Writes the 5,000-image MNIST sample shipped with mlxtend as IDX files.

Within each class every fifth image goes to the test split, giving 4,000
training and 1,000 test images. Output is gzipped IDX, readable by the
`fisherprune` CLI and `load_idx`.

    pip download --no-deps mlxtend -d /tmp/wheels
    python3 tools/extract_mnist_subset.py /tmp/wheels/mlxtend-*.whl data/mnist5k
"""
import gzip
import io
import struct
import sys
import zipfile
from pathlib import Path


def read_rows(wheel):
    with zipfile.ZipFile(wheel) as z:
        raw = gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz")).decode()
    for line in io.StringIO(raw):
        vals = [int(float(v)) for v in line.strip().split(",")]
        yield vals[:-1], vals[-1]


def write_idx(out_dir, prefix, rows):
    images = bytearray(struct.pack(">IIII", 2051, len(rows), 28, 28))
    labels = bytearray(struct.pack(">II", 2049, len(rows)))
    for pixels, label in rows:
        images.extend(bytes(pixels))
        labels.append(label)
    # mtime=0 keeps the files byte-reproducible.
    for name, payload in ((f"{prefix}-images-idx3-ubyte.gz", images),
                          (f"{prefix}-labels-idx1-ubyte.gz", labels)):
        with open(out_dir / name, "wb") as f:
            f.write(gzip.compress(bytes(payload), compresslevel=9, mtime=0))


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    out_dir = Path(sys.argv[2])
    out_dir.mkdir(parents=True, exist_ok=True)
    train, test, seen = [], [], {}
    for pixels, label in read_rows(sys.argv[1]):
        assert len(pixels) == 784 and 0 <= label < 10
        k = seen.get(label, 0)
        seen[label] = k + 1
        (test if k % 5 == 4 else train).append((pixels, label))
    write_idx(out_dir, "train", train)
    write_idx(out_dir, "test", test)
    print(f"train {len(train)}  test {len(test)}  -> {out_dir}")


if __name__ == "__main__":
    main()
