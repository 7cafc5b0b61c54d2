#!/usr/bin/env python3
"""Write the 5,000-digit MNIST subset shipped with mlxtend as gzip IDX files.

Usage: make_mnist_subset.py <mlxtend wheel or mnist_5k.csv.gz> <out_dir>

Each CSV row holds 784 pixel bytes followed by the label. The output is
mnist5k-images-idx3-ubyte.gz and mnist5k-labels-idx1-ubyte.gz.
"""
import gzip
import os
import struct
import sys
import zipfile

CSV_IN_WHEEL = "mlxtend/data/data/mnist_5k.csv.gz"


def read_rows(src):
    if src.endswith(".whl"):
        with zipfile.ZipFile(src) as z:
            blob = z.read(CSV_IN_WHEEL)
    else:
        with open(src, "rb") as f:
            blob = f.read()
    text = gzip.decompress(blob).decode()
    return [[int(float(v)) for v in line.split(",")] for line in text.splitlines() if line]


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    rows = read_rows(sys.argv[1])
    out = sys.argv[2]
    os.makedirs(out, exist_ok=True)
    images = bytearray(struct.pack(">IIII", 2051, len(rows), 28, 28))
    labels = bytearray(struct.pack(">II", 2049, len(rows)))
    for r in rows:
        assert len(r) == 785
        images += bytes(r[:784])
        labels.append(r[784])
    # mtime=0 keeps the archives byte-stable
    for name, payload in (("mnist5k-images-idx3-ubyte.gz", images),
                          ("mnist5k-labels-idx1-ubyte.gz", labels)):
        with open(os.path.join(out, name), "wb") as f:
            f.write(gzip.compress(bytes(payload), mtime=0))
    print(f"wrote {len(rows)} examples to {out}")


if __name__ == "__main__":
    main()
