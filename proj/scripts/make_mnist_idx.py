#!/usr/bin/env python3
"""Build the data/mnist IDX files from the `mnist` npm package payload.

The npm package (https://www.npmjs.com/package/mnist) ships 10,000 real
MNIST digits as per-class JSON arrays with pixels stored as round(u8/255, 3).
That rounding is injective, so the original u8 pixels are recovered exactly.

Usage:
    npm pack mnist && tar xzf mnist-1.1.0.tgz
    python3 scripts/make_mnist_idx.py package/src/digits data/mnist
"""
import json
import os
import struct
import sys


def write_idx_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main(src_dir, out_dir):
    per_class = []
    for d in range(10):
        with open(os.path.join(src_dir, f"{d}.json")) as f:
            flat = json.load(f)["data"]
        assert len(flat) % 784 == 0
        imgs = []
        for i in range(0, len(flat), 784):
            px = [round(v * 255) for v in flat[i:i + 784]]
            assert all(0 <= p <= 255 for p in px)
            imgs.append(px)
        per_class.append(imgs)

    train, test = [], []
    for d, imgs in enumerate(per_class):
        cut = (len(imgs) * 9) // 10
        train += [(img, d) for img in imgs[:cut]]
        test += [(img, d) for img in imgs[cut:]]

    # Round-robin interleave by class so neither file is sorted by label.
    def interleave(pairs):
        byc = [[p for p in pairs if p[1] == d] for d in range(10)]
        out = []
        i = 0
        while any(byc):
            for d in range(10):
                if i < len(byc[d]):
                    out.append(byc[d][i])
            i += 1
            if all(i >= len(b) for b in byc):
                break
        return out

    train = interleave(train)
    test = interleave(test)

    os.makedirs(out_dir, exist_ok=True)
    write_idx_images(os.path.join(out_dir, "train-images-idx3-ubyte"), [p[0] for p in train])
    write_idx_labels(os.path.join(out_dir, "train-labels-idx1-ubyte"), [p[1] for p in train])
    write_idx_images(os.path.join(out_dir, "t10k-images-idx3-ubyte"), [p[0] for p in test])
    write_idx_labels(os.path.join(out_dir, "t10k-labels-idx1-ubyte"), [p[1] for p in test])
    print(f"train={len(train)} test={len(test)} -> {out_dir}")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
