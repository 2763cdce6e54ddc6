#!/usr/bin/env python3
"""Build a small deterministic digit-recognition dataset in IDX format.

Derives 28x28 grayscale digit images from scikit-learn's bundled 8x8 digits
(nearest-neighbour upscale + sub-pixel jitter + noise) so the test suite has a
self-contained MNIST-format stand-in that needs no network access.

Outputs into the given directory:
  train-images.idx / train-labels.idx   2500 images
  test-images.idx  / test-labels.idx    1000 images
Train and test are augmented from disjoint base images.
"""

import argparse
import os
import struct

import numpy as np
from sklearn.datasets import load_digits

SIDE = 28
SEED = 12345
N_TRAIN = 2500
N_TEST = 1000


def upscale(img8, rng):
    """8x8 -> 28x28 nearest neighbour with +-1px jitter and mild noise."""
    scale = SIDE / 8.0
    dy, dx = rng.uniform(-1.0, 1.0, size=2)
    ys = np.clip(((np.arange(SIDE) + 0.5 + dy) / scale - 0.5).round(), 0, 7).astype(int)
    xs = np.clip(((np.arange(SIDE) + 0.5 + dx) / scale - 0.5).round(), 0, 7).astype(int)
    out = img8[np.ix_(ys, xs)] * (255.0 / 16.0)
    out += rng.normal(0.0, 8.0, size=out.shape)
    return np.clip(out, 0, 255).astype(np.uint8)


def augment(images, labels, n, rng):
    order = rng.permutation(len(images))
    xs = np.empty((n, SIDE, SIDE), dtype=np.uint8)
    ys = np.empty(n, dtype=np.uint8)
    for i in range(n):
        j = order[i % len(order)]
        xs[i] = upscale(images[j], rng)
        ys[i] = labels[j]
    perm = rng.permutation(n)
    return xs[perm], ys[perm]


def write_idx(path_images, path_labels, xs, ys):
    with open(path_images, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(xs), SIDE, SIDE))
        f.write(xs.tobytes())
    with open(path_labels, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(ys)))
        f.write(ys.tobytes())


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir")
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)

    digits = load_digits()
    images = digits.images.astype(np.float64)
    labels = digits.target.astype(np.uint8)

    # disjoint base images for train and test, stratified by interleaving
    rng = np.random.default_rng(SEED)
    order = rng.permutation(len(images))
    cut = int(len(order) * 0.8)
    tr, te = order[:cut], order[cut:]

    xs, ys = augment(images[tr], labels[tr], N_TRAIN, rng)
    write_idx(os.path.join(args.out_dir, "train-images.idx"),
              os.path.join(args.out_dir, "train-labels.idx"), xs, ys)
    xs, ys = augment(images[te], labels[te], N_TEST, rng)
    write_idx(os.path.join(args.out_dir, "test-images.idx"),
              os.path.join(args.out_dir, "test-labels.idx"), xs, ys)
    print(f"wrote {N_TRAIN} train / {N_TEST} test images to {args.out_dir}")


if __name__ == "__main__":
    main()
