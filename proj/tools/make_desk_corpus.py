#!/usr/bin/env python3
"""Cut the bundled scikit-image / scikit-learn sample photographs into
128x128 well-exposed tiles for desk-scale training and held-out evaluation.

Usage: make_desk_corpus.py OUTPUT_DIR
Writes OUTPUT_DIR/train/*.png and OUTPUT_DIR/heldout/*.png.
"""
import os
import sys

import numpy as np
from skimage import data, io
from sklearn.datasets import load_sample_image

TILE = 128
PER_SOURCE = 6

TRAIN = {
    "astronaut": lambda: data.astronaut(),
    "coffee": lambda: data.coffee(),
    "motorcycle": lambda: data.stereo_motorcycle()[0],
    "rocket": lambda: data.rocket(),
    "china": lambda: load_sample_image("china.jpg"),
    "ihc": lambda: data.immunohistochemistry(),
    "camera": lambda: data.camera(),
    "brick": lambda: data.brick(),
    "grass": lambda: data.grass(),
    "gravel": lambda: data.gravel(),
    "moon": lambda: data.moon(),
    "coins": lambda: data.coins(),
}

HELDOUT = {
    "chelsea": lambda: data.chelsea(),
    "flower": lambda: load_sample_image("flower.jpg"),
    "clock": lambda: data.clock(),
}


def to_rgb(img):
    img = np.asarray(img)
    if img.ndim == 2:
        img = np.stack([img] * 3, axis=-1)
    return img[..., :3].astype(np.uint8)


def tiles(img):
    h, w, _ = img.shape
    for y in range(0, h - TILE + 1, TILE):
        for x in range(0, w - TILE + 1, TILE):
            t = img[y:y + TILE, x:x + TILE]
            f = t.astype(np.float64) / 255.0
            if 0.2 <= f.mean() <= 0.75 and f.std() >= 0.06:
                yield y, x, t


def export(sources, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    count = 0
    for name, load in sources.items():
        found = list(tiles(to_rgb(load())))
        step = max(1, len(found) // PER_SOURCE)
        for y, x, t in found[::step][:PER_SOURCE]:
            io.imsave(os.path.join(out_dir, f"{name}_{y:04d}_{x:04d}.png"), t,
                      check_contrast=False)
            count += 1
    return count


def main():
    if len(sys.argv) != 2:
        print(__doc__)
        return 2
    root = sys.argv[1]
    n_train = export(TRAIN, os.path.join(root, "train"))
    n_held = export(HELDOUT, os.path.join(root, "heldout"))
    print(f"train tiles: {n_train}, held-out tiles: {n_held}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
