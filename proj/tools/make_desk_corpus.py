#!/usr/bin/env python3
"""Build the desk corpus used by the acceptance suite.

Takes a fixed list of public-domain sample photographs shipped with
scikit-image, matplotlib and scikit-learn, converts them to 8-bit luma,
center-crops to a square and resamples to SIZE x SIZE binary PGM files.
"""
import argparse
import os

import numpy as np
from PIL import Image

SIZE = 512


def sources():
    import matplotlib
    import skimage
    import sklearn

    sk = os.path.join(os.path.dirname(skimage.__file__), "data")
    mpl = os.path.join(os.path.dirname(matplotlib.__file__), "mpl-data", "sample_data")
    skl = os.path.join(os.path.dirname(sklearn.__file__), "datasets", "images")
    return {
        "astronaut": os.path.join(sk, "astronaut.png"),
        "camera": os.path.join(sk, "camera.png"),
        "coffee": os.path.join(sk, "coffee.png"),
        "coins": os.path.join(sk, "coins.png"),
        "motorcycle": os.path.join(sk, "motorcycle_left.png"),
        "ihc": os.path.join(sk, "ihc.png"),
        "hopper": os.path.join(mpl, "grace_hopper.jpg"),
        "china": os.path.join(skl, "china.jpg"),
        "flower": os.path.join(skl, "flower.jpg"),
        "brick": os.path.join(sk, "brick.png"),
        "grass": os.path.join(sk, "grass.png"),
        "page": os.path.join(sk, "page.png"),
    }


def to_gray(img):
    a = np.asarray(img.convert("RGB"), dtype=np.float64)
    return a[..., 0] * 0.299 + a[..., 1] * 0.587 + a[..., 2] * 0.114


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--size", type=int, default=SIZE)
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    for name, path in sorted(sources().items()):
        gray = to_gray(Image.open(path))
        h, w = gray.shape
        side = min(h, w)
        y0, x0 = (h - side) // 2, (w - side) // 2
        crop = Image.fromarray(np.clip(gray[y0:y0 + side, x0:x0 + side] + 0.5, 0, 255).astype(np.uint8))
        crop = crop.resize((args.size, args.size), Image.LANCZOS)
        crop.save(os.path.join(args.out_dir, name + ".pgm"))
        print(name, path)


if __name__ == "__main__":
    main()
