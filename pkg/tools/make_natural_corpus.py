"""Regenerate tests/data/natural/ from scikit-image's bundled sample photos.

Run once from the repository root: ``python tools/make_natural_corpus.py``.
Needs scikit-image and Pillow; the test suite itself only reads the PNGs.
"""
import os
from pathlib import Path

import numpy as np
import skimage.data
import skimage.io
from PIL import Image

HEIGHT, WIDTH = 240, 320
# (sample file, top row, left column)
CROPS = [
    ("astronaut.png", 0, 100), ("astronaut.png", 260, 180),
    ("chelsea.png", 30, 60), ("chelsea.png", 60, 120),
    ("coffee.png", 0, 0), ("coffee.png", 150, 250), ("coffee.png", 100, 120),
    ("rocket.jpg", 0, 0), ("rocket.jpg", 180, 300), ("rocket.jpg", 100, 160),
    ("motorcycle_left.png", 0, 0), ("motorcycle_left.png", 250, 400),
    ("motorcycle_left.png", 200, 150), ("motorcycle_right.png", 100, 300),
    ("retina.jpg", 400, 400), ("retina.jpg", 800, 700),
    ("hubble_deep_field.jpg", 100, 100), ("hubble_deep_field.jpg", 500, 600),
    ("ihc.png", 0, 0), ("ihc.png", 260, 180),
]


def main(out_dir="tests/data/natural"):
    base = os.path.dirname(skimage.data.__file__)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, (name, r, c) in enumerate(CROPS):
        img = skimage.io.imread(os.path.join(base, name))[r:r + HEIGHT, c:c + WIDTH, :3]
        assert img.shape == (HEIGHT, WIDTH, 3), (name, img.shape)
        stem = f"{i:02d}_{name.split('.')[0]}_{r}_{c}"
        Image.fromarray(np.ascontiguousarray(img)).save(out / f"{stem}.png", optimize=True)


if __name__ == "__main__":
    main()
