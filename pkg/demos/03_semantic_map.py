"""Reduce a themed corpus to 2D and print it as an ASCII density map.

Three synthetic viewing themes produce three islands on the map; the same
seed always produces the same picture.
"""

import numpy as np

from mirror.embed import LocalDeterministicEmbedder
from mirror.layout import LayoutConfig, compute_semantic_map

themes = {
    "m": "minecraft redstone tutorial episode",
    "p": "piano concerto performance recording",
    "c": "thirty minute pasta dinner recipe",
}
texts, tags = [], []
for tag, theme in themes.items():
    for i in range(40):
        texts.append(f"{theme} {i}")
        tags.append(tag)

provider = LocalDeterministicEmbedder(dimension=64, seed=0)
coords, _ = compute_semantic_map(provider.embed_batch(texts),
                                 LayoutConfig(n_neighbors=10, seed=42))

width, height = 64, 20
x = (coords[:, 0] - coords[:, 0].min()) / np.ptp(coords[:, 0]) * (width - 1)
y = (coords[:, 1] - coords[:, 1].min()) / np.ptp(coords[:, 1]) * (height - 1)
canvas = [[" "] * width for _ in range(height)]
for cx, cy, tag in zip(x.astype(int), y.astype(int), tags):
    canvas[cy][cx] = tag

print("m = minecraft, p = piano, c = cooking\n")
for row in canvas:
    print("".join(row))
