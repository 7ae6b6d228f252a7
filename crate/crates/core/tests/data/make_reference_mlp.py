"""Writes reference_mlp.bin (3->8->8->1, tanh, no latent) and prints oracle
occupancies computed with plain numpy matrix arithmetic."""
import struct
import numpy as np

rng = np.random.default_rng(20240607)
dims = [3, 8, 8, 1]
acts = [1, 1, 2]  # tanh, tanh, identity
layers = []
for i in range(3):
    w = rng.normal(0.0, 1.0 / np.sqrt(dims[i]), size=(dims[i + 1], dims[i])).astype(np.float32)
    b = rng.normal(0.0, 0.1, size=(dims[i + 1],)).astype(np.float32)
    layers.append((w, b, acts[i]))

with open("reference_mlp.bin", "wb") as f:
    f.write(b"OCCMLP1\0")
    f.write(struct.pack("<II", 0, len(layers)))
    for w, b, a in layers:
        f.write(struct.pack("<IIB", w.shape[0], w.shape[1], a))
        f.write(w.astype("<f4").tobytes())
        f.write(b.astype("<f4").tobytes())


def forward(x):
    h = np.asarray(x, dtype=np.float64)
    for w, b, a in layers:
        h = w.astype(np.float64) @ h + b.astype(np.float64)
        if a == 0:
            h = np.maximum(h, 0.0)
        elif a == 1:
            h = np.tanh(h)
    p = 1.0 / (1.0 + np.exp(-h[0]))
    return min(max(p, 1e-7), 1 - 1e-7)


for probe in [(0.0, 0.0, 0.0), (0.3, -0.2, 0.5), (-0.7, 0.1, 0.25)]:
    print(probe, repr(forward(probe)))
