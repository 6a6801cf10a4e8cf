"""Tour of the fixed real-Fourier basis used by the model.

Shows what the basis looks like at small size, checks the algebra that
the projection relies on (orthogonality, energy preservation, exact
inversion), and demonstrates the one deliberate quirk: with raw
(unnormalized) rows the projection distorts angles, which is what lets a
cosine loss in frequency space behave differently from one in feature
space.
"""

import numpy as np

from fourierdg import build_basis, project, reconstruct

print("=== the basis at d=4 ===")
basis = build_basis(4)
print("rows (constant, cos k=1, sin k=1, alternating):")
print(basis.matrix)
print("squared row norms:", basis.norms_sq)

print()
print("=== algebra at d=64 ===")
basis = build_basis(64)
rng = np.random.default_rng(0)
h = rng.standard_normal((4, 64))
z = project(h, basis)

gram = basis.matrix @ basis.matrix.T
off_diag = np.abs(gram - np.diag(np.diag(gram))).max()
print(f"max |<b_r, b_s>| for r != s : {off_diag:.3e}")

energy_h = (h ** 2).sum(axis=1)
energy_z = (z ** 2 / basis.norms_sq).sum(axis=1)
print(f"energy mismatch (weighted Parseval): {np.abs(energy_h - energy_z).max():.3e}")

round_trip = np.abs(reconstruct(z, basis) - h).max()
print(f"reconstruct(project(h)) - h        : {round_trip:.3e}")

print()
print("=== the transform is deliberately not an isometry ===")


def cosine(a, b):
    return a @ b / (np.linalg.norm(a) * np.linalg.norm(b))


h1, h2 = rng.standard_normal(64), rng.standard_normal(64)
raw = basis.matrix
unit = raw / np.linalg.norm(raw, axis=1, keepdims=True)
print(f"feature-space cosine        : {cosine(h1, h2):+.6f}")
print(f"frequency cosine, raw rows  : {cosine(raw @ h1, raw @ h2):+.6f}  (differs)")
print(f"frequency cosine, unit rows : {cosine(unit @ h1, unit @ h2):+.6f}  (agrees)")
