"""The four regularization-weight designs and the geometry behind the
quasi-spherical one.

Run:  python3 demos/weight_designs.py
"""

import numpy as np

from slopepath import (
    bh_sequence,
    contour_extremes,
    emit_contour,
    emit_sphericity_curve,
    gaussian_sequence,
    oscar_sequence,
    qs_sequence,
    sphericity_ratio,
)

p, n = 8, 100
print(f"ascending weight sequences at p={p}:")
rows = {
    "bh(q=0.1)": bh_sequence(p, 0.1),
    "gauss(q=0.1)": gaussian_sequence(p, n, 0.1),
    "oscar(q=1)": oscar_sequence(p, 1.0),
    "qs": qs_sequence(p),
}
for name, lam in rows.items():
    print(f"  {name:<13}" + " ".join(f"{v:7.3f}" for v in lam))

print("\ncontour geometry: max/min of the penalty on the unit sphere")
print(f"  {'design':<13}{'max':>9}{'min':>9}{'ratio':>9}")
for name, lam in rows.items():
    mx, mn = contour_extremes(lam, r=1.0)
    print(f"  {name:<13}{mx:9.4f}{mn:9.4f}{mx / mn:9.4f}")
print(f"  sphericity floor rho_{p} = {sphericity_ratio(p):.4f}"
      " (attained exactly by qs)")

print("\nthe qs contour restricted to a plane is a regular octagon:")
pts = emit_contour(qs_sequence(p), n_angles=8)
for (x, y) in pts:
    print(f"  vertex ({x:+.4f}, {y:+.4f})  |.| = {np.hypot(x, y):.6f}")

print("\nthe affine (oscar) octagon flattens as p grows; qs does not:")
for pp in (2, 10, 100):
    oscar_pts = emit_contour(oscar_sequence(pp, 1.0) / (pp), n_angles=8)
    diag = oscar_pts[1]
    print(f"  p={pp:>3}: oscar 45-degree vertex radius "
          f"{np.hypot(*diag):.4f}, qs vertex radius 1.0000")

print("\nhow non-spherical can the qs contour get? slowly growing:")
curve = emit_sphericity_curve(10000)
for target in (1, 10, 100, 1000, 10000):
    row = curve[curve[:, 0] == target]
    if row.size:
        print(f"  p={target:>6}: rho = {row[0, 1]:.4f}")
