"""The six-row correspondence between non-flat and flat immersions.

Every constant-curvature immersion with flat normal bundle into S^3 or H^3
pairs off with a flat one; which target the flat partner lives in depends
only on the curvature interval.  This script builds one instance per row,
measures its curvature with the intrinsic (Brioschi) estimator, routes it
through the splitting pipeline, and prints the observed row of the table.

Run:  python demos/05_correspondence_table.py
"""

import numpy as np

import loopsplit as ls
from loopsplit.generators import rng_for, table_instance

rng = rng_for(3)
grid = ls.Grid2D.centered(0.3, 7, 0.3, 7)
locus_lambda = {"R1": 2j, "R2": 0.5, "Rm1": np.exp(1j * np.pi / 6)}

rows = [("orthogonal", "R1"), ("orthogonal", "R2"), ("orthogonal", "Rm1"),
        ("lorentz", "Rm1"), ("lorentz", "R2"), ("lorentz", "R1")]

print(f"{'input target':>14} {'reality':>8} {'measured c':>12} "
      f"{'interval':>18} {'flat target':>12}")
for target_kind, reality in rows:
    s = ls.SymmetrySpec(2, 1, reality)
    F = table_instance(rng, target_kind, reality, grid)
    target = ls.GroupSpec(target_kind, 2, 1)
    lam = locus_lambda[reality]
    im = ls.extract_immersion(F, lam, target, real_tol=1e-6)
    c = float(np.nanmedian(im.diagnostics["gauss_curvature"]))
    interval = ls.classify_curvature(c, target_kind)
    flat = ls.nonflat_to_flat(F, s)
    print(f"{target_kind:>14} {reality:>8} {c:>12.4f} "
          f"{str(interval):>18} {flat.target.kind:>12}")

print("\nexpected routing:")
for target_kind, reality in rows:
    flat_kind, interval = ls.correspondence_route(target_kind, reality)
    print(f"  {target_kind}/{reality}: c in {interval} <-> flat {flat_kind}")
