"""Export immersion meshes and diagnostics for external viewers.

Writes OBJ meshes of the sphere family at two deformation parameters (in the
stereographic chart) and of its flat hyperbolic partner (Klein chart), plus
a CSV with the per-node diagnostics.  Equivalent command lines:

    loopsplit example --name s3-spheres --lambda "exp(i*0.3)" \
        --mesh sphere.obj --diag sphere.csv
    loopsplit immerse --lambda 1.0 --mesh equator.obj

Run:  python demos/06_mesh_export.py [outdir]
"""

import sys
from pathlib import Path

import numpy as np

import loopsplit as ls
from loopsplit.serialize import emit_diagnostics, emit_mesh, immersion_diagnostics_rows

outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(".")
outdir.mkdir(parents=True, exist_ok=True)

s = ls.SymmetrySpec(2, 1, "Rm1")
sphere = ls.GroupSpec("orthogonal", 2, 1)
hyper = ls.GroupSpec("lorentz", 2, 1)
grid = ls.Grid2D.centered(1.2, 25, 0.9, 21)
F = ls.example_sphere_field(grid)

for tag, lam in (("equator", 1.0), ("deformed", np.exp(0.3j))):
    im = ls.extract_immersion(F, lam, sphere)
    path = outdir / f"sphere_{tag}.obj"
    count = emit_mesh(im, path)
    print(f"{path}: {count} vertices, c = {ls.curvature_c(lam, sphere):.4f}")
    cols, rows = immersion_diagnostics_rows(im)
    emit_diagnostics(outdir / f"sphere_{tag}.csv", cols, rows,
                     meta={"lambda": str(lam)})

flat = ls.nonflat_to_flat(F, s)
im = ls.extract_immersion(flat, 2j, hyper)
path = outdir / "flat_partner.obj"
count = emit_mesh(im, path)
print(f"{path}: {count} vertices (Klein chart of H^3)")
