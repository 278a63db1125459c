"""JSON, OBJ and CSV surfaces.

Loops serialize as {n, lo, coeffs} with [re, im] pairs; json round-trips
doubles exactly (repr-based float formatting), so load(save(g)) is
bit-identical.  Meshes go to Wavefront OBJ in a projected chart (stereographic
for the sphere, Klein for hyperbolic targets); diagnostics go to CSV with 17
significant digits and a comment header recording seed and tolerances, so
repeat runs with the same inputs are byte-identical.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ParseError
from .fields import ConnectionForm, FrameField, Grid2D
from .loops import GroupSpec, LaurentLoop
from .spaceforms import ImmersionGrid
from .symmetry import SymmetrySpec


def fmt17(x) -> str:
    return format(float(x), ".17g")


# -- loops ----------------------------------------------------------------


def loop_to_obj(g: LaurentLoop) -> dict:
    coeffs = [[[[float(z.real), float(z.imag)] for z in row] for row in mat]
              for mat in g.coeffs]
    return {"n": g.n, "lo": g.lo, "coeffs": coeffs}


def loop_from_obj(d) -> LaurentLoop:
    try:
        arr = np.asarray(d["coeffs"], dtype=float)
        coeffs = arr[..., 0] + 1j * arr[..., 1]
        return LaurentLoop(int(d["lo"]), coeffs, trim=False)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed loop payload: {exc}") from exc


def save_loop(g: LaurentLoop, path):
    with open(path, "w") as fh:
        json.dump(loop_to_obj(g), fh)


def load_loop(path) -> LaurentLoop:
    with open(path) as fh:
        return loop_from_obj(json.load(fh))


# -- specs ----------------------------------------------------------------


def symmetry_to_obj(s: SymmetrySpec) -> dict:
    return {"n": s.n, "k": s.k, "reality": s.reality, "twists": ["sigma", "tau"]}


def symmetry_from_obj(d) -> SymmetrySpec:
    return SymmetrySpec(int(d["n"]), int(d["k"]), d.get("reality"))


def group_to_obj(g: GroupSpec) -> dict:
    return {"kind": g.kind, "n": g.n_tan, "k": g.k_nor}


def group_from_obj(d) -> GroupSpec:
    return GroupSpec(d["kind"], int(d["n"]), int(d["k"]))


def grid_to_obj(grid: Grid2D) -> dict:
    return {
        "u0": float(grid.us[0]), "v0": float(grid.vs[0]),
        "h_u": grid.h_u, "h_v": grid.h_v,
        "nu": int(grid.us.size), "nv": int(grid.vs.size),
        "base": [int(grid.base[0]), int(grid.base[1])],
    }


def grid_from_obj(d) -> Grid2D:
    return Grid2D.from_spacing(d["u0"], d["h_u"], int(d["nu"]),
                               d["v0"], d["h_v"], int(d["nv"]),
                               base=tuple(d["base"]))


# -- fields ----------------------------------------------------------------


def frame_field_to_obj(F: FrameField) -> dict:
    values = [[loop_to_obj(F.values[i][j]) if F.mask[i, j] else None
               for j in range(F.grid.shape[1])] for i in range(F.grid.shape[0])]
    return {
        "grid": grid_to_obj(F.grid),
        "mask": F.mask.astype(int).tolist(),
        "symmetry": symmetry_to_obj(F.symmetry) if F.symmetry else None,
        "target": group_to_obj(F.target) if F.target else None,
        "values": values,
    }


def frame_field_from_obj(d) -> FrameField:
    grid = grid_from_obj(d["grid"])
    mask = np.asarray(d["mask"], dtype=bool)
    values = [[loop_from_obj(cell) if cell is not None else None
               for cell in row] for row in d["values"]]
    sym = symmetry_from_obj(d["symmetry"]) if d.get("symmetry") else None
    target = group_from_obj(d["target"]) if d.get("target") else None
    return FrameField(grid, values, mask, symmetry=sym, target=target)


def connection_form_to_obj(A: ConnectionForm) -> dict:
    def table(comp):
        return [[loop_to_obj(comp[i][j]) if A.mask[i, j] else None
                 for j in range(A.grid.shape[1])] for i in range(A.grid.shape[0])]

    return {
        "grid": grid_to_obj(A.grid),
        "mask": A.mask.astype(int).tolist(),
        "declared_window": list(A.declared_window) if A.declared_window else None,
        "a_u": table(A.a_u),
        "a_v": table(A.a_v),
    }


def connection_form_from_obj(d) -> ConnectionForm:
    grid = grid_from_obj(d["grid"])
    mask = np.asarray(d["mask"], dtype=bool)

    def table(rows):
        return [[loop_from_obj(cell) if cell is not None else None
                 for cell in row] for row in rows]

    window = tuple(d["declared_window"]) if d.get("declared_window") else None
    return ConnectionForm(grid, table(d["a_u"]), table(d["a_v"]), mask,
                          declared_window=window)


def save_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh)


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


# -- meshes ----------------------------------------------------------------


def project_chart(points, target: GroupSpec):
    """Map ambient quadric points to a 3d chart for viewing.

    Sphere targets in 4 ambient dimensions use stereographic projection from
    the last-coordinate pole; hyperbolic targets use the Klein chart (divide
    by the timelike coordinate).  Other ambient dimensions fall back to the
    first three coordinates.
    """
    pts = np.asarray(points, dtype=float)
    m = pts.shape[-1]
    if m == 4 and target.kind == "orthogonal":
        denom = 1.0 - pts[..., 3]
        small = np.abs(denom) < 1e-12
        denom = np.where(small, np.nan, denom)
        return pts[..., :3] / denom[..., None]
    if target.kind == "lorentz":
        t = pts[..., target.n_tan]
        t = np.where(np.abs(t) < 1e-12, np.nan, t)
        others = [a for a in range(m) if a != target.n_tan]
        return pts[..., others][..., :3] / t[..., None]
    return pts[..., :3]


def emit_mesh(im: ImmersionGrid, path) -> int:
    """Write a Wavefront OBJ of the unmasked immersion patch.

    Vertices are emitted in row-major node order in the projected chart;
    each grid cell with four valid corners contributes two triangles.
    Returns the number of vertices written (0 for a fully masked grid).
    """
    nu, nv = im.grid.shape
    chart = project_chart(im.points, im.target)
    index = -np.ones((nu, nv), dtype=int)
    lines = ["# loopsplit immersion mesh",
             f"# lambda = {fmt17(im.lam.real)} + {fmt17(im.lam.imag)}i",
             f"# target = {im.target.kind}, grid = {nu}x{nv}"]
    count = 0
    for i in range(nu):
        for j in range(nv):
            if not im.mask[i, j] or not np.all(np.isfinite(chart[i, j])):
                continue
            count += 1
            index[i, j] = count
            x, y, z = chart[i, j]
            lines.append(f"v {fmt17(x)} {fmt17(y)} {fmt17(z)}")
    for i in range(nu - 1):
        for j in range(nv - 1):
            c = index[i, j], index[i + 1, j], index[i + 1, j + 1], index[i, j + 1]
            if min(c) < 0:
                continue
            lines.append(f"f {c[0]} {c[1]} {c[2]}")
            lines.append(f"f {c[0]} {c[2]} {c[3]}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return count


# -- diagnostics CSV ---------------------------------------------------------


def emit_diagnostics(path, columns, rows, meta=None):
    """CSV with a '#'-comment header documenting run metadata.

    Floats print with 17 significant digits so the file reproduces the
    in-memory values exactly; rows are written in the order given, making
    repeat runs byte-identical.
    """
    lines = []
    for key, val in (meta or {}).items():
        lines.append(f"# {key} = {val}")
    lines.append(",".join(columns))
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, (float, np.floating)):
                cells.append("nan" if np.isnan(cell) else fmt17(cell))
            elif isinstance(cell, (bool, np.bool_)):
                cells.append("1" if cell else "0")
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def immersion_diagnostics_rows(im: ImmersionGrid, extra=None):
    """Per-node diagnostic rows: indices, coordinates, ambient point,
    residuals, mask flag."""
    cols = ["iu", "iv", "u", "v"]
    cols += [f"x{a}" for a in range(im.dim)]
    cols += ["quadric_residual", "metric_det", "gauss_curvature", "immersive", "mask"]
    if extra:
        cols += list(extra.keys())
    rows = []
    d = im.diagnostics
    for i in range(im.grid.shape[0]):
        for j in range(im.grid.shape[1]):
            row = [i, j, float(im.grid.us[i]), float(im.grid.vs[j])]
            row += [float(x) for x in im.points[i, j]]
            row += [float(d["quadric_residual"][i, j]), float(d["metric_det"][i, j]),
                    float(d["gauss_curvature"][i, j]), bool(d["immersive"][i, j]),
                    bool(im.mask[i, j])]
            if extra:
                row += [extra[key][i, j] for key in extra]
            rows.append(row)
    return cols, rows
