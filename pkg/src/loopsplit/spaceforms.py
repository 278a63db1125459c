"""Constant-curvature immersions of space forms into spheres and hyperbolic
spaces via the loop-group splitting machinery.

An order (1,1) field integrates a flat immersion; an order (-1,1) field fixed
by the second-kind involution integrates a non-flat one, with curvature
c = 4/(lambda + 1/lambda)^2 into the sphere and its negative into hyperbolic
space.  The two are exchanged by splitting (non-flat -> flat) and tau-merging
(flat -> non-flat); for the circle reality condition the flat partner lives
in the opposite target, reached by conjugating with T = diag(i I_n, 1, i I_k).

Correspondence table (input c-interval, input target) <-> (flat, target):

    (-inf, 0)  sphere      <->  flat sphere          reality R1
    (0, 1)     sphere      <->  flat sphere          reality R2
    (1, inf)   sphere      <->  flat hyperbolic      reality Rm1
    (-inf,-1)  hyperbolic  <->  flat sphere          reality Rm1
    (-1, 0)    hyperbolic  <->  flat hyperbolic      reality R2
    (0, inf)   hyperbolic  <->  flat hyperbolic      reality R1
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DegenerateLambda,
    DimensionMismatch,
    IntegrabilityViolation,
    NonRealFrame,
    ZeroLambda,
)
from .fields import (
    ConnectionForm,
    FrameField,
    Grid2D,
    fd_mc_tolerance,
    maurer_cartan,
    mc_residual,
    split,
    tau_merge,
)
from .loops import GroupSpec, LaurentLoop, from_terms
from .symmetry import SymmetrySpec, phi_map

CONNECTION_KINDS = ("A1", "A2", "B1", "B2", "Bm1")

# unit factors multiplying the real (theta, beta) data in the assembled form;
# they enforce the reality condition of each kind coefficientwise
_UNIT_FACTORS = {"A1": (1j, 1j), "A2": (1.0, 1.0),
                 "B1": (1j, 1j), "B2": (1.0, 1.0), "Bm1": (1.0, 1j)}

_KIND_REALITY = {"A1": "R1", "A2": "R2", "B1": "R1", "B2": "R2", "Bm1": "Rm1"}

# (target kind, reality) -> (flat target kind, input curvature interval)
_ROUTE = {
    ("orthogonal", "R1"): ("orthogonal", (-np.inf, 0.0)),
    ("orthogonal", "R2"): ("orthogonal", (0.0, 1.0)),
    ("orthogonal", "Rm1"): ("lorentz", (1.0, np.inf)),
    ("lorentz", "Rm1"): ("orthogonal", (-np.inf, -1.0)),
    ("lorentz", "R2"): ("lorentz", (-1.0, 0.0)),
    ("lorentz", "R1"): ("lorentz", (0.0, np.inf)),
}


def curvature_c(lam, target: GroupSpec):
    """Sectional curvature 4/(lambda + 1/lambda)^2, negated for Lorentz targets."""
    lam = complex(lam)
    if lam == 0:
        raise ZeroLambda("curvature undefined at lambda = 0")
    s = lam + 1.0 / lam
    if abs(s) < 1e-8:
        raise DegenerateLambda("lambda + 1/lambda vanishes (lambda near +-i)")
    c = 4.0 / (s * s)
    if target.kind == "lorentz":
        c = -c
    if abs(c.imag) <= 1e-12 * max(1.0, abs(c)):
        return float(c.real)
    return c


def correspondence_route(target_kind, reality):
    """(flat target kind, input c-interval) for a non-flat (target, reality) pair."""
    try:
        return _ROUTE[(target_kind, reality)]
    except KeyError:
        raise ValueError(f"no correspondence for ({target_kind!r}, {reality!r})")


def curvature_interval(target_kind, reality):
    return correspondence_route(target_kind, reality)[1]


def classify_curvature(c, target_kind, boundary_tol=1e-6):
    """Name the interval of a measured curvature; None on a boundary value."""
    cuts = (0.0, 1.0) if target_kind == "orthogonal" else (-1.0, 0.0)
    if min(abs(c - cut) for cut in cuts) <= boundary_tol:
        return None
    if target_kind == "orthogonal":
        if c < 0.0:
            return (-np.inf, 0.0)
        return (0.0, 1.0) if c < 1.0 else (1.0, np.inf)
    if c < -1.0:
        return (-np.inf, -1.0)
    return (-1.0, 0.0) if c < 0.0 else (0.0, np.inf)


# -- extended connections -------------------------------------------------------


@dataclass
class ExtendedConnectionSpec:
    """Grid-sampled data of a type A / type B extended connection.

    Component arrays are real, indexed [i, j, direction, ...] with direction
    0 for du and 1 for dv: omega (n x n, antisymmetric), theta (n-vector),
    beta (n x k), eta ((k+1) x (k+1), antisymmetric, first row and column
    zero).  Type A uses theta and beta as the two column groups of the
    lambda-linear block and requires omega = eta = 0.
    """

    kind: str
    n: int
    k: int
    grid: Grid2D
    target: GroupSpec
    omega: Optional[np.ndarray] = None
    theta: Optional[np.ndarray] = None
    beta: Optional[np.ndarray] = None
    eta: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in CONNECTION_KINDS:
            raise ValueError(f"unknown connection kind {self.kind!r}")
        nu, nv = self.grid.shape
        n, k = self.n, self.k
        shapes = {
            "omega": (nu, nv, 2, n, n),
            "theta": (nu, nv, 2, n),
            "beta": (nu, nv, 2, n, k),
            "eta": (nu, nv, 2, k + 1, k + 1),
        }
        for name, shape in shapes.items():
            arr = getattr(self, name)
            if arr is None:
                arr = np.zeros(shape)
            else:
                arr = np.asarray(arr, dtype=float)
                if arr.shape != shape:
                    raise DimensionMismatch(f"{name} has shape {arr.shape}, expected {shape}")
            setattr(self, name, arr)

    @property
    def dim(self):
        return self.n + self.k + 1

    @property
    def reality(self):
        return _KIND_REALITY[self.kind]

    @property
    def symmetry(self):
        return SymmetrySpec(self.n, self.k, self.reality)


def _node_loop(spec: ExtendedConnectionSpec, i, j, d) -> LaurentLoop:
    n, k, m = spec.n, spec.k, spec.dim
    s_theta, s_beta = _UNIT_FACTORS[spec.kind]
    lorentz = spec.target.kind == "lorentz"
    theta = s_theta * spec.theta[i, j, d]
    beta = s_beta * spec.beta[i, j, d]
    deg0 = np.zeros((m, m), dtype=complex)
    deg0[:n, :n] = spec.omega[i, j, d]
    deg0[n:, n:] = spec.eta[i, j, d]
    top = np.zeros((m, m), dtype=complex)
    top[:n, n] = theta
    top[n, :n] = theta if lorentz else -theta
    top[:n, n + 1 :] = beta
    top[n + 1 :, :n] = -beta.T
    if spec.kind.startswith("A"):
        return from_terms({0: deg0, 1: top}, n=m)
    # type B: the f-column carries (lambda + 1/lambda), the beta block
    # (lambda - 1/lambda)
    bottom = np.array(top)
    bottom[:n, n + 1 :] = -beta
    bottom[n + 1 :, :n] = beta.T
    return from_terms({-1: bottom, 0: deg0, 1: top}, n=m)


def assemble_connection(spec: ExtendedConnectionSpec, check=True,
                        tol_mc=None) -> ConnectionForm:
    """Build the Laurent-graded connection form of an extended-connection spec.

    The structure equations (flatness of omega or the 4 theta theta^T
    curvature identity, flat normal bundle, and the closure of the
    lambda-graded blocks) are all equivalent to graded flatness of the
    assembled form, so with check=True the grade-resolved flatness residual
    is measured and an IntegrabilityViolation carries the failing degrees.
    """
    if spec.kind.startswith("A"):
        for name in ("omega", "eta"):
            if np.max(np.abs(getattr(spec, name))) > 0.0:
                raise IntegrabilityViolation(f"type A connections require {name} = 0")
    if np.max(np.abs(spec.eta[:, :, :, 0, :])) > 0.0 or \
       np.max(np.abs(spec.eta[:, :, :, :, 0])) > 0.0:
        raise IntegrabilityViolation("first row and column of eta must vanish")
    grid = spec.grid
    a_u = [[_node_loop(spec, i, j, 0) for j in range(grid.shape[1])]
           for i in range(grid.shape[0])]
    a_v = [[_node_loop(spec, i, j, 1) for j in range(grid.shape[1])]
           for i in range(grid.shape[0])]
    window = (1, 1) if spec.kind.startswith("A") else (-1, 1)
    form = ConnectionForm(grid, a_u, a_v, declared_window=window)
    if check and min(grid.shape) >= 3:
        if tol_mc is None:
            tol_mc = fd_mc_tolerance(form)
        worst, grades = mc_residual(form, per_degree=True)
        if worst > tol_mc:
            bad = {d: g for d, g in grades.items() if g > tol_mc}
            raise IntegrabilityViolation(
                f"structure equations fail at degrees {sorted(bad)} "
                f"(max residual {worst:.3e})", grades)
    return form


# -- immersion extraction --------------------------------------------------------


@dataclass
class ImmersionGrid:
    """Sampled map into the quadric, with induced-geometry diagnostics."""

    grid: Grid2D
    points: np.ndarray           # (nu, nv, dim) real ambient coordinates
    lam: complex
    target: GroupSpec
    mask: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.points.shape[2]

    def base_point(self):
        bi, bj = self.grid.base
        return self.points[bi, bj]


def _central_grid_derivative(arr, h, axis):
    """O(h^2) derivative of a sampled scalar/vector grid; NaN at the edges."""
    out = np.full_like(arr, np.nan)
    sl = [slice(None)] * arr.ndim
    hi = [slice(None)] * arr.ndim
    lo = [slice(None)] * arr.ndim
    sl[axis] = slice(1, -1)
    hi[axis] = slice(2, None)
    lo[axis] = slice(None, -2)
    out[tuple(sl)] = (arr[tuple(hi)] - arr[tuple(lo)]) / (2.0 * h)
    return out


def _edge_aware_derivative(arr, h, axis):
    """O(h^2) derivative, one-sided at the boundary nodes."""
    out = _central_grid_derivative(arr, h, axis)
    n = arr.shape[axis]
    if n < 3:
        return out

    def take(i):
        sl = [slice(None)] * arr.ndim
        sl[axis] = i
        return arr[tuple(sl)]

    def put(i, val):
        sl = [slice(None)] * arr.ndim
        sl[axis] = i
        out[tuple(sl)] = val

    put(0, (-1.5 * take(0) + 2.0 * take(1) - 0.5 * take(2)) / h)
    put(n - 1, (1.5 * take(n - 1) - 2.0 * take(n - 2) + 0.5 * take(n - 3)) / h)
    return out


def gauss_curvature_brioschi(points, grid: Grid2D, form):
    """Intrinsic curvature of a sampled surface patch from its first
    fundamental form (finite differences + the Brioschi determinant formula).

    Returns (K, metric_det); K is NaN where second differences are not
    available.  Works for 2-parameter patches in any ambient dimension, with
    the ambient inner product given by the diagonal form matrix.
    """
    h_u, h_v = grid.h_u, grid.h_v
    fu = _edge_aware_derivative(points, h_u, 0)
    fv = _edge_aware_derivative(points, h_v, 1)
    w = np.diag(form)

    def dot(a, b):
        return np.einsum("ijk,k,ijk->ij", a, w, b)

    E, F, G = dot(fu, fu), dot(fu, fv), dot(fv, fv)
    det = E * G - F * F
    E_u = _central_grid_derivative(E, h_u, 0)
    E_v = _central_grid_derivative(E, h_v, 1)
    G_u = _central_grid_derivative(G, h_u, 0)
    G_v = _central_grid_derivative(G, h_v, 1)
    F_u = _central_grid_derivative(F, h_u, 0)
    F_v = _central_grid_derivative(F, h_v, 1)
    E_vv = _central_grid_derivative(E_v, h_v, 1)
    G_uu = _central_grid_derivative(G_u, h_u, 0)
    F_uv = _central_grid_derivative(F_u, h_v, 1)

    m1 = np.stack([
        np.stack([-0.5 * E_vv + F_uv - 0.5 * G_uu, 0.5 * E_u, F_u - 0.5 * E_v], -1),
        np.stack([F_v - 0.5 * G_u, E, F], -1),
        np.stack([0.5 * G_v, F, G], -1),
    ], -2)
    m2 = np.stack([
        np.stack([np.zeros_like(E), 0.5 * E_v, 0.5 * G_u], -1),
        np.stack([0.5 * E_v, E, F], -1),
        np.stack([0.5 * G_u, F, G], -1),
    ], -2)
    with np.errstate(invalid="ignore", divide="ignore"):
        K = (np.linalg.det(np.nan_to_num(m1, nan=np.nan))
             - np.linalg.det(np.nan_to_num(m2, nan=np.nan))) / det**2
        K = np.where(np.isfinite(m1).all(axis=(-1, -2)) & (det > 0), K, np.nan)
    return K, det


def extract_immersion(F: FrameField, lam, target: GroupSpec,
                      real_tol=1e-8) -> ImmersionGrid:
    """Evaluate the frame, read off the distinguished column, and report the
    induced geometry.

    The immersion is column n (0-indexed) of the evaluated frame; lam must
    lie on the reality locus of the field's reality condition, otherwise the
    evaluated matrices have imaginary parts above real_tol and NonRealFrame
    is raised.  Diagnostics: induced metric determinant, Gauss curvature
    (2-parameter patches), per-node immersivity flag, and the residual of the
    quadric constraint <f, f> = +-1.
    """
    lam = complex(lam)
    grid = F.grid
    nu, nv = grid.shape
    m = F.dim
    if target.dim != m:
        raise DimensionMismatch(f"target dim {target.dim} vs frame dim {m}")
    n = target.n_tan
    points = np.full((nu, nv, m), np.nan)
    mask = np.zeros((nu, nv), dtype=bool)
    for i, j in grid.nodes():
        if not F.mask[i, j]:
            continue
        M = F.value(i, j).eval(lam)
        scale = max(1.0, float(np.abs(M).max()))
        if np.abs(M.imag).max() > real_tol * scale:
            raise NonRealFrame(
                f"frame at node {(i, j)} has imaginary part "
                f"{np.abs(M.imag).max():.3e}; lambda={lam} off the reality locus")
        points[i, j] = M[:, n].real
        mask[i, j] = True
    form = target.form_matrix
    quad = np.einsum("ijk,k,ijk->ij", points, np.diag(form), points)
    quad_target = 1.0 if target.kind == "orthogonal" else -1.0
    quadric_residual = np.abs(quad - quad_target)
    K, det = gauss_curvature_brioschi(points, grid, form)
    scale_det = np.nanmax(np.abs(det)) if np.any(np.isfinite(det)) else 1.0
    immersive = np.where(np.isfinite(det), det > 1e-8 * max(scale_det, 1e-30), False)
    return ImmersionGrid(
        grid=grid, points=points, lam=lam, target=target, mask=mask,
        diagnostics={
            "metric_det": det,
            "gauss_curvature": K,
            "quadric_residual": quadric_residual,
            "immersive": immersive,
        },
    )


def validate_adapted(F: FrameField, target: GroupSpec, lam, c=None):
    """Per-node adaptedness, curvature-equation, and normal-flatness residuals.

    Adaptedness measures the forbidden first row/column of the normal block
    of the connection coefficients (all degrees); the other two residuals are
    evaluated at lam against the supplied c (default: the target's curvature
    at lam).  Pure diagnostic, never raises on bad geometry.
    """
    lam = complex(lam)
    n = target.n_tan
    grid = F.grid
    A = maurer_cartan(F)
    if c is None:
        try:
            c = curvature_c(lam, target)
        except DegenerateLambda:
            c = np.nan
    nu, nv = grid.shape
    adapted = np.full((nu, nv), np.nan)
    omega = {d: np.full((nu, nv, n, n), np.nan, dtype=complex) for d in (0, 1)}
    theta = {d: np.full((nu, nv, n), np.nan, dtype=complex) for d in (0, 1)}
    eta = {d: np.full((nu, nv, F.dim - n, F.dim - n), np.nan, dtype=complex)
           for d in (0, 1)}
    for i, j in grid.nodes():
        if not A.mask[i, j]:
            continue
        worst = 0.0
        for d, comp in enumerate((A.a_u[i][j], A.a_v[i][j])):
            coeffs = comp.coeffs
            worst = max(worst,
                        float(np.abs(coeffs[:, n, n + 1 :]).max(initial=0.0)),
                        float(np.abs(coeffs[:, n + 1 :, n]).max(initial=0.0)))
            val = comp.eval(lam)
            omega[d][i, j] = val[:n, :n]
            theta[d][i, j] = val[:n, n]
            eta[d][i, j] = val[n:, n:]
        adapted[i, j] = worst

    def two_form_residual(w_u, w_v, rhs):
        d_uv = _central_grid_derivative(w_v, grid.h_u, 0)
        d_vu = _central_grid_derivative(w_u, grid.h_v, 1)
        wedge = np.einsum("ijab,ijbc->ijac", w_u, w_v) - \
            np.einsum("ijab,ijbc->ijac", w_v, w_u)
        r = d_uv - d_vu + wedge - rhs
        return np.abs(r).max(axis=(-1, -2))

    tt = np.einsum("ija,ijb->ijab", theta[0], theta[1]) - \
        np.einsum("ija,ijb->ijab", theta[1], theta[0])
    curvature = two_form_residual(omega[0], omega[1], c * tt)
    zero_eta = np.zeros_like(eta[0][..., :, :])
    normal_flat = two_form_residual(eta[0], eta[1], zero_eta)
    return {
        "adapted": adapted,
        "curvature": curvature,
        "normal_flat": normal_flat,
        "mask": A.mask,
    }


# -- flat <-> non-flat pipelines ---------------------------------------------------


def phi_field(F: FrameField, direction, s: SymmetrySpec) -> FrameField:
    out = F.map_values(lambda g: phi_map(g, direction, s))
    if F.target is not None:
        out.target = F.target.opposite()
    return out


def nonflat_to_flat(F: FrameField, s: SymmetrySpec, N=None):
    """The flat partner of a non-flat extended frame: its (1,1) split part.

    Inputs carrying the circle reality condition get bridged to the opposite
    target (where the split part is a genuine real flat frame, reality R1);
    the other realities keep their target.  Returns a based (1,1) field
    tagged with the flat-side symmetry and target.
    """
    target = F.target if F.target is not None else s.group("orthogonal")
    _, f_plus = split(F, N=N)
    if s.reality == "Rm1":
        direction = ("sphere_to_hyperbolic" if target.kind == "orthogonal"
                     else "hyperbolic_to_sphere")
        f_plus = phi_field(f_plus, direction, s)
        f_plus.symmetry = s.with_reality("R1")
        f_plus.target = target.opposite()
    elif s.reality in ("R1", "R2"):
        f_plus.symmetry = s
        f_plus.target = target
    else:
        raise ValueError(f"unsupported reality {s.reality!r} for the correspondence")
    return f_plus


def flat_to_nonflat(F_plus: FrameField, s: SymmetrySpec, N=None):
    """Rebuild the non-flat frame of the declared (target, reality) class
    from its flat partner; inverse of nonflat_to_flat up to the constant
    gauge freedom of the tau-merge."""
    flat_target = F_plus.target
    if s.reality == "Rm1":
        if flat_target is None:
            raise ValueError("flat field needs a declared target for the bridge")
        direction = ("hyperbolic_to_sphere" if flat_target.kind == "lorentz"
                     else "sphere_to_hyperbolic")
        bridged = phi_field(F_plus, direction, s)
        out = tau_merge(bridged, s.with_reality("Rhat1"), N=N)
        out.symmetry = s
        out.target = flat_target.opposite()
    elif s.reality in ("R1", "R2"):
        out = tau_merge(F_plus, s, N=N)
        out.symmetry = s
        out.target = flat_target
    else:
        raise ValueError(f"unsupported reality {s.reality!r} for the correspondence")
    return out


# -- the closed-form family of curvature c > 1 spheres in S^3 ---------------------


def example_sphere_family(u, v, lam):
    """The 4x4 frame of the isometrically embedded sphere family, evaluated.

    With a = (lam + 1/lam)/2 and b = i (lam - 1/lam)/2, the third column is
    a curvature 4/(lam+1/lam)^2 round sphere in S^3 for lam on the unit
    circle; at lam = 1 it degenerates to the totally geodesic equator.
    """
    lam = complex(lam)
    if lam == 0:
        raise ZeroLambda("frame undefined at lambda = 0")
    a = 0.5 * (lam + 1.0 / lam)
    b = 0.5j * (lam - 1.0 / lam)
    cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
    return np.array([
        [cu, -su * sv, a * su * cv, b * su * cv],
        [0.0, cv, a * sv, b * sv],
        [-a * su, -a * cu * sv, a * a * cu * cv + b * b, a * b * (cu * cv - 1.0)],
        [-b * su, -b * cu * sv, a * b * (cu * cv - 1.0), b * b * cu * cv + a * a],
    ], dtype=complex)


def example_sphere_frame(u, v) -> LaurentLoop:
    """The same frame as an exact degree window [-2, 2] loop."""
    cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
    c0 = np.zeros((4, 4), dtype=complex)
    c0[0, 0] = cu
    c0[0, 1] = -su * sv
    c0[1, 1] = cv
    c0[2, 2] = c0[3, 3] = 0.5 * (cu * cv + 1.0)
    c1 = np.zeros((4, 4), dtype=complex)
    c1[0, 2], c1[0, 3] = 0.5 * su * cv, 0.5j * su * cv
    c1[1, 2], c1[1, 3] = 0.5 * sv, 0.5j * sv
    c1[2, 0], c1[2, 1] = -0.5 * su, -0.5 * cu * sv
    c1[3, 0], c1[3, 1] = -0.5j * su, -0.5j * cu * sv
    w = 0.25 * (cu * cv - 1.0)
    c2 = np.zeros((4, 4), dtype=complex)
    c2[2, 2], c2[3, 3] = w, -w
    c2[2, 3] = c2[3, 2] = 1j * w
    return from_terms({-2: np.conj(c2), -1: np.conj(c1), 0: c0, 1: c1, 2: c2}, n=4)


def example_sphere_field(grid: Grid2D) -> FrameField:
    """The family sampled on a grid (base expected at the origin node)."""
    s = SymmetrySpec(2, 1, "Rm1")
    F = FrameField.from_function(grid, example_sphere_frame, symmetry=s,
                                 target=GroupSpec("orthogonal", 2, 1))
    return F


def example_sphere_connection(grid: Grid2D) -> ExtendedConnectionSpec:
    """The connection data of the family: omega from -sin v du, theta = beta
    = (cos v du, dv)/2, eta = 0 (type Bm1, sphere target)."""
    nu, nv = grid.shape
    omega = np.zeros((nu, nv, 2, 2, 2))
    theta = np.zeros((nu, nv, 2, 2))
    beta = np.zeros((nu, nv, 2, 2, 1))
    for i, u in enumerate(grid.us):
        for j, v in enumerate(grid.vs):
            omega[i, j, 0] = [[0.0, -np.sin(v)], [np.sin(v), 0.0]]
            theta[i, j, 0] = [0.5 * np.cos(v), 0.0]
            theta[i, j, 1] = [0.0, 0.5]
            beta[i, j, 0, :, 0] = theta[i, j, 0]
            beta[i, j, 1, :, 0] = theta[i, j, 1]
    return ExtendedConnectionSpec("Bm1", 2, 1, grid, GroupSpec("orthogonal", 2, 1),
                                  omega=omega, theta=theta, beta=beta)


def example_flat_target(x, y, lam):
    """The flat partner immersion in H^3: [i x lam, i y lam,
    (2 - x^2 lam^2 - y^2 lam^2)/2, (x^2 lam^2 + y^2 lam^2)/2], real and of
    Lorentz square -1 for lam on the imaginary axis."""
    lam = complex(lam)
    if lam == 0:
        raise ZeroLambda("immersion undefined at lambda = 0")
    if abs(lam.real) > 1e-12 * abs(lam):
        raise NonRealFrame(f"lambda = {lam} is not purely imaginary")
    s = (x * x + y * y) * lam * lam
    f = np.array([1j * x * lam, 1j * y * lam, 0.5 * (2.0 - s), 0.5 * s])
    return f.real
