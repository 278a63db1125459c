"""Grid-sampled maps into the loop group and the splitting machinery.

A FrameField samples a map from a rectangular 2-parameter patch into the
loop group; a ConnectionForm holds the two directional components of a
Maurer-Cartan form, one loop per node per direction.  Pointwise
factorizations never fail a whole field: nodes where a solve breaks are
masked out and reported, mirroring the restriction to the open subset where
the decompositions exist.

Tolerance hierarchy, loosest consumer last: trimming 1e-14 < factorization
1e-9 / 1e-8 < round trips 1e-7 < integrability and order measurement 1e-6.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import (
    BigCellViolation,
    DimensionMismatch,
    IntegrabilityViolation,
    NotInIwasawaCell,
    SingularLoop,
)
from .factorization import (
    TOL_BIRKHOFF,
    TOL_IWASAWA,
    birkhoff_left,
    birkhoff_right,
    default_window,
    tau_iwasawa_minus,
)
from .loops import GroupSpec, LaurentLoop, constant, distance, identity, lincomb, mul, truncated_inverse
from .symmetry import SymmetrySpec

TOL_ROUNDTRIP = 1e-7
TOL_ORDER = 1e-6
TOL_MC = 1e-6


@dataclass(frozen=True)
class Grid2D:
    """Uniform rectangular lattice with a distinguished base node."""

    us: np.ndarray
    vs: np.ndarray
    base: tuple

    def __post_init__(self):
        object.__setattr__(self, "us", np.asarray(self.us, dtype=float))
        object.__setattr__(self, "vs", np.asarray(self.vs, dtype=float))
        for name, axis in (("h_u", self.us), ("h_v", self.vs)):
            if axis.size >= 2:
                steps = np.diff(axis)
                if np.any(steps <= 0) or np.ptp(steps) > 1e-12 * abs(steps[0]):
                    raise ValueError(f"grid axis for {name} must be uniformly increasing")
        bi, bj = self.base
        if not (0 <= bi < self.us.size and 0 <= bj < self.vs.size):
            raise ValueError(f"base index {self.base} outside grid")

    @classmethod
    def from_spacing(cls, u0, h_u, nu, v0, h_v, nv, base=None):
        us = u0 + h_u * np.arange(nu)
        vs = v0 + h_v * np.arange(nv)
        if base is None:
            base = (0, 0)
        return cls(us, vs, tuple(base))

    @classmethod
    def centered(cls, extent_u, nu, extent_v, nv):
        """Symmetric grid around the origin with the base at the center node."""
        us = np.linspace(-extent_u, extent_u, nu)
        vs = np.linspace(-extent_v, extent_v, nv)
        return cls(us, vs, (nu // 2, nv // 2))

    @property
    def shape(self):
        return (self.us.size, self.vs.size)

    @property
    def h_u(self):
        return float(self.us[1] - self.us[0]) if self.us.size > 1 else 0.0

    @property
    def h_v(self):
        return float(self.vs[1] - self.vs[0]) if self.vs.size > 1 else 0.0

    def nodes(self):
        for i in range(self.us.size):
            for j in range(self.vs.size):
                yield i, j


def _full_mask(grid):
    return np.ones(grid.shape, dtype=bool)


def _value_table(grid, fill=None):
    nu, nv = grid.shape
    return [[fill for _ in range(nv)] for _ in range(nu)]


@dataclass
class FrameField:
    """Loop-group values on a grid, with failure mask and declared tags."""

    grid: Grid2D
    values: list
    mask: np.ndarray = None
    symmetry: Optional[SymmetrySpec] = None
    target: Optional[GroupSpec] = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mask is None:
            self.mask = _full_mask(self.grid)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.grid.shape:
            raise DimensionMismatch("mask shape does not match grid")

    @classmethod
    def from_function(cls, grid, fn, symmetry=None, target=None):
        vals = [[fn(u, v) for v in grid.vs] for u in grid.us]
        return cls(grid, vals, symmetry=symmetry, target=target)

    @classmethod
    def constant_field(cls, grid, g: LaurentLoop, **kw):
        return cls(grid, [[g for _ in grid.vs] for _ in grid.us], **kw)

    def value(self, i, j) -> LaurentLoop:
        return self.values[i][j]

    @property
    def dim(self):
        for i, j in self.grid.nodes():
            if self.mask[i, j]:
                return self.values[i][j].n
        raise ValueError("fully masked field")

    def base_value(self) -> LaurentLoop:
        return self.value(*self.grid.base)

    def is_based(self, tol=1e-10) -> bool:
        bi, bj = self.grid.base
        return bool(self.mask[bi, bj]) and distance(
            self.base_value(), identity(self.dim)) <= tol

    def map_values(self, fn, **changes) -> "FrameField":
        vals = _value_table(self.grid)
        for i, j in self.grid.nodes():
            if self.mask[i, j]:
                vals[i][j] = fn(self.values[i][j])
        out = replace(self, values=vals, mask=self.mask.copy(), info=dict(self.info))
        for key, val in changes.items():
            setattr(out, key, val)
        return out

    def right_multiply(self, g: LaurentLoop) -> "FrameField":
        return self.map_values(lambda h: mul(h, g))

    def max_radius(self) -> int:
        return max(self.values[i][j].radius for i, j in self.grid.nodes()
                   if self.mask[i, j])


def field_distance(a: FrameField, b: FrameField) -> float:
    """Max loop distance over nodes unmasked in both fields."""
    worst = 0.0
    for i, j in a.grid.nodes():
        if a.mask[i, j] and b.mask[i, j]:
            worst = max(worst, distance(a.value(i, j), b.value(i, j)))
    return worst


@dataclass
class ConnectionForm:
    """Directional components A_u, A_v of a Maurer-Cartan form, per node."""

    grid: Grid2D
    a_u: list
    a_v: list
    mask: np.ndarray = None
    declared_window: Optional[tuple] = None

    def __post_init__(self):
        if self.mask is None:
            self.mask = _full_mask(self.grid)
        self.mask = np.asarray(self.mask, dtype=bool)

    def component(self, direction) -> list:
        return self.a_u if direction == "u" else self.a_v

    @property
    def dim(self):
        for i, j in self.grid.nodes():
            if self.mask[i, j]:
                return self.a_u[i][j].n
        raise ValueError("fully masked form")

    def map_loops(self, fn) -> "ConnectionForm":
        au = _value_table(self.grid)
        av = _value_table(self.grid)
        for i, j in self.grid.nodes():
            if self.mask[i, j]:
                au[i][j] = fn(self.a_u[i][j])
                av[i][j] = fn(self.a_v[i][j])
        return ConnectionForm(self.grid, au, av, self.mask.copy(), self.declared_window)

    def window_defect(self) -> float:
        """How far the measured window spills outside the declared one.

        Returns the largest relative coefficient norm found at degrees
        outside declared_window (0.0 when it holds or nothing is declared);
        compare against tol_order.
        """
        if self.declared_window is None:
            return 0.0
        lo, hi = self.declared_window
        top = form_scale(self)
        if top == 0.0:
            return 0.0
        worst = 0.0
        for i, j in self.grid.nodes():
            if not self.mask[i, j]:
                continue
            for comp in (self.a_u[i][j], self.a_v[i][j]):
                if comp.lo < lo:
                    worst = max(worst, comp.clip(comp.lo, lo - 1).wiener_norm())
                if comp.hi > hi:
                    worst = max(worst, comp.clip(hi + 1, comp.hi).wiener_norm())
        return worst / top


@dataclass
class Potential:
    """The Maurer-Cartan data (eta_minus, eta_plus) of a basic pair."""

    eta_minus: Optional[ConnectionForm] = None
    eta_plus: Optional[ConnectionForm] = None


# -- finite differences -------------------------------------------------------


def _derivative_stencil(size, i):
    """(offsets, weights) for an O(h^2) first derivative at index i."""
    if size < 3:
        raise ValueError("need at least 3 nodes per direction")
    if i == 0:
        return (0, 1, 2), (-1.5, 2.0, -0.5)
    if i == size - 1:
        return (size - 3, size - 2, size - 1), (0.5, -2.0, 1.5)
    return (i - 1, i + 1), (-0.5, 0.5)


def _axis_items(values, mask, i, j, axis):
    if axis == 0:
        size = len(values)
        return size, (lambda t: values[t][j]), (lambda t: mask[t, j])
    size = len(values[i])
    return size, (lambda t: values[i][t]), (lambda t: mask[i, t])


def _derivative_loop(values, mask, i, j, axis, h):
    """Directional derivative of a loop grid at a node; None when stencil masked."""
    size, val, ok = _axis_items(values, mask, i, j, axis)
    pos = i if axis == 0 else j
    idxs, wts = _derivative_stencil(size, pos)
    if not all(ok(t) for t in idxs):
        # retreat to the one-sided stencil away from the masked side
        if pos > 1 and all(ok(t) for t in (pos - 2, pos - 1, pos)):
            idxs, wts = (pos - 2, pos - 1, pos), (0.5, -2.0, 1.5)
        elif pos < size - 2 and all(ok(t) for t in (pos, pos + 1, pos + 2)):
            idxs, wts = (pos, pos + 1, pos + 2), (-1.5, 2.0, -0.5)
        else:
            return None
    return lincomb([(w / h, val(t)) for t, w in zip(idxs, wts)])


def maurer_cartan(F: FrameField, N=None) -> ConnectionForm:
    """Discrete F^{-1} dF: central differences inside, one-sided at edges."""
    grid = F.grid
    if min(grid.shape) < 3:
        raise ValueError("maurer_cartan needs at least 3 nodes per direction")
    au = _value_table(grid)
    av = _value_table(grid)
    mask = np.zeros(grid.shape, dtype=bool)
    for i, j in grid.nodes():
        if not F.mask[i, j]:
            continue
        du = _derivative_loop(F.values, F.mask, i, j, 0, grid.h_u)
        dv = _derivative_loop(F.values, F.mask, i, j, 1, grid.h_v)
        if du is None or dv is None:
            continue
        g = F.value(i, j)
        try:
            inv = truncated_inverse(g, N if N is not None else default_window(g, du, dv))
        except SingularLoop:
            continue
        au[i][j] = mul(inv, du)
        av[i][j] = mul(inv, dv)
        mask[i, j] = True
    return ConnectionForm(grid, au, av, mask)


def connection_order(A: ConnectionForm, tol_order=TOL_ORDER, floor=0.0):
    """Tightest degree window (a, b) whose exterior stays below tol_order
    relative to the largest coefficient; returns (0, 0, True) for a zero form.

    `floor` is an absolute cutoff below which coefficients count as noise
    (useful on forms obtained by finite differences of near-constant fields).
    """
    peak = {}
    top = 0.0
    for i, j in A.grid.nodes():
        if not A.mask[i, j]:
            continue
        for comp in (A.a_u[i][j], A.a_v[i][j]):
            norms = np.linalg.norm(comp.coeffs.reshape(comp.coeffs.shape[0], -1), axis=1)
            for d, nm in zip(range(comp.lo, comp.hi + 1), norms):
                peak[d] = max(peak.get(d, 0.0), float(nm))
                top = max(top, float(nm))
    if not peak or top <= floor:
        return (0, 0, True)
    degs = [d for d, nm in peak.items() if nm > max(tol_order * top, floor)]
    if not degs:
        return (0, 0, True)
    return (min(degs), max(degs), False)


def form_scale(A: ConnectionForm) -> float:
    """Largest coefficient norm over the form, for relative thresholds."""
    top = 0.0
    for i, j in A.grid.nodes():
        if A.mask[i, j]:
            for comp in (A.a_u[i][j], A.a_v[i][j]):
                top = max(top, float(np.max(np.linalg.norm(
                    comp.coeffs.reshape(comp.coeffs.shape[0], -1), axis=1))))
    return top


def fd_mc_tolerance(A: ConnectionForm, tol_floor=TOL_MC, safety=5.0) -> float:
    """Flatness threshold adapted to the finite-difference truncation error.

    The discrete flatness residual of an exactly flat analytic form is
    O(h^2) times its scale, so a sampled form cannot be held to less.
    """
    h = max(A.grid.h_u, A.grid.h_v)
    return max(tol_floor, safety * form_scale(A) * h * h)


def mc_residual(A: ConnectionForm, per_degree=False):
    """Flatness defect d A + A ^ A by finite differences, graded in degree.

    Returns the max over interior nodes and degrees of the coefficient norm
    of  d_u A_v - d_v A_u + A_u A_v - A_v A_u ; with per_degree=True also a
    {degree: max norm} dict.
    """
    grid = A.grid
    worst = 0.0
    grades = {}
    for i, j in grid.nodes():
        if not A.mask[i, j]:
            continue
        dudv = _derivative_loop(A.a_v, A.mask, i, j, 0, grid.h_u)
        dvdu = _derivative_loop(A.a_u, A.mask, i, j, 1, grid.h_v)
        if dudv is None or dvdu is None:
            continue
        au, av = A.a_u[i][j], A.a_v[i][j]
        r = dudv - dvdu + mul(au, av) - mul(av, au)
        norms = np.linalg.norm(r.coeffs.reshape(r.coeffs.shape[0], -1), axis=1)
        for d, nm in zip(range(r.lo, r.hi + 1), norms):
            grades[d] = max(grades.get(d, 0.0), float(nm))
            worst = max(worst, float(nm))
    if per_degree:
        return worst, grades
    return worst


# -- splitting and merging ----------------------------------------------------


def _map_unmasked(F: FrameField, fn, threads=1):
    """Apply fn to every valid node value; collect results and failures.

    Pointwise factorizations are independent across nodes, so with threads
    greater than one the work is spread over a thread pool (the heavy lifting
    happens inside LAPACK calls, which release the interpreter lock); results
    are identical to the sequential sweep.
    """
    nodes = [(i, j) for i, j in F.grid.nodes() if F.mask[i, j]]
    out = {}
    failures = {}

    def work(node):
        try:
            return node, fn(F.value(*node)), None
        except (BigCellViolation, SingularLoop, NotInIwasawaCell) as exc:
            return node, None, str(exc)

    if threads > 1 and len(nodes) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            done = list(pool.map(work, nodes))
    else:
        done = [work(node) for node in nodes]
    for node, val, err in done:
        if err is None:
            out[node] = val
        else:
            failures[node] = err
    return out, failures


def split(F: FrameField, N=None, tol=TOL_BIRKHOFF, threads=1):
    """Pointwise Birkhoff split into the (a,-1) and (1,b) basic pair.

    The left factorization supplies G_minus (normalized in Lambda^-_1), the
    right factorization supplies F_plus (normalized in Lambda^+_1); failed
    nodes are masked in both outputs.  Both factors are based whenever F is.
    Per-node residuals and condition estimates land in info["diagnostics"].
    """
    grid = F.grid
    gm = _value_table(grid)
    fp = _value_table(grid)
    mask = np.zeros(grid.shape, dtype=bool)

    def factor(g):
        left = birkhoff_left(g, N=N, tol=tol)
        right = birkhoff_right(g, N=N, tol=tol)
        return left, right

    results, failures = _map_unmasked(F, factor, threads)
    diagnostics = {}
    for (i, j), (left, right) in results.items():
        gm[i][j] = left.minus
        fp[i][j] = right.plus
        mask[i, j] = True
        diagnostics[(i, j)] = {
            "residual": max(left.residual, right.residual),
            "condition": max(left.condition, right.condition),
        }
    info = {"failures": failures, "diagnostics": diagnostics}
    g_minus = FrameField(grid, gm, mask.copy(), symmetry=F.symmetry, target=F.target,
                         info=dict(info))
    f_plus = FrameField(grid, fp, mask.copy(), symmetry=F.symmetry, target=F.target,
                        info=dict(info))
    return g_minus, f_plus


def field_diagnostics_rows(F: FrameField):
    """Per-node CSV payload: indices, residual, condition, mask flag."""
    cols = ["iu", "iv", "u", "v", "residual", "condition", "mask"]
    diag = F.info.get("diagnostics", {})
    rows = []
    for i, j in F.grid.nodes():
        entry = diag.get((i, j), {})
        rows.append([i, j, float(F.grid.us[i]), float(F.grid.vs[j]),
                     float(entry.get("residual", np.nan)),
                     float(entry.get("condition", np.nan)),
                     bool(F.mask[i, j])])
    return cols, rows


def merge(G_minus: FrameField, F_plus: FrameField, N=None, tol=TOL_BIRKHOFF) -> FrameField:
    """Rebuild F = F_plus F_minus = G_minus G_plus from a basic pair.

    Pointwise: left-factorize F_plus^{-1} G_minus = F_minus G_plus^{-1} with
    F_minus normalized, then F = F_plus F_minus.
    """
    if G_minus.grid.shape != F_plus.grid.shape:
        raise DimensionMismatch("basic pair fields live on different grids")
    grid = F_plus.grid
    vals = _value_table(grid)
    mask = np.zeros(grid.shape, dtype=bool)
    failures = {}
    for i, j in grid.nodes():
        if not (G_minus.mask[i, j] and F_plus.mask[i, j]):
            continue
        fp = F_plus.value(i, j)
        gm = G_minus.value(i, j)
        try:
            nloc = N if N is not None else default_window(fp, gm)
            q = mul(truncated_inverse(fp, nloc), gm)
            left = birkhoff_left(q, N=N, tol=tol)
        except (BigCellViolation, SingularLoop) as exc:
            failures[(i, j)] = str(exc)
            continue
        vals[i][j] = mul(fp, left.minus)
        mask[i, j] = True
    return FrameField(grid, vals, mask, symmetry=F_plus.symmetry, target=F_plus.target,
                      info={"failures": failures})


# -- tau-merge ---------------------------------------------------------------


def _project_gauge_constant(c, s: SymmetrySpec, sigma_fixed=True, b_signs=None):
    """Project a near-gauge constant onto the tau-fixed constant subgroup.

    b_signs is the +-1 diagonal of the ambient invariant form (None for the
    general linear case, where no isometry projection applies).
    """
    c = np.asarray(c, dtype=complex)
    q = np.sign(np.diag(s.tau_matrix).real)
    c = 0.5 * (c + (q[:, None] * c * q[None, :]))  # commute with Q
    if sigma_fixed:
        p = np.sign(np.diag(s.sigma_matrix).real)
        c = 0.5 * (c + (p[:, None] * c * p[None, :]))
    if s.reality in ("R1", "R2", "Rm1", "Rm2"):
        c = c.real.astype(complex)
    elif s.reality in ("Rhat1", "Rhat2"):
        c = 0.5 * (c + q[:, None] * np.conj(c) * q[None, :])
    if b_signs is not None:
        # Newton steps X <- (X + B X^{-T} B)/2 toward the form's isometries
        for _ in range(2):
            try:
                c = 0.5 * (c + b_signs[:, None] * np.linalg.inv(c).T * b_signs[None, :])
            except np.linalg.LinAlgError:
                return None
    if not np.all(np.isfinite(c)):
        return None
    return c


def tau_merge(F_plus: FrameField, s: SymmetrySpec, N=None, tol=TOL_IWASAWA,
              constant_group="auto", form=None, sigma_fixed=None) -> FrameField:
    """Promote a (1,b) field to the tau-fixed frame F = F_plus F_minus.

    Pointwise tau-Iwasawa against Lambda^-; the constant right gauge left
    free by the factorization is pinned by aligning every node with an
    already-processed neighbor (sweep order is row-major), then re-basing so
    the output is I at the base node whenever the input is based.
    """
    grid = F_plus.grid
    if form is None and F_plus.target is not None:
        form = F_plus.target.kind  # "orthogonal" | "lorentz"
    if sigma_fixed is None:
        # project gauges onto the sigma blocks only for declared twisted fields
        sigma_fixed = F_plus.symmetry is not None
    b_signs = None
    if constant_group != "general":
        b_signs = np.ones(F_plus.dim)
        if form == "lorentz":
            b_signs[s.n] = -1.0
    vals = _value_table(grid)
    mask = np.zeros(grid.shape, dtype=bool)
    failures = {}
    residuals = {}
    for i, j in grid.nodes():
        if not F_plus.mask[i, j]:
            continue
        x = F_plus.value(i, j)
        try:
            res = tau_iwasawa_minus(x, s, N=N, tol=tol,
                                    constant_group=constant_group, form=form)
        except (BigCellViolation, NotInIwasawaCell, SingularLoop) as exc:
            failures[(i, j)] = str(exc)
            continue
        z = res.z
        seed = None
        if j > 0 and mask[i, j - 1]:
            seed = vals[i][j - 1]
        elif i > 0 and mask[i - 1, j]:
            seed = vals[i - 1][j]
        if seed is not None:
            aligned = _align_gauge(z, seed, s, b_signs=b_signs,
                                   sigma_fixed=sigma_fixed)
            if aligned is not None:
                z = aligned  # otherwise keep the raw (still valid) factor
        vals[i][j] = z
        mask[i, j] = True
        residuals[(i, j)] = res.residuals
    out = FrameField(grid, vals, mask, symmetry=s, target=F_plus.target,
                     info={"failures": failures, "iwasawa_residuals": residuals})
    bi, bj = grid.base
    if F_plus.is_based() and mask[bi, bj]:
        base = out.base_value()
        c = _project_gauge_constant(base.coeff(0), s, sigma_fixed=sigma_fixed,
                                    b_signs=b_signs)
        if c is not None and distance(base, constant(c)) <= 100 * max(tol, 1e-12):
            out = out.right_multiply(constant(np.linalg.inv(c)))
            out.symmetry = s
    return out


def _align_gauge(z, z_prev, s, b_signs=None, sigma_fixed=True):
    """Right-multiply z by the tau-fixed constant bringing it nearest z_prev,
    or return None when no well-conditioned gauge move exists."""
    try:
        c_raw = np.linalg.solve(z.eval(1.0), z_prev.eval(1.0))
    except np.linalg.LinAlgError:
        return None
    c = _project_gauge_constant(c_raw, s, sigma_fixed=sigma_fixed, b_signs=b_signs)
    if c is None or np.linalg.cond(c) > 1e6:
        return None
    return mul(z, constant(c))


# -- gauging a (0,b) field to (1,b) -------------------------------------------


def gauge_parallel(F: FrameField, N=None, tol_order=TOL_ORDER, tol_mc=None):
    """Strip the degree-0 part of the connection by a constant-in-lambda gauge.

    Writes the degree-0 component as H^{-1} dH (integrated by RK4 with
    H = I at the base) and returns (F * G, G) with G = H^{-1}; the gauged
    field has connection order (1, b).
    """
    A = maurer_cartan(F, N=N)
    lo, hi, is_zero = connection_order(A, tol_order)
    if not is_zero and lo < 0:
        raise IntegrabilityViolation(
            f"cannot gauge a field of order ({lo},{hi}); negative degrees present")
    au = _value_table(A.grid)
    av = _value_table(A.grid)
    for i, j in A.grid.nodes():
        if A.mask[i, j]:
            au[i][j] = constant(A.a_u[i][j].coeff(0))
            av[i][j] = constant(A.a_v[i][j].coeff(0))
    a0 = ConnectionForm(A.grid, au, av, A.mask.copy())
    if tol_mc is None:
        tol_mc = fd_mc_tolerance(a0)
    res0 = mc_residual(a0)
    if res0 > tol_mc:
        raise IntegrabilityViolation(
            f"degree-0 part is not flat: residual {res0:.3e}", {"degree0": res0})
    H = integrate_potential(a0, check=False)
    G = H.map_values(lambda h: constant(np.linalg.inv(h.coeff(0))))
    vals = _value_table(F.grid)
    mask = F.mask & G.mask
    for i, j in F.grid.nodes():
        if mask[i, j]:
            vals[i][j] = mul(F.value(i, j), G.value(i, j))
    gauged = FrameField(F.grid, vals, mask, symmetry=F.symmetry, target=F.target)
    return gauged, G


# -- potential integration -----------------------------------------------------


_MID_CENTER = np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0
_MID_LEFT = np.array([5.0, 15.0, -5.0, 1.0]) / 16.0     # between nodes 0 and 1
_MID_RIGHT = _MID_LEFT[::-1].copy()                     # between nodes -2 and -1


def _midpoint(seq, i):
    """O(h^4) interpolation of a loop sequence halfway between i and i+1."""
    m = len(seq)
    if m == 2:
        return lincomb([(0.5, seq[0]), (0.5, seq[1])])
    if m == 3:
        w = (0.375, 0.75, -0.125) if i == 0 else (-0.125, 0.75, 0.375)
        return lincomb(list(zip(w, seq)))
    if i == 0:
        nodes, w = seq[0:4], _MID_LEFT
    elif i >= m - 2:
        nodes, w = seq[m - 4 : m], _MID_RIGHT
    else:
        nodes, w = seq[i - 1 : i + 3], _MID_CENTER
    return lincomb(list(zip(w, nodes)))


def _rk4_step(F: LaurentLoop, a0, amid, a1, h):
    k1 = mul(F, a0)
    k2 = mul(F + (0.5 * h) * k1, amid)
    k3 = mul(F + (0.5 * h) * k2, amid)
    k4 = mul(F + h * k3, a1)
    return F + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _integrate_line(start_value, coeffs, h, reverse=False):
    """Solve dF = F A along a line of sampled loop coefficients."""
    if reverse:
        coeffs = coeffs[::-1]
        h = -h
    out = [start_value]
    for t in range(len(coeffs) - 1):
        mid = _midpoint(coeffs, t)
        out.append(_rk4_step(out[-1], coeffs[t], mid, coeffs[t + 1], h))
    if reverse:
        out.reverse()
    return out


def integrate_potential(eta: ConnectionForm, base=None, tol_mc=None,
                        check=True, holonomy=False) -> FrameField:
    """Integrate dF = F eta by RK4: along u on the base row, then along v.

    The based solution (F = I at the base node) exists when eta is flat;
    the flatness precondition is enforced with mc_residual unless check is
    False.  With holonomy=True a path-independence diagnostic (max plaquette
    holonomy deviation) is stored under info["holonomy"].
    """
    grid = eta.grid
    if not np.all(eta.mask):
        raise IntegrabilityViolation("potential has masked nodes")
    if check and min(grid.shape) >= 3:
        if tol_mc is None:
            tol_mc = fd_mc_tolerance(eta)
        res = mc_residual(eta)
        if res > tol_mc:
            raise IntegrabilityViolation(
                f"potential fails the flatness check: residual {res:.3e}",
                {"mc": res})
    bi, bj = grid.base if base is None else base
    n = eta.dim
    nu, nv = grid.shape
    vals = _value_table(grid)
    row = [eta.a_u[i][bj] for i in range(nu)]
    fwd = _integrate_line(identity(n), row[bi:], grid.h_u)
    for t, g in enumerate(fwd):
        vals[bi + t][bj] = g
    if bi > 0:
        bwd = _integrate_line(identity(n), row[: bi + 1], grid.h_u, reverse=True)
        for t, g in enumerate(bwd[:-1]):
            vals[t][bj] = g
    for i in range(nu):
        col = [eta.a_v[i][j] for j in range(nv)]
        up = _integrate_line(vals[i][bj], col[bj:], grid.h_v)
        for t, g in enumerate(up):
            vals[i][bj + t] = g
        if bj > 0:
            down = _integrate_line(vals[i][bj], col[: bj + 1], grid.h_v, reverse=True)
            for t, g in enumerate(down[:-1]):
                vals[i][t] = g
    out = FrameField(grid, vals)
    if holonomy:
        out.info["holonomy"] = _holonomy_residual(eta)
    return out


def integrate_basic_pair(p: Potential, tol_mc=None, check=True):
    """Integrate a potential pair into its basic pair of fields.

    Each half solves dF = F eta from the identity at the base node; merging
    the results reconstructs the full frame the potentials came from.
    """
    if p.eta_minus is None or p.eta_plus is None:
        raise IntegrabilityViolation("both halves of the potential are required")
    g_minus = integrate_potential(p.eta_minus, tol_mc=tol_mc, check=check)
    f_plus = integrate_potential(p.eta_plus, tol_mc=tol_mc, check=check)
    return g_minus, f_plus


def _holonomy_residual(eta: ConnectionForm) -> float:
    """Max plaquette deviation of one-step transfer matrices."""
    grid = eta.grid
    nu, nv = grid.shape
    n = eta.dim
    eye = identity(n)

    def step_u(i, j):
        seq = [eta.a_u[t][j] for t in range(nu)]
        return _rk4_step(eye, seq[i], _midpoint(seq, i), seq[i + 1], grid.h_u)

    def step_v(i, j):
        seq = [eta.a_v[i][t] for t in range(nv)]
        return _rk4_step(eye, seq[j], _midpoint(seq, j), seq[j + 1], grid.h_v)

    worst = 0.0
    for i in range(nu - 1):
        for j in range(nv - 1):
            lhs = mul(step_u(i, j), step_v(i + 1, j))
            rhs = mul(step_v(i, j), step_u(i, j + 1))
            worst = max(worst, distance(lhs, rhs))
    return worst


# -- dressing ------------------------------------------------------------------


def dress_plus(g_minus: LaurentLoop, F_plus: FrameField, N=None,
               tol=TOL_BIRKHOFF, threads=1) -> FrameField:
    """Left action of a Lambda^- element on a (1,b) field.

    Pointwise right Birkhoff factorization of g_minus F_plus(t); the new
    field is the Lambda^+_1 factor, masked where the product leaves the big
    cell.
    """
    def act(g):
        return birkhoff_right(mul(g_minus, g), N=N, tol=tol).plus

    return _dress_apply(F_plus, act, threads)


def dress_minus(g_plus: LaurentLoop, G_minus: FrameField, N=None,
                tol=TOL_BIRKHOFF, threads=1) -> FrameField:
    """Mirror action of a Lambda^+ element on an (a,-1) field."""
    def act(g):
        return birkhoff_left(mul(g_plus, g), N=N, tol=tol).minus

    return _dress_apply(G_minus, act, threads)


def _dress_apply(F: FrameField, act, threads=1):
    vals = _value_table(F.grid)
    mask = np.zeros(F.grid.shape, dtype=bool)
    results, failures = _map_unmasked(F, act, threads)
    for (i, j), val in results.items():
        vals[i][j] = val
        mask[i, j] = True
    return FrameField(F.grid, vals, mask, symmetry=F.symmetry, target=F.target,
                      info={"failures": failures})


def dress_pair(g_minus: LaurentLoop, g_plus: LaurentLoop, F: FrameField,
               N=None, tol=TOL_BIRKHOFF, threads=1) -> FrameField:
    """Action of a (g_-, g_+) pair on an (a,b) field, a < 0 < b.

    Computes the dressed (1,b) and (a,-1) pieces from g_- F and g_+ F and
    merges them; this matches dressing the split pieces separately.
    """
    def plus_part(g):
        return birkhoff_right(mul(g_minus, g), N=N, tol=tol).plus

    def minus_part(g):
        return birkhoff_left(mul(g_plus, g), N=N, tol=tol).minus

    f_plus = _dress_apply(F, plus_part, threads)
    g_minus_field = _dress_apply(F, minus_part, threads)
    return merge(g_minus_field, f_plus, N=N, tol=tol)
