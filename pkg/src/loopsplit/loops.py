"""Matrix Laurent polynomials on the circle ("truncated loops").

A loop is stored as a dense stack of complex n x n coefficient matrices over
a contiguous degree window [lo, hi].  All norms are Frobenius; the summable
(Wiener) norm of a loop is the sum of coefficient norms.  Values are treated
as immutable after construction and every operation returns a fresh loop, so
everything here is safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SingularLoop, ZeroLambda

TOL_TRIM = 1e-14

PART_PLUS = "plus"
PART_MINUS = "minus"
PART_STRICT_PLUS = "strict_plus"
PART_STRICT_MINUS = "strict_minus"
PART_CONST = "const"
_PARTS = (PART_PLUS, PART_MINUS, PART_STRICT_PLUS, PART_STRICT_MINUS, PART_CONST)


def fnorm(m) -> float:
    return float(np.linalg.norm(np.asarray(m)))


class LaurentLoop:
    """A matrix-valued Laurent polynomial sum_{j=lo}^{hi} c_j lambda^j.

    Construction trims leading/trailing coefficients whose norm falls below
    tol_trim relative to the largest coefficient, so the stored window is
    canonical: nonzero at both ends, or the single zero matrix at degree 0.
    """

    __slots__ = ("n", "lo", "coeffs", "tol_trim")

    def __init__(self, lo, coeffs, tol_trim=TOL_TRIM, trim=True):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim != 3 or coeffs.shape[1] != coeffs.shape[2]:
            raise DimensionMismatch(f"coefficient stack must be (W, n, n), got {coeffs.shape}")
        if coeffs.shape[0] == 0:
            raise DimensionMismatch("empty coefficient stack")
        self.n = coeffs.shape[1]
        self.tol_trim = tol_trim
        if trim:
            lo, coeffs = _trim(lo, coeffs, tol_trim)
        self.lo = int(lo)
        self.coeffs = coeffs
        self.coeffs.flags.writeable = False

    # -- basic structure -------------------------------------------------

    @property
    def hi(self) -> int:
        return self.lo + self.coeffs.shape[0] - 1

    @property
    def window(self):
        return (self.lo, self.hi)

    @property
    def radius(self) -> int:
        return max(abs(self.lo), abs(self.hi))

    def coeff(self, deg):
        """Coefficient matrix at a degree (zero outside the window)."""
        if self.lo <= deg <= self.hi:
            return np.array(self.coeffs[deg - self.lo])
        return np.zeros((self.n, self.n), dtype=complex)

    def wiener_norm(self) -> float:
        return float(sum(np.linalg.norm(c) for c in self.coeffs))

    def is_zero(self, tol=0.0) -> bool:
        return bool(np.max(np.abs(self.coeffs)) <= tol)

    def is_identity(self, tol=1e-12) -> bool:
        return self.window == (0, 0) and fnorm(self.coeffs[0] - np.eye(self.n)) <= tol

    def __repr__(self):
        return f"LaurentLoop(n={self.n}, window=({self.lo},{self.hi}))"

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, LaurentLoop):
            return NotImplemented
        if self.n != other.n:
            raise DimensionMismatch("loop dimensions differ")
        lo = min(self.lo, other.lo)
        hi = max(self.hi, other.hi)
        out = np.zeros((hi - lo + 1, self.n, self.n), dtype=complex)
        out[self.lo - lo : self.hi - lo + 1] += self.coeffs
        out[other.lo - lo : other.hi - lo + 1] += other.coeffs
        return LaurentLoop(lo, out, tol_trim=min(self.tol_trim, other.tol_trim))

    def __sub__(self, other):
        return self + (-1.0) * other

    def __neg__(self):
        return (-1.0) * self

    def __mul__(self, other):
        if isinstance(other, LaurentLoop):
            return mul(self, other)
        return LaurentLoop(self.lo, np.asarray(self.coeffs) * complex(other),
                           tol_trim=self.tol_trim)

    def __rmul__(self, other):
        return LaurentLoop(self.lo, complex(other) * np.asarray(self.coeffs),
                           tol_trim=self.tol_trim)

    # -- analysis ----------------------------------------------------------

    def eval(self, lam):
        """Evaluate at a nonzero complex parameter, Horner split at degree 0."""
        lam = complex(lam)
        if lam == 0:
            raise ZeroLambda("loop evaluation at lambda = 0")
        n = self.n
        out = np.zeros((n, n), dtype=complex)
        if self.hi >= 0:
            # degrees >= 0, Horner from the top down
            for deg in range(self.hi, -1, -1):
                out = out * lam
                if deg >= self.lo:
                    out = out + self.coeffs[deg - self.lo]
        if self.lo < 0:
            # degrees <= -1, Horner in 1/lambda from the bottom up
            mu = 1.0 / lam
            neg = np.zeros((n, n), dtype=complex)
            for deg in range(self.lo, 0):
                neg = neg * mu
                if deg <= self.hi:
                    neg = neg + self.coeffs[deg - self.lo]
            out = out + neg * mu
        return out

    def project(self, part):
        """Keep degrees >=0 / <=0 / >=1 / <=-1 / ==0; zero loop if empty."""
        if part not in _PARTS:
            raise ValueError(f"unknown part {part!r}")
        if part == PART_PLUS:
            lo, hi = max(self.lo, 0), self.hi
        elif part == PART_MINUS:
            lo, hi = self.lo, min(self.hi, 0)
        elif part == PART_STRICT_PLUS:
            lo, hi = max(self.lo, 1), self.hi
        elif part == PART_STRICT_MINUS:
            lo, hi = self.lo, min(self.hi, -1)
        else:
            lo, hi = 0, 0
        if lo > hi or hi < self.lo or lo > self.hi:
            return zero_loop(self.n, tol_trim=self.tol_trim)
        lo = max(lo, self.lo)
        hi = min(hi, self.hi)
        return LaurentLoop(lo, self.coeffs[lo - self.lo : hi - self.lo + 1],
                           tol_trim=self.tol_trim)

    def clip(self, lo, hi):
        """Restrict the window to [lo, hi] (degrees outside are dropped)."""
        a = max(lo, self.lo)
        b = min(hi, self.hi)
        if a > b:
            return zero_loop(self.n, tol_trim=self.tol_trim)
        return LaurentLoop(a, self.coeffs[a - self.lo : b - self.lo + 1],
                           tol_trim=self.tol_trim)

    def mirror(self):
        """The loop lambda -> value at 1/lambda (coefficient reversal)."""
        return LaurentLoop(-self.hi, self.coeffs[::-1], tol_trim=self.tol_trim)

    def transpose(self):
        return LaurentLoop(self.lo, np.transpose(self.coeffs, (0, 2, 1)),
                           tol_trim=self.tol_trim)

    def map_coeffs(self, fn, new_lo=None):
        """Apply fn to the whole coefficient stack (degree order preserved)."""
        lo = self.lo if new_lo is None else new_lo
        return LaurentLoop(lo, fn(np.array(self.coeffs)), tol_trim=self.tol_trim)


def _trim(lo, coeffs, tol_trim):
    peaks = np.abs(coeffs).reshape(coeffs.shape[0], -1).max(axis=1)
    scale = peaks.max()
    if scale == 0.0:
        n = coeffs.shape[1]
        return 0, np.zeros((1, n, n), dtype=complex)
    keep = peaks > tol_trim * scale
    first = int(np.argmax(keep))
    last = int(len(keep) - 1 - np.argmax(keep[::-1]))
    if first == 0 and last == len(keep) - 1:
        return lo, coeffs
    return lo + first, np.array(coeffs[first : last + 1])


# -- constructors ----------------------------------------------------------


def identity(n, tol_trim=TOL_TRIM) -> LaurentLoop:
    return LaurentLoop(0, np.eye(n, dtype=complex)[None], tol_trim=tol_trim)


def zero_loop(n, tol_trim=TOL_TRIM) -> LaurentLoop:
    return LaurentLoop(0, np.zeros((1, n, n), dtype=complex), tol_trim=tol_trim, trim=False)


def constant(matrix, tol_trim=TOL_TRIM) -> LaurentLoop:
    m = np.asarray(matrix, dtype=complex)
    return LaurentLoop(0, m[None], tol_trim=tol_trim)


def from_terms(terms, n=None, tol_trim=TOL_TRIM) -> LaurentLoop:
    """Build a loop from a {degree: matrix} mapping."""
    if not terms:
        if n is None:
            raise ValueError("empty terms and no dimension given")
        return zero_loop(n, tol_trim=tol_trim)
    degs = sorted(terms)
    n = np.asarray(terms[degs[0]]).shape[0] if n is None else n
    lo, hi = degs[0], degs[-1]
    coeffs = np.zeros((hi - lo + 1, n, n), dtype=complex)
    for d in degs:
        coeffs[d - lo] += np.asarray(terms[d], dtype=complex)
    return LaurentLoop(lo, coeffs, tol_trim=tol_trim)


# -- core operations --------------------------------------------------------


def mul(x: LaurentLoop, y: LaurentLoop) -> LaurentLoop:
    """Cauchy product; full window [x.lo+y.lo, x.hi+y.hi] retained, then trimmed."""
    if x.n != y.n:
        raise DimensionMismatch(f"loop dimensions differ: {x.n} vs {y.n}")
    wx, wy = x.coeffs.shape[0], y.coeffs.shape[0]
    out = np.zeros((wx + wy - 1, x.n, x.n), dtype=complex)
    if wx <= wy:
        for a in range(wx):
            out[a : a + wy] += x.coeffs[a] @ y.coeffs
    else:
        for b in range(wy):
            out[b : b + wx] += x.coeffs @ y.coeffs[b]
    return LaurentLoop(x.lo + y.lo, out, tol_trim=min(x.tol_trim, y.tol_trim))


def lincomb(pairs, n=None, tol_trim=TOL_TRIM) -> LaurentLoop:
    """Linear combination sum_i s_i * g_i of loops with scalar weights."""
    pairs = [(s, g) for s, g in pairs]
    if not pairs:
        return zero_loop(n, tol_trim=tol_trim)
    n = pairs[0][1].n
    lo = min(g.lo for _, g in pairs)
    hi = max(g.hi for _, g in pairs)
    out = np.zeros((hi - lo + 1, n, n), dtype=complex)
    for s, g in pairs:
        out[g.lo - lo : g.hi - lo + 1] += complex(s) * g.coeffs
    return LaurentLoop(lo, out, tol_trim=tol_trim)


def loop_exp(x: LaurentLoop, tol=1e-16, max_terms=120) -> LaurentLoop:
    """exp(x) by the power series, trimmed termwise."""
    acc = identity(x.n, tol_trim=x.tol_trim)
    term = identity(x.n, tol_trim=x.tol_trim)
    for k in range(1, max_terms + 1):
        term = (1.0 / k) * mul(term, x)
        acc = acc + term
        if term.wiener_norm() <= tol * max(acc.wiener_norm(), 1.0):
            return acc
    raise SingularLoop("loop exponential did not converge; norm too large")


def distance(x: LaurentLoop, y: LaurentLoop) -> float:
    """Wiener-norm distance between two loops."""
    return (x - y).wiener_norm()


def _neumann_inverse(g: LaurentLoop, N: int, side: str) -> LaurentLoop:
    # g = I + s with s strictly negative (side "minus") or strictly positive
    # ("plus") degrees; the alternating series terminates within the window.
    s = g.project(PART_STRICT_MINUS if side == "minus" else PART_STRICT_PLUS)
    clip = (lambda h: h.clip(-N, 0)) if side == "minus" else (lambda h: h.clip(0, N))
    acc = identity(g.n, tol_trim=g.tol_trim)
    power = identity(g.n, tol_trim=g.tol_trim)
    for _ in range(N):
        power = clip((-1.0) * mul(power, s))
        peak = np.abs(power.coeffs).max()
        if peak == 0.0 or peak < 1e-17:
            break
        acc = acc + power
    return acc


def truncated_inverse(g: LaurentLoop, N: int, tol_inv=1e-10) -> LaurentLoop:
    """Inverse truncated to the window [-N, N].

    Certified I + (strictly negative / strictly positive) loops take the exact
    terminating Neumann path; everything else goes through a square
    block-Toeplitz least-squares solve for P_[-N,N](g x - I) = 0.  Raises
    SingularLoop when the in-window residual exceeds tol_inv.
    """
    n = g.n
    if g.window == (0, 0):
        try:
            return constant(np.linalg.inv(g.coeffs[0]), tol_trim=g.tol_trim)
        except np.linalg.LinAlgError as exc:
            raise SingularLoop("constant loop is singular") from exc
    c0 = g.coeff(0)
    normalized = fnorm(c0 - np.eye(n)) <= 1e-13 * max(1.0, fnorm(c0))
    if normalized and g.hi <= 0:
        return _neumann_inverse(g, N, "minus")
    if normalized and g.lo >= 0:
        return _neumann_inverse(g, N, "plus")

    width = 2 * N + 1
    # rows: product modes m in [-N, N]; unknown blocks x_j, j in [-N, N]
    gpad = np.zeros((2 * width + 1, n, n), dtype=complex)
    for d in range(g.lo, g.hi + 1):
        if -width <= d <= width:
            gpad[d + width] = g.coeffs[d - g.lo]
    rows = np.arange(-N, N + 1)
    block = gpad[(rows[:, None] - rows[None, :]) + width]  # (W, W, n, n)
    big = block.transpose(0, 2, 1, 3).reshape(width * n, width * n)
    rhs = np.zeros((width * n, n), dtype=complex)
    rhs[N * n : (N + 1) * n] = np.eye(n)
    try:
        sol = np.linalg.solve(big, rhs)
    except np.linalg.LinAlgError:
        sol, *_ = np.linalg.lstsq(big, rhs, rcond=None)
    x = LaurentLoop(-N, sol.reshape(width, n, n), tol_trim=g.tol_trim)
    residual = distance(mul(g, x).clip(-N, N), identity(n))
    if not np.isfinite(residual) or residual > tol_inv:
        raise SingularLoop(
            f"truncated inverse residual {residual:.3e} exceeds {tol_inv:.1e}"
        )
    return x


# -- group membership --------------------------------------------------------


@dataclass(frozen=True)
class GroupSpec:
    """Target group data: orthogonal (form I) or Lorentz (form J).

    The matrix dimension is n_tan + k_nor + 1 and the form is diagonal +-1,
    with the single -1 at index n_tan for the Lorentz kind.
    """

    kind: str  # "orthogonal" | "lorentz"
    n_tan: int
    k_nor: int

    def __post_init__(self):
        if self.kind not in ("orthogonal", "lorentz"):
            raise ValueError(f"unknown group kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return self.n_tan + self.k_nor + 1

    @property
    def form_matrix(self):
        d = np.ones(self.dim)
        if self.kind == "lorentz":
            d[self.n_tan] = -1.0
        return np.diag(d)

    def opposite(self) -> "GroupSpec":
        other = "lorentz" if self.kind == "orthogonal" else "orthogonal"
        return GroupSpec(other, self.n_tan, self.k_nor)


def default_samples(g: LaurentLoop, count=None):
    """Roots of unity, enough of them to certify a polynomial identity."""
    if count is None:
        count = max(8, 4 * g.radius + 2)
    return np.exp(2j * np.pi * np.arange(count) / count)


def group_residual(g: LaurentLoop, spec: GroupSpec, samples=None) -> float:
    """max over samples of || g(lam)^T J g(lam) - J ||_F."""
    if g.n != spec.dim:
        raise DimensionMismatch(f"loop dim {g.n} vs group dim {spec.dim}")
    J = spec.form_matrix
    if samples is None:
        samples = default_samples(g)
    worst = 0.0
    for lam in samples:
        m = g.eval(lam)
        worst = max(worst, fnorm(m.T @ J @ m - J))
    return worst
