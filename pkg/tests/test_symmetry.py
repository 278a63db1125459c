"""Loop involutions: coefficient formulas, orders, and the group bridge."""

import numpy as np
import pytest

import loopsplit as ls
from loopsplit import (
    GroupSpec,
    SymmetrySpec,
    apply_involution,
    apply_reality,
    apply_sigma,
    apply_tau,
    distance,
    fixed_residual,
    from_terms,
    group_residual,
    identity,
    mul,
    phi_map,
)
from loopsplit.spaceforms import example_sphere_frame

from conftest import random_loop

S = SymmetrySpec(2, 1)


def test_spec_matrices():
    np.testing.assert_array_equal(np.diag(S.sigma_matrix), [1, 1, -1, -1])
    np.testing.assert_array_equal(np.diag(S.tau_matrix), [1, 1, 1, -1])
    assert np.allclose(S.sigma_matrix @ S.tau_matrix,
                       S.tau_matrix @ S.sigma_matrix)
    # smallest-codimension default
    assert SymmetrySpec(3).k == 2


def test_sigma_identity_and_offdiag():
    assert distance(apply_sigma(identity(4), S), identity(4)) == 0.0
    # P-off-diagonal block at degree one: two sign flips cancel
    a = np.zeros((4, 4))
    a[0, 2], a[1, 3] = 1.0, -2.0
    g = from_terms({1: a})
    assert distance(apply_sigma(g, S), g) == 0.0


def test_sigma_fixed_pattern(rng):
    # even degrees commuting with P, odd degrees anticommuting: fixed loop
    P = S.sigma_matrix
    block = rng.standard_normal((4, 4))
    even = 0.5 * (block + P @ block @ P)
    odd = 0.5 * (block - P @ block @ P)
    g = from_terms({0: even, 2: even, 1: odd, -1: odd})
    assert fixed_residual(g, "sigma", S) < 1e-15
    assert fixed_residual(from_terms({1: even}), "sigma", S) > 0.1


def test_tau_reflection(rng):
    a = rng.standard_normal((4, 4))
    g = from_terms({1: a})
    out = apply_tau(g, S)
    Q = S.tau_matrix
    assert out.window == (-1, -1)
    np.testing.assert_allclose(out.coeff(-1), Q @ a @ Q, atol=1e-15)
    for _ in range(5):
        g = random_loop(rng)
        assert distance(apply_tau(apply_tau(g, S), S), g) == 0.0


def test_reality_fixed_examples(rng):
    real = from_terms({-1: rng.standard_normal((4, 4)),
                       2: rng.standard_normal((4, 4))})
    assert fixed_residual(real, "R2", S) == 0.0
    a = rng.standard_normal((4, 4))
    g = from_terms({1: 1j * a})  # (-1)^1 conj(iA) = iA
    assert fixed_residual(g, "R1", S) < 1e-15


@pytest.mark.parametrize("tag", ["R1", "R2", "Rm1", "Rm2", "Rhat1", "Rhat2"])
def test_reality_involutive(rng, tag):
    g = random_loop(rng, radius=3)
    twice = apply_reality(apply_reality(g, tag, S), tag, S)
    assert distance(twice, g) == 0.0


def test_reality_is_antilinear(rng):
    g = random_loop(rng)
    lhs = apply_reality(2j * g, "R2", S)
    rhs = -2j * apply_reality(g, "R2", S)
    assert distance(lhs, rhs) == 0.0


def test_involutions_preserve_coefficient_norms(rng):
    g = random_loop(rng, radius=3)
    for tag in ("sigma", "tau", "R1", "Rm1", "Rhat2"):
        out = apply_involution(g, tag, S)
        assert abs(out.wiener_norm() - g.wiener_norm()) < 1e-12


def test_sigma_tau_commute(rng):
    g = random_loop(rng, radius=3)
    lhs = apply_sigma(apply_tau(g, S), S)
    rhs = apply_tau(apply_sigma(g, S), S)
    assert distance(lhs, rhs) < 1e-14


def test_composite_first_kind_preserves_window(rng):
    # tau composed with the circle reality is of the first kind: it fixes the
    # degree window of positively supported loops instead of reflecting it
    g = from_terms({1: rng.standard_normal((4, 4)),
                    3: rng.standard_normal((4, 4))})
    out = apply_involution(g, ("tau", "Rm1"), S)
    assert out.window == g.window
    direct = apply_reality(g, "Rhat1", S)
    assert distance(out, direct) < 1e-14
    # second kind moves Lambda^+: nonzero tau residual
    assert fixed_residual(g, "tau", S) > 0.1


def test_fixed_residual_identity_and_family():
    assert fixed_residual(identity(4), ["sigma", "tau", "Rm1", "Rhat1"], S) == 0.0
    g = example_sphere_frame(0.37, -0.21)
    s = SymmetrySpec(2, 1, "Rm1")
    assert fixed_residual(g, ["sigma", "tau", "Rm1"], s) < 1e-12


def test_phi_membership_and_homomorphism(rng):
    sph = GroupSpec("orthogonal", 2, 1)
    hyp = GroupSpec("lorentz", 2, 1)
    from loopsplit.generators import random_orthogonal_loop, rng_for
    r = rng_for(7)
    x = random_orthogonal_loop(r, sph)
    y = random_orthogonal_loop(r, sph)
    fx = phi_map(x, "sphere_to_hyperbolic", S)
    assert group_residual(fx, hyp) < 1e-12
    assert distance(phi_map(fx, "hyperbolic_to_sphere", S), x) == 0.0
    lhs = phi_map(mul(x, y), "sphere_to_hyperbolic", S)
    rhs = mul(fx, phi_map(y, "sphere_to_hyperbolic", S))
    assert distance(lhs, rhs) < 1e-14
    assert distance(phi_map(identity(4), "sphere_to_hyperbolic", S), identity(4)) == 0.0


def test_dimension_mismatch():
    with pytest.raises(ls.DimensionMismatch):
        apply_sigma(identity(3), S)
