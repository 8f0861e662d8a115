import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treebsde import build_tree, norms, scenarios

from conftest import brute_y_norm, brute_z_norm


def slot_of(K=1, m=1, a=0.5, phi=None):
    model = scenarios.deterministic_grid(K=K, m=m, a=a, phi=phi)
    return build_tree(model).slot(0)


# -- hat_z ---------------------------------------------------------------------


def test_hat_z_zero_jump_is_zero():
    assert norms.hat_z([123.0], slot_of(a=0.0)) == 0.0


def test_hat_z_single_mark():
    assert norms.hat_z([1.0], slot_of(a=0.5)) == 0.5


def test_hat_z_weighted_sum():
    # plain-python oracle: da * sum(z * phi)
    slot = slot_of(m=2, a=1.0, phi=(0.3, 0.7))
    expected = 1.0 * (0.3 * 2.0 + 0.7 * (-1.0))
    assert norms.hat_z([2.0, -1.0], slot) == pytest.approx(expected, abs=1e-15)


def test_hat_z_linearity_exact_on_dyadic_data():
    slot = slot_of(m=2, a=0.5, phi=(0.5, 0.5))
    z, w = np.array([1.0, -2.0]), np.array([0.25, 4.0])
    a, b = 0.5, -2.0
    assert norms.hat_z(a * z + b * w, slot) == a * norms.hat_z(z, slot) + b * norms.hat_z(w, slot)


@settings(max_examples=50, deadline=None)
@given(z=st.lists(st.floats(-5, 5), min_size=2, max_size=2),
       w=st.lists(st.floats(-5, 5), min_size=2, max_size=2),
       a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_hat_z_linearity(z, w, a, b):
    slot = slot_of(m=2, a=0.7, phi=(0.4, 0.6))
    lhs = norms.hat_z(a * np.array(z) + b * np.array(w), slot)
    rhs = a * norms.hat_z(z, slot) + b * norms.hat_z(w, slot)
    assert lhs == pytest.approx(rhs, abs=1e-12)


# -- y_norm_sq -------------------------------------------------------------------


def test_y_norm_zero_process():
    tree = build_tree(scenarios.deterministic_grid(K=3, m=2, a=0.4))
    assert norms.y_norm_sq(norms.adapted_zeros(tree), tree, 2.0) == 0.0


@pytest.mark.parametrize("p,y", [(0.3, 2.0), (0.5, -1.5), (1.0, 0.7)])
def test_y_norm_single_slot(p, y):
    tree = build_tree(scenarios.deterministic_grid(K=1, m=1, a=p))
    Y = norms.adapted_zeros(tree)
    Y[0] = y
    assert norms.y_norm_sq(Y, tree, 0.0) == pytest.approx(p * y * y, rel=1e-15)


def test_y_norm_constant_one_is_expected_total_mass():
    rng = np.random.default_rng(3)
    tree = build_tree(scenarios.random_model(rng, K=4))
    # telescoping oracle: E[A_T] as a leafwise sum of the raw jump sizes
    expected = sum(float(tree.prob[leaf]) * float(tree.cum_A[leaf])
                   for leaf in range(tree.leaf_slice.start, tree.leaf_slice.stop))
    got = norms.y_norm_sq(np.ones(tree.n_nodes), tree, 0.0)
    assert got == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("seed", range(6))
def test_y_norm_matches_brute_leafwise_sum(seed):
    rng = np.random.default_rng(seed)
    tree = build_tree(scenarios.random_model(rng, max_horizon=4))
    Y = rng.normal(0, 1, tree.n_nodes)
    beta = float(rng.uniform(0, 3))
    assert norms.y_norm_sq(Y, tree, beta) == pytest.approx(
        brute_y_norm(Y, tree, beta), rel=1e-12)


def test_y_norm_continuous_part_closed_form():
    # pure continuous path: E[int E_s dA^c] = (e^{beta A^c_T} - 1)/beta
    model = scenarios.deterministic_grid(K=4, m=1, a=0.0)
    model = type(model)(marks=model.marks, grid=model.grid,
                        jump_size=model.jump_size, mark_law=model.mark_law,
                        continuous_increments=np.full(4, 0.25))
    tree = build_tree(model)
    beta = 2.0
    got = norms.y_norm_sq(np.ones(tree.n_nodes), tree, beta)
    assert got == pytest.approx((np.exp(beta) - 1.0) / beta, rel=1e-13)


# -- z_norm_sq --------------------------------------------------------------------


def test_z_norm_zero_field():
    tree = build_tree(scenarios.deterministic_grid(K=2, m=2, a=0.6))
    assert norms.z_norm_sq(norms.field_zeros(tree), tree, 1.0) == 0.0


@pytest.mark.parametrize("p", [0.25, 0.5, 0.9])
def test_z_norm_single_slot_bernoulli_variance(p):
    tree = build_tree(scenarios.deterministic_grid(K=1, m=1, a=p))
    Z = np.array([[1.0]])
    assert norms.z_norm_sq(Z, tree, 0.0) == pytest.approx(p * (1 - p), rel=1e-15)


def test_z_norm_unit_jump_shift_invariance():
    tree = build_tree(scenarios.deterministic_grid(K=1, m=3, a=1.0))
    rng = np.random.default_rng(0)
    Z = rng.normal(0, 1, (1, 3))
    shifted = Z + 4.2
    assert norms.z_norm_sq(Z, tree, 1.0) == pytest.approx(
        norms.z_norm_sq(shifted, tree, 1.0), rel=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_z_norm_matches_brute_outcome_enumeration(seed):
    rng = np.random.default_rng(seed)
    tree = build_tree(scenarios.random_model(rng, max_horizon=4))
    Z = rng.normal(0, 1, (tree.n_slots, tree.n_marks))
    beta = float(rng.uniform(0, 3))
    assert norms.z_norm_sq(Z, tree, beta) == pytest.approx(
        brute_z_norm(Z, tree, beta), rel=1e-12, abs=1e-13)


# -- lipschitz_seminorm -------------------------------------------------------------


def test_seminorm_zero():
    assert norms.lipschitz_seminorm(np.zeros(2), slot_of(m=2, a=0.5)) == 0.0


def test_seminorm_reduces_to_plain_l2_when_no_jump_mass():
    slot = slot_of(m=2, a=0.0, phi=(0.25, 0.75))
    dz = np.array([2.0, -1.0])
    expected = np.sqrt(0.25 * 4.0 + 0.75 * 1.0)
    assert norms.lipschitz_seminorm(dz, slot) == pytest.approx(expected, rel=1e-15)


def test_seminorm_unit_jump_centered_vector():
    slot = slot_of(m=2, a=1.0, phi=(0.5, 0.5))
    assert norms.lipschitz_seminorm([1.0, -1.0], slot) == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("seed", range(6))
def test_seminorm_squared_times_da_is_slot_contribution(seed):
    rng = np.random.default_rng(seed)
    tree = build_tree(scenarios.random_model(rng, max_horizon=4))
    Z = rng.normal(0, 1, (tree.n_slots, tree.n_marks))
    contrib = norms.slot_z_contribution(Z, tree)
    for s in range(tree.n_slots):
        slot = tree.slot(s)
        if slot.delta_A > 0:
            sem = norms.lipschitz_seminorm(Z[s], slot)
            assert sem ** 2 * slot.delta_A == pytest.approx(contrib[s], rel=1e-12, abs=1e-14)


# -- jump_second_moment ---------------------------------------------------------------


def test_jump_second_moment_zero_jump():
    assert norms.jump_second_moment([3.0], slot_of(a=0.0)) == 0.0


@pytest.mark.parametrize("p", [0.1, 0.5, 0.75])
def test_jump_second_moment_bernoulli(p):
    assert norms.jump_second_moment([1.0], slot_of(a=p)) == pytest.approx(
        p * (1 - p), rel=1e-15)


def test_jump_second_moment_equals_slot_integrand():
    rng = np.random.default_rng(9)
    tree = build_tree(scenarios.random_model(rng, K=3))
    Z = rng.normal(0, 1, (tree.n_slots, tree.n_marks))
    contrib = norms.slot_z_contribution(Z, tree)
    for s in range(tree.n_slots):
        assert norms.jump_second_moment(Z[s], tree.slot(s)) == pytest.approx(
            contrib[s], rel=1e-13, abs=1e-15)


# -- mixed_norm_sq ----------------------------------------------------------------------


def test_mixed_norm_b_zero_is_z_norm():
    rng = np.random.default_rng(4)
    tree = build_tree(scenarios.random_model(rng, K=3))
    Y = rng.normal(0, 1, tree.n_nodes)
    Z = rng.normal(0, 1, (tree.n_slots, tree.n_marks))
    assert norms.mixed_norm_sq(Y, Z, tree, 1.0, b=0.0) == pytest.approx(
        norms.z_norm_sq(Z, tree, 1.0), rel=1e-14)


def test_mixed_norm_zero_pair():
    tree = build_tree(scenarios.deterministic_grid(K=2, m=1, a=0.5))
    assert norms.mixed_norm_sq(norms.adapted_zeros(tree),
                               norms.field_zeros(tree), tree, 1.0) == 0.0


def test_mixed_norm_unit_b_splits_into_y_and_z_norms():
    rng = np.random.default_rng(8)
    tree = build_tree(scenarios.random_model(rng, K=4))
    Y = rng.normal(0, 1, tree.n_nodes)
    Z = rng.normal(0, 1, (tree.n_slots, tree.n_marks))
    assert norms.mixed_norm_sq(Y, Z, tree, 0.0, b=1.0) == pytest.approx(
        norms.y_norm_sq(Y, tree, 0.0) + norms.z_norm_sq(Z, tree, 0.0), rel=1e-13)


@settings(max_examples=30, deadline=None)
@given(c=st.floats(-4, 4), seed=st.integers(0, 50))
def test_norms_are_homogeneous_of_degree_two(c, seed):
    rng = np.random.default_rng(seed)
    tree = build_tree(scenarios.random_model(rng, max_horizon=3))
    Y = rng.normal(0, 1, tree.n_nodes)
    Z = rng.normal(0, 1, (tree.n_slots, tree.n_marks))
    base = norms.mixed_norm_sq(Y, Z, tree, 1.0)
    assert norms.mixed_norm_sq(c * Y, c * Z, tree, 1.0) == pytest.approx(
        c * c * base, rel=1e-10, abs=1e-12)


# -- norm equivalence and canonicalization ------------------------------------------------


@pytest.mark.parametrize("seed", range(8))
def test_two_sided_norm_equivalence_per_slot(seed):
    # oracle: expand the contribution to dA*(sum z^2 phi - dA*mean^2) and
    # use mean^2 <= sum z^2 phi
    rng = np.random.default_rng(seed)
    tree = build_tree(scenarios.random_model(rng, K=3, include_unit=False))
    gamma = 1.0 - float(tree.slot_dA.max()) if tree.n_slots else 1.0
    Z = rng.normal(0, 1, (tree.n_slots, tree.n_marks))
    contrib = norms.slot_z_contribution(Z, tree)
    for s in range(tree.n_slots):
        da = tree.slot_dA[s]
        full = da * float(np.dot(Z[s] ** 2, tree.slot_phi[s]))
        assert gamma * full <= contrib[s] + 1e-12
        assert contrib[s] <= full + 1e-12


def test_canonical_field_centers_and_zeroes():
    rng = np.random.default_rng(12)

    def rule(k, hist):
        return [0.0, 1.0, 0.5][k]

    tree = build_tree(scenarios.predictable_random_jumps(K=3, m=2, rule=rule))
    Z = rng.normal(0, 1, (tree.n_slots, tree.n_marks))
    C = norms.canonical_field(Z, tree)
    for s in range(tree.n_slots):
        da = tree.slot_dA[s]
        if da == 0.0:
            assert np.all(C[s] == 0.0)
        elif da == 1.0:
            assert abs(np.dot(C[s], tree.slot_phi[s])) < 1e-14
    assert norms.z_norm_sq(C, tree, 1.3) == pytest.approx(
        norms.z_norm_sq(Z, tree, 1.3), rel=1e-12, abs=1e-14)
