import math

import numpy as np
import pytest
from equilibria.solver import ArcError, ArcSet, EquilibriumError, parse_arcs
from equilibria.solver._arcs import TWO_PI, arcs_from_runs, canonical_angle
from equilibria.solver._branch import SqrtRBranch
from equilibria.solver._measures import DensityProfile, DiscreteMeasure
from equilibria.solver._quadrature import (
    conjugate_function,
    log_kernel_potential,
    pv_cauchy_on_arcs,
)


def grid(n):
    return TWO_PI * np.arange(n) / n


def left_half_arc():
    # a = i, b = -i: R(z) = z^2 + 1 with the cut through -1
    return ArcSet.from_pairs([(math.pi / 2.0, 3.0 * math.pi / 2.0)])


def random_arcs(k, seed):
    rng = np.random.default_rng(seed)
    while True:
        cuts = np.sort(rng.uniform(0.0, TWO_PI, 2 * k))
        if np.min(np.diff(np.append(cuts, cuts[0] + TWO_PI))) > 0.2:
            return ArcSet(cuts.reshape(k, 2))


def points_off_circle(n, seed):
    rng = np.random.default_rng(seed)
    radius = np.where(
        rng.uniform(size=n) < 0.5, rng.uniform(0.1, 0.8, n), rng.uniform(1.25, 4.0, n)
    )
    return radius * np.exp(1j * rng.uniform(0.0, TWO_PI, n))


def semicircle_profile(centre, halfwidth, nodes=64):
    support = ArcSet.from_pairs([(centre - halfwidth, centre + halfwidth)])

    def density(theta):
        inside = np.clip(halfwidth**2 - (theta - centre) ** 2, 0.0, None)
        return 2.0 / (math.pi * halfwidth**2) * np.sqrt(inside)

    return DensityProfile.from_function(support, density, nodes)


def semicircle_log_moment(x, halfwidth):
    """int log|x - t| of the semicircle law on [-h, h]."""
    h2 = halfwidth**2
    if abs(x) <= halfwidth:
        return x**2 / h2 - 0.5 + math.log(halfwidth / 2.0)
    root = math.sqrt(x**2 - h2)
    return x**2 / h2 - abs(x) * root / h2 - 0.5 + math.log((abs(x) + root) / 2.0)


def test_canonical_angle_range():
    values = canonical_angle(np.array([-0.5, 0.0, TWO_PI, 7.0]))
    assert np.all((values >= 0.0) & (values < TWO_PI))
    assert values[0] == pytest.approx(TWO_PI - 0.5)


def test_arcs_are_ordered_and_unwrapped():
    arcs = ArcSet.from_pairs([(4.0, 5.0), (6.0, 0.5)])
    assert arcs.k == 2
    assert arcs.pairs()[0] == (4.0, 5.0)
    alpha, beta = arcs.pairs()[1]
    assert alpha == pytest.approx(6.0)
    assert beta == pytest.approx(0.5 + TWO_PI)
    assert arcs.contains(0.25)[0]
    assert not arcs.contains(3.0)[0]


def test_gaps_close_the_circle():
    arcs = ArcSet([[1.0, 2.0], [3.0, 4.0]])
    gaps = arcs.gaps()
    np.testing.assert_allclose(gaps, [[2.0, 3.0], [4.0, 1.0 + TWO_PI]])
    assert arcs.measure() + np.sum(gaps[:, 1] - gaps[:, 0]) == pytest.approx(TWO_PI)


@pytest.mark.parametrize(
    "endpoints",
    [
        [[1.0, 0.5]],
        [[1.0, 2.0], [1.5, 3.0]],
        [[0.0, 7.0]],
        [[0.0, float("inf")]],
        [],
    ],
)
def test_invalid_arcs(endpoints):
    with pytest.raises(ArcError):
        ArcSet(endpoints)


def test_full_circle_value():
    full = ArcSet.full_circle()
    assert full.is_full
    assert full.to_json() == "full"
    assert ArcSet.from_json("full") == full
    assert full.contains(np.array([0.0, 3.0])).all()
    assert full.gaps().shape == (0, 2)


def test_parse_arcs():
    arcs = parse_arcs("1, 2; 3,4")
    assert arcs == ArcSet([[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(ArcError):
        parse_arcs("1;2")
    with pytest.raises(ArcError):
        parse_arcs("1,x")


def test_rotation_moves_every_endpoint():
    arcs = ArcSet([[1.0, 2.0], [3.0, 4.0]])
    rotated = arcs.rotated(0.5)
    np.testing.assert_allclose(rotated.endpoints, arcs.endpoints + 0.5)


def test_runs_wrap_into_one_arc():
    arcs = arcs_from_runs([(60, 67)], 64)
    assert arcs.k == 1
    assert arcs.contains(0.0)[0]
    assert arcs_from_runs([(0, 63)], 64).is_full
    with pytest.raises(ArcError, match="Empty support"):
        arcs_from_runs([], 64)


def test_branch_value_at_origin():
    branch = SqrtRBranch(left_half_arc())
    assert branch.offcut(0j) == pytest.approx(1.0, abs=1e-12)


def test_branch_normalized_at_infinity():
    branch = SqrtRBranch(left_half_arc())
    value = branch.offcut(1e6 + 0j)
    assert abs(value / 1e6 - 1.0) < 1e-6


@pytest.mark.parametrize("k", [1, 2, 3])
def test_branch_squares_to_r(k):
    branch = SqrtRBranch(random_arcs(k, seed=k))
    z = points_off_circle(100, seed=10 + k)
    root = branch.offcut(z)
    np.testing.assert_allclose(root**2, branch.R(z), rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_branch_behaves_like_z_to_the_k(k):
    branch = SqrtRBranch(random_arcs(k, seed=20 + k))
    z = 1e6 * np.exp(1j * np.array([0.3, 2.0, 4.5]))
    np.testing.assert_allclose(branch.offcut(z) / z**k, 1.0, atol=1e-5)


def test_boundary_value_on_the_cut():
    branch = SqrtRBranch(left_half_arc())
    value = branch.boundary(math.pi)
    assert value**2 == pytest.approx(2.0, abs=1e-12)
    assert value == pytest.approx(branch.offcut(-0.999 + 0j), abs=1e-2)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_boundary_values_are_radial_limits(k):
    arcs = random_arcs(k, seed=30 + k)
    branch = SqrtRBranch(arcs)
    s = np.linspace(0.5, math.pi - 0.5, 8)
    for index in range(k):
        theta = arcs.midpoints[index] + arcs.halfwidths[index] * np.cos(s)
        zeta = np.exp(1j * theta)
        inside = branch.boundary(theta)
        outside = branch.boundary(theta, side="outside")
        np.testing.assert_allclose(inside, -outside)
        np.testing.assert_allclose(inside, branch.offcut(0.9999 * zeta), atol=1e-2)
        np.testing.assert_allclose(outside, branch.offcut(1.0001 * zeta), atol=1e-2)


def test_boundary_vanishes_like_a_square_root():
    branch = SqrtRBranch(left_half_arc())
    near = abs(branch.boundary(math.pi / 2.0 + 1e-3))
    nearer = abs(branch.boundary(math.pi / 2.0 + 1e-5))
    assert 0.01 < near < 0.1
    assert nearer / near == pytest.approx(0.1, rel=1e-2)


def test_boundary_domain_errors():
    branch = SqrtRBranch(left_half_arc())
    with pytest.raises(ArcError, match="endpoint"):
        branch.boundary(math.pi / 2.0)
    with pytest.raises(ArcError):
        branch.boundary(0.0)
    with pytest.raises(ArcError, match="on-cut"):
        branch.offcut(-1.0 + 0j)
    with pytest.raises(ArcError):
        SqrtRBranch(ArcSet.full_circle())


def test_conjugate_of_constant_is_zero():
    assert np.max(np.abs(conjugate_function(np.full(64, 3.0)))) < 1e-14


def test_conjugate_maps_cosine_to_sine():
    theta = grid(128)
    np.testing.assert_allclose(
        conjugate_function(np.cos(theta)), np.sin(theta), atol=1e-12
    )
    np.testing.assert_allclose(
        conjugate_function(np.cos(3.0 * theta) + 2.0 * np.sin(2.0 * theta)),
        np.sin(3.0 * theta) - 2.0 * np.cos(2.0 * theta),
        atol=1e-12,
    )


def test_conjugate_applied_twice_negates_the_oscillation():
    theta = grid(256)
    rng = np.random.default_rng(7)
    h = 0.7 + sum(
        a * np.cos(m * theta) + b * np.sin(m * theta)
        for m, (a, b) in enumerate(rng.normal(size=(20, 2)), start=1)
    )
    twice = conjugate_function(conjugate_function(h))
    np.testing.assert_allclose(twice, -h + np.mean(h), atol=1e-10)


@pytest.mark.parametrize("n", [100, 4])
def test_conjugate_needs_power_of_two(n):
    with pytest.raises(EquilibriumError, match="power-of-two"):
        conjugate_function(np.ones(n))


def test_cauchy_integral_of_zero():
    branch = SqrtRBranch(left_half_arc())
    targets = np.array([0.3 + 0.1j, -1.0 + 0j, 1.0 + 0j, 2.0j])
    values = pv_cauchy_on_arcs(
        branch, lambda t: np.zeros(t.shape, dtype=complex), targets
    )
    assert np.max(np.abs(values)) == 0.0


def test_cauchy_integral_is_continuous_across_a_gap():
    branch = SqrtRBranch(left_half_arc())

    def g(theta):
        return np.exp(1j * theta) + 0.5

    on_gap = pv_cauchy_on_arcs(branch, g, 1.0 + 0j)
    inside = pv_cauchy_on_arcs(branch, g, 0.999 + 0j)
    assert abs(on_gap - inside) < 1e-2 * max(1.0, abs(on_gap))


def test_principal_value_averages_the_one_sided_limits():
    branch = SqrtRBranch(left_half_arc())

    def g(theta):
        return np.cos(theta) + 1j * np.sin(2.0 * theta) + 1.0

    theta0 = 2.8
    zeta = np.exp(1j * theta0)
    pv = pv_cauchy_on_arcs(branch, g, zeta)
    inside = pv_cauchy_on_arcs(branch, g, 0.997 * zeta)
    outside = pv_cauchy_on_arcs(branch, g, 1.003 * zeta)
    average = (inside + outside) / 2.0
    assert abs(pv - average) < 5e-2 * max(1.0, abs(pv))


def test_cauchy_integral_rejects_endpoints():
    branch = SqrtRBranch(left_half_arc())
    with pytest.raises(ArcError, match="endpoint"):
        pv_cauchy_on_arcs(branch, lambda t: np.ones(t.shape, dtype=complex), 1j)


def test_uniform_density_has_zero_potential():
    profile = DensityProfile.on_circle(np.full(64, 1.0 / TWO_PI))
    potential = log_kernel_potential(profile, np.linspace(0.0, 6.0, 13))
    assert np.max(np.abs(potential)) < 1e-14


def test_narrow_bump_acts_like_a_point_mass():
    profile = semicircle_profile(1.0, 5e-4)
    assert profile.mass() == pytest.approx(1.0, abs=1e-12)
    theta = 4.0
    expected = -math.log(abs(2.0 * math.sin((theta - 1.0) / 2.0)))
    assert log_kernel_potential(profile, theta) == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("offset", [0.0, 0.5, -0.8, 1.5, -1.9])
def test_potential_near_and_on_a_short_arc(offset):
    halfwidth = 0.01
    profile = semicircle_profile(1.0, halfwidth)
    x = offset * halfwidth
    expected = -semicircle_log_moment(x, halfwidth)
    assert log_kernel_potential(profile, 1.0 + x) == pytest.approx(expected, abs=5e-5)


def test_discrete_potential_is_a_direct_sum():
    weights = np.random.default_rng(3).dirichlet(np.ones(32))
    measure = DiscreteMeasure(weights)
    theta = 0.05
    chord = np.abs(2.0 * np.sin((theta - measure.theta) / 2.0))
    expected = -np.sum(weights * np.log(chord))
    assert log_kernel_potential(measure, theta) == pytest.approx(expected, abs=1e-12)
    with pytest.raises(ArcError, match="grid node"):
        log_kernel_potential(measure, measure.theta[3])


def test_potential_needs_nonnegative_density():
    profile = DensityProfile.on_circle(np.cos(grid(64)))
    with pytest.raises(ArcError, match="nonnegative"):
        log_kernel_potential(profile, 0.3)
    assert math.isfinite(log_kernel_potential(profile, 0.3, signed=True))
