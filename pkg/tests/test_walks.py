"""Group ring arithmetic and random walk series.

Oracles used here and nowhere in the package: central binomial coefficients
for rank-1 and rank-2 lattice walks, a radial birth-death chain for the
regular tree, explicit path enumeration with matrix products for the
nilpotent family, and numeric double integrals for lattice constants.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from groupforests import (
    FamilyMismatchError,
    GroupFamily,
    GroupRingElement,
    NotWellBalancedError,
    ResourceLimitError,
    UnsupportedFamilyError,
    WindowError,
    convolve,
    convolve_powers,
    format_group_ring,
    formal_inverse_residual,
    green_truncation,
    homoclinic_point,
    is_well_balanced,
    laplacian_element,
    parse_group_ring,
    require_well_balanced,
    return_probability,
    return_series,
    spectral_radius_probe,
    tree_entropy,
    walk_distribution,
)
from groupforests.groups import GroupWord, parse_word

Z = GroupFamily.free_abelian(1)
Z2 = GroupFamily.free_abelian(2)
Z3 = GroupFamily.free_abelian(3)
F2 = GroupFamily.free(2)
F3 = GroupFamily.free(3)
H = GroupFamily.heisenberg()


def elt(family, text):
    return parse_group_ring(family, text)


# --- oracles ---


def binomial_return_oracle(k):
    """Lazy walker on Z: exact return probability C(k, k/2) / 2^k."""
    if k % 2:
        return Fraction(0)
    return Fraction(math.comb(k, k // 2), 2**k)


def planar_return_oracle(k):
    """Uniform 4-step walk on the square lattice: (C(k, k/2) / 2^k)^2."""
    if k % 2:
        return Fraction(0)
    return binomial_return_oracle(k) ** 2


def radial_chain_oracle(K):
    """Distance-to-origin chain of the simple walk on the 4-regular tree.

    From 0 the walker must step out; from n >= 1 it steps out with
    probability 3/4 and back with probability 1/4.  Exact fractions.
    """
    dist = {0: Fraction(1)}
    out = [Fraction(1)]
    for _ in range(K):
        nxt = {}
        for d, p in dist.items():
            if d == 0:
                nxt[1] = nxt.get(1, Fraction(0)) + p
            else:
                nxt[d + 1] = nxt.get(d + 1, Fraction(0)) + p * Fraction(3, 4)
                nxt[d - 1] = nxt.get(d - 1, Fraction(0)) + p * Fraction(1, 4)
        dist = nxt
        out.append(dist.get(0, Fraction(0)))
    return out


HEIS_MATS = {
    1: np.array([[1, 1, 0], [0, 1, 0], [0, 0, 1]]),
    -1: np.array([[1, -1, 0], [0, 1, 0], [0, 0, 1]]),
    2: np.array([[1, 0, 0], [0, 1, 1], [0, 0, 1]]),
    -2: np.array([[1, 0, 0], [0, 1, -1], [0, 0, 1]]),
}


def nilpotent_path_oracle(k):
    """Exact return probability of the uniform 4-generator walk in the
    integer Heisenberg group, by brute force over all 4^k paths realized
    as unitriangular matrix products."""
    letters = list(HEIS_MATS)
    count = 0
    total = 0
    stack = [(np.eye(3, dtype=np.int64), 0)]
    while stack:
        m, depth = stack.pop()
        if depth == k:
            total += 1
            if np.array_equal(m, np.eye(3, dtype=np.int64)):
                count += 1
            continue
        for l in letters:
            stack.append((m @ HEIS_MATS[l], depth + 1))
    return Fraction(count, total)


# --- group ring arithmetic ---


class TestGroupRing:
    def test_parse_and_format_roundtrip(self):
        f = elt(F2, "e 4\na -1\nA -1\nb -1\nB -1")
        again = parse_group_ring(F2, format_group_ring(f))
        assert again == f

    def test_parse_accumulates_and_skips_comments(self):
        f = elt(Z, "# cost\ne 1\na -2\n\na 1  # partial cancel")
        assert f == elt(Z, "e 1\na -1")

    def test_parse_rational_coefficients(self):
        f = elt(Z, "e 1/2\na 1/4\nA 0.25")
        assert f.coefficient(parse_word(Z, "a")) == Fraction(1, 4)
        assert f.coefficient(parse_word(Z, "A")) == Fraction(1, 4)
        assert sum(c for _, c in f.items()) == 1

    def test_parse_rejects_bare_word(self):
        with pytest.raises(ValueError):
            parse_group_ring(Z, "a")

    def test_parse_rejects_unknown_letter(self):
        with pytest.raises(ValueError):
            parse_group_ring(Z, "b 1")

    def test_difference_of_units(self):
        # (1 - a)(1 + a) = 1 - a^2
        one_minus = elt(Z, "e 1\na -1")
        one_plus = elt(Z, "e 1\na 1")
        assert one_minus * one_plus == elt(Z, "e 1\na a -1")

    def test_identity_element_is_neutral(self):
        delta = elt(F2, "e 1")
        f = elt(F2, "a b 2\nB 3\ne -1")
        assert delta * f == f
        assert f * delta == f

    def test_noncommutative_product_order(self):
        a = elt(F2, "a 1")
        b = elt(F2, "b 1")
        assert a * b == elt(F2, "a b 1")
        assert a * b != b * a

    def test_adjoint_reverses_and_inverts(self):
        f = elt(F2, "a b 2\nb -3")
        adj = f.adjoint()
        assert adj == elt(F2, "B A 2\nB -3")
        assert adj.adjoint() == f

    def test_adjoint_fixes_balanced_element(self):
        f = laplacian_element(F2)
        assert f.adjoint() == f
        assert f.is_self_adjoint()

    def test_scalar_and_linear_ops(self):
        f = elt(Z, "e 2\na -1\nA -1")
        g = elt(Z, "a 1\nA 1")
        assert f + g == elt(Z, "e 2")
        assert f - f == GroupRingElement(Z, {})
        assert f * 2 == elt(Z, "e 4\na -2\nA -2")
        assert (-f).identity_coefficient == -2

    def test_associativity_spot_check(self):
        f = elt(F2, "a 1\nB 2")
        g = elt(F2, "b 1\ne -1")
        h = elt(F2, "A 3\na b 1")
        assert (f * g) * h == f * (g * h)

    def test_family_mismatch(self):
        with pytest.raises(FamilyMismatchError):
            convolve(elt(Z, "e 1"), elt(Z2, "e 1"))

    def test_one_norm_and_radius(self):
        f = elt(F2, "e 4\na -1\nA -1\nb -1\nB -1")
        assert f.one_norm() == 8
        assert f.support_letter_radius() == 1
        assert elt(F2, "a b A 1").support_letter_radius() == 3

    def test_integerness(self):
        assert elt(Z, "e 2\na -2").is_integer()
        assert not elt(Z, "e 1/2").is_integer()


class TestWellBalanced:
    def test_standard_elements_pass(self):
        for fam in (Z, Z2, F2, F3, H):
            report = is_well_balanced(laplacian_element(fam))
            assert report.ok, report.violations

    def test_asymmetric_fails_adjoint_only(self):
        report = is_well_balanced(elt(Z, "e 2\na -2"))
        assert not report.ok
        assert report.integer_ok and report.sum_ok and report.sign_ok
        assert not report.adjoint_ok

    def test_nonzero_sum_fails(self):
        assert not is_well_balanced(elt(Z, "e 2\na -1")).sum_ok

    def test_positive_off_identity_fails(self):
        assert not is_well_balanced(elt(Z, "e -2\na 1\nA 1")).sign_ok

    def test_fractional_fails(self):
        assert not is_well_balanced(elt(Z, "e 1\na -1/2\nA -1/2")).integer_ok

    def test_generation_failure_lattice(self):
        # doubled steps only reach the even sublattice
        f = elt(Z2, "e 8\na a -2\nA A -2\nb b -2\nB B -2")
        report = is_well_balanced(f)
        assert not report.generation_ok
        with pytest.raises(NotWellBalancedError):
            require_well_balanced(f)

    def test_generation_failure_missing_letter(self):
        report = is_well_balanced(elt(F2, "e 2\na -1\nA -1"))
        assert not report.generation_ok

    def test_long_range_generation_passes(self):
        # steps 2 and 3 together generate the integers
        f = elt(Z, "e 4\na a -1\nA A -1\na a a -1\nA A A -1")
        assert is_well_balanced(f).ok


class TestWalkDistribution:
    def test_step_distribution(self):
        mu = walk_distribution(laplacian_element(F2))
        assert mu.mass() == 1
        assert mu.at_identity == 0
        assert mu.coefficient(parse_word(F2, "a")) == Fraction(1, 4)
        mu.validate()

    def test_weighted_steps(self):
        mu = walk_distribution(elt(Z, "e 6\na -2\nA -2\na a -1\nA A -1"))
        assert mu.coefficient(parse_word(Z, "a")) == Fraction(1, 3)
        assert mu.coefficient(parse_word(Z, "a a")) == Fraction(1, 6)
        assert mu.mass() == 1

    def test_powers_stay_probability_and_symmetric(self):
        f = laplacian_element(F2)
        for k, power in zip(range(4), convolve_powers(f, 3)):
            assert power.step_count == k
            assert power.mass() == 1
            elem = power.as_group_ring_element()
            for w, c in elem.items():
                assert c >= 0
                assert elem.coefficient(w.inverse()) == c


# --- return series against oracles ---


class TestReturnSeries:
    def test_exact_rank_one_returns(self):
        f = laplacian_element(Z)
        for k in range(9):
            assert return_probability(f, k) == binomial_return_oracle(k)

    def test_exact_planar_returns(self):
        f = laplacian_element(Z2)
        for k in range(7):
            assert return_probability(f, k) == planar_return_oracle(k)

    def test_exact_tree_returns(self):
        f = laplacian_element(F2)
        oracle = radial_chain_oracle(8)
        for k in range(9):
            assert return_probability(f, k) == oracle[k]

    def test_exact_nilpotent_returns(self):
        f = laplacian_element(H)
        for k in (2, 4, 6):
            assert return_probability(f, k) == nilpotent_path_oracle(k)

    def test_return_probability_needs_nonnegative_k(self):
        with pytest.raises(ValueError):
            return_probability(laplacian_element(Z), -1)

    def test_support_cap(self):
        with pytest.raises(ResourceLimitError):
            return_probability(laplacian_element(F2), 40, max_support=100)

    def test_grid_engine_matches_exact(self):
        f = laplacian_element(Z)
        series = return_series(f, 50, engine="grid")
        for k in (0, 1, 2, 10, 25, 50):
            assert abs(series.values[k] - float(binomial_return_oracle(k))) < 1e-13

    def test_tree_engine_matches_oracle(self):
        f = laplacian_element(F2)
        series = return_series(f, 80, engine="tree")
        oracle = radial_chain_oracle(80)
        for k in range(81):
            assert abs(series.values[k] - float(oracle[k])) < 1e-13

    def test_tree_engine_matches_direct_weighted(self):
        # unequal generator weights exercise the multi-weight passage arrays
        f = elt(F2, "e 6\na -2\nA -2\nb -1\nB -1")
        tree = return_series(f, 8, engine="tree").values
        direct = return_series(f, 8, engine="direct").values
        assert np.allclose(tree, direct, atol=1e-15)

    def test_rank_three_free_engines_agree(self):
        f = laplacian_element(F3)
        tree = return_series(f, 6, engine="tree").values
        direct = return_series(f, 6, engine="direct").values
        assert np.allclose(tree, direct, atol=1e-15)

    def test_planar_grid_matches_direct(self):
        f = laplacian_element(Z2)
        grid = return_series(f, 12, engine="grid").values
        direct = return_series(f, 12, engine="direct").values
        assert np.allclose(grid, direct, atol=1e-14)

    def test_auto_engine_selection(self):
        assert return_series(laplacian_element(Z2), 2).engine == "grid"
        assert return_series(laplacian_element(F2), 2).engine == "tree"
        assert return_series(laplacian_element(H), 2).engine == "direct"
        # long-range free support falls back to the direct engine
        f = elt(F2, "e 6\na -1\nA -1\nb -1\nB -1\na b -1\nB A -1")
        assert return_series(f, 2).engine == "direct"

    def test_tree_engine_rejects_long_range(self):
        f = elt(F2, "e 6\na -1\nA -1\nb -1\nB -1\na b -1\nB A -1")
        with pytest.raises(UnsupportedFamilyError):
            return_series(f, 4, engine="tree")

    def test_grid_engine_rejects_free(self):
        with pytest.raises(UnsupportedFamilyError):
            return_series(laplacian_element(F2), 4, engine="grid")

    def test_small_grid_wrap_is_flagged_and_upper_bounds(self):
        f = laplacian_element(Z)
        series = return_series(f, 30, engine="grid", grid_size=8)
        assert series.alias_free_through == 7
        assert series.notes
        for k in range(8):
            assert abs(series.values[k] - float(binomial_return_oracle(k))) < 1e-15
        # wrapped mass only adds probability
        for k in range(8, 31):
            assert series.values[k] >= float(binomial_return_oracle(k)) - 1e-15

    def test_rejects_unbalanced_input(self):
        with pytest.raises(NotWellBalancedError):
            return_series(elt(Z, "e 2\na -2"), 4)

    def test_rejects_unknown_engine(self):
        with pytest.raises(ValueError):
            return_series(laplacian_element(Z), 4, engine="magic")


# --- tree entropy ---


class TestTreeEntropy:
    def test_regular_tree_closed_form(self):
        # 4-regular tree: per-site spanning constant log(27/8)
        res = tree_entropy(laplacian_element(F2), K=80)
        assert abs(res.value - math.log(27 / 8)) < 1e-6

    def test_matches_radial_oracle_term_by_term(self):
        res = tree_entropy(laplacian_element(F2), K=40)
        oracle = radial_chain_oracle(40)
        expected = math.log(4) - math.fsum(
            float(oracle[k]) / k for k in range(1, 41)
        )
        assert abs(res.value - expected) < 1e-12

    def test_rank_one_series_value(self):
        # partial sums: log 2 - sum C(2j,j)/(2j 4^j); slow but computable
        K = 400
        res = tree_entropy(laplacian_element(Z), K=K)
        expected = math.log(2) - math.fsum(
            float(binomial_return_oracle(k)) / k for k in range(1, K + 1)
        )
        assert abs(res.value - expected) < 1e-12

    def test_partials_monotone_nonincreasing(self):
        res = tree_entropy(laplacian_element(Z), K=200)
        partials = res.partials
        assert np.all(np.diff(partials) <= 1e-12)
        assert abs(partials[-1] - res.value) < 1e-12

    def test_square_lattice_constant(self):
        # double integral of log(4 - 2cos x - 2cos y) over the torus
        scipy_integrate = pytest.importorskip("scipy.integrate")
        target, err = scipy_integrate.dblquad(
            lambda y, x: math.log(4 - 2 * math.cos(x) - 2 * math.cos(y)),
            1e-12,
            2 * math.pi,
            1e-12,
            2 * math.pi,
        )
        target /= (2 * math.pi) ** 2
        assert err < 1e-6
        # the integral is 4G/pi for Catalan's constant G
        assert abs(target - 1.1662436161) < 1e-6
        res = tree_entropy(laplacian_element(Z2), K=2000)
        assert abs(res.value - target) < 1e-3

    def test_engine_consistency_small(self):
        f = laplacian_element(Z)
        a = tree_entropy(f, K=30, engine="grid").value
        b = tree_entropy(f, K=30, engine="direct").value
        assert abs(a - b) < 1e-13

    def test_float_conversion(self):
        res = tree_entropy(laplacian_element(F2), K=10)
        assert float(res) == res.value

    def test_tail_estimate_reasonable(self):
        # for the transient tree walk the tail estimate should bound the
        # actual remaining correction to the closed form
        res = tree_entropy(laplacian_element(F2), K=40)
        actual_gap = abs(res.value - math.log(27 / 8))
        assert res.tail_estimate >= actual_gap * 0.5
        assert res.tail_estimate < 1e-3


# --- truncated Green's function ---


class TestGreenTruncation:
    def test_tree_identity_value(self):
        # G(e) for the 4-regular tree equals 3/(2 fe) = 3/8 at fe = 4
        g = green_truncation(laplacian_element(F2), K=60, radius=2)
        assert abs(g.at_identity - 3 / 8) < 1e-5

    def test_engines_agree_on_window(self):
        # K = 8 keeps the direct engine's support under its cap
        f = laplacian_element(F2)
        tree = green_truncation(f, K=8, radius=2, engine="tree")
        direct = green_truncation(f, K=8, radius=2, engine="direct")
        assert set(tree.values) == set(direct.values)
        for key, v in tree.values.items():
            assert abs(v - direct.values[key]) < 1e-12

    def test_truncation_residual_identity(self):
        # omega_K * f = delta_e - mu^{K+1}, so the window residual must equal
        # the corresponding power coefficients exactly
        f = laplacian_element(F2)
        K = 8
        g = green_truncation(f, K=K, radius=2, engine="tree")
        powers = list(convolve_powers(f, K + 1))
        latest = powers[-1]
        worst = 0.0
        for w in (parse_word(F2, t) for t in ("e", "a", "b", "A", "B")):
            worst = max(worst, abs(float(latest.coefficient(w))))
        assert abs(formal_inverse_residual(g, 1) - worst) < 1e-12

    def test_residual_shrinks_with_order(self):
        # odd K so the residual (mu^{K+1})_e is an even power, hence nonzero
        f = laplacian_element(F2)
        resid = [
            formal_inverse_residual(green_truncation(f, K=K, radius=1), 0)
            for K in (9, 19, 39)
        ]
        assert resid[0] > resid[1] > resid[2]
        assert resid[2] < 1e-4

    def test_residual_needs_margin(self):
        g = green_truncation(laplacian_element(F2), K=10, radius=1)
        with pytest.raises(WindowError):
            formal_inverse_residual(g, 1)

    def test_window_lookup(self):
        g = green_truncation(laplacian_element(F2), K=10, radius=1)
        assert g.value("e") == g.at_identity
        assert g.value(parse_word(F2, "a")) == g.value("a")
        with pytest.raises(WindowError):
            g.value("a b")

    def test_symmetric_values(self):
        g = green_truncation(laplacian_element(F2), K=20, radius=1)
        assert abs(g.value("a") - g.value("A")) < 1e-15
        assert abs(g.value("a") - g.value("b")) < 1e-15

    def test_recurrent_family_warns(self):
        with pytest.warns(UserWarning):
            g = green_truncation(laplacian_element(Z), K=10, radius=1)
        assert g.warnings

    def test_transient_lattice_grid(self):
        f = laplacian_element(Z3)
        g = green_truncation(f, K=60, radius=1)
        assert g.engine == "grid"
        assert not g.warnings
        assert formal_inverse_residual(g, 0) < 5e-3
        assert g.value("a") == pytest.approx(g.value("A"), abs=1e-12)

    def test_ball_contents(self):
        g = green_truncation(laplacian_element(F2), K=4, radius=1)
        words = {str(w) for w in g.window_words()}
        assert words == {"e", "a", "A", "b", "B"}


# --- homoclinic points ---


class TestHomoclinic:
    def test_identity_mass_recovers_green_mod_one(self):
        f = laplacian_element(F2)
        g = green_truncation(f, K=30, radius=2)
        x = homoclinic_point(elt(F2, "e 1"), g, window_radius=1)
        for w in ("e", "a", "b"):
            assert x.value(w) == pytest.approx(g.value(w) % 1.0, abs=1e-12)

    def test_source_convolution_vanishes(self):
        # h = f makes x = (f * omega) mod 1 nearly the delta at e, so the
        # fractional parts are near zero and the residuals tiny
        f = laplacian_element(F2)
        g = green_truncation(f, K=60, radius=3)
        x = homoclinic_point(f, g)
        assert x.residual_max < 1e-4
        for w, v in x.values.items():
            dist = min(v, 1 - v)
            if w != F2.identity_normal():
                assert dist < 1e-4

    def test_values_live_on_circle(self):
        f = laplacian_element(F2)
        g = green_truncation(f, K=20, radius=2)
        x = homoclinic_point(elt(F2, "e 2\na -1"), g)
        for v in x.values.values():
            assert 0 <= v < 1

    def test_window_too_large(self):
        f = laplacian_element(F2)
        g = green_truncation(f, K=10, radius=1)
        with pytest.raises(WindowError):
            homoclinic_point(elt(F2, "e 1"), g, window_radius=3)

    def test_needs_integer_mass(self):
        f = laplacian_element(F2)
        g = green_truncation(f, K=10, radius=1)
        with pytest.raises(ValueError):
            homoclinic_point(elt(F2, "e 1/2"), g)

    def test_rejects_low_rank_lattice(self):
        with pytest.warns(UserWarning):
            g = green_truncation(laplacian_element(Z2), K=10, radius=1)
        with pytest.raises(UnsupportedFamilyError):
            homoclinic_point(elt(Z2, "e 1"), g)

    def test_family_mismatch(self):
        g = green_truncation(laplacian_element(F2), K=10, radius=1)
        with pytest.raises(FamilyMismatchError):
            homoclinic_point(elt(Z, "e 1"), g)


# --- spectral radius probe ---


class TestSpectralRadiusProbe:
    def test_regular_tree_radius(self):
        # the simple walk on the 4-regular tree has spectral radius sqrt(3)/2
        probe = spectral_radius_probe(laplacian_element(F2), k_max=200)
        assert abs(probe.estimate - math.sqrt(3) / 2) < 0.01
        assert not probe.amenable_like

    def test_lattice_is_amenable_like(self):
        probe = spectral_radius_probe(laplacian_element(Z2), k_max=400)
        assert probe.estimate > 0.95
        assert probe.amenable_like

    def test_rank_one_is_amenable_like(self):
        probe = spectral_radius_probe(laplacian_element(Z), k_max=200)
        assert probe.estimate > 0.95
        assert probe.amenable_like

    def test_raw_roots_undershoot(self):
        # plain 2k-th roots approach the radius from below; extrapolation
        # must improve on them for the tree
        probe = spectral_radius_probe(laplacian_element(F2), k_max=200)
        raw = probe.final_root_estimate()
        target = math.sqrt(3) / 2
        assert raw < target
        assert abs(probe.estimate - target) < abs(raw - target)

    def test_estimate_capped_at_one(self):
        probe = spectral_radius_probe(laplacian_element(Z), k_max=100)
        assert probe.estimate <= 1.0

    def test_rejects_odd_k_max(self):
        with pytest.raises(ValueError):
            spectral_radius_probe(laplacian_element(Z), k_max=7)
        with pytest.raises(ValueError):
            spectral_radius_probe(laplacian_element(Z), k_max=0)

    def test_root_sequence_cauchy_schwarz(self):
        # even return probabilities are moments, so (mu^{2k})_e^{1/2k} rises
        probe = spectral_radius_probe(laplacian_element(F2), k_max=60)
        roots = probe.root_estimates
        assert all(b >= a - 1e-12 for a, b in zip(roots, roots[1:]))
