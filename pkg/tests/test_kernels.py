import numpy as np
import pytest

from oracles import prox_oracle, prox_oracle_grid
from tvmultibang.kernels import (MultibangLevels, multibang_control_deriv,
                                 multibang_control_map, multibang_penalty,
                                 multibang_penalty_box, multibang_prox,
                                 smoothed_projection, smoothed_projection_deriv,
                                 tv_dual_source, tv_shrink, tv_shrink_jac)


def test_levels_validation():
    with pytest.raises(ValueError):
        MultibangLevels((0.1, 0.5))
    with pytest.raises(ValueError):
        MultibangLevels((0.0,))
    with pytest.raises(ValueError):
        MultibangLevels((0.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        MultibangLevels((0.0, 1.0), shift=0.0)
    lv = MultibangLevels((0.0, 1.0, 2.0), shift=1.5)
    assert lv.u_max == 3.5
    assert lv.top == 2.0


class TestPenalty:
    def test_reference_points(self, levels_012):
        assert multibang_penalty(0.0, levels_012) == 0.0
        assert multibang_penalty(1.0, levels_012) == 0.5
        assert multibang_penalty(-1.0, levels_012) == 2.0

    def test_bounds(self, rng, levels_012):
        # g is sandwiched between u_2/2 |t| and u_m |t|
        t = rng.uniform(-5, 5, 4000)
        g = multibang_penalty(t, levels_012)
        assert np.all(g >= 0.5 * 1.0 * np.abs(t) - 1e-12)
        assert np.all(g <= 2.0 * np.abs(t) + 1e-12)

    def test_convexity_on_samples(self, rng, levels_012):
        t = np.sort(rng.uniform(-3, 5, 200))
        g = multibang_penalty(t, levels_012)
        lam = rng.uniform(0, 1, 198)
        mid = multibang_penalty(lam * t[:-2] + (1 - lam) * t[2:], levels_012)
        assert np.all(mid <= lam * g[:-2] + (1 - lam) * g[2:] + 1e-10)

    def test_box_version(self, levels_012):
        assert multibang_penalty_box(-0.1, levels_012) == np.inf
        assert multibang_penalty_box(2.0, levels_012) == 2.0  # (um^2)/2
        assert multibang_penalty_box(1.0, levels_012) == 0.5
        assert multibang_penalty_box(2.0001, levels_012) == np.inf


class TestControlMap:
    def test_reference_points(self, levels_012):
        assert multibang_control_map(1.0, 1.0, levels_012) == 0.5
        assert multibang_control_map(0.4, 1.0, levels_012) == 0.0
        assert multibang_control_map(10.0, 1.0, levels_012) == 2.0

    def test_prox_oracle_agreement(self, rng):
        for _ in range(300):
            m = rng.integers(2, 7)
            lv = tuple(np.concatenate([[0.0], np.cumsum(rng.uniform(0.1, 2.0, m - 1))]))
            levels = MultibangLevels(lv, shift=1.0)
            gamma = 10.0 ** rng.uniform(-6, 6)
            s = rng.uniform(-3, 3) * lv[-1] * (1 + gamma)
            got = multibang_control_map(s, gamma, levels)
            assert abs(got - prox_oracle(s, gamma, lv)) <= 1e-8

    def test_two_implementations_agree(self, rng, levels_ex1):
        s = rng.uniform(-50, 50, 3000)
        for gamma in (1e-5, 0.3, 7.0, 1e4):
            a = multibang_control_map(s, gamma, levels_ex1)
            b = multibang_prox(s, gamma, levels_ex1)
            assert np.max(np.abs(a - b)) == 0.0

    def test_prox_with_componentwise_weights(self, rng, levels_012):
        s = rng.uniform(-20, 20, 500)
        w = 10.0 ** rng.uniform(-3, 3, 500)
        got = multibang_prox(s, w, levels_012)
        for i in range(0, 500, 25):
            assert abs(got[i] - prox_oracle(s[i], w[i], levels_012.levels)) <= 1e-8

    def test_monotone_and_lipschitz(self, rng, levels_ex1):
        gamma = 0.37
        s = np.sort(rng.uniform(-10, 10, 2000))
        u = multibang_control_map(s, gamma, levels_ex1)
        du = np.diff(u)
        ds = np.diff(s)
        assert np.all(du >= -1e-14)
        assert np.all(du <= ds / gamma + 1e-12)

    def test_range(self, rng, levels_ex1):
        s = rng.uniform(-1e6, 1e6, 1000)
        u = multibang_control_map(s, 1e-3, levels_ex1)
        assert u.min() >= 0.0 and u.max() <= levels_ex1.top

    def test_deriv_reference_points(self, levels_012):
        assert multibang_control_deriv(1.0, 1.0, levels_012) == 1.0
        assert multibang_control_deriv(0.4, 1.0, levels_012) == 0.0
        # ramp intervals are closed: both endpoints carry slope 1/gamma
        assert multibang_control_deriv(1.5, 1.0, levels_012) == 1.0
        assert multibang_control_deriv(0.5, 1.0, levels_012) == 1.0

    def test_deriv_matches_fd_away_from_kinks(self, rng, levels_ex1):
        gamma = 2.0
        s = rng.uniform(-3, 3, 400)
        from tvmultibang.kernels import _ramp_edges
        edges = _ramp_edges(gamma, levels_ex1)
        keep = np.abs(s[:, None] - edges[None, :]).min(axis=1) > 1e-4
        s = s[keep]
        h = 1e-6
        fd = (multibang_control_map(s + h, gamma, levels_ex1)
              - multibang_control_map(s - h, gamma, levels_ex1)) / (2 * h)
        dn = multibang_control_deriv(s, gamma, levels_ex1)
        assert np.max(np.abs(fd - dn)) <= 1e-6


class TestTvShrink:
    def test_reference_points(self):
        assert np.array_equal(tv_shrink(np.array([0.5, 0.0]), 1.0), [0.0, 0.0])
        assert np.allclose(tv_shrink(np.array([2.0, 0.0]), 0.5), [2.0, 0.0])
        assert np.allclose(tv_shrink(np.array([0.0, -3.0]), 1.0), [0.0, -2.0])

    def test_lipschitz_and_monotone(self, rng):
        delta = 0.8
        v = rng.uniform(-3, 3, (4000, 2))
        w = rng.uniform(-3, 3, (4000, 2))
        sv, sw = tv_shrink(v, delta), tv_shrink(w, delta)
        diff = np.linalg.norm(sv - sw, axis=1)
        dist = np.linalg.norm(v - w, axis=1)
        assert np.all(diff <= dist / delta + 1e-12)
        inner = np.einsum("ij,ij->i", sv - sw, v - w)
        assert np.all(inner >= -1e-12)

    def test_jac_reference_points(self):
        assert np.array_equal(tv_shrink_jac(np.array([0.3, 0.1]), 1.0),
                              np.zeros((2, 2)))
        got = tv_shrink_jac(np.array([2.0, 0.0]), 1.0)
        assert np.allclose(got, [[1.0, 0.0], [0.0, 0.5]])
        sym = tv_shrink_jac(np.array([1.3, -0.8]), 0.3)
        assert np.allclose(sym, sym.T)

    def test_jac_matches_fd(self, rng):
        delta = 0.7
        for _ in range(50):
            v = rng.normal(size=2)
            v *= 1.5 / np.linalg.norm(v)  # radius 1.5, away from the kink
            h = 1e-7
            J = tv_shrink_jac(v, delta)
            for k in range(2):
                e = np.zeros(2)
                e[k] = h
                fd = (tv_shrink(v + e, delta) - tv_shrink(v - e, delta)) / (2 * h)
                assert np.max(np.abs(fd - J[:, k])) <= 1e-6

    def test_dual_source_inverts_shrink(self, rng):
        delta = 0.45
        w = rng.uniform(-2, 2, (500, 2))
        psi = tv_dual_source(w, delta)
        back = tv_shrink(psi, delta)
        assert np.max(np.abs(back - w)) <= 1e-12


class TestSmoothedProjection:
    def test_reference_points(self, levels_012):
        lv = levels_012  # u_min = 1.5, top = 2
        assert smoothed_projection(0.0, 0.3, lv) == 1.5
        assert smoothed_projection(2.0, 0.3, lv) == 3.5
        assert smoothed_projection(-0.3, 0.3, lv) == 1.5 - 0.3
        assert smoothed_projection(5.0, 0.0, lv) == 3.5

    def test_identity_branch(self, levels_012):
        t = np.linspace(0.0, 2.0, 101)
        assert np.allclose(smoothed_projection(t, 0.25, levels_012), 1.5 + t)

    def test_eps_zero_clamps(self, levels_012):
        t = np.array([-7.0, -0.2, 0.7, 2.4, 9.0])
        got = smoothed_projection(t, 0.0, levels_012)
        assert np.allclose(got, 1.5 + np.clip(t, 0.0, 2.0))

    def test_range_and_derivative_bound(self, levels_012):
        eps = 0.3
        t = np.linspace(-1.0, 3.0, 400001)
        phi = smoothed_projection(t, eps, levels_012)
        assert phi.min() >= 1.5 - eps - 1e-12
        assert phi.max() <= 3.5 + eps + 1e-12
        d = smoothed_projection_deriv(t, eps, levels_012)
        assert d.min() >= -1e-12
        assert d.max() <= 4.0 / 3.0 + 1e-12

    def test_derivative_matches_fd(self, levels_012):
        eps = 0.3
        t = np.linspace(-0.9, 2.9, 500)
        breaks = np.array([-eps, 0.0, 2.0, 2.0 + eps])
        t = t[np.abs(t[:, None] - breaks[None, :]).min(axis=1) > 1e-3]
        h = 1e-7
        fd = (smoothed_projection(t + h, eps, levels_012)
              - smoothed_projection(t - h, eps, levels_012)) / (2 * h)
        dn = smoothed_projection_deriv(t, eps, levels_012)
        assert np.max(np.abs(fd - dn)) <= 1e-6

    def test_continuity_c1(self, levels_012):
        eps = 0.2
        for brk in (-eps, 0.0, 2.0, 2.0 + eps):
            lo = smoothed_projection(brk - 1e-9, eps, levels_012)
            hi = smoothed_projection(brk + 1e-9, eps, levels_012)
            assert abs(hi - lo) <= 1e-8
            dlo = smoothed_projection_deriv(brk - 1e-9, eps, levels_012)
            dhi = smoothed_projection_deriv(brk + 1e-9, eps, levels_012)
            assert abs(dhi - dlo) <= 1e-7

    def test_negative_eps_rejected(self, levels_012):
        with pytest.raises(ValueError):
            smoothed_projection(0.0, -0.1, levels_012)
        with pytest.raises(ValueError):
            smoothed_projection_deriv(0.0, 0.0, levels_012)


def test_grid_oracle_brackets_bisection(rng):
    # the two halves of the brute-force oracle agree with each other
    lv = (0.0, 0.25, 0.5, 0.75, 1.0)
    for _ in range(50):
        gamma = 10.0 ** rng.uniform(-4, 4)
        s = rng.uniform(-4, 4)
        fine = prox_oracle(s, gamma, lv)
        coarse = prox_oracle_grid(s, gamma, lv)
        assert abs(fine - coarse) <= 1.0 / 2000 + 1e-12
