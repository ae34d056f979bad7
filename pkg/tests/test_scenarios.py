import numpy as np
import pytest

from tvmultibang import fem
from tvmultibang.mesh import build_rect_mesh
from tvmultibang.scenarios import (build_scenario, example1, example2,
                                   in_frame_region, inclusion_value,
                                   make_target, normal_field)


class TestRegionPredicates:
    def test_frame_membership(self):
        assert in_frame_region(0.6, 0.6)
        assert not in_frame_region(0.0, 0.0)
        # inside the band but neither coordinate beyond 0.5: excluded
        assert not in_frame_region(0.3, 0.3)
        assert in_frame_region(-0.6, 0.1)
        assert not in_frame_region(0.85, 0.0)
        # the inner level curve itself belongs to the region
        assert in_frame_region(0.5, 0.3)
        assert in_frame_region(0.3, -0.5)

    def test_inclusion_values(self):
        assert inclusion_value(-0.2, 0.2) == 0.2     # disc center
        assert inclusion_value(0.9, -0.9) == 0.0     # far outside
        assert inclusion_value(0.3, 0.1) == 0.1      # annulus region
        # straddle the outer circle: outside is background, inside is tissue
        assert inclusion_value(-0.1 + 0.64, 0.1) == 0.0   # r^2 = 0.4096
        assert inclusion_value(-0.1 + 0.63, 0.1) == 0.1   # r^2 = 0.3969


class TestExample1:
    def test_fields(self):
        mesh = build_rect_mesh(-1, 1, -1, 1, 16, 16)
        sc = example1(mesh, beta=1e-6)
        assert sc.levels.levels == (0.0, 0.25, 0.5, 0.75, 1.0)
        assert sc.levels.shift == 1.5
        assert sc.alpha == 1e-3
        assert set(np.unique(sc.u_true)) <= {0.0, 1.0}
        assert np.all(sc.f == 10.0)
        assert sc.noise_level == 0.0

    def test_target_is_forward_solve(self):
        mesh = build_rect_mesh(-1, 1, -1, 1, 8, 8)
        sc = example1(mesh, beta=0.0)
        z = fem.solve_state(mesh, sc.u_true + 1.5, sc.f)
        assert np.array_equal(z, sc.z)


class TestExample2:
    def test_fields(self):
        mesh = build_rect_mesh(-1, 1, -1, 1, 16, 16)
        sc = example2(mesh, beta=1e-5)
        assert sc.levels.levels == (0.0, 0.1, 0.2)
        assert sc.alpha == 5e-4
        assert sc.noise_level == 1e-3
        assert np.all(sc.f == 25.0)
        assert set(np.unique(sc.u_true)) <= {0.0, 0.1, 0.2}

    def test_noise_determinism(self):
        mesh = build_rect_mesh(-1, 1, -1, 1, 8, 8)
        a = example2(mesh, beta=0.0, seed=5)
        b = example2(mesh, beta=0.0, seed=5)
        c = example2(mesh, beta=0.0, seed=6)
        assert np.array_equal(a.z, b.z)
        assert not np.array_equal(a.z, c.z)

    def test_noise_scale(self):
        mesh = build_rect_mesh(-1, 1, -1, 1, 12, 12)
        sc = example2(mesh, beta=0.0, seed=2)
        clean = fem.solve_state(mesh, sc.u_true + 1.5, sc.f)
        rho = normal_field(mesh.n_vertices, 2)
        assert np.allclose(sc.z, clean + 1e-3 * rho * np.abs(clean).max())
        bound = 1e-3 * np.abs(clean).max() * np.abs(rho).max()
        assert np.abs(sc.z).max() - np.abs(clean).max() <= bound + 1e-15


class TestMakeTarget:
    def test_zero_noise(self):
        mesh = build_rect_mesh(0, 1, 0, 1, 6, 6)
        coeff = np.full(mesh.n_vertices, 2.0)
        f = np.ones(mesh.n_vertices)
        z = make_target(mesh, coeff, f, 0.0, 0)
        assert np.array_equal(z, fem.solve_state(mesh, coeff, f))

    def test_seeds_differ(self):
        mesh = build_rect_mesh(0, 1, 0, 1, 6, 6)
        coeff = np.full(mesh.n_vertices, 2.0)
        f = np.ones(mesh.n_vertices)
        z1 = make_target(mesh, coeff, f, 1e-2, 1)
        z2 = make_target(mesh, coeff, f, 1e-2, 2)
        assert not np.array_equal(z1, z2)


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        from tvmultibang.fileio import read_scenario, write_scenario
        sc = build_scenario("example2", 10, 12, beta=1e-5, seed=42)
        path = tmp_path / "scenario.txt"
        write_scenario(str(path), sc)
        back = read_scenario(str(path))
        assert back.name == sc.name
        assert back.levels == sc.levels
        assert back.alpha == sc.alpha and back.beta == sc.beta
        assert back.seed == sc.seed
        assert np.array_equal(back.u_true, sc.u_true)
        assert np.array_equal(back.z, sc.z)
        assert np.array_equal(back.mesh.vertices, sc.mesh.vertices)

    def test_unknown_scenario(self):
        with pytest.raises(ValueError):
            build_scenario("example99", 4, 4, beta=0.0)
