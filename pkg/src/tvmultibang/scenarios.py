"""The two reference experiments: ground-truth coefficients, forward-simulated
targets, and seeded noise.

Ground-truth fields are stored in shifted values (coefficient minus u_min), so
they live in the same range [0, u_m] as the reconstructed control.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import solve_state
from .kernels import MultibangLevels
from .mesh import TriMesh, build_rect_mesh, interpolate
from .optsys import ProblemData


@dataclass
class Scenario:
    name: str
    mesh: TriMesh
    levels: MultibangLevels
    u_true: np.ndarray
    f: np.ndarray
    z: np.ndarray
    alpha: float
    beta: float
    noise_level: float
    seed: int

    def problem(self) -> ProblemData:
        return ProblemData(self.mesh, self.levels, self.z, self.f,
                           self.alpha, self.beta)


def normal_field(n: int, seed: int) -> np.ndarray:
    """Standard-normal nodal samples from the counter-based Philox generator.

    Philox is used so that a stored seed reproduces the stream exactly,
    independent of platform and call history.
    """
    return np.random.Generator(np.random.Philox(key=seed)).standard_normal(n)


def make_target(mesh: TriMesh, coeff: np.ndarray, f: np.ndarray,
                noise_level: float, seed: int) -> np.ndarray:
    """Forward-simulated observation: solve the state equation for the given
    coefficient, then add noise_level * rho * max|z| with nodal normal rho."""
    z = solve_state(mesh, coeff, f)
    if noise_level == 0.0:
        return z
    rho = normal_field(mesh.n_vertices, seed)
    return z + noise_level * rho * np.abs(z).max()


def in_frame_region(x: float, y: float) -> bool:
    """Membership predicate of the high-density region of the frame design.

    The inner level curve (where one coordinate reaches 0.5) is closed into
    the region: it falls exactly on mesh lines of the standard resolutions,
    and an open predicate there would bias the interpolated design's area by
    half a cell along the whole curve.
    """
    return (0.1 < abs(x) < 0.8) and (abs(y) < 0.8) and (abs(x) >= 0.5 or abs(y) >= 0.5)


def example1(mesh: TriMesh, beta: float, alpha: float = 1e-3,
             levels: tuple = (0.0, 0.25, 0.5, 0.75, 1.0),
             u_min: float = 1.5, seed: int = 0) -> Scenario:
    """Two-material frame design on (-1, 1)^2 with five admissible densities.

    The truth takes coefficient values 1.5 and 2.5; the noise-free target is
    the state it produces under the constant source f = 10.
    """
    lv = MultibangLevels(levels, shift=u_min)
    u_true = interpolate(mesh, lambda x, y: 1.0 if in_frame_region(x, y) else 0.0)
    f = np.full(mesh.n_vertices, 10.0)
    z = make_target(mesh, u_true + u_min, f, 0.0, seed)
    return Scenario("example1", mesh, lv, u_true, f, z, alpha, beta,
                    noise_level=0.0, seed=seed)


def inclusion_value(x: float, y: float) -> float:
    """Shifted truth of the conductivity phantom: background 0 outside a disc,
    0.1 on the annular tissue region, 0.2 on the small inclusion."""
    if (x + 0.1) ** 2 + (y - 0.1) ** 2 >= 0.4:
        return 0.0
    if (x + 0.2) ** 2 + (y - 0.2) ** 2 < 0.08:
        return 0.2
    return 0.1


def example2(mesh: TriMesh, beta: float, alpha: float = 5e-4,
             levels: tuple = (0.0, 0.1, 0.2), u_min: float = 1.5,
             noise_level: float = 1e-3, seed: int = 0) -> Scenario:
    """Conductivity phantom on (-1, 1)^2 with noisy distributed observation.

    Coefficient values 1.5 / 1.6 / 1.7; source f = 25; the target carries
    relative nodal Gaussian noise scaled by max|z|.
    """
    lv = MultibangLevels(levels, shift=u_min)
    u_true = interpolate(mesh, inclusion_value)
    f = np.full(mesh.n_vertices, 25.0)
    z = make_target(mesh, u_true + u_min, f, noise_level, seed)
    return Scenario("example2", mesh, lv, u_true, f, z, alpha, beta,
                    noise_level=noise_level, seed=seed)


SCENARIO_BUILDERS = {"example1": example1, "example2": example2}


def build_scenario(name: str, nx: int, ny: int, beta: float,
                   alpha: float | None = None, levels: tuple | None = None,
                   u_min: float = 1.5, seed: int = 0,
                   extents: tuple = (-1.0, 1.0, -1.0, 1.0),
                   noise_level: float | None = None) -> Scenario:
    """Construct a named scenario on a fresh rectangle mesh."""
    if name not in SCENARIO_BUILDERS:
        raise ValueError(f"unknown scenario '{name}'")
    mesh = build_rect_mesh(*extents, nx, ny)
    kwargs = {"beta": beta, "u_min": u_min, "seed": seed}
    if alpha is not None:
        kwargs["alpha"] = alpha
    if levels is not None:
        kwargs["levels"] = levels
    if noise_level is not None and name == "example2":
        kwargs["noise_level"] = noise_level
    return SCENARIO_BUILDERS[name](mesh, **kwargs)
