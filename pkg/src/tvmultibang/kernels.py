"""Pointwise kernels: multi-bang penalty, its regularized multiplier-to-control
map, the radial shrinkage map for the TV dual variable, their Newton
derivatives, and the smoothed projection onto the admissible coefficient range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MultibangLevels:
    """Ordered desired coefficient values u_1 < ... < u_m with u_1 = 0.

    The solver works in shifted values: the physical coefficient is
    u + shift, so admissible coefficients lie in [shift, shift + u_m].
    """

    levels: tuple
    shift: float = 1.5

    def __post_init__(self):
        lv = tuple(float(v) for v in self.levels)
        object.__setattr__(self, "levels", lv)
        if len(lv) < 2:
            raise ValueError("need at least two levels")
        if lv[0] != 0.0:
            raise ValueError("first level must be 0")
        if any(b <= a for a, b in zip(lv, lv[1:])):
            raise ValueError("levels must be strictly increasing")
        if self.shift <= 0.0:
            raise ValueError("shift must be positive")

    @property
    def m(self) -> int:
        return len(self.levels)

    @property
    def top(self) -> float:
        """Largest shifted value u_m."""
        return self.levels[-1]

    @property
    def u_min(self) -> float:
        return self.shift

    @property
    def u_max(self) -> float:
        return self.shift + self.levels[-1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.levels)


def _prepare(t):
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


def multibang_penalty(t, levels: MultibangLevels):
    """Piecewise linear convex penalty vanishing exactly at the levels.

    On [u_i, u_{i+1}] it is the affine interpolant of t -> t^2/2 at the two
    levels minus t^2/2's tangent structure, concretely
    ((u_i + u_{i+1}) t - u_i u_{i+1}) / 2; outside [u_1, u_m] it grows
    linearly with slope -u_m resp. u_m.
    """
    arr, scalar = _prepare(t)
    lv = levels.as_array()
    um = lv[-1]
    idx = np.clip(np.searchsorted(lv, arr, side="right") - 1, 0, levels.m - 2)
    lo, hi = lv[idx], lv[idx + 1]
    out = 0.5 * ((lo + hi) * arr - lo * hi)
    out = np.where(arr <= 0.0, -um * arr, out)
    out = np.where(arr >= um, um * arr - 0.5 * um * um, out)
    return float(out) if scalar else out


def multibang_penalty_box(t, levels: MultibangLevels):
    """The penalty with the box [u_1, u_m] enforced: +inf outside."""
    arr, scalar = _prepare(t)
    out = multibang_penalty(arr, levels)
    out = np.where((arr < 0.0) | (arr > levels.top), np.inf, out)
    return float(out) if scalar else out


def _ramp_edges(gamma: float, levels: MultibangLevels) -> np.ndarray:
    """Sorted breakpoints [a_1, b_1, a_2, b_2, ...] of the ramp intervals.

    Ramp i (between levels u_i and u_{i+1}) occupies the closed interval
    [(gamma + 1/2) u_i + u_{i+1}/2,  u_i/2 + (gamma + 1/2) u_{i+1}].
    """
    lv = levels.as_array()
    a = (gamma + 0.5) * lv[:-1] + 0.5 * lv[1:]
    b = 0.5 * lv[:-1] + (gamma + 0.5) * lv[1:]
    edges = np.empty(2 * (levels.m - 1))
    edges[0::2] = a
    edges[1::2] = b
    return edges


def multibang_control_map(s, gamma: float, levels: MultibangLevels):
    """Regularized multiplier-to-control map: plateaus at the levels, ramps of
    slope 1/gamma in between.

    Equals the derivative of the Moreau envelope of the conjugate of the
    boxed penalty, i.e. argmin_t box_penalty(t) + gamma/2 t^2 - s t.
    """
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    arr, scalar = _prepare(s)
    lv = levels.as_array()
    edges = _ramp_edges(gamma, levels)
    pos = np.searchsorted(edges, arr, side="right")
    on_ramp = pos % 2 == 1
    ramp = np.clip((pos - 1) // 2, 0, levels.m - 2)
    ramp_val = (arr - 0.5 * (lv[ramp] + lv[ramp + 1])) / gamma
    ramp_val = np.clip(ramp_val, lv[ramp], lv[ramp + 1])
    plateau = lv[np.clip(pos // 2, 0, levels.m - 1)]
    out = np.where(on_ramp, ramp_val, plateau)
    return float(out) if scalar else out


def multibang_prox(s, weight, levels: MultibangLevels):
    """argmin over t of box_penalty(t) + (weight/2) t^2 - s t, with weight
    allowed to vary per component (arrays broadcast against s).

    Same map as multibang_control_map but organized as m-1 masked passes so
    per-component weights are supported; the two implementations cross-check
    each other in the tests.
    """
    s_arr = np.asarray(s, dtype=float)
    w_arr = np.asarray(weight, dtype=float)
    if np.any(w_arr <= 0.0):
        raise ValueError("weight must be positive")
    scalar = s_arr.ndim == 0 and w_arr.ndim == 0
    s_arr, w_arr = np.broadcast_arrays(np.atleast_1d(s_arr), np.atleast_1d(w_arr))
    lv = levels.as_array()
    out = np.full(s_arr.shape, lv[0])
    for i in range(levels.m - 1):
        lo, hi = lv[i], lv[i + 1]
        start = (w_arr + 0.5) * lo + 0.5 * hi
        val = np.clip((s_arr - 0.5 * (lo + hi)) / w_arr, lo, hi)
        out = np.where(s_arr >= start, val, out)
    return float(out[0]) if scalar else out


def multibang_control_deriv(s, gamma: float, levels: MultibangLevels):
    """Newton derivative of the control map: 1/gamma on the closed ramp
    intervals (including both endpoints), 0 on the plateaus."""
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    arr, scalar = _prepare(s)
    edges = _ramp_edges(gamma, levels)
    right = np.searchsorted(edges, arr, side="right")
    left = np.searchsorted(edges, arr, side="left")
    on_ramp = (right % 2 == 1) | (left % 2 == 1)
    out = np.where(on_ramp, 1.0 / gamma, 0.0)
    return float(out) if scalar else out


def tv_shrink(v, delta: float):
    """Radial shrinkage: 0 on the closed unit ball, (v - v/|v|)/delta outside.

    Accepts a single d-vector or an (n, d) stack; 1/delta-Lipschitz and
    monotone.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    arr = np.asarray(v, dtype=float)
    single = arr.ndim == 1
    blocks = np.atleast_2d(arr)
    nrm = np.linalg.norm(blocks, axis=1)
    out = np.zeros_like(blocks)
    outside = nrm > 1.0
    if np.any(outside):
        scale = (1.0 - 1.0 / nrm[outside]) / delta
        out[outside] = blocks[outside] * scale[:, None]
    return out[0] if single else out


def tv_shrink_jac(v, delta: float):
    """Newton derivative of tv_shrink: the zero matrix on the closed unit
    ball, (I - I/|v| + v v^T / |v|^3)/delta outside; symmetric.

    Returns (d, d) for a single vector, (n, d, d) for a stack.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    arr = np.asarray(v, dtype=float)
    single = arr.ndim == 1
    blocks = np.atleast_2d(arr)
    n, d = blocks.shape
    nrm = np.linalg.norm(blocks, axis=1)
    out = np.zeros((n, d, d))
    outside = nrm > 1.0
    if np.any(outside):
        vb = blocks[outside]
        nb = nrm[outside]
        eye = np.eye(d)
        out[outside] = (eye[None, :, :] * (1.0 - 1.0 / nb)[:, None, None]
                        + vb[:, :, None] * vb[:, None, :] / (nb ** 3)[:, None, None]) / delta
    return out[0] if single else out


def tv_dual_source(w, delta: float):
    """Inverse of tv_shrink on its range: the dual value (1 + delta |w|) w/|w|
    solving shrink(psi) = w for w != 0; zero blocks map to zero."""
    arr = np.asarray(w, dtype=float)
    single = arr.ndim == 1
    blocks = np.atleast_2d(arr)
    nrm = np.linalg.norm(blocks, axis=1)
    out = np.zeros_like(blocks)
    nz = nrm > 0.0
    out[nz] = (1.0 + delta * nrm[nz])[:, None] * blocks[nz] / nrm[nz][:, None]
    return out[0] if single else out


def smoothed_projection(t, eps: float, levels: MultibangLevels):
    """Shifted projection of t onto [0, u_m] with C^1 exterior smoothing.

    Returns values in [shift - eps, shift + u_m + eps]; the identity branch
    shift + t holds on [0, u_m].  eps = 0 reduces to plain clamping.
    """
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    arr, scalar = _prepare(t)
    um = levels.top
    if eps == 0.0:
        out = levels.shift + np.clip(arr, 0.0, um)
        return float(out) if scalar else out
    low_cubic = -(arr ** 3) / eps ** 2 - arr ** 2 / eps + arr
    high_cubic = (-arr ** 3 + (3 * um + eps) * arr ** 2
                  + (eps ** 2 - 2 * um * eps - 3 * um ** 2) * arr
                  + um ** 3 + um ** 2 * eps) / eps ** 2
    out = np.select(
        [arr <= -eps, arr < 0.0, arr <= um, arr < um + eps],
        [-eps, low_cubic, arr, high_cubic],
        default=um + eps,
    )
    out = out + levels.shift
    return float(out) if scalar else out


def smoothed_projection_deriv(t, eps: float, levels: MultibangLevels):
    """Derivative of smoothed_projection; requires eps > 0.

    Values lie in [0, 4/3]: the cubic blend overshoots slope 1 by at most 1/3.
    """
    if eps <= 0.0:
        raise ValueError("derivative requires eps > 0")
    arr, scalar = _prepare(t)
    um = levels.top
    low_cubic = -3 * arr ** 2 / eps ** 2 - 2 * arr / eps + 1.0
    high_cubic = (-3 * arr ** 2 + (6 * um + 2 * eps) * arr
                  + eps ** 2 - 2 * um * eps - 3 * um ** 2) / eps ** 2
    out = np.select(
        [arr < -eps, arr < 0.0, arr <= um, arr <= um + eps],
        [0.0, low_cubic, 1.0, high_cubic],
        default=0.0,
    )
    return float(out) if scalar else out
