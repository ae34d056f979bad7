"""Plain-text persistence: field and mesh CSV tables, key=value metadata,
scenario files, solver logs, and optional legacy-VTK export.

All floating point values are written with 17 significant digits so that
re-reading reproduces the binary doubles exactly.
"""

from __future__ import annotations

import os

import numpy as np

from .mesh import TriMesh, build_rect_mesh
from .scenarios import Scenario, build_scenario

FLOAT_FMT = "%.17g"


def fmt(x: float) -> str:
    return FLOAT_FMT % float(x)


def write_field_csv(path: str, mesh: TriMesh, values: np.ndarray) -> None:
    """Vertex table: x, y, value (one row per vertex, in vertex order)."""
    with open(path, "w") as fh:
        fh.write("x,y,value\n")
        for (x, y), v in zip(mesh.vertices, values):
            fh.write(f"{fmt(x)},{fmt(y)},{fmt(v)}\n")


def read_field_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Read a field table back as (coordinates, values)."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    required = ("x", "y", "value")
    if data.dtype.names is None or any(c not in data.dtype.names for c in required):
        raise ValueError(f"{path}: expected columns {required}")
    coords = np.column_stack([data["x"], data["y"]])
    return coords, np.atleast_1d(data["value"])


def write_psi_csv(path: str, mesh: TriMesh, psi: np.ndarray) -> None:
    """Element table: index, centroid, and the two dual components."""
    cent = mesh.vertices[mesh.triangles].mean(axis=1)
    blocks = psi.reshape(-1, 2)
    with open(path, "w") as fh:
        fh.write("element,cx,cy,psi_x,psi_y\n")
        for j, ((cx, cy), (px, py)) in enumerate(zip(cent, blocks)):
            fh.write(f"{j},{fmt(cx)},{fmt(cy)},{fmt(px)},{fmt(py)}\n")


def write_mesh_csv(outdir: str, mesh: TriMesh) -> None:
    """Vertex and triangle tables for external tooling."""
    with open(os.path.join(outdir, "vertices.csv"), "w") as fh:
        fh.write("index,x,y,boundary\n")
        for i, ((x, y), b) in enumerate(zip(mesh.vertices, mesh.boundary_mask)):
            fh.write(f"{i},{fmt(x)},{fmt(y)},{int(b)}\n")
    with open(os.path.join(outdir, "triangles.csv"), "w") as fh:
        fh.write("index,v0,v1,v2,area\n")
        for j, (tri, a) in enumerate(zip(mesh.triangles, mesh.areas)):
            fh.write(f"{j},{tri[0]},{tri[1]},{tri[2]},{fmt(a)}\n")


def write_keyvalues(path: str, entries: dict) -> None:
    with open(path, "w") as fh:
        for key, value in entries.items():
            if isinstance(value, float):
                value = fmt(value)
            elif isinstance(value, (list, tuple)):
                value = ",".join(fmt(v) if isinstance(v, float) else str(v)
                                 for v in value)
            fh.write(f"{key} = {value}\n")


def read_keyvalues(path: str) -> dict:
    """Parse a key = value file; '#' starts a comment, blank lines ignored."""
    out: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
        return out


def write_scenario(path: str, scenario: Scenario) -> None:
    """Persist the generating parameters of a scenario (fields are rebuilt
    deterministically from them on load)."""
    g = scenario.mesh.grid
    if g is None:
        raise ValueError("only structured rectangle scenarios are serializable")
    write_keyvalues(path, {
        "scenario": scenario.name,
        "xmin": g.xmin, "xmax": g.xmax, "ymin": g.ymin, "ymax": g.ymax,
        "nx": g.nx, "ny": g.ny,
        "levels": list(scenario.levels.levels),
        "u_min": scenario.levels.shift,
        "alpha": scenario.alpha,
        "beta": scenario.beta,
        "noise_level": scenario.noise_level,
        "seed": scenario.seed,
    })


def read_scenario(path: str) -> Scenario:
    kv = read_keyvalues(path)
    name = kv["scenario"]
    levels = tuple(float(v) for v in kv["levels"].split(","))
    extents = tuple(float(kv[k]) for k in ("xmin", "xmax", "ymin", "ymax"))
    return build_scenario(name, int(kv["nx"]), int(kv["ny"]),
                          beta=float(kv["beta"]), alpha=float(kv["alpha"]),
                          levels=levels, u_min=float(kv["u_min"]),
                          seed=int(kv["seed"]), extents=extents,
                          noise_level=float(kv.get("noise_level", 0.0)))


def write_vtk(path: str, mesh: TriMesh, fields: dict) -> None:
    """Legacy ASCII VTK unstructured grid with nodal scalar fields."""
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("tvmultibang fields\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {mesh.n_vertices} double\n")
        for x, y in mesh.vertices:
            fh.write(f"{fmt(x)} {fmt(y)} 0\n")
        m = mesh.n_triangles
        fh.write(f"CELLS {m} {4 * m}\n")
        for tri in mesh.triangles:
            fh.write(f"3 {tri[0]} {tri[1]} {tri[2]}\n")
        fh.write(f"CELL_TYPES {m}\n")
        fh.write("\n".join(["5"] * m) + "\n")
        fh.write(f"POINT_DATA {mesh.n_vertices}\n")
        for name, values in fields.items():
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in values:
                fh.write(fmt(v) + "\n")


def load_custom_scenario(path: str) -> Scenario:
    """Custom scenario from a key=value file pointing at a truth CSV.

    Required keys: nx, ny, levels, u_min, alpha, beta, f_const, u_true_csv;
    optional: extents, noise_level, seed.  The truth CSV holds shifted nodal
    values in vertex order.
    """
    kv = read_keyvalues(path)
    from .kernels import MultibangLevels
    from .scenarios import make_target

    extents = tuple(float(kv.get(k, d)) for k, d in
                    (("xmin", -1.0), ("xmax", 1.0), ("ymin", -1.0), ("ymax", 1.0)))
    mesh = build_rect_mesh(*extents, int(kv["nx"]), int(kv["ny"]))
    levels = MultibangLevels(tuple(float(v) for v in kv["levels"].split(",")),
                             shift=float(kv["u_min"]))
    csv_path = kv["u_true_csv"]
    if not os.path.isabs(csv_path):
        csv_path = os.path.join(os.path.dirname(os.path.abspath(path)), csv_path)
    _, u_true = read_field_csv(csv_path)
    if len(u_true) != mesh.n_vertices:
        raise ValueError("u_true_csv row count does not match the mesh")
    f = np.full(mesh.n_vertices, float(kv["f_const"]))
    noise = float(kv.get("noise_level", 0.0))
    seed = int(kv.get("seed", 0))
    z = make_target(mesh, u_true + levels.shift, f, noise, seed)
    return Scenario("custom", mesh, levels, u_true, f, z,
                    float(kv["alpha"]), float(kv["beta"]), noise, seed)
