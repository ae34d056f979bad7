/**
 * Recover the structured rectangle grid behind a vertex table.  The solver
 * numbers vertices row by row (x fastest), so the layout is validated
 * directly against that convention.
 */

import { FieldTable } from "./csv";

export interface GridInfo {
  nx: number;
  ny: number;
  xs: Float64Array; // nx + 1 ascending coordinates
  ys: Float64Array; // ny + 1 ascending coordinates
}

function uniqueSorted(values: Float64Array, eps: number): number[] {
  const sorted = Array.from(values).sort((a, b) => a - b);
  const out: number[] = [];
  for (const v of sorted) {
    if (out.length === 0 || v - out[out.length - 1] > eps) {
      out.push(v);
    }
  }
  return out;
}

export function inferGrid(table: FieldTable): GridInfo {
  const n = table.x.length;
  const spanX = Math.max(...table.x) - Math.min(...table.x);
  const spanY = Math.max(...table.y) - Math.min(...table.y);
  const eps = 1e-9 * Math.max(spanX, spanY, 1.0);
  const xs = uniqueSorted(table.x, eps);
  const ys = uniqueSorted(table.y, eps);
  if (xs.length * ys.length !== n) {
    throw new Error(
      `vertices do not form a tensor grid (${xs.length} x ${ys.length} != ${n})`);
  }
  // verify row-major order: vertex j*(nx+1)+i sits at (xs[i], ys[j])
  const nx1 = xs.length;
  for (let j = 0; j < ys.length; j++) {
    for (let i = 0; i < nx1; i++) {
      const k = j * nx1 + i;
      if (Math.abs(table.x[k] - xs[i]) > eps || Math.abs(table.y[k] - ys[j]) > eps) {
        throw new Error("unsupported vertex layout: not row-major structured");
      }
    }
  }
  return {
    nx: xs.length - 1,
    ny: ys.length - 1,
    xs: Float64Array.from(xs),
    ys: Float64Array.from(ys),
  };
}

/**
 * Evaluate the piecewise linear field at a physical point.  Each grid cell is
 * split along its lower-left to upper-right diagonal, matching the solver's
 * triangulation, so rendering shows the genuine P1 function.
 */
export function evalP1(table: FieldTable, grid: GridInfo, px: number, py: number): number {
  const { nx, ny, xs, ys } = grid;
  const xmin = xs[0];
  const ymin = ys[0];
  const hx = (xs[nx] - xs[0]) / nx;
  const hy = (ys[ny] - ys[0]) / ny;
  let ci = Math.floor((px - xmin) / hx);
  let cj = Math.floor((py - ymin) / hy);
  ci = Math.min(Math.max(ci, 0), nx - 1);
  cj = Math.min(Math.max(cj, 0), ny - 1);
  const xi = (px - (xmin + ci * hx)) / hx;
  const eta = (py - (ymin + cj * hy)) / hy;
  const nx1 = nx + 1;
  const v00 = table.value[cj * nx1 + ci];
  const v10 = table.value[cj * nx1 + ci + 1];
  const v01 = table.value[(cj + 1) * nx1 + ci];
  const v11 = table.value[(cj + 1) * nx1 + ci + 1];
  if (xi >= eta) {
    // lower triangle (v00, v10, v11)
    return v00 + xi * (v10 - v00) + eta * (v11 - v10);
  }
  // upper triangle (v00, v11, v01)
  return v00 + xi * (v11 - v01) + eta * (v01 - v00);
}
