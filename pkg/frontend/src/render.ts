/**
 * Heatmap rendering of nodal fields: piecewise linear shading on the
 * solver's triangulation, optional colorbar strip, shared color ranges for
 * comparison panels.
 */

import * as fs from "fs";
import * as path from "path";
import { PNG } from "pngjs";

import { FieldTable, readFieldCsv } from "./csv";
import { normalize, sampleColormap } from "./colormap";
import { GridInfo, evalP1, inferGrid } from "./grid";
import { GLYPH_H, drawText } from "./font";

export interface RenderOptions {
  size?: number;          // pixel width of the field panel (default 512)
  vmin?: number;
  vmax?: number;
  colorbar?: boolean;
  title?: string;         // stored as PNG metadata text
}

export interface RenderedField {
  width: number;
  height: number;
  vmin: number;
  vmax: number;
  rgba: Uint8Array;
}

const COLORBAR_W = 28;
const COLORBAR_PAD = 8;

export function rasterize(table: FieldTable, grid: GridInfo,
                          size: number): Float64Array {
  const { nx, ny, xs, ys } = grid;
  const width = size;
  const height = Math.max(1, Math.round(size * (ys[ny] - ys[0]) / (xs[nx] - xs[0])));
  const values = new Float64Array(width * height);
  for (let r = 0; r < height; r++) {
    // image row 0 shows the top of the domain
    const py = ys[ny] - (r + 0.5) / height * (ys[ny] - ys[0]);
    for (let c = 0; c < width; c++) {
      const px = xs[0] + (c + 0.5) / width * (xs[nx] - xs[0]);
      values[r * width + c] = evalP1(table, grid, px, py);
    }
  }
  return values;
}

export function renderTable(table: FieldTable, options: RenderOptions = {}): RenderedField {
  const grid = inferGrid(table);
  const size = options.size ?? 512;
  const values = rasterize(table, grid, size);
  const width = size;
  const height = values.length / size;
  const vmin = options.vmin ?? Math.min(...table.value);
  const vmax = options.vmax ?? Math.max(...table.value);

  const barW = options.colorbar ? COLORBAR_W + COLORBAR_PAD : 0;
  const totalW = width + barW;
  const rgba = new Uint8Array(4 * totalW * height).fill(255);
  for (let r = 0; r < height; r++) {
    for (let c = 0; c < width; c++) {
      const [cr, cg, cb] = sampleColormap(normalize(values[r * width + c], vmin, vmax));
      const ofs = 4 * (r * totalW + c);
      rgba[ofs] = cr;
      rgba[ofs + 1] = cg;
      rgba[ofs + 2] = cb;
      rgba[ofs + 3] = 255;
    }
  }
  if (options.colorbar) {
    drawColorbar(rgba, totalW, height, width + COLORBAR_PAD, vmin, vmax);
  }
  return { width: totalW, height, vmin, vmax, rgba };
}

function drawColorbar(rgba: Uint8Array, width: number, height: number,
                      x0: number, vmin: number, vmax: number): void {
  const barTop = Math.round(0.05 * height);
  const barBot = Math.round(0.95 * height);
  for (let r = barTop; r < barBot; r++) {
    const t = 1 - (r - barTop) / (barBot - barTop - 1);
    const [cr, cg, cb] = sampleColormap(t);
    for (let c = x0; c < x0 + COLORBAR_W - 4; c++) {
      const ofs = 4 * (r * width + c);
      rgba[ofs] = cr;
      rgba[ofs + 1] = cg;
      rgba[ofs + 2] = cb;
      rgba[ofs + 3] = 255;
    }
  }
  const label = (v: number) => {
    const a = Math.abs(v);
    if (v === 0) return "0";
    if (a >= 0.01 && a < 1000) return v.toPrecision(3);
    return v.toExponential(1);
  };
  drawText(rgba, width, height, label(vmax), x0, Math.max(0, barTop - GLYPH_H - 2),
           [0, 0, 0]);
  drawText(rgba, width, height, label(vmin), x0, Math.min(height - GLYPH_H, barBot + 2),
           [0, 0, 0]);
}

export function writePng(outPath: string, field: RenderedField, title?: string): void {
  const png = new PNG({ width: field.width, height: field.height });
  Buffer.from(field.rgba).copy(png.data);
  if (title) {
    (png as unknown as { text: Record<string, string> }).text = { Title: title };
  }
  fs.writeFileSync(outPath, PNG.sync.write(png));
}

export function readPng(file: string): { width: number; height: number; data: Uint8Array } {
  const png = PNG.sync.read(fs.readFileSync(file));
  return { width: png.width, height: png.height, data: new Uint8Array(png.data) };
}

export function renderField(csvPath: string, outPng: string,
                            options: RenderOptions = {}): RenderedField {
  const table = readFieldCsv(csvPath);
  const rendered = renderTable(table, options);
  writePng(outPng, rendered, options.title);
  return rendered;
}

export function renderComparison(runDirs: string[], field: string,
                                 outPng: string,
                                 options: RenderOptions = {}): RenderedField {
  if (runDirs.length === 0) {
    throw new Error("render-compare needs at least one run directory");
  }
  if (runDirs.length > 4) {
    throw new Error("render-compare supports at most four run directories");
  }
  const tables = runDirs.map((dir) => readFieldCsv(path.join(dir, `${field}.csv`)));
  const n0 = tables[0].x.length;
  for (const t of tables.slice(1)) {
    if (t.x.length !== n0) {
      throw new Error("run directories use different meshes");
    }
  }
  const vmin = options.vmin ?? Math.min(...tables.map((t) => Math.min(...t.value)));
  const vmax = options.vmax ?? Math.max(...tables.map((t) => Math.max(...t.value)));
  const opts = { ...options, vmin, vmax, colorbar: false };
  const panels = tables.map((t) => renderTable(t, opts));

  const cols = runDirs.length > 1 ? 2 : 1;
  const rows = Math.ceil(runDirs.length / cols);
  const pad = 6;
  const pw = panels[0].width;
  const ph = panels[0].height;
  const width = cols * pw + (cols - 1) * pad;
  const height = rows * ph + (rows - 1) * pad;
  const rgba = new Uint8Array(4 * width * height).fill(255);
  panels.forEach((panel, idx) => {
    const cr = Math.floor(idx / cols);
    const cc = idx % cols;
    const ox = cc * (pw + pad);
    const oy = cr * (ph + pad);
    for (let r = 0; r < ph; r++) {
      for (let c = 0; c < pw; c++) {
        const src = 4 * (r * pw + c);
        const dst = 4 * ((oy + r) * width + (ox + c));
        rgba[dst] = panel.rgba[src];
        rgba[dst + 1] = panel.rgba[src + 1];
        rgba[dst + 2] = panel.rgba[src + 2];
        rgba[dst + 3] = 255;
      }
    }
  });
  const composed: RenderedField = { width, height, vmin, vmax, rgba };
  writePng(outPng, composed, options.title);
  return composed;
}
