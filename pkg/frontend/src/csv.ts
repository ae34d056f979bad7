/**
 * Parsers for the solver's plain-text outputs: vertex field tables
 * (x,y,value rows) and key = value metadata files.
 */

import * as fs from "fs";

export interface FieldTable {
  x: Float64Array;
  y: Float64Array;
  value: Float64Array;
}

export function parseFieldCsv(text: string): FieldTable {
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  if (lines.length < 2) {
    throw new Error("field CSV has no data rows");
  }
  const header = lines[0].split(",").map((h) => h.trim());
  const ix = header.indexOf("x");
  const iy = header.indexOf("y");
  const iv = header.indexOf("value");
  if (ix < 0 || iy < 0 || iv < 0) {
    throw new Error(`field CSV must have columns x,y,value (got: ${header.join(",")})`);
  }
  const n = lines.length - 1;
  const x = new Float64Array(n);
  const y = new Float64Array(n);
  const value = new Float64Array(n);
  for (let r = 0; r < n; r++) {
    const parts = lines[r + 1].split(",");
    if (parts.length < header.length) {
      throw new Error(`row ${r + 2}: expected ${header.length} columns`);
    }
    x[r] = Number(parts[ix]);
    y[r] = Number(parts[iy]);
    value[r] = Number(parts[iv]);
    if (!Number.isFinite(x[r]) || !Number.isFinite(y[r]) || !Number.isFinite(value[r])) {
      throw new Error(`row ${r + 2}: non-numeric entry`);
    }
  }
  return { x, y, value };
}

export function readFieldCsv(path: string): FieldTable {
  return parseFieldCsv(fs.readFileSync(path, "utf8"));
}

export function parseKeyValues(text: string): Record<string, string> {
  const out: Record<string, string> = {};
  for (const raw of text.split(/\r?\n/)) {
    const line = raw.split("#", 1)[0].trim();
    if (!line) continue;
    const eq = line.indexOf("=");
    if (eq < 0) {
      throw new Error(`expected 'key = value', got: ${line}`);
    }
    out[line.slice(0, eq).trim()] = line.slice(eq + 1).trim();
  }
  return out;
}

export function readKeyValues(path: string): Record<string, string> {
  return parseKeyValues(fs.readFileSync(path, "utf8"));
}
