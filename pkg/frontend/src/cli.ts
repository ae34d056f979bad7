/**
 * Command line front end:
 *   render         --in <run dir> --field u --out fig.png [--size N]
 *                  [--vmin V] [--vmax V] [--colorbar] [--title TEXT]
 *   render-compare --in <dir1,dir2,...> --field u --out fig.png [...]
 */

import * as path from "path";
import { parseArgs } from "util";

import { renderComparison, renderField } from "./render";

function usage(): never {
  console.error(
    "usage: render --in <dir> --field <name> --out <png> " +
    "[--size N] [--vmin V] [--vmax V] [--colorbar] [--title TEXT]\n" +
    "       render-compare --in <dir1,dir2,...> --field <name> --out <png>");
  process.exit(2);
}

export function main(argv: string[]): number {
  const command = argv[0];
  if (command !== "render" && command !== "render-compare") {
    usage();
  }
  const { values } = parseArgs({
    args: argv.slice(1),
    options: {
      in: { type: "string" },
      field: { type: "string", default: "u" },
      out: { type: "string" },
      size: { type: "string" },
      vmin: { type: "string" },
      vmax: { type: "string" },
      colorbar: { type: "boolean", default: false },
      title: { type: "string" },
    },
  });
  if (!values.in || !values.out) {
    usage();
  }
  const options = {
    size: values.size ? Number(values.size) : undefined,
    vmin: values.vmin !== undefined ? Number(values.vmin) : undefined,
    vmax: values.vmax !== undefined ? Number(values.vmax) : undefined,
    colorbar: values.colorbar,
    title: values.title,
  };
  if (command === "render") {
    const csv = path.join(values.in, `${values.field}.csv`);
    const out = renderField(csv, values.out, options);
    console.log(`wrote ${values.out} (${out.width}x${out.height}, ` +
                `range [${out.vmin}, ${out.vmax}])`);
  } else {
    const dirs = values.in.split(",").map((s) => s.trim()).filter(Boolean);
    const out = renderComparison(dirs, values.field ?? "u", values.out, options);
    console.log(`wrote ${values.out} (${out.width}x${out.height}, ` +
                `${dirs.length} panels)`);
  }
  return 0;
}

if (require.main === module) {
  try {
    process.exit(main(process.argv.slice(2)));
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    process.exit(1);
  }
}
