/**
 * Perceptually uniform colormap built from anchor stops, sampled by linear
 * interpolation, plus helpers for mapping values into [0, 1].
 */

export type Rgb = [number, number, number];

// viridis anchors
const ANCHORS: Array<[number, Rgb]> = [
  [0.0, [68, 1, 84]],
  [0.125, [72, 40, 120]],
  [0.25, [62, 74, 137]],
  [0.375, [49, 104, 142]],
  [0.5, [38, 130, 142]],
  [0.625, [31, 158, 137]],
  [0.75, [53, 183, 121]],
  [0.875, [109, 205, 89]],
  [1.0, [253, 231, 37]],
];

export function sampleColormap(t: number): Rgb {
  const clamped = Math.min(Math.max(t, 0), 1);
  for (let i = 1; i < ANCHORS.length; i++) {
    const [t1, c1] = ANCHORS[i];
    if (clamped <= t1) {
      const [t0, c0] = ANCHORS[i - 1];
      const w = t1 > t0 ? (clamped - t0) / (t1 - t0) : 0;
      return [
        Math.round(c0[0] + w * (c1[0] - c0[0])),
        Math.round(c0[1] + w * (c1[1] - c0[1])),
        Math.round(c0[2] + w * (c1[2] - c0[2])),
      ];
    }
  }
  return ANCHORS[ANCHORS.length - 1][1];
}

export function normalize(value: number, vmin: number, vmax: number): number {
  if (vmax <= vmin) return 0.5;
  return (value - vmin) / (vmax - vmin);
}
