/**
 * Minimal 4x6 pixel glyphs for colorbar tick labels (digits, sign, dot,
 * exponent marker).  Each glyph row is a 4-bit mask, most significant bit on
 * the left.
 */

const GLYPHS: Record<string, number[]> = {
  "0": [0b0110, 0b1001, 0b1011, 0b1101, 0b1001, 0b0110],
  "1": [0b0010, 0b0110, 0b0010, 0b0010, 0b0010, 0b0111],
  "2": [0b0110, 0b1001, 0b0001, 0b0010, 0b0100, 0b1111],
  "3": [0b1110, 0b0001, 0b0110, 0b0001, 0b0001, 0b1110],
  "4": [0b1001, 0b1001, 0b1111, 0b0001, 0b0001, 0b0001],
  "5": [0b1111, 0b1000, 0b1110, 0b0001, 0b0001, 0b1110],
  "6": [0b0110, 0b1000, 0b1110, 0b1001, 0b1001, 0b0110],
  "7": [0b1111, 0b0001, 0b0010, 0b0010, 0b0100, 0b0100],
  "8": [0b0110, 0b1001, 0b0110, 0b1001, 0b1001, 0b0110],
  "9": [0b0110, 0b1001, 0b1001, 0b0111, 0b0001, 0b0110],
  "-": [0b0000, 0b0000, 0b1111, 0b0000, 0b0000, 0b0000],
  "+": [0b0000, 0b0010, 0b0111, 0b0010, 0b0000, 0b0000],
  ".": [0b0000, 0b0000, 0b0000, 0b0000, 0b0000, 0b0010],
  "e": [0b0000, 0b0110, 0b1011, 0b1100, 0b1001, 0b0110],
};

export const GLYPH_W = 4;
export const GLYPH_H = 6;

/** Stamp text into an RGBA buffer; unknown characters advance the cursor. */
export function drawText(
  rgba: Uint8Array, width: number, height: number,
  text: string, x0: number, y0: number, color: [number, number, number],
): void {
  let cx = x0;
  for (const ch of text) {
    const glyph = GLYPHS[ch];
    if (glyph) {
      for (let r = 0; r < GLYPH_H; r++) {
        for (let c = 0; c < GLYPH_W; c++) {
          if ((glyph[r] >> (GLYPH_W - 1 - c)) & 1) {
            const px = cx + c;
            const py = y0 + r;
            if (px >= 0 && px < width && py >= 0 && py < height) {
              const ofs = 4 * (py * width + px);
              rgba[ofs] = color[0];
              rgba[ofs + 1] = color[1];
              rgba[ofs + 2] = color[2];
              rgba[ofs + 3] = 255;
            }
          }
        }
      }
    }
    cx += GLYPH_W + 1;
  }
}
