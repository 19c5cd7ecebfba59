import type { Box, RgbImage } from "./types.js";

/** Smallest connected skin region (in pixels) accepted as a face. */
export const MIN_FACE_AREA = 64;

/**
 * Classic RGB skin-tone rule. Deterministic and model-free; the adapter
 * uses it in place of a learned detector so it runs with no downloaded
 * weights (see README).
 */
export function isSkin(r: number, g: number, b: number): boolean {
  const max = Math.max(r, g, b);
  const min = Math.min(r, g, b);
  return (
    r > 95 &&
    g > 40 &&
    b > 20 &&
    max - min > 15 &&
    Math.abs(r - g) > 15 &&
    r > g &&
    r > b
  );
}

/**
 * Detect face candidates: connected components (4-connectivity) of the
 * skin mask with at least MIN_FACE_AREA pixels, as tight bounding boxes
 * ordered by (y, x).
 */
export function detectFaces(img: RgbImage, minArea: number = MIN_FACE_AREA): Box[] {
  const { width, height, data } = img;
  const mask = new Uint8Array(width * height);
  for (let i = 0; i < width * height; i++) {
    if (isSkin(data[i * 3], data[i * 3 + 1], data[i * 3 + 2])) mask[i] = 1;
  }
  const seen = new Uint8Array(width * height);
  const boxes: Box[] = [];
  const stack = new Int32Array(width * height);
  for (let start = 0; start < width * height; start++) {
    if (!mask[start] || seen[start]) continue;
    let top = 0;
    stack[top++] = start;
    seen[start] = 1;
    let minX = width, minY = height, maxX = 0, maxY = 0, area = 0;
    while (top > 0) {
      const idx = stack[--top];
      const x = idx % width;
      const y = (idx / width) | 0;
      area++;
      if (x < minX) minX = x;
      if (x > maxX) maxX = x;
      if (y < minY) minY = y;
      if (y > maxY) maxY = y;
      if (x > 0 && mask[idx - 1] && !seen[idx - 1]) { seen[idx - 1] = 1; stack[top++] = idx - 1; }
      if (x < width - 1 && mask[idx + 1] && !seen[idx + 1]) { seen[idx + 1] = 1; stack[top++] = idx + 1; }
      if (y > 0 && mask[idx - width] && !seen[idx - width]) { seen[idx - width] = 1; stack[top++] = idx - width; }
      if (y < height - 1 && mask[idx + width] && !seen[idx + width]) { seen[idx + width] = 1; stack[top++] = idx + width; }
    }
    if (area >= minArea) {
      boxes.push({ x: minX, y: minY, w: maxX - minX + 1, h: maxY - minY + 1 });
    }
  }
  boxes.sort((a, b) => a.y - b.y || a.x - b.x);
  return boxes;
}
