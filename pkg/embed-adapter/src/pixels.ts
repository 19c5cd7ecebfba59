import { readFileSync } from "node:fs";

import { PNG } from "pngjs";

import type { Box, RgbImage } from "./types.js";

/** Decode a PNG file into an RGB float image (alpha discarded). */
export function readPng(path: string): RgbImage {
  let png: PNG;
  try {
    png = PNG.sync.read(readFileSync(path));
  } catch (err) {
    throw new Error(`${path}: cannot decode PNG (${(err as Error).message})`);
  }
  const { width, height } = png;
  const data = new Float32Array(width * height * 3);
  for (let i = 0; i < width * height; i++) {
    data[i * 3] = png.data[i * 4];
    data[i * 3 + 1] = png.data[i * 4 + 1];
    data[i * 3 + 2] = png.data[i * 4 + 2];
  }
  return { width, height, data };
}

function sample(img: RgbImage, x: number, y: number, channel: number): number {
  const xi = Math.min(Math.max(Math.round(x), 0), img.width - 1);
  const yi = Math.min(Math.max(Math.round(y), 0), img.height - 1);
  return img.data[(yi * img.width + xi) * 3 + channel];
}

/**
 * Crop a box out of the image and resize it to size x size with bilinear
 * interpolation. Boxes are clamped to the image bounds.
 */
export function cropResize(img: RgbImage, box: Box, size: number): RgbImage {
  const x0 = Math.max(0, box.x);
  const y0 = Math.max(0, box.y);
  const w = Math.max(1, Math.min(box.w, img.width - x0));
  const h = Math.max(1, Math.min(box.h, img.height - y0));
  const out = new Float32Array(size * size * 3);
  for (let ty = 0; ty < size; ty++) {
    const sy = y0 + ((ty + 0.5) * h) / size - 0.5;
    const y1 = Math.floor(sy);
    const fy = sy - y1;
    for (let tx = 0; tx < size; tx++) {
      const sx = x0 + ((tx + 0.5) * w) / size - 0.5;
      const x1 = Math.floor(sx);
      const fx = sx - x1;
      for (let c = 0; c < 3; c++) {
        const v00 = sample(img, x1, y1, c);
        const v10 = sample(img, x1 + 1, y1, c);
        const v01 = sample(img, x1, y1 + 1, c);
        const v11 = sample(img, x1 + 1, y1 + 1, c);
        const top = v00 * (1 - fx) + v10 * fx;
        const bottom = v01 * (1 - fx) + v11 * fx;
        out[(ty * size + tx) * 3 + c] = top * (1 - fy) + bottom * fy;
      }
    }
  }
  return { width: size, height: size, data: out };
}

/** Luma in [0, 255]. */
export function gray(img: RgbImage, x: number, y: number): number {
  const base = (y * img.width + x) * 3;
  return 0.299 * img.data[base] + 0.587 * img.data[base + 1] + 0.114 * img.data[base + 2];
}
