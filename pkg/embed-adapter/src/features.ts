import { gray } from "./pixels.js";
import { EMBEDDING_DIM, type ModelName, type RgbImage } from "./types.js";

/** Normalize in place to unit L2 norm; degenerate vectors get a fixed pilot. */
export function l2Normalize(vector: number[]): number[] {
  let sum = 0;
  for (const v of vector) sum += v * v;
  if (sum < 1e-24) {
    vector[0] = 1;
    return vector;
  }
  const inv = 1 / Math.sqrt(sum);
  for (let i = 0; i < vector.length; i++) vector[i] *= inv;
  return vector;
}

interface CellStats {
  meanR: number;
  meanG: number;
  meanB: number;
  meanGray: number;
  stdGray: number;
  gradX: number;
  gradY: number;
  gradMag: number;
}

function cellStats(img: RgbImage, x0: number, y0: number, cell: number): CellStats {
  let sumR = 0, sumG = 0, sumB = 0, sumGray = 0, sumGray2 = 0;
  let sumGx = 0, sumGy = 0, sumMag = 0;
  const n = cell * cell;
  for (let y = y0; y < y0 + cell; y++) {
    for (let x = x0; x < x0 + cell; x++) {
      const base = (y * img.width + x) * 3;
      sumR += img.data[base];
      sumG += img.data[base + 1];
      sumB += img.data[base + 2];
      const g = gray(img, x, y);
      sumGray += g;
      sumGray2 += g * g;
      const gx = gray(img, Math.min(x + 1, img.width - 1), y) - gray(img, Math.max(x - 1, 0), y);
      const gy = gray(img, x, Math.min(y + 1, img.height - 1)) - gray(img, x, Math.max(y - 1, 0));
      sumGx += gx;
      sumGy += gy;
      sumMag += Math.hypot(gx, gy);
    }
  }
  const meanGray = sumGray / n;
  const variance = Math.max(0, sumGray2 / n - meanGray * meanGray);
  return {
    meanR: sumR / n / 255,
    meanG: sumG / n / 255,
    meanB: sumB / n / 255,
    meanGray: meanGray / 255,
    stdGray: Math.sqrt(variance) / 255,
    gradX: sumGx / n / 255,
    gradY: sumGy / n / 255,
    gradMag: sumMag / n / 255,
  };
}

/**
 * Colour + gradient pooling over an 8x8 grid (8 statistics per cell,
 * 512 dimensions). Stand-in for a pretrained joint vision encoder.
 */
function clipFeatures(img: RgbImage): number[] {
  const grid = 8;
  const cell = img.width / grid;
  const out: number[] = [];
  for (let gy = 0; gy < grid; gy++) {
    for (let gx = 0; gx < grid; gx++) {
      const s = cellStats(img, Math.round(gx * cell), Math.round(gy * cell), Math.round(cell));
      out.push(s.meanR, s.meanG, s.meanB, s.meanGray, s.stdGray, s.gradX, s.gradY, s.gradMag);
    }
  }
  return l2Normalize(out);
}

/**
 * Grayscale pooling over a 16x16 grid (mean + deviation per cell, 512
 * dimensions). Stand-in for a pretrained face-identity encoder.
 */
function faceNetFeatures(img: RgbImage): number[] {
  const grid = 16;
  const cell = img.width / grid;
  const out: number[] = [];
  for (let gy = 0; gy < grid; gy++) {
    for (let gx = 0; gx < grid; gx++) {
      const s = cellStats(img, Math.round(gx * cell), Math.round(gy * cell), Math.round(cell));
      out.push(s.meanGray, s.stdGray);
    }
  }
  return l2Normalize(out);
}

export function imageFeatures(model: ModelName, crop: RgbImage): number[] {
  const vector = model === "clip" ? clipFeatures(crop) : faceNetFeatures(crop);
  if (vector.length !== EMBEDDING_DIM) {
    throw new Error(`model ${model} produced ${vector.length} dims, expected ${EMBEDDING_DIM}`);
  }
  return vector;
}
