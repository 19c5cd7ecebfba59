import { l2Normalize } from "./features.js";
import { EMBEDDING_DIM } from "./types.js";

function fnv1a(text: string, seed: number): number {
  let hash = (0x811c9dc5 ^ seed) >>> 0;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

/**
 * Deterministic character-trigram hashing encoder for mention surfaces
 * (signed feature hashing into EMBEDDING_DIM bins, unit L2 norm).
 * Stand-in for a pretrained text encoder; shares the image models'
 * dimension so one table carries both.
 */
export function textFeatures(surface: string, dim: number = EMBEDDING_DIM): number[] {
  const padded = `^${surface.toLowerCase()}$`;
  const vector = new Array<number>(dim).fill(0);
  for (let i = 0; i + 3 <= padded.length; i++) {
    const trigram = padded.slice(i, i + 3);
    const bin = fnv1a(trigram, 0) % dim;
    const sign = fnv1a(trigram, 0x9e3779b9) & 1 ? 1 : -1;
    vector[bin] += sign;
  }
  return l2Normalize(vector);
}
