import { readFileSync } from "node:fs";

import type { StoryImage, StoryInfo } from "./types.js";

const NOUN_OR_PRONOUN = /^(NN|PRP)/;

/**
 * Read the pipeline's story file, keeping only what the adapter needs:
 * image descriptors and the token surfaces that can become mentions
 * (noun and pronoun tags).
 */
export function loadStory(path: string): StoryInfo {
  let doc: any;
  try {
    doc = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new Error(`${path}: not readable as JSON (${(err as Error).message})`);
  }
  if (typeof doc?.story_id !== "string") {
    throw new Error(`${path}: missing story_id`);
  }
  if (!Array.isArray(doc.images) || doc.images.length === 0) {
    throw new Error(`${path}: missing images`);
  }
  const images: StoryImage[] = doc.images.map((img: any, i: number) => {
    if (
      typeof img?.index !== "number" ||
      typeof img?.width !== "number" ||
      typeof img?.height !== "number" ||
      img.width <= 0 ||
      img.height <= 0
    ) {
      throw new Error(`${path}: images[${i}] needs numeric index/width/height`);
    }
    return { index: img.index, width: img.width, height: img.height };
  });
  const surfaces: string[] = [];
  const seen = new Set<string>();
  for (const sentence of doc.sentences ?? []) {
    for (const token of sentence?.tokens ?? []) {
      if (typeof token?.text !== "string" || typeof token?.pos !== "string") continue;
      if (!NOUN_OR_PRONOUN.test(token.pos)) continue;
      if (!seen.has(token.text)) {
        seen.add(token.text);
        surfaces.push(token.text);
      }
    }
  }
  return { storyId: doc.story_id, images, mentionSurfaces: surfaces };
}
