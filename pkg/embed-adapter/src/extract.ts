import { existsSync, renameSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { detectFaces } from "./detect.js";
import { imageFeatures } from "./features.js";
import { cropResize, readPng } from "./pixels.js";
import { loadStory } from "./story.js";
import { textFeatures } from "./text.js";
import {
  CROP_SIZE,
  EMBEDDING_DIM,
  MODELS,
  type Box,
  type EmbeddingDocument,
  type FaceEntry,
  type ModelName,
  type StoryImage,
} from "./types.js";

export interface ExtractOptions {
  imagesDir: string;
  storyPath: string;
  model: ModelName;
  outPath?: string;
}

function imagePath(imagesDir: string, storyId: string, index: number): string {
  const candidates = [join(imagesDir, `${index}.png`), join(imagesDir, `${storyId}_${index}.png`)];
  for (const candidate of candidates) {
    if (existsSync(candidate)) return candidate;
  }
  throw new Error(`no image for index ${index}: tried ${candidates.join(", ")}`);
}

function scaleBox(box: Box, sx: number, sy: number): Box {
  return { x: box.x * sx, y: box.y * sy, w: Math.max(box.w * sx, 1e-6), h: Math.max(box.h * sy, 1e-6) };
}

function faceSortKey(a: FaceEntry, b: FaceEntry): number {
  return (
    a.image_index - b.image_index ||
    a.box.x - b.box.x ||
    a.box.y - b.box.y ||
    a.box.w - b.box.w ||
    a.box.h - b.box.h
  );
}

/**
 * Detect faces in every story image, embed the crops and the story's
 * mention surfaces, and return (optionally write) the embedding document.
 * Detection boxes are translated into the story's declared image
 * coordinate system; crops are resized to CROP_SIZE before pooling.
 */
export function extract(options: ExtractOptions): EmbeddingDocument {
  if (!MODELS.includes(options.model)) {
    throw new Error(`unsupported model "${options.model}"; choose one of ${MODELS.join(", ")}`);
  }
  const story = loadStory(options.storyPath);
  const faces: FaceEntry[] = [];
  for (const image of story.images) {
    faces.push(...extractImage(options, story.storyId, image));
  }
  faces.sort(faceSortKey);
  const mentions = [...story.mentionSurfaces]
    .sort()
    .map((surface) => ({ surface, vector: textFeatures(surface) }));
  const doc: EmbeddingDocument = {
    format_version: 1,
    dim: EMBEDDING_DIM,
    faces,
    mentions,
  };
  if (options.outPath) {
    const tmp = `${options.outPath}.tmp`;
    writeFileSync(tmp, JSON.stringify(doc, null, 2) + "\n", "utf-8");
    renameSync(tmp, options.outPath);
  }
  return doc;
}

function extractImage(
  options: ExtractOptions,
  storyId: string,
  image: StoryImage,
): FaceEntry[] {
  const path = imagePath(options.imagesDir, storyId, image.index);
  const png = readPng(path);
  const sx = image.width / png.width;
  const sy = image.height / png.height;
  const entries: FaceEntry[] = [];
  for (const box of detectFaces(png)) {
    const crop = cropResize(png, box, CROP_SIZE);
    entries.push({
      image_index: image.index,
      box: scaleBox(box, sx, sy),
      vector: imageFeatures(options.model, crop),
    });
  }
  return entries;
}
