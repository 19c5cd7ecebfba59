export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface StoryImage {
  index: number;
  width: number;
  height: number;
}

export interface StoryInfo {
  storyId: string;
  images: StoryImage[];
  /** Distinct noun/pronoun token surfaces, in first-occurrence order. */
  mentionSurfaces: string[];
}

export interface RgbImage {
  width: number;
  height: number;
  /** Row-major RGB triples, values in [0, 255]. */
  data: Float32Array;
}

export interface FaceEntry {
  image_index: number;
  box: Box;
  vector: number[];
}

export interface MentionEntry {
  surface: string;
  vector: number[];
}

export interface EmbeddingDocument {
  format_version: number;
  dim: number;
  faces: FaceEntry[];
  mentions: MentionEntry[];
}

export type ModelName = "clip" | "face-resnet";

export const MODELS: ModelName[] = ["clip", "face-resnet"];

/** Every model emits this many dimensions. */
export const EMBEDDING_DIM = 512;

/** Face crops are resized to this square before feature pooling. */
export const CROP_SIZE = 160;
