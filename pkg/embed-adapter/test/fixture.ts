import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { PNG } from "pngjs";

export const IMAGE_W = 320;
export const IMAGE_H = 240;
export const DECLARED_W = 640;
export const DECLARED_H = 480;

interface FaceSpec {
  x: number;
  y: number;
  w: number;
  h: number;
  shade: number; // small tint difference so crops are not identical
}

/** Faces drawn per image index; image 4 stays landscape-only. */
export const FACES_PER_IMAGE: FaceSpec[][] = [
  [
    { x: 40, y: 60, w: 40, h: 50, shade: 0 },
    { x: 200, y: 80, w: 44, h: 52, shade: 30 },
  ],
  [
    { x: 60, y: 50, w: 42, h: 48, shade: 0 },
    { x: 220, y: 90, w: 40, h: 54, shade: 30 },
  ],
  [{ x: 120, y: 70, w: 46, h: 50, shade: 0 }],
  [{ x: 90, y: 100, w: 40, h: 46, shade: 30 }],
  [],
];

function drawImage(faces: FaceSpec[]): PNG {
  const png = new PNG({ width: IMAGE_W, height: IMAGE_H });
  for (let y = 0; y < IMAGE_H; y++) {
    for (let x = 0; x < IMAGE_W; x++) {
      const i = (y * IMAGE_W + x) * 4;
      // sky-and-ground background, nowhere near the skin-tone gamut
      png.data[i] = 60;
      png.data[i + 1] = y < IMAGE_H / 2 ? 90 : 130;
      png.data[i + 2] = y < IMAGE_H / 2 ? 170 : 60;
      png.data[i + 3] = 255;
    }
  }
  for (const face of faces) {
    for (let y = face.y; y < face.y + face.h; y++) {
      for (let x = face.x; x < face.x + face.w; x++) {
        const i = (y * IMAGE_W + x) * 4;
        const stripe = (x - face.x) % 8 < 4 ? 8 : 0; // texture for gradients
        png.data[i] = 215 + Math.min(stripe + (face.shade >> 2), 40);
        png.data[i + 1] = 150 + face.shade;
        png.data[i + 2] = 115 + (face.shade >> 1);
        png.data[i + 3] = 255;
      }
    }
  }
  return png;
}

export function writeFixtureImages(dir: string): void {
  mkdirSync(dir, { recursive: true });
  FACES_PER_IMAGE.forEach((faces, index) => {
    writeFileSync(join(dir, `${index}.png`), PNG.sync.write(drawImage(faces)));
  });
}

const SENTENCES = [
  "the man waved .",
  "the woman smiled .",
  "the man sat .",
  "they left .",
  "the field was empty .",
];

const POS: Record<string, string> = {
  the: "DT",
  man: "NN",
  woman: "NN",
  they: "PRP",
  waved: "VBD",
  smiled: "VBD",
  sat: "VBD",
  left: "VBD",
  field: "NN",
  was: "VBD",
  empty: "JJ",
  ".": ".",
};

export function writeFixtureStory(path: string): void {
  const sentences = SENTENCES.map((text, index) => {
    let cursor = 0;
    const tokens = text.split(" ").map((word) => {
      const token = {
        text: word,
        pos: POS[word] ?? "NN",
        char_start: cursor,
        char_end: cursor + word.length,
      };
      cursor += word.length + 1;
      return token;
    });
    return { index, text, tokens };
  });
  const story = {
    format_version: 1,
    story_id: "fixture-1",
    sentences,
    images: Array.from({ length: 5 }, (_, index) => ({
      index,
      width: DECLARED_W,
      height: DECLARED_H,
    })),
  };
  writeFileSync(path, JSON.stringify(story, null, 2) + "\n", "utf-8");
}
