#!/usr/bin/env node
import { extract } from "./extract.js";
import { MODELS, type ModelName } from "./types.js";

const USAGE =
  "usage: embed-adapter extract --images DIR --story FILE --model clip|face-resnet --out FILE";

function parseArgs(argv: string[]): { images: string; story: string; model: ModelName; out: string } {
  if (argv[0] !== "extract") {
    throw new Error(USAGE);
  }
  const options: Record<string, string> = {};
  for (let i = 1; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new Error(USAGE);
    }
    options[flag.slice(2)] = value;
  }
  const { images, story, out } = options;
  const model = (options.model ?? "clip") as ModelName;
  if (!images || !story || !out) {
    throw new Error(USAGE);
  }
  if (!MODELS.includes(model)) {
    throw new Error(`unknown model "${model}"; choose one of ${MODELS.join(", ")}`);
  }
  return { images, story, model, out };
}

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs(argv);
  } catch (err) {
    console.error((err as Error).message);
    return 2;
  }
  try {
    const doc = extract({
      imagesDir: parsed.images,
      storyPath: parsed.story,
      model: parsed.model,
      outPath: parsed.out,
    });
    console.log(
      `wrote ${parsed.out}: ${doc.faces.length} faces, ${doc.mentions.length} mentions, dim ${doc.dim}`,
    );
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
