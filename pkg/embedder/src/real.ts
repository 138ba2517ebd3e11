/**
 * Real-model path: run a frozen pretrained self-supervised vision
 * transformer over the scene image and pool its last-layer tokens.
 *
 * The heavy dependency is optional: when transformers.js or the model
 * weights are unavailable this module reports it so the CLI can exit
 * with fetch instructions; the --fake mode needs none of it.
 */

import { createHash } from 'node:crypto';
import { readFile } from 'node:fs/promises';

import { poolTokens, type Pooling } from './pooling.js';

export const DEFAULT_MODEL = 'Xenova/beit-base-patch16-224-pt22k-ft22k';

export class WeightsUnavailableError extends Error {}

export interface RealEmbedding {
  values: number[];
  comment: string;
}

export async function embedImage(
  imagePath: string,
  pooling: Pooling,
  modelId: string = DEFAULT_MODEL,
): Promise<RealEmbedding> {
  const imageBytes = await readFile(imagePath); // throws ENOENT for unreadable input
  const imageHash = createHash('sha256').update(imageBytes).digest('hex').slice(0, 16);

  let transformers: any;
  try {
    transformers = await import('@huggingface/transformers' as string);
  } catch {
    throw new WeightsUnavailableError(
      'transformers.js is not installed; run `npm install @huggingface/transformers` ' +
        `and ensure the model weights for ${modelId} are reachable, then retry`,
    );
  }

  let tokens: number[][];
  try {
    const extractor = await transformers.pipeline('image-feature-extraction', modelId);
    const output = await extractor(imagePath, { pooling: 'none' });
    tokens = gridFromTensor(output);
  } catch (err) {
    throw new WeightsUnavailableError(
      `could not load or run ${modelId}: ${String(err)}; fetch the weights ` +
        '(requires network access to the model hub) and retry',
    );
  }

  return {
    values: poolTokens(tokens, pooling),
    comment: `model=${modelId} pooling=${pooling} image_sha256=${imageHash}`,
  };
}

/** Accepts the (1, tokens, hidden) tensor convention of transformers.js. */
export function gridFromTensor(output: { data: ArrayLike<number>; dims: number[] }): number[][] {
  const dims = output.dims;
  if (dims.length !== 3 || dims[0] !== 1) {
    throw new Error(`unexpected feature tensor shape ${JSON.stringify(dims)}`);
  }
  const [, nTokens, hidden] = dims;
  const grid: number[][] = [];
  for (let t = 0; t < nTokens; t++) {
    const row = new Array<number>(hidden);
    for (let j = 0; j < hidden; j++) {
      row[j] = Number(output.data[t * hidden + j]);
    }
    grid.push(row);
  }
  return grid;
}
