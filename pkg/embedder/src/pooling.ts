/** Pooling of a final-layer token grid into one vector per image. */

export type Pooling = 'mean' | 'cls';

/**
 * tokens: row-major (nTokens x hidden) grid from the vision model's last
 * layer; token 0 is the class token when the model has one.
 */
export function poolTokens(tokens: readonly number[][], pooling: Pooling): number[] {
  if (tokens.length === 0) {
    throw new Error('cannot pool an empty token grid');
  }
  const hidden = tokens[0].length;
  if (tokens.some((row) => row.length !== hidden)) {
    throw new Error('ragged token grid');
  }
  if (pooling === 'cls') {
    return [...tokens[0]];
  }
  const out = new Array<number>(hidden).fill(0);
  for (const row of tokens) {
    for (let j = 0; j < hidden; j++) {
      out[j] += row[j];
    }
  }
  for (let j = 0; j < hidden; j++) {
    out[j] /= tokens.length;
  }
  return out;
}
