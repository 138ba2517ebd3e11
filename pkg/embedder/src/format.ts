/**
 * The embedding file format the trajectory core ingests.
 *
 * Line 1: integer dimension. Optional '#' comment lines. Final line:
 * that many space-separated decimal floats. JavaScript's default
 * number-to-string conversion is the shortest representation that
 * round-trips the float64 bits, which is what the format requires.
 */

export function renderEmbeddingFile(values: readonly number[], comment?: string): string {
  if (values.length === 0) {
    throw new Error('embedding must have at least one value');
  }
  for (const v of values) {
    if (!Number.isFinite(v)) {
      throw new Error('embedding values must be finite');
    }
  }
  const lines = [String(values.length)];
  if (comment !== undefined && comment.length > 0) {
    lines.push(`# ${comment}`);
  }
  lines.push(values.map((v) => String(v)).join(' '));
  return lines.join('\n') + '\n';
}

export function parseEmbeddingFile(text: string): { dim: number; values: number[]; comments: string[] } {
  const lines = text.split('\n');
  const dim = Number.parseInt(lines[0] ?? '', 10);
  if (!Number.isInteger(dim) || dim < 1) {
    throw new Error(`bad header: ${JSON.stringify(lines[0])}`);
  }
  const comments: string[] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i]?.trim() ?? '';
    if (line.length === 0) continue;
    if (line.startsWith('#')) {
      comments.push(line);
      continue;
    }
    const values = line.split(/\s+/).map(Number);
    if (values.length !== dim) {
      throw new Error(`header declares ${dim} values, found ${values.length}`);
    }
    if (values.some((v) => !Number.isFinite(v))) {
      throw new Error('non-finite value in embedding file');
    }
    return { dim, values, comments };
  }
  throw new Error('missing values line');
}
