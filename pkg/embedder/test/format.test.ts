import { describe, expect, it } from 'vitest';

import { parseEmbeddingFile, renderEmbeddingFile } from '../src/format.js';

describe('embedding file format', () => {
  it('renders header, comment, and values', () => {
    const text = renderEmbeddingFile([0.5, -1.25, 3], 'unit test');
    expect(text).toBe('3\n# unit test\n0.5 -1.25 3\n');
  });

  it('omits the comment line when absent', () => {
    expect(renderEmbeddingFile([1.5])).toBe('1\n1.5\n');
  });

  it('round-trips values bit-exactly', () => {
    const values = [Math.PI, -Math.E, 1 / 3, 1e-17, 123456.789012345];
    const parsed = parseEmbeddingFile(renderEmbeddingFile(values, 'rt'));
    expect(parsed.dim).toBe(5);
    expect(parsed.values).toEqual(values);
  });

  it('rejects non-finite values', () => {
    expect(() => renderEmbeddingFile([1, Number.NaN])).toThrow(/finite/);
    expect(() => renderEmbeddingFile([Infinity])).toThrow(/finite/);
  });

  it('rejects empty embeddings', () => {
    expect(() => renderEmbeddingFile([])).toThrow(/at least one/);
  });

  it('parser rejects count mismatches', () => {
    expect(() => parseEmbeddingFile('4\n1 2 3\n')).toThrow(/declares 4/);
  });
});
