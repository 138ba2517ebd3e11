import { execFile } from 'node:child_process';
import { mkdtemp, readFile } from 'node:fs/promises';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { promisify } from 'node:util';

import { beforeAll, describe, expect, it } from 'vitest';

import { parseEmbeddingFile } from '../src/format.js';

const run = promisify(execFile);
const CLI = join(__dirname, '..', 'dist', 'cli.js');

async function invoke(args: string[]): Promise<{ code: number; stderr: string }> {
  try {
    const { stderr } = await run('node', [CLI, ...args]);
    return { code: 0, stderr };
  } catch (err: any) {
    return { code: err.code ?? 1, stderr: err.stderr ?? '' };
  }
}

describe('cli (built bundle)', () => {
  let dir: string;

  beforeAll(async () => {
    dir = await mkdtemp(join(tmpdir(), 'embedder-'));
  });

  it('fake mode writes a parseable file with provenance comment', async () => {
    const out = join(dir, 'a.txt');
    const { code } = await invoke([
      'embed', 'ignored.png', '--out', out, '--fake', '--dim', '12', '--seed', '3',
    ]);
    expect(code).toBe(0);
    const parsed = parseEmbeddingFile(await readFile(out, 'utf-8'));
    expect(parsed.dim).toBe(12);
    expect(parsed.comments[0]).toContain('fake embedding dim=12 seed=3');
  });

  it('fake mode is byte-identical per seed and differs across seeds', async () => {
    const one = join(dir, 'one.txt');
    const two = join(dir, 'two.txt');
    const other = join(dir, 'other.txt');
    await invoke(['embed', 'x.png', '--out', one, '--fake', '--dim', '8', '--seed', '7']);
    await invoke(['embed', 'x.png', '--out', two, '--fake', '--dim', '8', '--seed', '7']);
    await invoke(['embed', 'x.png', '--out', other, '--fake', '--dim', '8', '--seed', '8']);
    expect(await readFile(one)).toEqual(await readFile(two));
    expect(await readFile(one)).not.toEqual(await readFile(other));
  });

  it('shares the header dim across different seeds', async () => {
    const a = parseEmbeddingFile(await readFile(join(dir, 'one.txt'), 'utf-8'));
    const b = parseEmbeddingFile(await readFile(join(dir, 'other.txt'), 'utf-8'));
    expect(a.dim).toBe(b.dim);
    expect(a.values).not.toEqual(b.values);
  });

  it('real mode on an unreadable image exits 1', async () => {
    const { code } = await invoke([
      'embed', join(dir, 'missing.png'), '--out', join(dir, 'r.txt'),
    ]);
    expect(code).toBe(1);
  });

  it('real mode without transformers.js exits 2 with fetch instructions', async () => {
    // the image must exist so the failure is attributable to the model path
    const image = join(dir, 'real.png');
    await run('node', ['-e', `require('fs').writeFileSync(${JSON.stringify(image)}, 'png')`]);
    const { code, stderr } = await invoke([
      'embed', image, '--out', join(dir, 'r2.txt'),
    ]);
    if (code === 0) {
      // transformers.js and weights happen to be available in this env
      const parsed = parseEmbeddingFile(await readFile(join(dir, 'r2.txt'), 'utf-8'));
      expect(parsed.dim).toBeGreaterThan(0);
    } else {
      expect(code).toBe(2);
      expect(stderr).toMatch(/weights|transformers/i);
    }
  });

  it('rejects unknown flags with exit 1', async () => {
    const { code } = await invoke(['embed', 'x.png', '--out', 'y', '--bogus']);
    expect(code).toBe(1);
  });
});
