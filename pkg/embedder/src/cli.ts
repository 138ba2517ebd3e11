#!/usr/bin/env node
/**
 * scene-embedder: write a pooled image embedding in the trajectory
 * core's embedding file format.
 *
 *   embed <image> --out <file> [--pooling mean|cls]
 *   embed <image> --out <file> --fake --dim D --seed S
 *
 * Exit codes: 0 success, 1 unreadable input or bad arguments, 2 model
 * weights unavailable (with fetch instructions on stderr).
 */

import { writeFile } from 'node:fs/promises';

import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { renderEmbeddingFile } from './format.js';
import { fakeEmbedding } from './rng.js';
import type { Pooling } from './pooling.js';
import { DEFAULT_MODEL, WeightsUnavailableError, embedImage } from './real.js';

export async function main(argv: string[]): Promise<number> {
  let exitCode = 0;
  const parser = yargs(argv)
    .scriptName('scene-embedder')
    .command(
      'embed <image>',
      'embed a scene image (or emit a seeded stub with --fake)',
      (cmd) =>
        cmd
          .positional('image', { type: 'string', demandOption: true })
          .option('out', { type: 'string', demandOption: true })
          .option('pooling', { choices: ['mean', 'cls'] as const, default: 'mean' as Pooling })
          .option('model', { type: 'string', default: DEFAULT_MODEL })
          .option('fake', { type: 'boolean', default: false })
          .option('dim', { type: 'number', default: 768 })
          .option('seed', { type: 'number', default: 0 }),
      async (args) => {
        exitCode = await runEmbed(args as unknown as EmbedArgs);
      },
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      process.stderr.write(`${msg ?? err?.message}\n`);
      exitCode = 1;
    })
    .help();
  await parser.parseAsync();
  return exitCode;
}

interface EmbedArgs {
  image: string;
  out: string;
  pooling: Pooling;
  model: string;
  fake: boolean;
  dim: number;
  seed: number;
}

async function runEmbed(args: EmbedArgs): Promise<number> {
  try {
    let values: number[];
    let comment: string;
    if (args.fake) {
      values = fakeEmbedding(args.dim, args.seed);
      comment = `fake embedding dim=${args.dim} seed=${args.seed}`;
    } else {
      const result = await embedImage(args.image, args.pooling, args.model);
      values = result.values;
      comment = result.comment;
    }
    await writeFile(args.out, renderEmbeddingFile(values, comment), 'utf-8');
    process.stderr.write(`wrote ${args.out} (dim ${values.length})\n`);
    return 0;
  } catch (err) {
    if (err instanceof WeightsUnavailableError) {
      process.stderr.write(`${err.message}\n`);
      return 2;
    }
    process.stderr.write(`${err instanceof Error ? err.message : String(err)}\n`);
    return 1;
  }
}

const invokedDirectly = process.argv[1]?.endsWith('cli.js') ?? false;
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
