#!/usr/bin/env node
// yargs front end: `invert` runs a batch inversion job, `embed` fills the
// perceptual/semantic channels of an existing manifest.
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { makeBackend, ModelUnavailable } from './backend.js';
import { defaultJobSpec } from './jobspec.js';
import { computeEmbeddingChannels, loadCaptions, runInversion } from './job.js';

export async function main(argv: string[]): Promise<number> {
  let exitCode = 0;
  await yargs(argv)
    .scriptName('inversion-adapter')
    .command(
      'invert <images>',
      'invert a directory of images and emit a pair manifest',
      (y) =>
        y
          .positional('images', { type: 'string', demandOption: true })
          .option('out', { type: 'string', demandOption: true, describe: 'output manifest path' })
          .option('model', { type: 'string', default: 'SD3-medium' })
          .option('backend', { type: 'string', choices: ['dry-run', 'diffusion'], default: 'diffusion' })
          .option('label', { type: 'string', choices: ['real', 'fake'], default: 'fake' })
          .option('steps', { type: 'number', default: 28 })
          .option('guidance', { type: 'number', default: 3.5 })
          .option('gamma', { type: 'number', default: 0.5 })
          .option('seed', { type: 'number', default: 42 })
          .option('captions', { type: 'string', describe: 'CSV of id,caption rows' }),
      (args) => {
        const spec = defaultJobSpec({
          modelTag: args.model,
          steps: args.steps,
          guidance: args.guidance,
          gamma: args.gamma,
          seed: args.seed,
        });
        const captions = args.captions ? loadCaptions(args.captions) : undefined;
        try {
          const result = runInversion(args.images, spec, makeBackend(args.backend), args.out, {
            label: args.label as 'real' | 'fake',
            captions,
          });
          console.log(`wrote ${args.out}: ${result.inverted} inverted, ${result.failed} failed`);
          if (result.inverted === 0 && result.manifest.records.length > 0) exitCode = 1;
        } catch (e) {
          if (e instanceof ModelUnavailable) {
            console.error(e.message);
            exitCode = 2;
            return;
          }
          throw e;
        }
      },
    )
    .command(
      'embed <manifest>',
      'fill precomputed lpips/clip channels for every inverted pair',
      (y) =>
        y
          .positional('manifest', { type: 'string', demandOption: true })
          .option('out', { type: 'string', demandOption: true }),
      (args) => {
        const result = computeEmbeddingChannels(args.manifest, args.out);
        console.log(`wrote ${args.out}: ${result.filled} filled, ${result.failed} failed`);
        if (result.filled === 0 && result.manifest.records.some((r) => r.inverted)) exitCode = 1;
      },
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      console.error(msg ?? err?.message);
      exitCode = 2;
    })
    .parseAsync();
  return exitCode;
}

const invokedDirectly =
  process.argv[1] && import.meta.url.endsWith(process.argv[1].split('/').pop() as string);
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
