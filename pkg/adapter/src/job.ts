// Batch jobs: invert a directory of images into a pair manifest, and fill the
// perceptual/semantic channels of an existing manifest. Per-record failures
// are recorded and the job continues.
import * as fs from 'node:fs';
import * as path from 'node:path';

import { InversionBackend, ModelUnavailable } from './backend.js';
import { builtinProviders, cosine, EmbeddingProviders } from './embeddings.js';
import { readImage, writeImage } from './images.js';
import { InversionJobSpec } from './jobspec.js';
import { Manifest, ManifestHeader, PairRecord, readManifest, writeManifest } from './manifest.js';

const VERSION = '0.1.0';
const IMAGE_EXTENSIONS = new Set(['.pgm', '.ppm', '.pnm']);

export function loadCaptions(file: string): Map<string, string> {
  const captions = new Map<string, string>();
  const lines = fs.readFileSync(file, 'utf-8').split('\n');
  for (const line of lines) {
    if (!line.trim()) continue;
    const comma = line.indexOf(',');
    if (comma < 0) continue;
    const id = line.slice(0, comma).trim();
    if (id === 'id') continue; // header row
    captions.set(id, line.slice(comma + 1).trim());
  }
  return captions;
}

function headerFor(spec: InversionJobSpec, backend: string): ManifestHeader {
  return {
    _header: {
      schema: 'v1',
      tool: 'inversion-adapter',
      version: VERSION,
      backend,
      steps: spec.steps,
      guidance: spec.guidance,
      gamma: spec.gamma,
      seed: spec.seed,
      runtime: `node ${process.version}`,
    },
  };
}

export interface InversionJobResult {
  manifest: Manifest;
  inverted: number;
  failed: number;
}

export function runInversion(
  imagesDir: string,
  spec: InversionJobSpec,
  backend: InversionBackend,
  outManifest: string,
  options: { label?: 'real' | 'fake'; captions?: Map<string, string> } = {},
): InversionJobResult {
  const label = options.label ?? 'fake';
  const files = fs
    .readdirSync(imagesDir)
    .filter((f) => IMAGE_EXTENSIONS.has(path.extname(f).toLowerCase()))
    .sort();
  const outDir = path.dirname(path.resolve(outManifest));
  const records: PairRecord[] = [];
  let failed = 0;
  for (const file of files) {
    const id = path.basename(file, path.extname(file));
    const originalAbs = path.join(imagesDir, file);
    const original = path.relative(outDir, originalAbs);
    const caption = options.captions?.get(id);
    try {
      const img = readImage(originalAbs);
      const inv = backend.invert(img, spec, caption);
      const invertedAbs = path.join(
        outDir,
        `${id}_inv${path.extname(file)}`,
      );
      writeImage(inv, invertedAbs);
      records.push({
        id,
        original,
        inverted: path.relative(outDir, invertedAbs),
        label,
        generator: spec.modelTag,
        ...(caption !== undefined ? { caption } : {}),
      });
    } catch (e) {
      if (e instanceof ModelUnavailable) throw e; // whole job is unrunnable
      failed++;
      records.push({ id, original, label, generator: spec.modelTag, error: String((e as Error).message) });
    }
  }
  const manifest: Manifest = { header: headerFor(spec, backend.name), records };
  writeManifest(manifest, outManifest);
  return { manifest, inverted: records.length - failed, failed };
}

export interface EmbeddingJobResult {
  manifest: Manifest;
  filled: number;
  failed: number;
}

export function computeEmbeddingChannels(
  manifestIn: string,
  manifestOut: string,
  providers: EmbeddingProviders = builtinProviders(),
): EmbeddingJobResult {
  const base = path.dirname(path.resolve(manifestIn));
  const input = readManifest(manifestIn);
  let filled = 0;
  let failed = 0;
  const records = input.records.map((rec) => {
    if (!rec.inverted) return rec;
    try {
      const x = readImage(path.resolve(base, rec.original));
      const xInv = readImage(path.resolve(base, rec.inverted));
      const lpips = providers.perceptual.distance(x, xInv);
      const clip = cosine(providers.semantic.embed(x), providers.semantic.embed(xInv));
      return {
        ...rec,
        // psnr/ssim stay absent: the scoring toolkit computes those itself
        precomputed: { ...(rec.precomputed ?? {}), lpips, clip },
      };
    } catch (e) {
      failed++;
      return { ...rec, error: String((e as Error).message) };
    }
  });
  filled = records.filter((r) => r.precomputed?.lpips !== undefined).length;
  const manifest: Manifest = { header: input.header, records };
  writeManifest(manifest, manifestOut);
  return { manifest, filled, failed };
}
