// Pair manifest schema v1: JSON Lines, one record per line, optional leading
// header object. This is the only contract shared with the scoring toolkit.
import * as fs from 'node:fs';
import * as path from 'node:path';
import { z } from 'zod';

export const MANIFEST_SCHEMA = 'v1';

export const PrecomputedSchema = z
  .object({
    psnr: z.number().optional(),
    ssim: z.number().optional(),
    lpips: z.number().optional(),
    clip: z.number().min(-1).max(1).optional(),
  })
  .strict();

export const PairRecordSchema = z
  .object({
    id: z.string().min(1),
    original: z.string().min(1),
    inverted: z.string().optional(),
    label: z.enum(['real', 'fake']),
    generator: z.string().default(''),
    caption: z.string().optional(),
    precomputed: PrecomputedSchema.optional(),
    error: z.string().optional(),
  })
  .passthrough();

export const HeaderSchema = z.object({
  _header: z.object({
    schema: z.literal(MANIFEST_SCHEMA),
    tool: z.string(),
    version: z.string(),
    backend: z.string(),
    steps: z.number().int(),
    guidance: z.number(),
    gamma: z.number(),
    seed: z.number().int(),
    runtime: z.string().optional(),
  }),
});

export type PairRecord = z.infer<typeof PairRecordSchema>;
export type ManifestHeader = z.infer<typeof HeaderSchema>;

export interface Manifest {
  header: ManifestHeader | null;
  records: PairRecord[];
}

export class ManifestError extends Error {
  constructor(message: string, public readonly lineNo: number) {
    super(`line ${lineNo}: ${message}`);
  }
}

export function parseManifest(text: string): Manifest {
  const records: PairRecord[] = [];
  let header: ManifestHeader | null = null;
  const seen = new Set<string>();
  const lines = text.split('\n');
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch (e) {
      throw new ManifestError(`invalid JSON: ${(e as Error).message}`, i + 1);
    }
    if (typeof obj === 'object' && obj !== null && '_header' in obj) {
      const h = HeaderSchema.safeParse(obj);
      if (!h.success) throw new ManifestError(`bad header: ${h.error.message}`, i + 1);
      header = h.data;
      continue;
    }
    const parsed = PairRecordSchema.safeParse(obj);
    if (!parsed.success) {
      throw new ManifestError(parsed.error.issues[0].message, i + 1);
    }
    if (seen.has(parsed.data.id)) {
      throw new ManifestError(`duplicate id '${parsed.data.id}'`, i + 1);
    }
    seen.add(parsed.data.id);
    records.push(parsed.data);
  }
  return { header, records };
}

export function readManifest(file: string): Manifest {
  return parseManifest(fs.readFileSync(file, 'utf-8'));
}

export function serializeManifest(m: Manifest): string {
  const lines: string[] = [];
  if (m.header) lines.push(JSON.stringify(m.header));
  for (const rec of m.records) lines.push(JSON.stringify(rec));
  return lines.join('\n') + (lines.length ? '\n' : '');
}

// Write-then-rename so a crashed job never leaves a truncated manifest behind.
export function writeManifest(m: Manifest, file: string): void {
  const tmp = path.join(path.dirname(file), `.${path.basename(file)}.tmp`);
  fs.writeFileSync(tmp, serializeManifest(m));
  fs.renameSync(tmp, file);
}
