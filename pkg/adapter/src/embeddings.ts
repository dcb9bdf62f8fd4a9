// Perceptual-distance and semantic-similarity channels. Providers are
// pluggable: the built-in ones are lightweight stand-ins with the same
// interface and value ranges as learned-network backends, so swapping in a
// real LPIPS or CLIP implementation changes no call sites.
import { Image, toGrayscale } from './images.js';

export interface PerceptualProvider {
  readonly name: string;
  distance(a: Image, b: Image): number;
}

export interface SemanticProvider {
  readonly name: string;
  embed(img: Image): Float64Array;
}

function downsample2(g: Float64Array, w: number, h: number): { g: Float64Array; w: number; h: number } {
  const w2 = Math.floor(w / 2);
  const h2 = Math.floor(h / 2);
  const out = new Float64Array(w2 * h2);
  for (let y = 0; y < h2; y++) {
    for (let x = 0; x < w2; x++) {
      out[y * w2 + x] =
        (g[2 * y * w + 2 * x] +
          g[2 * y * w + 2 * x + 1] +
          g[(2 * y + 1) * w + 2 * x] +
          g[(2 * y + 1) * w + 2 * x + 1]) / 4;
    }
  }
  return { g: out, w: w2, h: h2 };
}

export class PyramidDistance implements PerceptualProvider {
  readonly name = 'builtin-pyramid';
  private readonly weights = [0.5, 0.3, 0.2];

  distance(a: Image, b: Image): number {
    if (a.width !== b.width || a.height !== b.height) {
      throw new Error(`dimension mismatch ${a.width}x${a.height} vs ${b.width}x${b.height}`);
    }
    let la = { g: toGrayscale(a), w: a.width, h: a.height };
    let lb = { g: toGrayscale(b), w: b.width, h: b.height };
    let total = 0;
    for (const weight of this.weights) {
      let mse = 0;
      for (let k = 0; k < la.g.length; k++) {
        const d = (la.g[k] - lb.g[k]) / 255;
        mse += d * d;
      }
      total += (weight * mse) / la.g.length;
      if (Math.min(la.w, la.h) < 2) break;
      la = downsample2(la.g, la.w, la.h);
      lb = downsample2(lb.g, lb.w, lb.h);
    }
    return total;
  }
}

export class GridEmbedding implements SemanticProvider {
  readonly name = 'builtin-grid';
  private readonly grid = 8;

  embed(img: Image): Float64Array {
    const g = toGrayscale(img);
    const v = new Float64Array(this.grid * this.grid + 1);
    for (let i = 0; i < this.grid; i++) {
      for (let j = 0; j < this.grid; j++) {
        const r0 = Math.floor((i * img.height) / this.grid);
        const r1 = Math.max(Math.floor(((i + 1) * img.height) / this.grid), r0 + 1);
        const c0 = Math.floor((j * img.width) / this.grid);
        const c1 = Math.max(Math.floor(((j + 1) * img.width) / this.grid), c0 + 1);
        let sum = 0;
        for (let y = r0; y < r1; y++) {
          for (let x = c0; x < c1; x++) sum += g[y * img.width + x];
        }
        v[i * this.grid + j] = sum / ((r1 - r0) * (c1 - c0) * 255);
      }
    }
    v[v.length - 1] = 1.0; // bias keeps the all-black embedding well defined
    let norm = 0;
    for (const x of v) norm += x * x;
    norm = Math.sqrt(norm);
    for (let k = 0; k < v.length; k++) v[k] /= norm;
    return v;
  }
}

export function cosine(a: Float64Array, b: Float64Array): number {
  let dot = 0;
  for (let k = 0; k < a.length; k++) dot += a[k] * b[k];
  return dot;
}

export interface EmbeddingProviders {
  perceptual: PerceptualProvider;
  semantic: SemanticProvider;
}

export function builtinProviders(): EmbeddingProviders {
  return { perceptual: new PyramidDistance(), semantic: new GridEmbedding() };
}
