import { describe, expect, it } from 'vitest';

import { defaultJobSpec, KNOWN_MODEL_TAGS } from '../src/jobspec.js';

describe('defaultJobSpec', () => {
  it('echoes the fixed hyperparameter defaults exactly', () => {
    const spec = defaultJobSpec();
    expect(spec.modelTag).toBe('SD3-medium');
    expect(spec.steps).toBe(28);
    expect(spec.guidance).toBe(3.5);
    expect(spec.etaBase).toBe(0.95);
    expect(spec.etaTrend).toBe('constant');
    expect(spec.etaStart).toBe(0);
    expect(spec.etaEnd).toBe(9);
    expect(spec.gamma).toBe(0.5);
    expect(spec.seed).toBe(42);
    expect(spec.precisionTag).toBe('half-precision');
  });

  it('applies overrides without disturbing other defaults', () => {
    const spec = defaultJobSpec({ steps: 50, modelTag: 'FluxDev' });
    expect(spec.steps).toBe(50);
    expect(spec.modelTag).toBe('FluxDev');
    expect(spec.guidance).toBe(3.5);
  });

  it('rejects an eta window that ends before it starts', () => {
    expect(() => defaultJobSpec({ etaStart: 5, etaEnd: 2 })).toThrowError(/precedes/);
  });

  it('rejects out-of-range values', () => {
    expect(() => defaultJobSpec({ gamma: 1.5 })).toThrow();
    expect(() => defaultJobSpec({ steps: 0 })).toThrow();
    expect(() => defaultJobSpec({ etaBase: -0.1 })).toThrow();
  });

  it('knows the supported model tags', () => {
    expect(KNOWN_MODEL_TAGS).toContain('SD3-medium');
    expect(KNOWN_MODEL_TAGS).toContain('FluxDev+RealismLoRA');
    expect(KNOWN_MODEL_TAGS.length).toBe(5);
  });
});
