// Inversion job configuration. The defaults are the fixed hyperparameter set
// used for every batch unless overridden on the command line.
import { z } from 'zod';

export const InversionJobSpecSchema = z.object({
  modelTag: z.string().default('SD3-medium'),
  steps: z.number().int().positive().default(28),
  guidance: z.number().positive().default(3.5),
  etaBase: z.number().min(0).max(1).default(0.95),
  etaTrend: z.literal('constant').default('constant'),
  etaStart: z.number().int().nonnegative().default(0),
  etaEnd: z.number().int().nonnegative().default(9),
  gamma: z.number().min(0).max(1).default(0.5),
  seed: z.number().int().default(42),
  precisionTag: z.string().default('half-precision'),
});

export type InversionJobSpec = z.infer<typeof InversionJobSpecSchema>;

export const KNOWN_MODEL_TAGS = [
  'SD2.1',
  'SD3-medium',
  'SD3.5-medium',
  'FluxDev',
  'FluxDev+RealismLoRA',
] as const;

export function defaultJobSpec(overrides: Partial<InversionJobSpec> = {}): InversionJobSpec {
  const spec = InversionJobSpecSchema.parse(overrides);
  if (spec.etaEnd < spec.etaStart) {
    throw new Error(`etaEnd ${spec.etaEnd} precedes etaStart ${spec.etaStart}`);
  }
  return spec;
}
