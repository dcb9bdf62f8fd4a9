export * from './manifest.js';
export * from './jobspec.js';
export * from './images.js';
export * from './backend.js';
export * from './embeddings.js';
export * from './job.js';
