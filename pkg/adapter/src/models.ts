/**
 * Hosted reconstructor models.
 *
 * A model performs exactly one encode+decode pass per request; the
 * double-reconstruction logic stays on the client side. Identity mode echoes
 * payloads untouched (loopback conformance); the linear model hosts a saved
 * principal-component autoencoder from its JSON file.
 */

import fs from 'node:fs';

import { DimsError } from './wire.js';

export interface ReconstructorModel {
  name: string;
  version: string;
  deterministic: boolean;
  nativeWidth: number | null;
  nativeHeight: number | null;
  reconstruct(pixels: Float32Array, width: number, height: number, channels: number): Float32Array;
}

export class IdentityModel implements ReconstructorModel {
  name = 'identity';
  version = '1';
  deterministic = true;
  nativeWidth = null;
  nativeHeight = null;

  reconstruct(pixels: Float32Array): Float32Array {
    return pixels;
  }
}

interface LinearBackendFile {
  schema_version: number;
  kind: string;
  width: number;
  height: number;
  channels: number;
  latent_dim: number;
  noise_sigma: number;
  seed: number;
  mean: number[];
  basis: number[][];
}

/** splitmix64-style 32-bit PRNG; good enough for latent noise. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export class LinearAutoencoderModel implements ReconstructorModel {
  name: string;
  version = '1';
  deterministic: boolean;
  nativeWidth: number;
  nativeHeight: number;
  private channels: number;
  private mean: Float64Array;
  private basis: Float64Array[]; // k rows of length d
  private sigma: number;
  private rand: () => number;

  constructor(path: string) {
    const doc = JSON.parse(fs.readFileSync(path, 'utf-8')) as LinearBackendFile;
    if (doc.schema_version !== 1 || doc.kind !== 'linear_ae') {
      throw new Error(`${path}: not a schema_version-1 linear_ae backend`);
    }
    this.name = `linear_ae:${path}`;
    this.nativeWidth = doc.width;
    this.nativeHeight = doc.height;
    this.channels = doc.channels;
    this.mean = Float64Array.from(doc.mean);
    this.basis = doc.basis.map((row) => Float64Array.from(row));
    this.sigma = doc.noise_sigma;
    this.deterministic = this.sigma === 0;
    this.rand = mulberry32(doc.seed ^ 0x9e3779b9);
  }

  /** One standard normal draw (Box-Muller). */
  private gaussian(): number {
    let u = 0;
    while (u === 0) u = this.rand();
    const v = this.rand();
    return Math.sqrt(-2.0 * Math.log(u)) * Math.cos(2.0 * Math.PI * v);
  }

  reconstruct(pixels: Float32Array, width: number, height: number, channels: number): Float32Array {
    if (width !== this.nativeWidth || height !== this.nativeHeight || channels !== this.channels) {
      throw new DimsError(
        `model is native ${this.nativeWidth}x${this.nativeHeight}x${this.channels}, ` +
        `got ${width}x${height}x${channels}`
      );
    }
    const d = this.mean.length;
    for (let i = 0; i < d; i++) {
      if (!Number.isFinite(pixels[i])) {
        throw new Error('non-finite input sample');
      }
    }
    const k = this.basis.length;
    const z = new Float64Array(k);
    for (let j = 0; j < k; j++) {
      const row = this.basis[j];
      let acc = 0;
      for (let i = 0; i < d; i++) {
        acc += row[i] * (pixels[i] - this.mean[i]);
      }
      z[j] = acc + (this.sigma > 0 ? this.sigma * this.gaussian() : 0);
    }
    const out = new Float32Array(d);
    for (let i = 0; i < d; i++) {
      let acc = this.mean[i];
      for (let j = 0; j < k; j++) {
        acc += this.basis[j][i] * z[j];
      }
      out[i] = Math.min(1, Math.max(0, acc));
    }
    return out;
  }
}

/** Resolve a --model spec: "identity" or "linear:<backend.json path>". */
export function modelFromSpec(spec: string): ReconstructorModel {
  if (spec === 'identity') {
    return new IdentityModel();
  }
  if (spec.startsWith('linear:')) {
    return new LinearAutoencoderModel(spec.slice('linear:'.length));
  }
  throw new Error(`unknown model spec ${JSON.stringify(spec)}; expected "identity" or "linear:PATH"`);
}
