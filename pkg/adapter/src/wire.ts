/**
 * Wire protocol: one JSON object per line on stdin/stdout.
 *
 * Requests carry an `id` (echoed verbatim in the response), an `op`, and for
 * "reconstruct" the image dimensions plus `pixels_b64`: base64 of row-major,
 * channel-interleaved, little-endian float32 samples in [0, 1]. The decoded
 * byte length must equal width * height * channels * 4.
 */

export type Op = 'hello' | 'reconstruct' | 'shutdown';

export interface ReconstructRequest {
  id: number;
  op: 'reconstruct';
  width: number;
  height: number;
  channels: number;
  pixels_b64: string;
}

export type WireError = 'parse' | 'dims' | 'backend';

export interface ErrorResponse {
  id: number | null;
  ok: false;
  error: WireError;
}

export function errorResponse(id: number | null, error: WireError): ErrorResponse {
  return { id, ok: false, error };
}

export function decodePixels(b64: string, width: number, height: number, channels: number): Float32Array {
  const bytes = Buffer.from(b64, 'base64');
  const expected = width * height * channels * 4;
  if (bytes.length !== expected) {
    throw new DimsError(`payload is ${bytes.length} bytes, expected ${expected}`);
  }
  // Copy: the Buffer's backing store may not be 4-byte aligned.
  const out = new Float32Array(width * height * channels);
  for (let i = 0; i < out.length; i++) {
    out[i] = bytes.readFloatLE(i * 4);
  }
  return out;
}

export function encodePixels(pixels: Float32Array): string {
  const bytes = Buffer.alloc(pixels.length * 4);
  for (let i = 0; i < pixels.length; i++) {
    bytes.writeFloatLE(pixels[i], i * 4);
  }
  return bytes.toString('base64');
}

/** Dimension problems (native-size mismatch, payload length). */
export class DimsError extends Error {}

/** Requests that are structurally broken beyond JSON parse failures. */
export class ProtocolError extends Error {}

export function asReconstructRequest(msg: Record<string, unknown>): ReconstructRequest {
  const { id, width, height, channels, pixels_b64 } = msg;
  if (
    typeof width !== 'number' || typeof height !== 'number' ||
    typeof channels !== 'number' || typeof pixels_b64 !== 'string' ||
    !Number.isInteger(width) || !Number.isInteger(height) || !Number.isInteger(channels) ||
    width < 1 || height < 1 || (channels !== 1 && channels !== 3)
  ) {
    throw new ProtocolError('malformed reconstruct request');
  }
  return { id: id as number, op: 'reconstruct', width, height, channels, pixels_b64 };
}
