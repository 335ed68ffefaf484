/**
 * The message loop: every request line yields exactly one response line, in
 * order, with the request id echoed. Malformed JSON answers
 * {id: null, ok: false, error: "parse"}; dimension problems answer "dims";
 * a model throw answers "backend" and the process stays alive. A "shutdown"
 * request is acknowledged and then ends the loop.
 */

import readline from 'node:readline';

import { IdentityModel, ReconstructorModel } from './models.js';
import {
  DimsError,
  ProtocolError,
  asReconstructRequest,
  decodePixels,
  encodePixels,
  errorResponse,
} from './wire.js';

export interface ServeOptions {
  model: ReconstructorModel;
  identity?: boolean;
  input?: NodeJS.ReadableStream;
  output?: NodeJS.WritableStream;
  onExit?: () => void;
}

import type { ErrorResponse } from './wire.js';

export type WireResponse = Record<string, unknown> | ErrorResponse;

export function handleLine(line: string, model: ReconstructorModel, identityMode: boolean): {
  response: WireResponse;
  shutdown: boolean;
} {
  let msg: Record<string, unknown>;
  try {
    msg = JSON.parse(line);
    if (typeof msg !== 'object' || msg === null || Array.isArray(msg)) {
      throw new Error('not an object');
    }
  } catch {
    return { response: errorResponse(null, 'parse'), shutdown: false };
  }

  const id = typeof msg.id === 'number' ? msg.id : null;
  switch (msg.op) {
    case 'hello':
      return {
        response: {
          id,
          ok: true,
          name: model.name,
          version: model.version,
          deterministic: model.deterministic,
          native_width: model.nativeWidth,
          native_height: model.nativeHeight,
        },
        shutdown: false,
      };
    case 'shutdown':
      return { response: { id, ok: true }, shutdown: true };
    case 'reconstruct':
      break;
    default:
      return { response: errorResponse(id, 'parse'), shutdown: false };
  }

  try {
    const req = asReconstructRequest(msg);
    if (identityMode) {
      // Loopback conformance: echo the payload bytes untouched (after the
      // length check), bypassing any float round trip.
      decodePixels(req.pixels_b64, req.width, req.height, req.channels);
      return {
        response: {
          id,
          ok: true,
          width: req.width,
          height: req.height,
          channels: req.channels,
          pixels_b64: Buffer.from(req.pixels_b64, 'base64').toString('base64'),
        },
        shutdown: false,
      };
    }
    const pixels = decodePixels(req.pixels_b64, req.width, req.height, req.channels);
    const out = model.reconstruct(pixels, req.width, req.height, req.channels);
    return {
      response: {
        id,
        ok: true,
        width: req.width,
        height: req.height,
        channels: req.channels,
        pixels_b64: encodePixels(out),
      },
      shutdown: false,
    };
  } catch (err) {
    if (err instanceof ProtocolError) {
      return { response: errorResponse(id, 'parse'), shutdown: false };
    }
    if (err instanceof DimsError) {
      return { response: errorResponse(id, 'dims'), shutdown: false };
    }
    return { response: errorResponse(id, 'backend'), shutdown: false };
  }
}

export function serve(options: ServeOptions): void {
  const input = options.input ?? process.stdin;
  const output = options.output ?? process.stdout;
  const identityMode = options.identity ?? options.model instanceof IdentityModel;
  const rl = readline.createInterface({ input, crlfDelay: Infinity });

  rl.on('line', (line) => {
    if (line.trim() === '') {
      return;
    }
    const { response, shutdown } = handleLine(line, options.model, identityMode);
    output.write(JSON.stringify(response) + '\n', () => {
      if (shutdown) {
        rl.close();
        options.onExit?.();
      }
    });
  });
}
