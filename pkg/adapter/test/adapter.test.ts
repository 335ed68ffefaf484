import assert from 'node:assert/strict';
import path from 'node:path';
import test from 'node:test';

import { AdapterProcess, FIXTURES, lcg, randomPixelsB64 } from './helpers.js';

const TINY = path.join(FIXTURES, 'tiny_backend.json');

test('hello handshake reports identity metadata', async () => {
  const adapter = new AdapterProcess(['--identity']);
  try {
    const hello = await adapter.request({ id: 1, op: 'hello' });
    assert.equal(hello.id, 1);
    assert.equal(hello.ok, true);
    assert.equal(hello.name, 'identity');
    assert.equal(hello.deterministic, true);
    assert.equal(hello.native_width, null);
    assert.equal(hello.native_height, null);
  } finally {
    adapter.kill();
  }
});

test('identity mode round-trips 20 random images bit-exactly', async () => {
  const adapter = new AdapterProcess(['--identity']);
  const rng = lcg(12345);
  try {
    for (let i = 0; i < 20; i++) {
      const width = 1 + Math.floor(rng() * 16);
      const height = 1 + Math.floor(rng() * 16);
      const channels = rng() < 0.5 ? 1 : 3;
      const payload = randomPixelsB64(width * height * channels, rng);
      const resp = await adapter.request({
        id: 100 + i, op: 'reconstruct', width, height, channels, pixels_b64: payload,
      });
      assert.equal(resp.ok, true, `image ${i}`);
      assert.equal(resp.id, 100 + i);
      assert.equal(resp.width, width);
      assert.equal(resp.height, height);
      assert.equal(resp.channels, channels);
      assert.equal(resp.pixels_b64, payload, `image ${i} must round-trip bit-exactly`);
    }
  } finally {
    adapter.kill();
  }
});

test('every request line yields one response line with matching id, in order', async () => {
  const adapter = new AdapterProcess(['--identity']);
  const rng = lcg(777);
  try {
    const ids = [5, 6, 7, 8, 9];
    for (const id of ids) {
      adapter.send({ id, op: 'reconstruct', width: 2, height: 2, channels: 1,
                     pixels_b64: randomPixelsB64(4, rng) });
    }
    for (const id of ids) {
      const resp = await adapter.next();
      assert.equal(resp.id, id);
      assert.equal(resp.ok, true);
    }
  } finally {
    adapter.kill();
  }
});

test('malformed JSON answers a parse error and the process stays alive', async () => {
  const adapter = new AdapterProcess(['--identity']);
  try {
    adapter.sendLine('{"id": 3, "op": ');
    const err = await adapter.next();
    assert.deepEqual(err, { id: null, ok: false, error: 'parse' });

    const hello = await adapter.request({ id: 4, op: 'hello' });
    assert.equal(hello.ok, true);
  } finally {
    adapter.kill();
  }
});

test('unknown op and missing fields answer parse errors', async () => {
  const adapter = new AdapterProcess(['--identity']);
  try {
    const unknown = await adapter.request({ id: 10, op: 'transmogrify' });
    assert.deepEqual(unknown, { id: 10, ok: false, error: 'parse' });

    const missing = await adapter.request({ id: 11, op: 'reconstruct', width: 2 });
    assert.deepEqual(missing, { id: 11, ok: false, error: 'parse' });
  } finally {
    adapter.kill();
  }
});

test('payload length mismatch answers a dims error', async () => {
  const adapter = new AdapterProcess(['--identity']);
  const rng = lcg(9);
  try {
    const resp = await adapter.request({
      id: 12, op: 'reconstruct', width: 4, height: 4, channels: 1,
      pixels_b64: randomPixelsB64(7, rng),
    });
    assert.deepEqual(resp, { id: 12, ok: false, error: 'dims' });
  } finally {
    adapter.kill();
  }
});

test('shutdown is acknowledged and ends the process', async () => {
  const adapter = new AdapterProcess(['--identity']);
  const resp = await adapter.request({ id: 13, op: 'shutdown' });
  assert.deepEqual(resp, { id: 13, ok: true });
  const code = await adapter.waitForExit();
  assert.equal(code, 0);
});

test('linear model: handshake dims, native-size enforcement, backend errors', async () => {
  const adapter = new AdapterProcess(['--model', `linear:${TINY}`]);
  const rng = lcg(21);
  try {
    const hello = await adapter.request({ id: 1, op: 'hello' });
    assert.equal(hello.ok, true);
    assert.equal(hello.native_width, 2);
    assert.equal(hello.native_height, 1);
    assert.equal(hello.deterministic, true); // sigma = 0 in the fixture

    const wrong = await adapter.request({
      id: 2, op: 'reconstruct', width: 3, height: 1, channels: 1,
      pixels_b64: randomPixelsB64(3, rng),
    });
    assert.deepEqual(wrong, { id: 2, ok: false, error: 'dims' });

    // In-span input is reproduced; the response carries clamped pixels.
    const bytes = Buffer.alloc(8);
    bytes.writeFloatLE(0.75, 0);
    bytes.writeFloatLE(0.75, 4);
    const ok = await adapter.request({
      id: 3, op: 'reconstruct', width: 2, height: 1, channels: 1,
      pixels_b64: bytes.toString('base64'),
    });
    assert.equal(ok.ok, true);
    const out = Buffer.from(ok.pixels_b64 as string, 'base64');
    assert.ok(Math.abs(out.readFloatLE(0) - 0.75) < 1e-6);
    assert.ok(Math.abs(out.readFloatLE(4) - 0.75) < 1e-6);

    // Non-finite samples are a model failure; the process must survive it.
    const nan = Buffer.alloc(8);
    nan.writeFloatLE(NaN, 0);
    nan.writeFloatLE(0.5, 4);
    const failed = await adapter.request({
      id: 4, op: 'reconstruct', width: 2, height: 1, channels: 1,
      pixels_b64: nan.toString('base64'),
    });
    assert.deepEqual(failed, { id: 4, ok: false, error: 'backend' });

    const alive = await adapter.request({ id: 5, op: 'hello' });
    assert.equal(alive.ok, true);
  } finally {
    adapter.kill();
  }
});

test('usage errors exit with code 1', async () => {
  const adapter = new AdapterProcess([]);
  const code = await adapter.waitForExit();
  assert.equal(code, 1);
});

test('unresolvable model exits with code 2', async () => {
  const adapter = new AdapterProcess(['--model', 'linear:/nonexistent/backend.json']);
  const code = await adapter.waitForExit();
  assert.equal(code, 2);
});
