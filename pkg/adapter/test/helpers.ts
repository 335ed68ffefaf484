import { ChildProcess, spawn } from 'node:child_process';
import path from 'node:path';
import { fileURLToPath } from 'node:url';

const here = path.dirname(fileURLToPath(import.meta.url));
export const ROOT = path.resolve(here, '..', '..');
export const CLI = path.join(ROOT, 'dist', 'cli.js');
export const FIXTURES = path.join(ROOT, 'fixtures');

/** Line-oriented driver for a spawned adapter process. */
export class AdapterProcess {
  proc: ChildProcess;
  private buffer = '';
  private lines: string[] = [];
  private waiters: Array<(line: string) => void> = [];
  private exited: Promise<number | null>;

  constructor(args: string[]) {
    this.proc = spawn('node', [CLI, ...args], { stdio: ['pipe', 'pipe', 'ignore'] });
    this.proc.stdout!.setEncoding('utf8');
    this.proc.stdout!.on('data', (chunk: string) => {
      this.buffer += chunk;
      let idx;
      while ((idx = this.buffer.indexOf('\n')) >= 0) {
        const line = this.buffer.slice(0, idx);
        this.buffer = this.buffer.slice(idx + 1);
        const waiter = this.waiters.shift();
        if (waiter) {
          waiter(line);
        } else {
          this.lines.push(line);
        }
      }
    });
    this.exited = new Promise((resolve) => this.proc.on('exit', (code) => resolve(code)));
  }

  sendLine(line: string): void {
    this.proc.stdin!.write(line + '\n');
  }

  send(obj: unknown): void {
    this.sendLine(JSON.stringify(obj));
  }

  nextLine(timeoutMs = 5000): Promise<string> {
    const queued = this.lines.shift();
    if (queued !== undefined) {
      return Promise.resolve(queued);
    }
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error('timed out waiting for a response')), timeoutMs);
      this.waiters.push((line) => {
        clearTimeout(timer);
        resolve(line);
      });
    });
  }

  async next(timeoutMs = 5000): Promise<Record<string, unknown>> {
    return JSON.parse(await this.nextLine(timeoutMs));
  }

  async request(obj: unknown): Promise<Record<string, unknown>> {
    this.send(obj);
    return this.next();
  }

  waitForExit(): Promise<number | null> {
    return this.exited;
  }

  kill(): void {
    this.proc.kill();
  }
}

export function randomPixelsB64(count: number, rng: () => number): string {
  const bytes = Buffer.alloc(count * 4);
  for (let i = 0; i < count; i++) {
    bytes.writeFloatLE(Math.fround(rng()), i * 4);
  }
  return bytes.toString('base64');
}

/** Deterministic PRNG so test payloads are reproducible. */
export function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (Math.imul(state, 1664525) + 1013904223) >>> 0;
    return state / 4294967296;
  };
}
