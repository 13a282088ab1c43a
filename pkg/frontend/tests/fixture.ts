import { readFileSync } from 'node:fs';

import type { Snapshot } from '../src/protocol.js';

/** Snapshot stream captured from a live `grafcet serve` run, including a
 * pump-A fault and the failover to pump B. Paths are relative to the package
 * root, which is where npm runs the test script. */
export function recordedStream(): Snapshot[] {
  return JSON.parse(readFileSync('tests/recorded_stream.json', 'utf8'));
}
