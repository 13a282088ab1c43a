/**
 * Wire contract of the live control service (see docs/protocol.md in the
 * repository root): JSON documents, one per WebSocket text frame.
 *
 * Parsing is strict about every field the console renders from. A service
 * speaking a different dialect must surface as a visible error, never as
 * NaN readouts or half-painted panels.
 */

export const PROTOCOL_VERSION = 1;

export type Mode = 'auto' | 'manual';
export type Pump = 'A' | 'B';

export interface Snapshot {
  t: 'snapshot';
  v: number;
  scan_index: number;
  clock: number;
  chart: string;
  steps: string[];
  marking: string[];
  mode: Mode;
  pressure: number;
  demand: number;
  inputs: Record<string, number | boolean>;
  outputs: Record<string, boolean>;
  commands: Record<Pump, boolean>;
  running: Record<Pump, boolean>;
  faulted: Record<Pump, boolean>;
  paused: boolean;
  speed: number;
}

export interface Ack {
  t: 'ack';
  id: number | string;
  scan_index: number;
}

export interface Reject {
  t: 'reject';
  id: number | string;
  reason: string;
}

export interface ServiceError {
  t: 'error';
  message: string;
  scan_index?: number | null;
}

export type ServerMessage = Snapshot | Ack | Reject | ServiceError;

/** Everything the console can ask of the service. */
export type Command =
  | { action: 'set_mode'; mode: Mode }
  | { action: 'manual_pump'; pump: Pump; on: boolean }
  | { action: 'set_demand'; value: number | null }
  | { action: 'inject_fault'; pump: Pump; op: 'fail' | 'repair' }
  | { action: 'reset' }
  | { action: 'pause' }
  | { action: 'resume' }
  | { action: 'set_speed'; value: number };

export function encodeCommand(id: number, cmd: Command): string {
  return JSON.stringify({ t: 'cmd', id, ...cmd });
}

function isObject(x: unknown): x is Record<string, unknown> {
  return typeof x === 'object' && x !== null && !Array.isArray(x);
}

function isFiniteNumber(x: unknown): x is number {
  return typeof x === 'number' && Number.isFinite(x);
}

function isStringArray(x: unknown): x is string[] {
  return Array.isArray(x) && x.every((v) => typeof v === 'string');
}

function isBoolMap(x: unknown): x is Record<string, boolean> {
  return isObject(x) && Object.values(x).every((v) => typeof v === 'boolean');
}

function isPumpMap(x: unknown): x is Record<Pump, boolean> {
  return isBoolMap(x) && typeof x.A === 'boolean' && typeof x.B === 'boolean';
}

function isSignalMap(x: unknown): x is Record<string, number | boolean> {
  return (
    isObject(x) &&
    Object.values(x).every((v) => typeof v === 'boolean' || isFiniteNumber(v))
  );
}

function asSnapshot(x: Record<string, unknown>): Snapshot | null {
  if (x.v !== PROTOCOL_VERSION) return null;
  if (!isFiniteNumber(x.scan_index) || !isFiniteNumber(x.clock)) return null;
  if (typeof x.chart !== 'string') return null;
  if (!isStringArray(x.steps) || !isStringArray(x.marking)) return null;
  if (x.mode !== 'auto' && x.mode !== 'manual') return null;
  if (!isFiniteNumber(x.pressure) || !isFiniteNumber(x.demand)) return null;
  if (typeof x.paused !== 'boolean' || !isFiniteNumber(x.speed)) return null;
  if (!isSignalMap(x.inputs) || !isBoolMap(x.outputs)) return null;
  if (!isPumpMap(x.commands) || !isPumpMap(x.running) || !isPumpMap(x.faulted)) return null;
  return x as unknown as Snapshot;
}

function isId(x: unknown): x is number | string {
  return typeof x === 'number' || typeof x === 'string';
}

/** Parse one frame into a typed message, or null if it is not ours. */
export function parseServerMessage(text: string): ServerMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (!isObject(raw)) return null;
  switch (raw.t) {
    case 'snapshot':
      return asSnapshot(raw);
    case 'ack':
      return isId(raw.id) && isFiniteNumber(raw.scan_index)
        ? { t: 'ack', id: raw.id, scan_index: raw.scan_index }
        : null;
    case 'reject':
      return isId(raw.id) && typeof raw.reason === 'string'
        ? { t: 'reject', id: raw.id, reason: raw.reason }
        : null;
    case 'error':
      return typeof raw.message === 'string'
        ? {
            t: 'error',
            message: raw.message,
            scan_index: isFiniteNumber(raw.scan_index) ? raw.scan_index : null,
          }
        : null;
    default:
      return null;
  }
}
