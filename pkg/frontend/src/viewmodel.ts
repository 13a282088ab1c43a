/**
 * The single state container behind the console. Every render pass is a pure
 * function of this object: the panels never keep truth of their own, so the
 * screen can only show what the service broadcast (or acked), never an
 * optimistic guess.
 */

import type { Command, Snapshot } from './protocol.js';
import type { CommandOutcome, ConnectionState } from './client.js';

// 600 points at the 30/s snapshot cap is a ~20 s trend window.
export const HISTORY_CAPACITY = 600;

export interface TrendPoint {
  scan: number;
  clock: number;
  pressure: number;
  /** True when the stream was interrupted before this point; the trend must
   * break the line here instead of fabricating a bridge. */
  gapBefore: boolean;
}

export type ToastKind = 'reject' | 'timeout' | 'error';

export interface Toast {
  kind: ToastKind;
  text: string;
  seq: number;
}

/** Stable key for mutually-exclusive controls; a pending command disables
 * exactly the control group that issued it. */
export function commandGroup(cmd: Command): string {
  switch (cmd.action) {
    case 'manual_pump':
      return `manual_pump:${cmd.pump}`;
    case 'inject_fault':
      return `inject_fault:${cmd.pump}`;
    default:
      return cmd.action;
  }
}

export class ViewModel {
  snapshot: Snapshot | null = null;
  history: TrendPoint[] = [];
  connection: ConnectionState = 'connecting';
  pending = new Map<number, Command>();
  toast: Toast | null = null;
  lastAckScan: number | null = null;

  private gapPending = false;
  private toastSeq = 0;

  applySnapshot(snap: Snapshot): void {
    this.snapshot = snap;
    const last = this.history[this.history.length - 1];
    if (last && snap.scan_index < last.scan) {
      // the run was reset; old points belong to a dead era
      this.history = [];
      this.gapPending = false;
    } else if (last && snap.scan_index === last.scan) {
      // command acks re-broadcast the current scan; nothing new to plot
      return;
    }
    this.history.push({
      scan: snap.scan_index,
      clock: snap.clock,
      pressure: snap.pressure,
      gapBefore: this.gapPending && this.history.length > 0,
    });
    this.gapPending = false;
    if (this.history.length > HISTORY_CAPACITY) this.history.shift();
  }

  setConnection(state: ConnectionState): void {
    if (state === 'reconnecting') this.gapPending = true;
    this.connection = state;
  }

  commandSent(id: number, cmd: Command): void {
    this.pending.set(id, cmd);
  }

  commandSettled(id: number, cmd: Command, outcome: CommandOutcome): void {
    this.pending.delete(id);
    switch (outcome.kind) {
      case 'ack':
        this.lastAckScan = outcome.scanIndex;
        break;
      case 'reject':
        this.pushToast('reject', outcome.reason);
        break;
      case 'timeout':
        this.pushToast('timeout', `no reply for ${cmd.action}`);
        break;
    }
  }

  serviceError(message: string): void {
    this.pushToast('error', message);
  }

  pendingGroups(): Set<string> {
    const groups = new Set<string>();
    for (const cmd of this.pending.values()) groups.add(commandGroup(cmd));
    return groups;
  }

  /** History split at gaps, ready to plot as separate line segments. */
  segments(): TrendPoint[][] {
    const out: TrendPoint[][] = [];
    let current: TrendPoint[] = [];
    for (const point of this.history) {
      if (point.gapBefore && current.length > 0) {
        out.push(current);
        current = [];
      }
      current.push(point);
    }
    if (current.length > 0) out.push(current);
    return out;
  }

  private pushToast(kind: ToastKind, text: string): void {
    this.toast = { kind, text, seq: ++this.toastSeq };
  }
}
