/**
 * Reconnecting service client. Owns the socket, the stale-data timer, the
 * reconnect backoff, and the per-command ack timeout; everything it learns
 * lands in the ViewModel through the event callbacks. Nothing in this file
 * touches the DOM.
 */

import {
  Command,
  Snapshot,
  encodeCommand,
  parseServerMessage,
} from './protocol.js';

export type ConnectionState = 'connecting' | 'live' | 'stale' | 'reconnecting';

/** The slice of the WebSocket surface the client uses; tests substitute a
 * scripted fake through the factory. */
export interface SocketLike {
  onopen: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export type CommandOutcome =
  | { kind: 'ack'; scanIndex: number }
  | { kind: 'reject'; reason: string }
  | { kind: 'timeout' };

export interface ClientEvents {
  onState(state: ConnectionState): void;
  onSnapshot(snap: Snapshot): void;
  onCommandSent(id: number, cmd: Command): void;
  onCommandSettled(id: number, cmd: Command, outcome: CommandOutcome): void;
  onServiceError(message: string): void;
}

// No snapshot for this long means the view is lying; raise the banner.
export const STALE_AFTER_MS = 2000;
// A command the service never answered; re-enable the control with a warning.
export const ACK_TIMEOUT_MS = 2000;
export const BACKOFF_INITIAL_MS = 250;
export const BACKOFF_MAX_MS = 4000;

interface PendingCommand {
  cmd: Command;
  timer: ReturnType<typeof setTimeout>;
}

export class ServiceClient {
  private socket: SocketLike | null = null;
  private open = false;
  private state: ConnectionState = 'connecting';
  private nextId = 1;
  private pending = new Map<number, PendingCommand>();
  private staleTimer: ReturnType<typeof setTimeout> | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private backoffMs = BACKOFF_INITIAL_MS;
  private disposed = false;

  constructor(
    private readonly url: string,
    private readonly events: ClientEvents,
    private readonly factory: SocketFactory = (u) =>
      new WebSocket(u) as unknown as SocketLike,
  ) {}

  connect(): void {
    if (this.disposed) return;
    const socket = this.factory(this.url);
    this.socket = socket;
    this.open = false;
    socket.onopen = () => {
      if (socket !== this.socket) return;
      this.open = true;
      this.armStaleTimer();
    };
    socket.onmessage = (ev) => {
      if (socket !== this.socket) return;
      this.handleMessage(String(ev.data));
    };
    socket.onclose = () => this.handleClose(socket);
    socket.onerror = () => {
      // the close event follows; nothing to do here
    };
    this.events.onState(this.state);
  }

  /** Assigns an id, sends, and starts the ack timeout. The command settles
   * exactly once: ack, reject, or timeout. */
  send(cmd: Command): number {
    const id = this.nextId++;
    this.events.onCommandSent(id, cmd);
    if (!this.socket || !this.open) {
      this.events.onCommandSettled(id, cmd, {
        kind: 'reject',
        reason: 'not connected',
      });
      return id;
    }
    const timer = setTimeout(() => {
      this.pending.delete(id);
      this.events.onCommandSettled(id, cmd, { kind: 'timeout' });
    }, ACK_TIMEOUT_MS);
    this.pending.set(id, { cmd, timer });
    this.socket.send(encodeCommand(id, cmd));
    return id;
  }

  dispose(): void {
    this.disposed = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.clearStaleTimer();
    for (const [, entry] of this.pending) clearTimeout(entry.timer);
    this.pending.clear();
    const socket = this.socket;
    this.socket = null;
    socket?.close();
  }

  private handleMessage(text: string): void {
    const msg = parseServerMessage(text);
    if (!msg) {
      this.events.onServiceError('unparseable message from service');
      return;
    }
    switch (msg.t) {
      case 'snapshot':
        this.backoffMs = BACKOFF_INITIAL_MS;
        this.armStaleTimer();
        this.setState('live');
        this.events.onSnapshot(msg);
        break;
      case 'ack':
        this.settle(msg.id, { kind: 'ack', scanIndex: msg.scan_index });
        break;
      case 'reject':
        this.settle(msg.id, { kind: 'reject', reason: msg.reason });
        break;
      case 'error':
        this.events.onServiceError(msg.message);
        break;
    }
  }

  private settle(id: number | string, outcome: CommandOutcome): void {
    if (typeof id !== 'number') return; // another client's command echoed back
    const entry = this.pending.get(id);
    if (!entry) return;
    clearTimeout(entry.timer);
    this.pending.delete(id);
    this.events.onCommandSettled(id, entry.cmd, outcome);
  }

  private handleClose(socket: SocketLike): void {
    if (socket !== this.socket || this.disposed) return;
    this.socket = null;
    this.open = false;
    this.clearStaleTimer();
    // commands in flight on a dead socket can never be answered
    for (const [id, entry] of this.pending) {
      clearTimeout(entry.timer);
      this.events.onCommandSettled(id, entry.cmd, { kind: 'timeout' });
    }
    this.pending.clear();
    this.setState('reconnecting');
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.connect();
    }, this.backoffMs);
    this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_MAX_MS);
  }

  private setState(state: ConnectionState): void {
    if (state === this.state) return;
    this.state = state;
    this.events.onState(state);
  }

  private armStaleTimer(): void {
    this.clearStaleTimer();
    this.staleTimer = setTimeout(() => {
      this.staleTimer = null;
      this.setState('stale');
    }, STALE_AFTER_MS);
  }

  private clearStaleTimer(): void {
    if (this.staleTimer !== null) {
      clearTimeout(this.staleTimer);
      this.staleTimer = null;
    }
  }
}
