/**
 * Live chart mimic. The five-step alternation chart gets a hand-laid SVG
 * whose layout mirrors the textual chart shipped with the engine; anything
 * else falls back to a plain row of step chips. Either way the active steps
 * carry the `active` class and nothing else does.
 */

import type { Snapshot } from './protocol.js';

const ALTERNATION_STEPS = ['S1', 'S2', 'S3', 'S4', 'S5'];
const STEP_W = 90;
const STEP_H = 38;

const STEP_XY: Record<string, { x: number; y: number }> = {
  S1: { x: 185, y: 10 },
  S2: { x: 60, y: 110 },
  S3: { x: 60, y: 210 },
  S4: { x: 310, y: 110 },
  S5: { x: 310, y: 210 },
};

/** Class toggling that works on SVG elements under every DOM we run in. */
export function setClass(el: Element, name: string, on: boolean): void {
  const classes = new Set(
    (el.getAttribute('class') ?? '').split(/\s+/).filter(Boolean),
  );
  if (on) classes.add(name);
  else classes.delete(name);
  el.setAttribute('class', [...classes].join(' '));
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function stepGroup(id: string, initial: boolean): string {
  const { x, y } = STEP_XY[id];
  const inner = initial
    ? `<rect class="step-box-inner" x="${x + 5}" y="${y + 5}" width="${STEP_W - 10}" height="${STEP_H - 10}"/>`
    : '';
  return `
    <g class="mimic-step" data-step="${id}">
      <rect class="step-box" x="${x}" y="${y}" width="${STEP_W}" height="${STEP_H}" rx="3"/>
      ${inner}
      <text class="step-label" x="${x + STEP_W / 2}" y="${y + STEP_H / 2 + 5}" text-anchor="middle">${id}</text>
    </g>`;
}

function actionTag(x: number, y: number, label: string): string {
  return `
    <line class="link" x1="${x}" y1="${y + 10}" x2="${x + 4}" y2="${y + 10}"/>
    <rect class="action-box" x="${x + 4}" y="${y}" width="60" height="20" rx="2"/>
    <text class="action-label" x="${x + 34}" y="${y + 14}" text-anchor="middle">${label}</text>`;
}

function transBar(x1: number, y1: number, x2: number, y2: number, label: string, lx: number, ly: number): string {
  return `
    <line class="trans-bar" x1="${x1}" y1="${y1}" x2="${x2}" y2="${y2}"/>
    <text class="trans-label" x="${lx}" y="${ly}">${label}</text>`;
}

function alternationSvg(): string {
  const links = [
    '230,48 230,62 105,62 105,110', // T1: S1 -> S2
    '230,48 230,62 355,62 355,110', // T7: S1 -> S4 (recovery)
    '105,148 105,210', // T2: S2 -> S3
    '150,141 310,141', // T3: S2 -> S4 (express failover)
    '105,248 105,264 238,264 238,96 355,96 355,110', // T4: S3 -> S4
    '355,148 355,210', // T5: S4 -> S5
    '355,248 355,272 445,272 445,28 275,28', // T6: S5 -> S1
  ]
    .map((pts) => `<polyline class="link" points="${pts}"/>`)
    .join('');
  const bars =
    transBar(97, 84, 113, 84, 'T1', 118, 88) +
    transBar(347, 84, 363, 84, 'T7', 368, 88) +
    transBar(97, 179, 113, 179, 'T2', 118, 183) +
    transBar(230, 133, 230, 149, 'T3', 236, 138) +
    transBar(230, 180, 246, 180, 'T4', 250, 184) +
    transBar(347, 179, 363, 179, 'T5', 368, 183) +
    transBar(437, 150, 453, 150, 'T6', 455, 154);
  const steps = ALTERNATION_STEPS.map((id) => stepGroup(id, id === 'S1')).join('');
  const actions = actionTag(150, 112, 'cmd_A') + actionTag(400, 112, 'cmd_B');
  return `<svg class="mimic-svg" viewBox="0 0 480 300">${links}${bars}${steps}${actions}</svg>`;
}

function chipsHtml(steps: string[]): string {
  const chips = steps
    .map(
      (id) =>
        `<div class="step-chip" data-step="${escapeHtml(id)}">${escapeHtml(id)}</div>`,
    )
    .join('');
  return `<div class="mimic-chips">${chips}</div>`;
}

export class Mimic {
  private builtKey = '';

  constructor(private readonly container: HTMLElement) {
    container.innerHTML =
      '<div class="mimic-empty">waiting for the first snapshot</div>';
  }

  update(snap: Snapshot | null): void {
    if (!snap) return;
    const key = snap.steps.join('|');
    if (key !== this.builtKey) {
      this.container.innerHTML =
        key === ALTERNATION_STEPS.join('|') ? alternationSvg() : chipsHtml(snap.steps);
      this.builtKey = key;
    }
    const active = new Set(snap.marking);
    for (const el of this.container.querySelectorAll('[data-step]')) {
      setClass(el, 'active', active.has(el.getAttribute('data-step') ?? ''));
    }
  }
}
