/**
 * Pressure gauge plus rolling trend. Points come straight from the history
 * ring; gaps in the stream break the line into separate segments rather than
 * drawing a bridge across data we never saw.
 */

import { HISTORY_CAPACITY, ViewModel } from './viewmodel.js';

// Display range of the gauge and trend, matching the plant's hard ceiling.
const P_MAX = 6.0;

const GAUGE_CX = 60;
const GAUGE_CY = 62;
const GAUGE_R = 50;

function needleEnd(pressure: number): { x: number; y: number } {
  const frac = Math.min(P_MAX, Math.max(0, pressure)) / P_MAX;
  const angle = (frac * 180 - 90) * (Math.PI / 180);
  return {
    x: GAUGE_CX + GAUGE_R * 0.88 * Math.sin(angle),
    y: GAUGE_CY - GAUGE_R * 0.88 * Math.cos(angle),
  };
}

function gaugeTicks(): string {
  const ticks: string[] = [];
  for (let bar = 0; bar <= P_MAX; bar += 1) {
    const angle = ((bar / P_MAX) * 180 - 90) * (Math.PI / 180);
    const x1 = GAUGE_CX + GAUGE_R * Math.sin(angle);
    const y1 = GAUGE_CY - GAUGE_R * Math.cos(angle);
    const x2 = GAUGE_CX + (GAUGE_R - 6) * Math.sin(angle);
    const y2 = GAUGE_CY - (GAUGE_R - 6) * Math.cos(angle);
    ticks.push(
      `<line class="gauge-tick" x1="${x1.toFixed(1)}" y1="${y1.toFixed(1)}" x2="${x2.toFixed(1)}" y2="${y2.toFixed(1)}"/>`,
    );
  }
  return ticks.join('');
}

export class PressurePanel {
  private readonly needle: Element;
  private readonly value: Element;
  private readonly trendLines: Element;

  constructor(container: HTMLElement) {
    container.innerHTML = `
      <div class="gauge">
        <svg class="gauge-svg" viewBox="0 0 120 78">
          <path class="gauge-arc" d="M 10 62 A 50 50 0 0 1 110 62"/>
          ${gaugeTicks()}
          <line class="gauge-needle" x1="${GAUGE_CX}" y1="${GAUGE_CY}" x2="${GAUGE_CX}" y2="${GAUGE_CY - GAUGE_R * 0.88}"/>
          <circle class="gauge-pivot" cx="${GAUGE_CX}" cy="${GAUGE_CY}" r="3"/>
        </svg>
        <div class="gauge-value">-</div>
      </div>
      <svg class="trend" viewBox="0 0 300 100" preserveAspectRatio="none">
        <g class="trend-lines"></g>
      </svg>`;
    this.needle = container.querySelector('.gauge-needle')!;
    this.value = container.querySelector('.gauge-value')!;
    this.trendLines = container.querySelector('.trend-lines')!;
  }

  update(vm: ViewModel): void {
    const snap = vm.snapshot;
    if (snap) {
      const end = needleEnd(snap.pressure);
      this.needle.setAttribute('x2', end.x.toFixed(2));
      this.needle.setAttribute('y2', end.y.toFixed(2));
      this.value.textContent = `${snap.pressure.toFixed(3)} bar`;
    }
    const xStep = 300 / (HISTORY_CAPACITY - 1);
    const toXY = (pressure: number, index: number) => {
      const y = 100 - (Math.min(P_MAX, Math.max(0, pressure)) / P_MAX) * 100;
      return `${(index * xStep).toFixed(2)},${y.toFixed(2)}`;
    };
    let index = 0;
    const parts: string[] = [];
    for (const segment of vm.segments()) {
      const points = segment.map((p) => toXY(p.pressure, index++)).join(' ');
      parts.push(`<polyline class="trend-line" points="${points}"/>`);
    }
    if (vm.history.length > 0) {
      const last = vm.history[vm.history.length - 1];
      const [x, y] = toXY(last.pressure, vm.history.length - 1).split(',');
      parts.push(`<circle class="trend-dot" cx="${x}" cy="${y}" r="2"/>`);
    }
    this.trendLines.innerHTML = parts.join('');
  }
}
