/**
 * Status readouts, pump badges, steering controls, and the toast line.
 * Every label and indicator is painted from the ViewModel during update();
 * click handlers only ever send commands, they never flip local state, so
 * a pump can't look started before the service says it is.
 */

import type { Command, Pump } from './protocol.js';
import { ViewModel, commandGroup } from './viewmodel.js';

const PUMPS: Pump[] = ['A', 'B'];

export class ControlPanel {
  private vm: ViewModel | null = null;

  constructor(
    private readonly container: HTMLElement,
    private readonly send: (cmd: Command) => void,
  ) {
    container.innerHTML = `
      <div class="status-row">
        <span class="mode-badge">-</span>
        <span class="paused-badge" hidden>PAUSED</span>
        <span class="readout scan-index">scan -</span>
        <span class="readout clock">clock -</span>
        <span class="readout speed-display">-</span>
        <span class="readout demand-readout">demand -</span>
      </div>
      <div class="pump-row">
        ${PUMPS.map(
          (p) => `
        <div class="pump-badge" data-pump="${p}">
          <span class="pump-name">Pump ${p}</span>
          <span class="pump-cmd">CMD</span>
          <span class="pump-run">RUN</span>
          <span class="pump-fault">FAULT</span>
        </div>`,
        ).join('')}
      </div>
      <div class="controls">
        <div class="control-group mode-controls">
          <button class="mode-btn" data-mode="auto">Auto</button>
          <button class="mode-btn" data-mode="manual">Manual</button>
        </div>
        <div class="control-group pump-controls">
          ${PUMPS.map((p) => `<button class="pump-btn" data-pump="${p}">Start ${p}</button>`).join('')}
        </div>
        <div class="control-group demand-controls">
          <label>demand</label>
          <input type="range" class="demand-slider" min="0" max="2" step="0.05">
          <button class="demand-clear">Follow scenario</button>
        </div>
        <div class="control-group speed-controls">
          ${[0.5, 1, 10, 50]
            .map((s) => `<button class="speed-btn" data-speed="${s}">x${s}</button>`)
            .join('')}
        </div>
        <div class="control-group fault-controls">
          ${PUMPS.map((p) => `<button class="fault-btn" data-pump="${p}">Fail ${p}</button>`).join('')}
        </div>
        <div class="control-group run-controls">
          <button class="run-btn">Pause</button>
          <button class="reset-btn">Reset</button>
        </div>
      </div>
      <div class="toast" hidden></div>`;

    const snap = () => this.vm?.snapshot ?? null;

    for (const btn of this.buttons('.mode-btn')) {
      btn.addEventListener('click', () => {
        const mode = btn.dataset.mode === 'manual' ? 'manual' : 'auto';
        this.send({ action: 'set_mode', mode });
      });
    }
    for (const btn of this.buttons('.pump-btn')) {
      btn.addEventListener('click', () => {
        const s = snap();
        if (!s) return;
        const pump = btn.dataset.pump as Pump;
        this.send({ action: 'manual_pump', pump, on: !s.commands[pump] });
      });
    }
    for (const btn of this.buttons('.fault-btn')) {
      btn.addEventListener('click', () => {
        const s = snap();
        if (!s) return;
        const pump = btn.dataset.pump as Pump;
        this.send({
          action: 'inject_fault',
          pump,
          op: s.faulted[pump] ? 'repair' : 'fail',
        });
      });
    }
    for (const btn of this.buttons('.speed-btn')) {
      btn.addEventListener('click', () => {
        this.send({ action: 'set_speed', value: Number(btn.dataset.speed) });
      });
    }
    const slider = container.querySelector('.demand-slider') as HTMLInputElement;
    slider.addEventListener('change', () => {
      this.send({ action: 'set_demand', value: Number(slider.value) });
    });
    (container.querySelector('.demand-clear') as HTMLButtonElement).addEventListener(
      'click',
      () => this.send({ action: 'set_demand', value: null }),
    );
    (container.querySelector('.run-btn') as HTMLButtonElement).addEventListener(
      'click',
      () => {
        const s = snap();
        if (!s) return;
        this.send({ action: s.paused ? 'resume' : 'pause' });
      },
    );
    (container.querySelector('.reset-btn') as HTMLButtonElement).addEventListener(
      'click',
      () => this.send({ action: 'reset' }),
    );
  }

  update(vm: ViewModel): void {
    this.vm = vm;
    const snap = vm.snapshot;
    const pend = vm.pendingGroups();
    const q = (sel: string) => this.container.querySelector(sel) as HTMLElement;

    q('.mode-badge').textContent = snap ? snap.mode.toUpperCase() : '-';
    (q('.paused-badge') as HTMLElement).hidden = !snap || !snap.paused;
    q('.scan-index').textContent = snap ? `scan ${snap.scan_index}` : 'scan -';
    q('.clock').textContent = snap ? `clock ${snap.clock.toFixed(1)} s` : 'clock -';
    q('.speed-display').textContent = snap ? `x${snap.speed}` : '-';
    q('.demand-readout').textContent = snap
      ? `demand ${snap.demand.toFixed(2)}`
      : 'demand -';

    for (const pump of PUMPS) {
      const badge = q(`.pump-badge[data-pump="${pump}"]`);
      badge.classList.toggle('commanded', !!snap && snap.commands[pump]);
      badge.classList.toggle('running', !!snap && snap.running[pump]);
      badge.classList.toggle('faulted', !!snap && snap.faulted[pump]);
    }

    const disable = (btn: HTMLButtonElement, group: string) => {
      btn.disabled = !snap || pend.has(group);
    };
    for (const btn of this.buttons('.mode-btn')) {
      disable(btn, 'set_mode');
      btn.classList.toggle('current', !!snap && snap.mode === btn.dataset.mode);
    }
    for (const btn of this.buttons('.pump-btn')) {
      const pump = btn.dataset.pump as Pump;
      disable(btn, `manual_pump:${pump}`);
      btn.textContent = snap && snap.commands[pump] ? `Stop ${pump}` : `Start ${pump}`;
      btn.classList.toggle('muted', !!snap && snap.mode !== 'manual');
    }
    for (const btn of this.buttons('.fault-btn')) {
      const pump = btn.dataset.pump as Pump;
      disable(btn, `inject_fault:${pump}`);
      btn.textContent = snap && snap.faulted[pump] ? `Repair ${pump}` : `Fail ${pump}`;
    }
    for (const btn of this.buttons('.speed-btn')) disable(btn, 'set_speed');
    const slider = q('.demand-slider') as HTMLInputElement;
    slider.disabled = !snap || pend.has('set_demand');
    if (snap && document.activeElement !== slider) {
      slider.value = String(snap.demand);
    }
    disable(q('.demand-clear') as HTMLButtonElement, 'set_demand');
    const runBtn = q('.run-btn') as HTMLButtonElement;
    runBtn.disabled = !snap || pend.has('pause') || pend.has('resume');
    runBtn.textContent = snap && snap.paused ? 'Resume' : 'Pause';
    disable(q('.reset-btn') as HTMLButtonElement, 'reset');

    const toast = q('.toast');
    toast.hidden = vm.toast === null;
    toast.textContent = vm.toast ? vm.toast.text : '';
    toast.dataset.kind = vm.toast ? vm.toast.kind : '';
  }

  private buttons(selector: string): HTMLButtonElement[] {
    return [...this.container.querySelectorAll(selector)] as HTMLButtonElement[];
  }
}

export { commandGroup };
