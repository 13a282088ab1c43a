/**
 * Wires the client, the view model, and the panels together. The flow is one
 * direction only: socket events mutate the ViewModel, then a full render pass
 * repaints every panel from it.
 */

import { ServiceClient, SocketFactory } from './client.js';
import { Mimic } from './mimic.js';
import { ControlPanel } from './panel.js';
import { PressurePanel } from './trend.js';
import { ViewModel } from './viewmodel.js';

export interface AppOptions {
  url: string;
  socketFactory?: SocketFactory;
}

export interface AppHandle {
  vm: ViewModel;
  client: ServiceClient;
  render: () => void;
  dispose: () => void;
}

const BANNER_TEXT: Record<string, string> = {
  connecting: 'connecting to the control service',
  reconnecting: 'connection lost, reconnecting',
  stale: 'stale data: no update from the service for over 2 s',
};

export function mountApp(root: HTMLElement, opts: AppOptions): AppHandle {
  root.innerHTML = `
    <header class="hmi-header">
      <h1>Two-pump station</h1>
      <span class="chart-name">-</span>
      <div class="conn-banner" hidden></div>
    </header>
    <main class="hmi-main">
      <section class="mimic-panel"></section>
      <section class="pressure-panel"></section>
    </main>
    <section class="operator-panel"></section>`;

  const vm = new ViewModel();
  const mimic = new Mimic(root.querySelector('.mimic-panel') as HTMLElement);
  const pressure = new PressurePanel(
    root.querySelector('.pressure-panel') as HTMLElement,
  );

  const client = new ServiceClient(
    opts.url,
    {
      onState: (state) => {
        vm.setConnection(state);
        render();
      },
      onSnapshot: (snap) => {
        vm.applySnapshot(snap);
        render();
      },
      onCommandSent: (id, cmd) => {
        vm.commandSent(id, cmd);
        render();
      },
      onCommandSettled: (id, cmd, outcome) => {
        vm.commandSettled(id, cmd, outcome);
        render();
      },
      onServiceError: (message) => {
        vm.serviceError(message);
        render();
      },
    },
    opts.socketFactory,
  );

  const panel = new ControlPanel(
    root.querySelector('.operator-panel') as HTMLElement,
    (cmd) => client.send(cmd),
  );

  const chartName = root.querySelector('.chart-name') as HTMLElement;
  const banner = root.querySelector('.conn-banner') as HTMLElement;

  const render = () => {
    chartName.textContent = vm.snapshot ? vm.snapshot.chart : '-';
    const text = vm.connection === 'live' ? null : BANNER_TEXT[vm.connection];
    banner.hidden = text === null;
    banner.textContent = text ?? '';
    banner.dataset.state = vm.connection;
    mimic.update(vm.snapshot);
    pressure.update(vm);
    panel.update(vm);
  };

  render();
  client.connect();
  return {
    vm,
    client,
    render,
    dispose: () => client.dispose(),
  };
}
