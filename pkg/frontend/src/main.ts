/**
 * Browser entry point. Pass ?service=ws://host:port/ to point the console at
 * a control service somewhere else; the default assumes `grafcet serve` on
 * the standard port of the machine serving this page.
 */

import { mountApp } from './app.js';

const root = document.getElementById('app');
if (root) {
  const params = new URLSearchParams(location.search);
  const url =
    params.get('service') ?? `ws://${location.hostname || '127.0.0.1'}:7410/`;
  mountApp(root, { url });
}
