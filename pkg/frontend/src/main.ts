/**
 * Browser entry point. The poll interval defaults to 2s and can be tuned
 * with a ?poll=<ms> query parameter.
 */

import { ApiClient } from './api.js';
import { createConsole, DEFAULT_POLL_INTERVAL_MS } from './app.js';

const root = document.querySelector<HTMLDivElement>('#app');
if (!root) {
  throw new Error('missing #app root');
}

const params = new URLSearchParams(window.location.search);
const pollIntervalMs = Number(params.get('poll') ?? '') || DEFAULT_POLL_INTERVAL_MS;

const console_ = createConsole(root, new ApiClient(), { pollIntervalMs });
console_.start();
