/** End-to-end smoke against a real platform service:
 * upload -> preprocess -> configure (defaults visible) -> job completes ->
 * F1 + row-normalized confusion heatmap -> deploy -> predict (probabilities
 * sum to ~1) -> stop.
 *
 * The suite bootstraps its own platform root (tiny pre-trained bundle +
 * demo TSV) with the CLI, then drives the console DOM in jsdom with real
 * HTTP underneath.
 */

import { ChildProcess, execFile, spawn } from 'node:child_process';
import { once } from 'node:events';
import * as fs from 'node:fs';
import * as net from 'node:net';
import * as os from 'node:os';
import * as path from 'node:path';
import { promisify } from 'node:util';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import { ApiClient } from '../src/api.js';
import { ConsoleHandle, createConsole } from '../src/app.js';

const execFileAsync = promisify(execFile);

const DIST_DIR = path.resolve(__dirname, '..', 'dist');

let rootDir: string;
let port: number;
let base: string;
let server: ChildProcess;
let serverLog = '';

async function freePort(): Promise<number> {
  const probe = net.createServer();
  probe.listen(0, '127.0.0.1');
  await once(probe, 'listening');
  const address = probe.address() as net.AddressInfo;
  probe.close();
  await once(probe, 'close');
  return address.port;
}

async function waitForHealth(timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    if (server.exitCode != null) {
      throw new Error(`service exited early (${server.exitCode}):\n${serverLog}`);
    }
    try {
      const res = await fetch(`${base}/api/health`);
      if (res.ok) return;
    } catch (err) {
      lastError = err;
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error(`service never became healthy: ${String(lastError)}\n${serverLog}`);
}

beforeAll(async () => {
  rootDir = fs.mkdtempSync(path.join(os.tmpdir(), 'morphlm-console-e2e-'));
  // Tiny bundle: enough pre-training for the pipeline to run end to end.
  await execFileAsync(
    'morphlm',
    [
      'init-platform',
      '--root', rootDir,
      '--seed', '7',
      '--sentences', '24',
      '--merges', '50',
      '--steps', '40',
      '--labeled', '48',
    ],
    { timeout: 180_000 },
  );

  port = await freePort();
  base = `http://127.0.0.1:${port}`;
  const args = ['serve', '--root', rootDir, '--port', String(port)];
  if (fs.existsSync(path.join(DIST_DIR, 'index.html'))) {
    args.push('--ui', DIST_DIR);
  }
  server = spawn('morphlm', args, { stdio: ['ignore', 'pipe', 'pipe'] });
  server.stdout?.on('data', (chunk) => { serverLog += String(chunk); });
  server.stderr?.on('data', (chunk) => { serverLog += String(chunk); });
  await waitForHealth();
});

afterAll(async () => {
  if (server && server.exitCode == null) {
    server.kill('SIGTERM');
    await Promise.race([
      once(server, 'exit'),
      new Promise((resolve) => setTimeout(resolve, 5000)),
    ]);
    if (server.exitCode == null) server.kill('SIGKILL');
  }
  if (rootDir) fs.rmSync(rootDir, { recursive: true, force: true });
});

describe('operator console against the live service', () => {
  let root: HTMLDivElement;
  let ui: ConsoleHandle;

  function $(selector: string): HTMLElement {
    const node = root.querySelector<HTMLElement>(selector);
    if (!node) throw new Error(`missing ${selector}`);
    return node;
  }

  /** Drive the console's own poll step until the condition holds. */
  async function pollUntil(
    check: () => boolean,
    what: string,
    timeoutMs = 180_000,
  ): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
      await ui.refresh();
      if (check()) return;
      await new Promise((resolve) => setTimeout(resolve, 300));
    }
    throw new Error(`timed out waiting for ${what}\n${serverLog.slice(-2000)}`);
  }

  function submit(form: HTMLElement): void {
    form.dispatchEvent(new Event('submit', { bubbles: true, cancelable: true }));
  }

  it('walks upload -> preprocess -> train -> inspect -> deploy -> predict -> stop', async () => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.querySelector('#app') as HTMLDivElement;
    ui = createConsole(root, new ApiClient(base), { pollIntervalMs: 500 });

    // upload the demo TSV through the form
    const tsv = fs.readFileSync(path.join(rootDir, 'demo.tsv'), 'utf-8');
    ($('#upload-form input[name="name"]') as HTMLInputElement).value = 'demo';
    ($('#upload-form textarea[name="tsv"]') as HTMLTextAreaElement).value = tsv;
    submit($('#upload-form'));
    await pollUntil(
      () => root.querySelectorAll('#dataset-tbody tr[data-dataset-id]').length === 1,
      'uploaded dataset row',
      30_000,
    );
    expect($('#dataset-tbody').textContent).toContain('uploaded');

    // preprocess and wait for ready + label summary
    ($('button[data-action="preprocess"]') as HTMLButtonElement).click();
    await pollUntil(
      () => ui.state.datasets[0]?.state === 'ready',
      'dataset ready',
      60_000,
    );
    expect($('#dataset-tbody').textContent).toContain('negative');
    expect($('#dataset-tbody').textContent).toContain('positive');

    // configure: paper defaults are visible, then shrink for the smoke run
    expect(($('#job-form input[name="peak_lr"]') as HTMLInputElement).value).toBe('2e-5');
    expect(($('#job-form input[name="batch_size"]') as HTMLInputElement).value).toBe('16');
    expect(($('#job-form input[name="epochs"]') as HTMLInputElement).value).toBe('30');
    ($('#job-form input[name="peak_lr"]') as HTMLInputElement).value = '3e-4';
    ($('#job-form input[name="batch_size"]') as HTMLInputElement).value = '8';
    ($('#job-form input[name="epochs"]') as HTMLInputElement).value = '1';
    ($('#job-form input[name="dropout"]') as HTMLInputElement).value = '0';
    submit($('#job-form'));

    await pollUntil(
      () => ui.state.jobs.length === 1,
      'job visible',
      30_000,
    );
    // queue is FIFO; the one job must reach SUCCEEDED
    await pollUntil(
      () => ui.state.jobs[0]?.state === 'SUCCEEDED',
      'job SUCCEEDED',
      180_000,
    );

    // the finished row exposes the score; inspect opens the report
    const rowF1 = root.querySelector('#job-tbody [data-dev-f1]') as HTMLElement;
    expect(rowF1).not.toBeNull();
    ($('button[data-action="inspect"]') as HTMLButtonElement).click();
    const result = $('#job-result');
    const devF1 = Number((result.querySelector('[data-dev-f1]') as HTMLElement).dataset.devF1);
    expect(devF1).toBeGreaterThanOrEqual(0);
    expect(devF1).toBeLessThanOrEqual(1);

    // row-normalized confusion heatmap: each row sums to 1 (or 0 when the
    // gold class is absent), at least one row is populated
    const heatRows = Array.from(result.querySelectorAll('table.heatmap tbody tr'));
    expect(heatRows.length).toBeGreaterThanOrEqual(2);
    let populated = 0;
    for (const tr of heatRows) {
      const sum = Array.from(tr.querySelectorAll('td[data-value]')).reduce(
        (acc, cell) => acc + Number((cell as HTMLElement).dataset.value),
        0,
      );
      if (Math.abs(sum - 1) < 1e-9) populated += 1;
      else expect(Math.abs(sum)).toBeLessThan(1e-9);
    }
    expect(populated).toBeGreaterThanOrEqual(1);

    // deploy the registered model
    await pollUntil(() => ui.state.models.length === 1, 'model registered', 30_000);
    submit($('#deploy-form'));
    await pollUntil(
      () => ui.state.deployments.some((d) => d.state === 'SERVING'),
      'deployment SERVING',
      60_000,
    );

    // interactive prediction: probability bars sum to ~1
    const text = tsv.split('\n')[0].split('\t')[0];
    ($('#predict-text') as HTMLInputElement).value = text;
    submit($('#predict-form'));
    await pollUntil(
      () => root.querySelectorAll('#prediction-result [data-prob]').length > 0,
      'prediction rendered',
      60_000,
    );
    const probs = Array.from(
      root.querySelectorAll('#prediction-result [data-prob]'),
    ).map((n) => Number((n as HTMLElement).dataset.prob));
    expect(probs).toHaveLength(3);
    expect(probs.reduce((a, b) => a + b, 0)).toBeCloseTo(1.0, 6);
    expect($('#prediction-history').textContent).toContain(text);

    // a second deployment serves independently, then stop the first
    submit($('#deploy-form'));
    await pollUntil(
      () => ui.state.deployments.filter((d) => d.state === 'SERVING').length === 2,
      'two SERVING deployments',
      60_000,
    );
    const stopButtons = root.querySelectorAll('button[data-action="stop"]');
    expect(stopButtons).toHaveLength(2);
    (stopButtons[0] as HTMLButtonElement).click();
    await pollUntil(
      () =>
        ui.state.deployments.some((d) => d.state === 'STOPPED') &&
        ui.state.deployments.some((d) => d.state === 'SERVING'),
      'one stopped, one serving',
      60_000,
    );
  });

  it('serves the built console from the platform process', async () => {
    if (!fs.existsSync(path.join(DIST_DIR, 'index.html'))) {
      throw new Error('dist/ missing; run npm run build first (npm test does)');
    }
    const page = await fetch(`${base}/`);
    expect(page.ok).toBe(true);
    const html = await page.text();
    expect(html).toContain('morphlm console');
    expect(html).toContain('main.js');
    // API still reachable alongside the static mount
    const health = await fetch(`${base}/api/health`);
    expect(health.ok).toBe(true);
  });
});
