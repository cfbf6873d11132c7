/**
 * Operator console for the training and inference platform.
 *
 * Three panels: dataset upload/preprocess, fine-tune job configuration and
 * monitoring, and an inference playground over deployed models.
 *
 * Rendering rules: every score on screen comes from an API response field.
 * The raw value rides along in a data-* attribute and the visible text only
 * reformats it; nothing is computed client-side. The job table preserves the
 * server's submit order, so polling can never reorder rows.
 */

import {
  ApiClient,
  ApiError,
  DatasetRecord,
  DeploymentRecord,
  EvalReportData,
  HyperParams,
  JobRecord,
  ModelRecord,
  Prediction,
} from './api.js';

export const DEFAULT_POLL_INTERVAL_MS = 2000;

/** Prefilled hyperparameters: the winning fine-tuning setting. */
export const HYPER_DEFAULTS: Record<string, string> = {
  peak_lr: '2e-5',
  batch_size: '16',
  epochs: '30',
  dropout: '0.1',
  weight_decay: '0.05',
  warmup_fraction: '0.06',
  seed: '0',
};

export interface HistoryEntry {
  deployment_id: string;
  text: string;
  label: string;
  probability: number;
}

export interface ConsoleState {
  datasets: DatasetRecord[];
  jobs: JobRecord[];
  models: ModelRecord[];
  deployments: DeploymentRecord[];
  selectedJobId: string | null;
  history: HistoryEntry[];
}

export interface ConsoleOptions {
  pollIntervalMs?: number;
}

export interface ConsoleHandle {
  state: ConsoleState;
  refresh(): Promise<void>;
  start(): void;
  stop(): void;
}

// ---------- Rendering helpers (pure, exported for tests) ----------

export function esc(text: string): string {
  return text
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;');
}

function badge(state: string): string {
  return `<span class="badge state-${esc(state)}">${esc(state)}</span>`;
}

function score(value: number, attr: string, digits = 4): string {
  return `<span ${attr}="${value}">${value.toFixed(digits)}</span>`;
}

export function datasetRowsHtml(datasets: DatasetRecord[]): string {
  if (datasets.length === 0) {
    return '<tr><td colspan="7" class="empty">No datasets yet. Upload a TSV to get started.</td></tr>';
  }
  return datasets
    .map((d) => {
      const counts = ['train', 'dev', 'test']
        .map((split) => d.row_counts[split] ?? 0)
        .join('/');
      const action =
        d.state === 'uploaded' || d.state === 'failed'
          ? `<button data-action="preprocess" data-id="${d.id}">Preprocess</button>`
          : '';
      const error = d.error ? `<div class="error-text">${esc(d.error)}</div>` : '';
      return `<tr data-dataset-id="${d.id}">
        <td>${d.id}</td>
        <td>${esc(d.name)}${error}</td>
        <td>${badge(d.state)}</td>
        <td>${d.n_rows}</td>
        <td>${d.labels.map(esc).join(', ') || '-'}</td>
        <td>${d.state === 'ready' ? counts : '-'}</td>
        <td>${action}</td>
      </tr>`;
    })
    .join('');
}

export function jobRowsHtml(jobs: JobRecord[]): string {
  if (jobs.length === 0) {
    return '<tr><td colspan="6" class="empty">No jobs submitted.</td></tr>';
  }
  return jobs
    .map((j) => {
      const queue = j.state === 'QUEUED' ? String(j.queue_position ?? '-') : '-';
      const f1 =
        j.result != null ? score(j.result.dev_f1, 'data-dev-f1') : '-';
      const cancel =
        j.state === 'QUEUED' || j.state === 'RUNNING'
          ? `<button data-action="cancel-job" data-id="${j.id}">Cancel</button>`
          : '';
      return `<tr data-job-id="${j.id}">
        <td>${j.id}</td>
        <td>${j.dataset_id}</td>
        <td>${badge(j.state)}</td>
        <td>${queue}</td>
        <td>${f1}</td>
        <td><button data-action="inspect" data-id="${j.id}">Inspect</button> ${cancel}</td>
      </tr>`;
    })
    .join('');
}

export function heatmapHtml(report: EvalReportData): string {
  const names =
    report.label_names ?? report.confusion.map((_, i) => String(i));
  const header = names
    .map((n) => `<th scope="col">${esc(n)}</th>`)
    .join('');
  const body = report.confusion
    .map((row, i) => {
      const cells = row
        .map(
          (v) =>
            `<td data-value="${v}" style="background: rgba(56, 132, 222, ${v.toFixed(3)})">${v.toFixed(2)}</td>`,
        )
        .join('');
      return `<tr><th scope="row">${esc(names[i])}</th>${cells}</tr>`;
    })
    .join('');
  return `<table class="heatmap" aria-label="row-normalized confusion matrix">
    <thead><tr><th>gold \\ pred</th>${header}</tr></thead>
    <tbody>${body}</tbody>
  </table>`;
}

export function jobResultHtml(job: JobRecord): string {
  const parts = [`<h3>Job ${job.id}</h3>`];
  if (job.error) {
    parts.push(`<div class="error-text">${esc(job.error)}</div>`);
  }
  const result = job.result;
  if (result == null) {
    if (!job.error) {
      parts.push(`<div class="muted">State ${esc(job.state)}; no result yet.</div>`);
    }
    return parts.join('\n');
  }
  const epoch = result.best_epoch != null ? ` (best epoch ${result.best_epoch})` : '';
  parts.push(
    `<div>dev weighted F1 ${score(result.dev_f1, 'data-dev-f1')}${epoch}</div>`,
  );
  if (result.warning) {
    parts.push(`<div class="error-text">${esc(result.warning)}</div>`);
  }
  const report = result.report;
  if (report != null) {
    const names = report.label_names ?? report.f1.map((_, i) => String(i));
    const rows = names
      .map(
        (name, c) => `<tr>
          <td>${esc(name)}</td>
          <td>${score(report.f1[c], 'data-f1')}</td>
          <td>${score(report.precision[c], 'data-precision')}</td>
          <td>${score(report.recall[c], 'data-recall')}</td>
          <td data-support="${report.support[c]}">${report.support[c]}</td>
        </tr>`,
      )
      .join('');
    parts.push(`<table class="grid">
      <thead><tr><th>class</th><th>F1</th><th>precision</th><th>recall</th><th>support</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>`);
    parts.push(heatmapHtml(report));
  }
  return parts.join('\n');
}

export function deploymentRowsHtml(deployments: DeploymentRecord[]): string {
  if (deployments.length === 0) {
    return '<tr><td colspan="5" class="empty">No deployments.</td></tr>';
  }
  return deployments
    .map((d) => {
      const stop =
        d.state === 'SERVING'
          ? `<button data-action="stop" data-id="${d.id}">Stop</button>`
          : '';
      return `<tr data-deployment-id="${d.id}">
        <td>${d.id}</td>
        <td>${d.model_id}</td>
        <td>${badge(d.state)}</td>
        <td>${d.request_count}</td>
        <td>${stop}</td>
      </tr>`;
    })
    .join('');
}

export function predictionHtml(prediction: Prediction): string {
  const bars = Object.entries(prediction.probabilities)
    .map(
      ([label, p]) => `<div class="bar-row">
        <span class="bar-label">${esc(label)}</span>
        <div class="bar"><div class="bar-fill" style="width: ${(p * 100).toFixed(1)}%"></div></div>
        <span class="bar-value" data-prob="${p}">${p.toFixed(3)}</span>
      </div>`,
    )
    .join('');
  return `<div>predicted <strong data-predicted-label="${esc(prediction.label)}">${esc(prediction.label)}</strong>
    <span class="muted">(${prediction.deployment_id})</span></div>${bars}`;
}

export function historyHtml(entries: HistoryEntry[]): string {
  if (entries.length === 0) {
    return '<li class="empty">No queries yet this session.</li>';
  }
  return entries
    .map(
      (e) => `<li><span class="muted">${e.deployment_id}</span> ${esc(e.text)}
        -&gt; <strong>${esc(e.label)}</strong>
        <span data-prob="${e.probability}">${e.probability.toFixed(3)}</span></li>`,
    )
    .join('');
}

/** Parse + sanity-check the hyper form before submission. The server stays
 * the authority; these mirror its bounds so obvious typos fail inline. */
export function validateHyper(
  raw: Record<string, string>,
): { hyper: Partial<HyperParams> } | { error: string } {
  const parsed: Record<string, number> = {};
  for (const field of Object.keys(HYPER_DEFAULTS)) {
    const value = Number(raw[field]);
    if (raw[field] == null || raw[field].trim() === '' || Number.isNaN(value)) {
      return { error: `${field} must be a number` };
    }
    parsed[field] = value;
  }
  for (const field of ['batch_size', 'epochs', 'seed']) {
    if (!Number.isInteger(parsed[field])) {
      return { error: `${field} must be an integer` };
    }
  }
  if (parsed.peak_lr <= 0 || parsed.batch_size < 1 || parsed.epochs < 1) {
    return { error: 'peak_lr, batch_size and epochs must be positive' };
  }
  if (!(parsed.dropout >= 0 && parsed.dropout < 1)) {
    return { error: 'dropout must be in [0, 1)' };
  }
  if (parsed.weight_decay < 0) {
    return { error: 'weight_decay must be >= 0' };
  }
  if (!(parsed.warmup_fraction >= 0 && parsed.warmup_fraction <= 0.5)) {
    return { error: 'warmup_fraction must be in [0, 0.5]' };
  }
  return { hyper: parsed as Partial<HyperParams> };
}

// ---------- Skeleton ----------

function hyperFieldsHtml(): string {
  const labels: Record<string, string> = {
    peak_lr: 'peak lr',
    batch_size: 'batch size',
    epochs: 'epochs',
    dropout: 'dropout',
    weight_decay: 'weight decay',
    warmup_fraction: 'warmup fraction',
    seed: 'seed',
  };
  return Object.entries(HYPER_DEFAULTS)
    .map(
      ([field, value]) =>
        `<label>${labels[field]}<input name="${field}" value="${value}" spellcheck="false" /></label>`,
    )
    .join('');
}

function skeletonHtml(): string {
  return `
  <header class="header">
    <h1>MORPHLM CONSOLE</h1>
    <div class="row">
      <span class="muted">datasets | fine-tune queue | inference playground</span>
      <button data-action="refresh">Refresh</button>
    </div>
  </header>
  <div id="notice" class="notice">ready</div>

  <section class="panel" id="dataset-panel">
    <h2>Datasets</h2>
    <div class="columns">
      <form id="upload-form">
        <label>Name<input name="name" required spellcheck="false" /></label>
        <label>TSV (one "text&lt;TAB&gt;label" row per line)
          <textarea name="tsv" required spellcheck="false"></textarea></label>
        <label>or load from a file<input type="file" id="tsv-file" accept=".tsv,.txt" /></label>
        <button class="primary" type="submit">Upload</button>
      </form>
      <div>
        <table class="grid">
          <thead><tr><th>id</th><th>name</th><th>state</th><th>rows</th><th>labels</th><th>train/dev/test</th><th></th></tr></thead>
          <tbody id="dataset-tbody"></tbody>
        </table>
      </div>
    </div>
  </section>

  <section class="panel" id="job-panel">
    <h2>Fine-tune jobs</h2>
    <div class="columns">
      <form id="job-form">
        <label>Dataset<select name="dataset_id" id="job-dataset"></select></label>
        <div class="hyper-grid">${hyperFieldsHtml()}</div>
        <div id="job-form-error" class="form-error"></div>
        <button class="primary" type="submit">Submit job</button>
      </form>
      <div>
        <table class="grid">
          <thead><tr><th>id</th><th>dataset</th><th>state</th><th>queue</th><th>dev F1</th><th></th></tr></thead>
          <tbody id="job-tbody"></tbody>
        </table>
        <div id="job-result"></div>
      </div>
    </div>
  </section>

  <section class="panel" id="playground-panel">
    <h2>Inference playground</h2>
    <div class="columns">
      <div>
        <form id="deploy-form">
          <label>Model<select id="deploy-model"></select></label>
          <button class="primary" type="submit">Deploy</button>
        </form>
        <h3>Deployments</h3>
        <table class="grid">
          <thead><tr><th>id</th><th>model</th><th>state</th><th>requests</th><th></th></tr></thead>
          <tbody id="deployment-tbody"></tbody>
        </table>
      </div>
      <div>
        <form id="predict-form">
          <label>Deployment<select id="predict-deployment"></select></label>
          <label>Text<input name="text" id="predict-text" spellcheck="false" /></label>
          <button class="primary" type="submit">Predict</button>
        </form>
        <div id="prediction-result"></div>
        <h3>Session history</h3>
        <ul id="prediction-history" class="history"></ul>
      </div>
    </div>
  </section>`;
}

// ---------- Console ----------

export function createConsole(
  root: HTMLElement,
  api: ApiClient,
  options: ConsoleOptions = {},
): ConsoleHandle {
  const pollIntervalMs = options.pollIntervalMs ?? DEFAULT_POLL_INTERVAL_MS;
  const state: ConsoleState = {
    datasets: [],
    jobs: [],
    models: [],
    deployments: [],
    selectedJobId: null,
    history: [],
  };
  let timer: ReturnType<typeof setInterval> | null = null;
  let refreshing = false;

  root.innerHTML = skeletonHtml();

  const el = <T extends HTMLElement>(id: string): T => {
    const node = root.querySelector<T>(`#${id}`);
    if (!node) throw new Error(`missing console element #${id}`);
    return node;
  };
  const notice = el<HTMLDivElement>('notice');
  const datasetTbody = el<HTMLTableSectionElement>('dataset-tbody');
  const jobTbody = el<HTMLTableSectionElement>('job-tbody');
  const jobResult = el<HTMLDivElement>('job-result');
  const deploymentTbody = el<HTMLTableSectionElement>('deployment-tbody');
  const predictionResult = el<HTMLDivElement>('prediction-result');
  const predictionHistory = el<HTMLUListElement>('prediction-history');
  const uploadForm = el<HTMLFormElement>('upload-form');
  const jobForm = el<HTMLFormElement>('job-form');
  const jobFormError = el<HTMLDivElement>('job-form-error');
  const deployForm = el<HTMLFormElement>('deploy-form');
  const predictForm = el<HTMLFormElement>('predict-form');
  const datasetSelect = el<HTMLSelectElement>('job-dataset');
  const modelSelect = el<HTMLSelectElement>('deploy-model');
  const deploymentSelect = el<HTMLSelectElement>('predict-deployment');
  const fileInput = el<HTMLInputElement>('tsv-file');

  function setNotice(message: string): void {
    notice.textContent = message;
  }

  function describeError(err: unknown): string {
    if (err instanceof ApiError) {
      const detail = typeof err.detail === 'string' && err.detail ? ` (${err.detail})` : '';
      return `${err.code}: ${err.message}${detail}`;
    }
    return `network failure: ${String(err)}`;
  }

  /** Rebuild a select only when its option set changes, keeping the user's
   * current choice; polling must never clobber an in-progress selection. */
  function syncSelect(
    select: HTMLSelectElement,
    options_: Array<{ value: string; label: string }>,
    emptyLabel: string,
  ): void {
    const signature = options_.map((o) => `${o.value}|${o.label}`).join('\n');
    if (select.dataset.signature === signature) return;
    const previous = select.value;
    select.innerHTML = options_.length
      ? options_.map((o) => `<option value="${o.value}">${esc(o.label)}</option>`).join('')
      : `<option value="">${esc(emptyLabel)}</option>`;
    select.dataset.signature = signature;
    if (options_.some((o) => o.value === previous)) {
      select.value = previous;
    }
  }

  function fmtF1(value: number | null): string {
    return value == null ? 'n/a' : value.toFixed(4);
  }

  function render(): void {
    datasetTbody.innerHTML = datasetRowsHtml(state.datasets);
    jobTbody.innerHTML = jobRowsHtml(state.jobs);
    deploymentTbody.innerHTML = deploymentRowsHtml(state.deployments);
    predictionHistory.innerHTML = historyHtml(state.history);

    syncSelect(
      datasetSelect,
      state.datasets
        .filter((d) => d.state === 'ready')
        .map((d) => ({ value: d.id, label: `${d.id} ${d.name}` })),
      'no ready datasets',
    );
    syncSelect(
      modelSelect,
      state.models.map((m) => ({
        value: m.id,
        label: `${m.id} (dev F1 ${fmtF1(m.dev_f1)})`,
      })),
      'no models yet',
    );
    syncSelect(
      deploymentSelect,
      state.deployments
        .filter((d) => d.state === 'SERVING')
        .map((d) => ({ value: d.id, label: `${d.id} (${d.model_id})` })),
      'no live deployments',
    );

    if (state.selectedJobId != null) {
      const job = state.jobs.find((j) => j.id === state.selectedJobId);
      jobResult.innerHTML = job ? jobResultHtml(job) : '';
    }
  }

  async function refresh(): Promise<void> {
    if (refreshing) return;
    refreshing = true;
    try {
      const [datasets, jobs, models, deployments] = await Promise.all([
        api.listDatasets(),
        api.listJobs(),
        api.listModels(),
        api.listDeployments(),
      ]);
      state.datasets = datasets;
      state.jobs = jobs;
      state.models = models;
      state.deployments = deployments;
      render();
      if (notice.textContent?.startsWith('refresh failed')) {
        setNotice('ready');
      }
    } catch (err) {
      // Keep the last good tables; the poll loop doubles as the retry.
      setNotice(`refresh failed, will retry: ${describeError(err)}`);
    } finally {
      refreshing = false;
    }
  }

  async function act(label: string, call: () => Promise<unknown>): Promise<void> {
    try {
      await call();
      setNotice(label);
    } catch (err) {
      setNotice(describeError(err));
    }
    await refresh();
  }

  uploadForm.addEventListener('submit', (ev) => {
    ev.preventDefault();
    const fields = new FormData(uploadForm);
    const name = String(fields.get('name') ?? '');
    const tsv = String(fields.get('tsv') ?? '');
    void act(`uploaded dataset "${name}"`, () => api.createDataset(name, tsv));
  });

  fileInput.addEventListener('change', () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    void file.text().then((content) => {
      const textarea = uploadForm.querySelector<HTMLTextAreaElement>('textarea[name="tsv"]');
      if (textarea) textarea.value = content;
    });
  });

  jobForm.addEventListener('submit', (ev) => {
    ev.preventDefault();
    jobFormError.textContent = '';
    const datasetId = datasetSelect.value;
    if (!datasetId) {
      jobFormError.textContent = 'pick a ready dataset first';
      return;
    }
    const raw: Record<string, string> = {};
    for (const field of Object.keys(HYPER_DEFAULTS)) {
      const input = jobForm.querySelector<HTMLInputElement>(`input[name="${field}"]`);
      raw[field] = input ? input.value : '';
    }
    const checked = validateHyper(raw);
    if ('error' in checked) {
      jobFormError.textContent = checked.error;
      return;
    }
    void act(`job submitted on ${datasetId}`, () =>
      api.submitJob(datasetId, checked.hyper),
    );
  });

  deployForm.addEventListener('submit', (ev) => {
    ev.preventDefault();
    const modelId = modelSelect.value;
    if (!modelId) {
      setNotice('no model selected');
      return;
    }
    void act(`deploying ${modelId}`, () => api.deployModel(modelId));
  });

  predictForm.addEventListener('submit', (ev) => {
    ev.preventDefault();
    const deploymentId = deploymentSelect.value;
    const text = el<HTMLInputElement>('predict-text').value;
    if (!deploymentId) {
      setNotice('no live deployment selected');
      return;
    }
    void (async () => {
      try {
        const prediction = await api.predict(deploymentId, text);
        predictionResult.innerHTML = predictionHtml(prediction);
        state.history.unshift({
          deployment_id: deploymentId,
          text,
          label: prediction.label,
          probability: prediction.probabilities[prediction.label] ?? 0,
        });
        state.history = state.history.slice(0, 50);
        predictionHistory.innerHTML = historyHtml(state.history);
        setNotice(`predicted ${prediction.label}`);
      } catch (err) {
        const message = describeError(err);
        predictionResult.innerHTML = `<div class="error-text">${esc(message)}</div>`;
        setNotice(message);
      }
      await refresh();
    })();
  });

  root.addEventListener('click', (ev) => {
    const target = (ev.target as HTMLElement).closest<HTMLButtonElement>('button[data-action]');
    if (!target) return;
    const id = target.dataset.id ?? '';
    switch (target.dataset.action) {
      case 'refresh':
        void refresh();
        break;
      case 'preprocess':
        void act(`preprocessing ${id}`, () => api.preprocessDataset(id));
        break;
      case 'cancel-job':
        void act(`cancel requested for ${id}`, () => api.cancelJob(id));
        break;
      case 'inspect': {
        state.selectedJobId = id;
        const job = state.jobs.find((j) => j.id === id);
        jobResult.innerHTML = job ? jobResultHtml(job) : '';
        break;
      }
      case 'stop':
        void act(`stopped ${id}`, () => api.stopDeployment(id));
        break;
    }
  });

  render();

  return {
    state,
    refresh,
    start(): void {
      if (timer != null) return;
      timer = setInterval(() => void refresh(), pollIntervalMs);
      void refresh();
    },
    stop(): void {
      if (timer != null) {
        clearInterval(timer);
        timer = null;
      }
    },
  };
}
