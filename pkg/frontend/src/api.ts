/**
 * Typed client for the platform HTTP+JSON API.
 *
 * Every error response carries {code, message, detail}; ApiError keeps all
 * three so views can show the server's diagnostics verbatim.
 */

export type DatasetState = 'uploaded' | 'preprocessing' | 'ready' | 'failed';

export interface DatasetRecord {
  id: string;
  name: string;
  state: DatasetState;
  raw_file: string;
  preprocessed_file: string | null;
  labels: string[];
  row_counts: Record<string, number>;
  n_rows: number;
  error: string | null;
  created_at: number;
}

export interface HyperParams {
  peak_lr: number;
  batch_size: number;
  epochs: number;
  dropout: number;
  weight_decay: number;
  warmup_fraction: number;
  seed: number;
}

export type JobState = 'QUEUED' | 'RUNNING' | 'SUCCEEDED' | 'FAILED' | 'CANCELLED';

export interface EvalReportData {
  weighted_f1: number;
  precision: number[];
  recall: number[];
  f1: number[];
  support: number[];
  counts: number[][];
  confusion: number[][];
  label_names: string[] | null;
}

export interface JobResult {
  dev_f1: number;
  best_epoch?: number;
  report: EvalReportData | null;
  model_id: string | null;
  warning?: string | null;
}

export interface JobRecord {
  id: string;
  dataset_id: string;
  hyper: HyperParams;
  state: JobState;
  queue_position?: number;
  submitted_at: number;
  started_at: number | null;
  finished_at: number | null;
  cancel_requested: boolean;
  error: string | null;
  result: JobResult | null;
}

export interface ModelRecord {
  id: string;
  labels: string[];
  job_id: string | null;
  dev_f1: number | null;
  created_at: number;
}

export type DeploymentState = 'STARTING' | 'SERVING' | 'STOPPED';

export interface DeploymentRecord {
  id: string;
  model_id: string;
  state: DeploymentState;
  verbalize_emoji: boolean;
  request_count: number;
  created_at: number;
}

export interface Prediction {
  deployment_id: string;
  model_id: string;
  label: string;
  label_id: number;
  probabilities: Record<string, number>;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public detail: unknown = null,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export type FetchLike = (path: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base = '',
    private fetchImpl: FetchLike = (path, init) => fetch(path, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.base}${path}`, {
      headers: { 'Content-Type': 'application/json' },
      ...init,
    });
    if (!response.ok) {
      let code = `http_${response.status}`;
      let message = response.statusText || 'request failed';
      let detail: unknown = null;
      try {
        const body = await response.json();
        code = body.code ?? code;
        message = body.message ?? message;
        detail = body.detail ?? null;
      } catch {
        // non-JSON error body: keep the status-derived envelope
      }
      throw new ApiError(response.status, code, message, detail);
    }
    return response.json() as Promise<T>;
  }

  health(): Promise<{ status: string }> {
    return this.request('/api/health');
  }

  createDataset(name: string, tsv: string): Promise<DatasetRecord> {
    return this.request('/api/datasets', {
      method: 'POST',
      body: JSON.stringify({ name, tsv }),
    });
  }

  listDatasets(): Promise<DatasetRecord[]> {
    return this.request('/api/datasets');
  }

  preprocessDataset(datasetId: string): Promise<DatasetRecord> {
    return this.request(`/api/datasets/${datasetId}/preprocess`, { method: 'POST' });
  }

  submitJob(datasetId: string, hyper: Partial<HyperParams>): Promise<JobRecord> {
    return this.request('/api/jobs', {
      method: 'POST',
      body: JSON.stringify({ dataset_id: datasetId, hyper }),
    });
  }

  listJobs(): Promise<JobRecord[]> {
    return this.request('/api/jobs');
  }

  cancelJob(jobId: string): Promise<JobRecord> {
    return this.request(`/api/jobs/${jobId}/cancel`, { method: 'POST' });
  }

  listModels(): Promise<ModelRecord[]> {
    return this.request('/api/models');
  }

  deployModel(modelId: string): Promise<DeploymentRecord> {
    return this.request(`/api/models/${modelId}/deploy`, { method: 'POST' });
  }

  listDeployments(): Promise<DeploymentRecord[]> {
    return this.request('/api/deployments');
  }

  predict(deploymentId: string, text: string): Promise<Prediction> {
    return this.request(`/api/deployments/${deploymentId}/predict`, {
      method: 'POST',
      body: JSON.stringify({ text }),
    });
  }

  stopDeployment(deploymentId: string): Promise<DeploymentRecord> {
    return this.request(`/api/deployments/${deploymentId}`, { method: 'DELETE' });
  }
}
