/**
 * Typed client for the isoready HTTP API.
 *
 * Every displayed number in the UI comes from these payloads; the
 * *_display fields are rendered verbatim so the UI never re-rounds.
 */

export interface ScaleDoc {
  min: number;
  max: number;
  labels: string[];
}

export interface TaxonomyNodeDoc {
  id: string;
  name: string;
  kind: 'domain' | 'class' | 'control' | 'issue';
  iso_ref?: string;
  children?: TaxonomyNodeDoc[];
}

export interface TaxonomyDoc {
  id: string;
  title: string;
  version: string;
  scale: ScaleDoc;
  domains: TaxonomyNodeDoc[];
}

export interface TaxonomyListing {
  id: string;
  title: string;
  version: string;
  counts: Record<string, number>;
}

export interface ExperimentView {
  id: string;
  taxonomy_id: string;
  taxonomy_version: string;
  attempt_number: number;
  started_at: string;
  finalized_at: string | null;
  status: 'open' | 'finalized';
  sheet: Record<string, number>;
  result: unknown | null;
}

export interface AdviceDoc {
  strongest: string[];
  weakest: string[];
  text: string;
}

export interface SummaryDoc {
  out_of_scale: number;
  out_of_hundred: number;
  out_of_scale_display: string;
  out_of_hundred_display: string;
  predicate: string;
  advice: AdviceDoc;
}

interface ReportCommon {
  experiment_id: string;
  finalized: boolean;
  coverage: number;
  scale_min: number;
  scale_max: number;
}

export interface SummaryReport extends ReportCommon {
  view: 'summary';
  summary: SummaryDoc;
}

export interface BarDoc {
  name: string;
  achievement: number;
  priority: number;
  achievement_display: string;
  priority_display: string;
}

export interface HistogramReport extends ReportCommon {
  view: 'histogram';
  level: 'domain' | 'control';
  bars: BarDoc[];
}

export interface HistoryRowDoc {
  attempt_number: number;
  experiment_id: string;
  taxonomy_id: string;
  started_at: string;
  finalized_at: string;
  duration_seconds: number;
  overall: number;
  predicate: string;
  overall_display: string;
}

export interface HistoryDoc {
  taxonomy_id: string | null;
  rows: HistoryRowDoc[];
  trend: number[];
}

export class ApiError extends Error {
  code: string;
  details: unknown;

  constructor(code: string, message: string, details: unknown = null) {
    super(message);
    this.name = 'ApiError';
    this.code = code;
    this.details = details;
  }
}

let apiBase = '';

/** Point the client somewhere other than the serving origin (tests). */
export function setApiBase(url: string): void {
  apiBase = url.replace(/\/$/, '');
}

async function request<T>(
  path: string,
  init: RequestInit = {},
  token?: string,
): Promise<T> {
  const headers: Record<string, string> = {
    ...(init.body ? { 'Content-Type': 'application/json' } : {}),
    ...(token ? { Authorization: `Bearer ${token}` } : {}),
  };
  const response = await fetch(`${apiBase}${path}`, { ...init, headers });
  if (!response.ok) {
    let code = `HTTP ${response.status}`;
    let message = response.statusText;
    let details: unknown = null;
    try {
      const body = await response.json();
      if (body && typeof body.code === 'string') {
        code = body.code;
        message = body.message ?? message;
        details = body.details ?? null;
      }
    } catch {
      // non-JSON error body; keep the HTTP status text
    }
    throw new ApiError(code, message, details);
  }
  return response.json() as Promise<T>;
}

export function register(
  username: string,
  secret: string,
): Promise<{ id: string; username: string; created_at: string }> {
  return request('/api/users', {
    method: 'POST',
    body: JSON.stringify({ username, secret }),
  });
}

export async function login(username: string, secret: string): Promise<string> {
  const body = await request<{ token: string }>('/api/login', {
    method: 'POST',
    body: JSON.stringify({ username, secret }),
  });
  return body.token;
}

export function listTaxonomies(): Promise<{ taxonomies: TaxonomyListing[] }> {
  return request('/api/taxonomies');
}

export function getTaxonomy(id: string): Promise<TaxonomyDoc> {
  return request(`/api/taxonomies/${encodeURIComponent(id)}`);
}

export function startExperiment(
  token: string,
  taxonomyId: string,
): Promise<ExperimentView> {
  return request(
    '/api/experiments',
    { method: 'POST', body: JSON.stringify({ taxonomy_id: taxonomyId }) },
    token,
  );
}

export function getExperiment(
  token: string,
  experimentId: string,
): Promise<ExperimentView> {
  return request(`/api/experiments/${encodeURIComponent(experimentId)}`, {}, token);
}

export function putScores(
  token: string,
  experimentId: string,
  entries: Record<string, number>,
): Promise<ExperimentView> {
  return request(
    `/api/experiments/${encodeURIComponent(experimentId)}/scores`,
    { method: 'PUT', body: JSON.stringify({ entries }) },
    token,
  );
}

export function finalizeExperiment(
  token: string,
  experimentId: string,
  mode: 'strict' | 'partial' = 'strict',
): Promise<ExperimentView> {
  return request(
    `/api/experiments/${encodeURIComponent(experimentId)}/finalize`,
    { method: 'POST', body: JSON.stringify({ mode }) },
    token,
  );
}

export function getSummaryReport(
  token: string,
  experimentId: string,
): Promise<SummaryReport> {
  return request(
    `/api/experiments/${encodeURIComponent(experimentId)}/report?view=summary`,
    {},
    token,
  );
}

export function getHistogramReport(
  token: string,
  experimentId: string,
  level: 'domain' | 'control',
): Promise<HistogramReport> {
  return request(
    `/api/experiments/${encodeURIComponent(experimentId)}/report` +
      `?view=histogram&level=${level}`,
    {},
    token,
  );
}

export function getHistory(
  token: string,
  taxonomyId?: string,
): Promise<HistoryDoc> {
  const query = taxonomyId ? `?taxonomy=${encodeURIComponent(taxonomyId)}` : '';
  return request(`/api/users/me/history${query}`, {}, token);
}

export async function fetchExport(
  token: string,
  experimentId: string,
  format: 'json' | 'csv',
): Promise<{ filename: string; text: string }> {
  const response = await fetch(
    `${apiBase}/api/experiments/${encodeURIComponent(experimentId)}` +
      `/export?format=${format}`,
    { headers: { Authorization: `Bearer ${token}` } },
  );
  if (!response.ok) {
    const body = await response.json();
    throw new ApiError(body.code ?? 'HTTP', body.message ?? 'export failed', body.details);
  }
  return {
    filename: `experiment-${experimentId}.${format}`,
    text: await response.text(),
  };
}
