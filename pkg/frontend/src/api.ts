/**
 * Client for the eval HTTP API.
 *
 * Three endpoints, mirroring the server contract:
 *   GET  /tasks/next?annotator=ID  -> task payload, or 204 when done
 *   POST /scores                   -> {task_id, label, score, annotator}
 *   GET  /progress                 -> counts
 *
 * The shared token travels in the X-Eval-Token header on every call.
 */

import { RUBRIC_CRITERIA, RUBRIC_TIERS } from './rubric.js';

export const TOKEN_HEADER = 'X-Eval-Token';

export type Label = 'A' | 'B';
export type Score = 1 | 2 | 3;

export interface LabeledTranslation {
  label: Label;
  text: string;
}

export interface TaskPayload {
  task_id: string;
  source_sentence: string;
  idiom_meaning: string;
  translations: [LabeledTranslation, LabeledTranslation];
  rubric: string;
  rubric_tiers: [string, string, string];
}

export interface ScoreSubmission {
  task_id: string;
  label: Label;
  score: Score;
  annotator: string;
}

export interface ScoreAck {
  status: string;
  task_id: string;
  label: string;
  warning?: string;
}

export interface ProgressReport {
  total_tasks: number;
  completed_tasks: number;
  scores_recorded: number;
  annotators: Record<string, number>;
}

/** Server answered with a non-2xx status. */
export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

/** Response body failed validation; taskId is set when it could be read. */
export class PayloadError extends Error {
  constructor(
    message: string,
    readonly taskId: string | null = null,
  ) {
    super(message);
    this.name = 'PayloadError';
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

function isString(value: unknown): value is string {
  return typeof value === 'string';
}

/**
 * Validate a raw /tasks/next body into a TaskPayload.
 *
 * Rubric strings are checked against the local constants, not just for
 * shape: the view renders the payload's rubric verbatim, so a server from
 * a different version would otherwise silently show drifted wording.
 */
export function parseTaskPayload(raw: unknown): TaskPayload {
  if (typeof raw !== 'object' || raw === null || Array.isArray(raw)) {
    throw new PayloadError('task payload is not a JSON object');
  }
  const body = raw as Record<string, unknown>;
  const taskId = isString(body.task_id) && body.task_id ? body.task_id : null;
  const fail = (reason: string): never => {
    throw new PayloadError(reason, taskId);
  };

  if (taskId === null) fail('task payload is missing task_id');
  if (!isString(body.source_sentence) || !body.source_sentence) {
    fail('task payload is missing source_sentence');
  }
  if (!isString(body.idiom_meaning)) fail('task payload is missing idiom_meaning');

  const translations = body.translations;
  if (!Array.isArray(translations) || translations.length !== 2) {
    fail('task payload must carry exactly two translations');
  }
  const labeled: LabeledTranslation[] = [];
  for (const entry of translations as unknown[]) {
    const item = entry as Record<string, unknown>;
    if (typeof entry !== 'object' || entry === null || !isString(item.text)) {
      fail('translation entries need a text field');
    }
    if (item.label !== 'A' && item.label !== 'B') {
      fail('translation labels must be A and B');
    }
    labeled.push({ label: item.label as Label, text: item.text as string });
  }
  if (labeled[0]?.label === labeled[1]?.label) {
    fail('translation labels must be A and B');
  }

  const tiers = body.rubric_tiers;
  if (
    !Array.isArray(tiers) ||
    tiers.length !== 3 ||
    !tiers.every((tier, i) => tier === RUBRIC_TIERS[i])
  ) {
    fail('rubric tiers do not match this client version');
  }
  if (body.rubric !== RUBRIC_CRITERIA) {
    fail('rubric text does not match this client version');
  }

  // Equality with the constants was just verified, so returning the
  // constants keeps the displayed strings byte-identical by construction.
  return {
    task_id: taskId as string,
    source_sentence: body.source_sentence as string,
    idiom_meaning: body.idiom_meaning as string,
    translations: labeled as [LabeledTranslation, LabeledTranslation],
    rubric: RUBRIC_CRITERIA,
    rubric_tiers: [...RUBRIC_TIERS],
  };
}

export class EvalApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private headers(json: boolean): Record<string, string> {
    const headers: Record<string, string> = {};
    if (this.token) headers[TOKEN_HEADER] = this.token;
    if (json) headers['Content-Type'] = 'application/json';
    return headers;
  }

  private async errorFrom(response: Response): Promise<ApiError> {
    let detail = '';
    try {
      const body = (await response.json()) as { error?: string };
      if (isString(body.error)) detail = body.error;
    } catch {
      // non-JSON error body; fall through to the status line
    }
    return new ApiError(detail || `request failed with status ${response.status}`, response.status);
  }

  /** Next unscored task for this annotator, or null when all are done. */
  async fetchNextTask(annotator: string): Promise<TaskPayload | null> {
    const url = `${this.baseUrl}/tasks/next?annotator=${encodeURIComponent(annotator)}`;
    const response = await this.fetchFn(url, { headers: this.headers(false) });
    if (response.status === 204) return null;
    if (!response.ok) throw await this.errorFrom(response);
    let raw: unknown;
    try {
      raw = await response.json();
    } catch {
      throw new PayloadError('task payload is not valid JSON');
    }
    return parseTaskPayload(raw);
  }

  async submitScore(submission: ScoreSubmission): Promise<ScoreAck> {
    const response = await this.fetchFn(`${this.baseUrl}/scores`, {
      method: 'POST',
      headers: this.headers(true),
      body: JSON.stringify(submission),
    });
    if (!response.ok) throw await this.errorFrom(response);
    return (await response.json()) as ScoreAck;
  }

  async fetchProgress(): Promise<ProgressReport> {
    const response = await this.fetchFn(`${this.baseUrl}/progress`, {
      headers: this.headers(false),
    });
    if (!response.ok) throw await this.errorFrom(response);
    return (await response.json()) as ProgressReport;
  }
}
