/**
 * Annotation session state machine.
 *
 * One task on screen at a time; both translations must be scored before
 * submit unlocks; scores post to the server as two /scores calls. Network
 * failures queue unsent scores (persisted via the injected storage) and
 * surface a retry banner, so nothing is dropped silently. Malformed
 * payloads are logged and can be skipped client-side; the server has no
 * skip endpoint, so when a skipped task comes back around the session
 * reports itself blocked instead of looping.
 */

import {
  ApiError,
  PayloadError,
  type Label,
  type ProgressReport,
  type Score,
  type ScoreAck,
  type ScoreSubmission,
  type TaskPayload,
} from './api.js';

export type Phase =
  | 'idle'
  | 'loading'
  | 'annotating'
  | 'submitting'
  | 'offline'
  | 'payload-error'
  | 'done'
  | 'blocked';

/** What the annotator sees for one task. Carries no model identifiers. */
export interface AnnotationView {
  taskId: string;
  sourceSentence: string;
  idiomMeaning: string;
  translationA: string;
  translationB: string;
  rubricTiers: readonly [string, string, string];
  scoreA: Score | null;
  scoreB: Score | null;
}

export interface ScoreTransport {
  fetchNextTask(annotator: string): Promise<TaskPayload | null>;
  submitScore(submission: ScoreSubmission): Promise<ScoreAck>;
  fetchProgress(): Promise<ProgressReport>;
}

/** localStorage-shaped persistence for the unsent-score queue. */
export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

function viewFromPayload(payload: TaskPayload): AnnotationView {
  const byLabel: Partial<Record<Label, string>> = {};
  for (const t of payload.translations) byLabel[t.label] = t.text;
  return {
    taskId: payload.task_id,
    sourceSentence: payload.source_sentence,
    idiomMeaning: payload.idiom_meaning,
    translationA: byLabel.A ?? '',
    translationB: byLabel.B ?? '',
    rubricTiers: payload.rubric_tiers,
    scoreA: null,
    scoreB: null,
  };
}

export class AnnotationSession {
  phase: Phase = 'idle';
  view: AnnotationView | null = null;
  completedCount = 0;
  errorMessage: string | null = null;
  lastWarning: string | null = null;
  serverProgress: ProgressReport | null = null;
  readonly log: string[] = [];

  private readonly storage: StorageLike | null;
  private readonly storageKey: string;
  private readonly listeners: Array<() => void> = [];
  private readonly skippedTaskIds = new Set<string>();
  private pendingQueue: ScoreSubmission[] = [];
  private acked = new Set<Label>();
  private pendingSkipId: string | null = null;

  constructor(
    private readonly api: ScoreTransport,
    readonly annotator: string,
    options: { storage?: StorageLike | null } = {},
  ) {
    if (!annotator) throw new Error('annotator id must be non-empty');
    this.storage = options.storage ?? null;
    this.storageKey = `annotator-queue:${annotator}`;
  }

  subscribe(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      const i = this.listeners.indexOf(listener);
      if (i >= 0) this.listeners.splice(i, 1);
    };
  }

  private emit(): void {
    for (const listener of [...this.listeners]) listener();
  }

  private record(message: string): void {
    this.log.push(`${new Date().toISOString()} ${message}`);
  }

  get pendingSubmissions(): readonly ScoreSubmission[] {
    return this.pendingQueue;
  }

  get skippedCount(): number {
    return this.skippedTaskIds.size;
  }

  get canSubmit(): boolean {
    return (
      this.phase === 'annotating' &&
      this.view !== null &&
      this.view.scoreA !== null &&
      this.view.scoreB !== null
    );
  }

  async start(): Promise<void> {
    this.restoreQueue();
    if (this.pendingQueue.length > 0) {
      this.phase = 'offline';
      this.errorMessage = 'unsent scores found from an earlier session';
      this.record(`restored ${this.pendingQueue.length} queued scores from storage`);
      this.emit();
      return;
    }
    await this.fetchNext();
  }

  setScore(label: Label, score: Score): void {
    if (this.phase !== 'annotating' || this.view === null) return;
    if (label === 'A') this.view.scoreA = score;
    else this.view.scoreB = score;
    this.emit();
  }

  async submit(): Promise<void> {
    if (!this.canSubmit || this.view === null) return;
    const view = this.view;
    this.phase = 'submitting';
    this.errorMessage = null;
    this.lastWarning = null;
    this.emit();

    const submissions: ScoreSubmission[] = [
      { task_id: view.taskId, label: 'A', score: view.scoreA as Score, annotator: this.annotator },
      { task_id: view.taskId, label: 'B', score: view.scoreB as Score, annotator: this.annotator },
    ];
    for (const submission of submissions) {
      if (this.acked.has(submission.label)) continue;
      try {
        const ack = await this.api.submitScore(submission);
        this.acked.add(submission.label);
        if (ack.warning) {
          this.lastWarning = ack.warning;
          this.record(`server warning for ${submission.task_id}/${submission.label}: ${ack.warning}`);
        }
      } catch (err) {
        if (err instanceof ApiError) {
          // Definitive rejection: keep the scores on screen for correction.
          this.phase = 'annotating';
          this.errorMessage = `score for translation ${submission.label} was rejected: ${err.message}`;
          this.record(`rejected ${submission.task_id}/${submission.label}: ${err.message}`);
          this.emit();
          return;
        }
        this.queueFrom(submissions, String(err));
        return;
      }
    }
    await this.advance();
  }

  /** Retry queued scores, or just refetch after a fetch-time failure. */
  async retryPending(): Promise<void> {
    if (this.phase !== 'offline') return;
    while (this.pendingQueue.length > 0) {
      const submission = this.pendingQueue[0] as ScoreSubmission;
      try {
        const ack = await this.api.submitScore(submission);
        if (ack.warning) {
          this.lastWarning = ack.warning;
          this.record(`server warning for ${submission.task_id}/${submission.label}: ${ack.warning}`);
        }
      } catch (err) {
        if (err instanceof ApiError) {
          // Retrying a rejected score would loop forever; drop it from the
          // queue but keep it on the banner and in the session log.
          this.errorMessage = `queued score for ${submission.task_id}/${submission.label} was rejected: ${err.message}`;
          this.record(`dropped rejected queued score ${submission.task_id}/${submission.label}: ${err.message}`);
          this.pendingQueue.shift();
          this.persistQueue();
          continue;
        }
        this.errorMessage = 'still unreachable; scores remain queued';
        this.record(`retry failed, ${this.pendingQueue.length} scores still queued`);
        this.emit();
        return;
      }
      if (this.view !== null && submission.task_id === this.view.taskId) {
        this.acked.add(submission.label);
      }
      this.pendingQueue.shift();
      this.persistQueue();
    }
    if (this.view !== null && this.acked.has('A') && this.acked.has('B')) {
      await this.advance();
      return;
    }
    await this.fetchNext();
  }

  /** Leave a malformed task behind; only possible when its id was readable. */
  async skipCurrent(): Promise<void> {
    if (this.phase !== 'payload-error') return;
    if (this.pendingSkipId === null) {
      this.phase = 'blocked';
      this.errorMessage = 'the malformed task carries no id, so it cannot be skipped';
      this.emit();
      return;
    }
    this.skippedTaskIds.add(this.pendingSkipId);
    this.record(`skipped malformed task ${this.pendingSkipId}`);
    this.pendingSkipId = null;
    await this.fetchNext();
  }

  private async advance(): Promise<void> {
    this.completedCount += 1;
    this.acked.clear();
    await this.fetchNext();
  }

  private async fetchNext(): Promise<void> {
    this.phase = 'loading';
    this.view = null;
    this.acked.clear();
    this.emit();
    let payload: TaskPayload | null;
    try {
      payload = await this.api.fetchNextTask(this.annotator);
    } catch (err) {
      if (err instanceof PayloadError) {
        this.pendingSkipId = err.taskId;
        this.phase = 'payload-error';
        this.errorMessage = err.message;
        this.record(`malformed task payload${err.taskId ? ` (${err.taskId})` : ''}: ${err.message}`);
        this.emit();
        return;
      }
      this.phase = 'offline';
      this.errorMessage =
        err instanceof ApiError ? err.message : 'could not reach the eval server';
      this.record(`fetch failed: ${err instanceof Error ? err.message : String(err)}`);
      this.emit();
      return;
    }
    if (payload === null) {
      this.phase = 'done';
      this.emit();
      try {
        this.serverProgress = await this.api.fetchProgress();
      } catch {
        this.serverProgress = null;
      }
      this.emit();
      return;
    }
    if (this.skippedTaskIds.has(payload.task_id)) {
      // The queue is deterministic, so seeing a skipped task again means
      // only skipped tasks remain for this annotator.
      this.phase = 'blocked';
      this.errorMessage = `${this.skippedTaskIds.size} skipped task(s) still unscored`;
      this.emit();
      return;
    }
    this.view = viewFromPayload(payload);
    this.phase = 'annotating';
    this.emit();
  }

  private queueFrom(submissions: ScoreSubmission[], reason: string): void {
    this.pendingQueue = submissions.filter((s) => !this.acked.has(s.label));
    this.persistQueue();
    this.phase = 'offline';
    this.errorMessage = 'connection lost; your scores are saved and will be retried';
    this.record(`queued ${this.pendingQueue.length} scores after network failure: ${reason}`);
    this.emit();
  }

  private persistQueue(): void {
    if (this.storage === null) return;
    if (this.pendingQueue.length === 0) {
      this.storage.removeItem(this.storageKey);
    } else {
      this.storage.setItem(this.storageKey, JSON.stringify(this.pendingQueue));
    }
  }

  private restoreQueue(): void {
    if (this.storage === null) return;
    const raw = this.storage.getItem(this.storageKey);
    if (raw === null) return;
    try {
      const parsed = JSON.parse(raw) as unknown;
      if (Array.isArray(parsed)) {
        this.pendingQueue = parsed.filter(
          (item): item is ScoreSubmission =>
            typeof item === 'object' &&
            item !== null &&
            typeof (item as ScoreSubmission).task_id === 'string' &&
            ((item as ScoreSubmission).label === 'A' || (item as ScoreSubmission).label === 'B') &&
            [1, 2, 3].includes((item as ScoreSubmission).score) &&
            typeof (item as ScoreSubmission).annotator === 'string',
        );
      }
    } catch {
      this.pendingQueue = [];
    }
    if (this.pendingQueue.length === 0) this.storage.removeItem(this.storageKey);
  }
}
