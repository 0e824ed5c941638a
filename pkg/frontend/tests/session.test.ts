import { describe, expect, it } from 'vitest';

import { PayloadError } from '../src/api.js';
import { AnnotationSession } from '../src/session.js';
import { RUBRIC_TIERS } from '../src/rubric.js';
import { FakeStorage, FakeTransport, payload } from './fakes.js';

describe('task presentation', () => {
  it('loads the first task into an annotation view', async () => {
    const session = new AnnotationSession(new FakeTransport([payload(1), payload(2)]), 'alice');
    await session.start();
    expect(session.phase).toBe('annotating');
    expect(session.view).toMatchObject({
      taskId: 'task_0001',
      sourceSentence: 'Source sentence 1 with an idiom.',
      idiomMeaning: 'meaning 1',
      translationA: 'translation A1',
      translationB: 'translation B1',
      scoreA: null,
      scoreB: null,
    });
    expect(session.view?.rubricTiers).toEqual([...RUBRIC_TIERS]);
  });

  it('reaches the done state when the queue is empty', async () => {
    const session = new AnnotationSession(new FakeTransport([]), 'alice');
    await session.start();
    expect(session.phase).toBe('done');
    expect(session.serverProgress?.total_tasks).toBe(0);
  });

  it('rejects an empty annotator id up front', () => {
    expect(() => new AnnotationSession(new FakeTransport([]), '')).toThrow('non-empty');
  });

  it('notifies subscribers on every transition', async () => {
    const session = new AnnotationSession(new FakeTransport([payload(1)]), 'alice');
    let calls = 0;
    const unsubscribe = session.subscribe(() => {
      calls += 1;
    });
    await session.start();
    expect(calls).toBeGreaterThanOrEqual(2);
    unsubscribe();
    const before = calls;
    session.setScore('A', 1);
    expect(calls).toBe(before);
  });
});

describe('score gating', () => {
  it('keeps submit blocked until both scores are set', async () => {
    const session = new AnnotationSession(new FakeTransport([payload(1)]), 'alice');
    await session.start();
    expect(session.canSubmit).toBe(false);
    session.setScore('A', 3);
    expect(session.canSubmit).toBe(false);
    session.setScore('B', 2);
    expect(session.canSubmit).toBe(true);
  });

  it('submit is a no-op while a score is missing', async () => {
    const transport = new FakeTransport([payload(1)]);
    const session = new AnnotationSession(transport, 'alice');
    await session.start();
    session.setScore('A', 3);
    await session.submit();
    expect(transport.scores).toHaveLength(0);
    expect(session.phase).toBe('annotating');
  });

  it('ignores score changes outside the annotating phase', async () => {
    const session = new AnnotationSession(new FakeTransport([]), 'alice');
    await session.start();
    session.setScore('A', 1);
    expect(session.view).toBeNull();
  });
});

describe('submission', () => {
  it('posts one score per label and advances', async () => {
    const transport = new FakeTransport([payload(1), payload(2)]);
    const session = new AnnotationSession(transport, 'alice');
    await session.start();
    session.setScore('A', 3);
    session.setScore('B', 2);
    await session.submit();
    expect(transport.scores).toEqual([
      { task_id: 'task_0001', label: 'A', score: 3, annotator: 'alice' },
      { task_id: 'task_0001', label: 'B', score: 2, annotator: 'alice' },
    ]);
    expect(session.completedCount).toBe(1);
    expect(session.view?.taskId).toBe('task_0002');

    session.setScore('A', 1);
    session.setScore('B', 1);
    await session.submit();
    expect(session.phase).toBe('done');
    expect(session.completedCount).toBe(2);
    expect(session.serverProgress?.completed_tasks).toBe(2);
  });

  it('keeps scores on screen when the server rejects one', async () => {
    const transport = new FakeTransport([payload(1)]);
    transport.rejectLabel = 'B';
    const session = new AnnotationSession(transport, 'alice');
    await session.start();
    session.setScore('A', 3);
    session.setScore('B', 2);
    await session.submit();
    expect(session.phase).toBe('annotating');
    expect(session.errorMessage).toContain('translation B was rejected');
    expect(session.view?.scoreA).toBe(3);
    expect(session.view?.scoreB).toBe(2);
    expect(transport.scores.map((s) => s.label)).toEqual(['A']);

    // Second attempt resends only the unacknowledged label.
    await session.submit();
    expect(transport.scores.map((s) => s.label)).toEqual(['A', 'B']);
    expect(session.phase).toBe('done');
    expect(session.completedCount).toBe(1);
  });

  it('surfaces the last-write-wins warning on duplicates', async () => {
    const transport = new FakeTransport([payload(1)]);
    // The server already holds one of this annotator's scores, e.g. from a
    // crashed session whose queue flushed after all; resubmitting warns.
    transport.seed('task_0001', 'A', 'bob', 2);
    const session = new AnnotationSession(transport, 'bob');
    await session.start();
    expect(session.phase).toBe('annotating');
    session.setScore('A', 3);
    session.setScore('B', 3);
    await session.submit();
    expect(session.lastWarning).toContain('replaced an earlier score');
    expect(session.log.some((line) => line.includes('server warning'))).toBe(true);
  });
});

describe('offline handling', () => {
  it('queues both scores when the network drops mid-submit', async () => {
    const transport = new FakeTransport([payload(1), payload(2)]);
    // Submission stops at the first network failure and queues the rest.
    transport.failNextSubmits = 1;
    const storage = new FakeStorage();
    const session = new AnnotationSession(transport, 'alice', { storage });
    await session.start();
    session.setScore('A', 2);
    session.setScore('B', 3);
    await session.submit();

    expect(session.phase).toBe('offline');
    expect(session.pendingSubmissions).toHaveLength(2);
    expect(storage.data.size).toBe(1);
    expect(transport.scores).toHaveLength(0);

    await session.retryPending();
    expect(transport.scores.map((s) => [s.label, s.score])).toEqual([
      ['A', 2],
      ['B', 3],
    ]);
    expect(session.completedCount).toBe(1);
    expect(session.view?.taskId).toBe('task_0002');
    expect(storage.data.size).toBe(0);
  });

  it('queues only the unacknowledged score on partial failure', async () => {
    const transport = new FakeTransport([payload(1)]);
    transport.failSubmitsForLabel = 'B';
    const session = new AnnotationSession(transport, 'alice', { storage: new FakeStorage() });
    await session.start();
    session.setScore('A', 1);
    session.setScore('B', 2);
    await session.submit();
    expect(session.phase).toBe('offline');
    expect(session.pendingSubmissions.map((s) => s.label)).toEqual(['B']);

    await session.retryPending();
    expect(transport.scores.map((s) => s.label)).toEqual(['A', 'B']);
    expect(session.phase).toBe('done');
  });

  it('stays offline and keeps the queue when retry fails again', async () => {
    const transport = new FakeTransport([payload(1)]);
    transport.failNextSubmits = 3;
    const session = new AnnotationSession(transport, 'alice', { storage: new FakeStorage() });
    await session.start();
    session.setScore('A', 1);
    session.setScore('B', 1);
    await session.submit();
    await session.retryPending();
    expect(session.phase).toBe('offline');
    expect(session.pendingSubmissions).toHaveLength(2);
    expect(session.errorMessage).toContain('still unreachable');
  });

  it('restores a queue persisted by an earlier session', async () => {
    const storage = new FakeStorage();
    storage.setItem(
      'annotator-queue:alice',
      JSON.stringify([
        { task_id: 'task_0001', label: 'A', score: 2, annotator: 'alice' },
        { task_id: 'task_0001', label: 'B', score: 3, annotator: 'alice' },
      ]),
    );
    const transport = new FakeTransport([payload(1), payload(2)]);
    const session = new AnnotationSession(transport, 'alice', { storage });
    await session.start();
    expect(session.phase).toBe('offline');
    expect(session.pendingSubmissions).toHaveLength(2);

    await session.retryPending();
    expect(transport.scores).toHaveLength(2);
    // The replayed task was finished in the earlier session, so the next
    // fetch serves the following task without bumping this session's count.
    expect(session.completedCount).toBe(0);
    expect(session.view?.taskId).toBe('task_0002');
    expect(storage.data.size).toBe(0);
  });

  it('drops corrupt storage instead of crashing', async () => {
    const storage = new FakeStorage();
    storage.setItem('annotator-queue:alice', '{not json');
    const session = new AnnotationSession(new FakeTransport([payload(1)]), 'alice', { storage });
    await session.start();
    expect(session.phase).toBe('annotating');
    expect(storage.data.size).toBe(0);
  });

  it('drops a definitively rejected queued score, loudly', async () => {
    const transport = new FakeTransport([payload(1)]);
    transport.failNextSubmits = 1;
    const session = new AnnotationSession(transport, 'alice', { storage: new FakeStorage() });
    await session.start();
    session.setScore('A', 1);
    session.setScore('B', 2);
    await session.submit();
    transport.rejectLabel = 'A';
    await session.retryPending();
    expect(transport.scores.map((s) => s.label)).toEqual(['B']);
    expect(session.errorMessage).toContain('was rejected');
    expect(session.log.some((line) => line.includes('dropped rejected queued score'))).toBe(true);
  });

  it('shows a retry banner when fetching fails, with no data loss', async () => {
    const transport = new FakeTransport([payload(1)]);
    transport.failNextFetches = 1;
    const session = new AnnotationSession(transport, 'alice');
    await session.start();
    expect(session.phase).toBe('offline');
    expect(session.pendingSubmissions).toHaveLength(0);
    await session.retryPending();
    expect(session.phase).toBe('annotating');
    expect(session.view?.taskId).toBe('task_0001');
  });
});

describe('malformed payloads', () => {
  it('logs the bad task and blocks once only skipped tasks remain', async () => {
    const transport = new FakeTransport([payload(1)]);
    transport.payloadErrorOnce = new PayloadError(
      'task payload is missing source_sentence',
      'task_0001',
    );
    const session = new AnnotationSession(transport, 'alice');
    await session.start();
    expect(session.phase).toBe('payload-error');
    expect(session.log.some((line) => line.includes('malformed task payload (task_0001)'))).toBe(
      true,
    );

    await session.skipCurrent();
    // The server's deterministic queue re-serves task_0001; the session
    // recognizes it as skipped and stops instead of looping.
    expect(session.phase).toBe('blocked');
    expect(session.skippedCount).toBe(1);
  });

  it('moves past a skipped task once it is scored elsewhere', async () => {
    const transport = new FakeTransport([payload(1), payload(2)]);
    transport.payloadErrorOnce = new PayloadError('translation entries need a text field', 'task_0001');
    const session = new AnnotationSession(transport, 'alice');
    await session.start();
    await session.skipCurrent();
    // task_0001 gets re-served first; with it skipped the session blocks.
    expect(session.phase).toBe('blocked');
    // Once the bad task is scored through some other channel, a fresh
    // session proceeds straight to the next one.
    transport.seed('task_0001', 'A', 'alice', 1);
    transport.seed('task_0001', 'B', 'alice', 1);
    const next = new AnnotationSession(transport, 'alice');
    await next.start();
    expect(next.phase).toBe('annotating');
    expect(next.view?.taskId).toBe('task_0002');
  });

  it('blocks immediately when the payload has no usable id', async () => {
    const transport = new FakeTransport([payload(1)]);
    transport.payloadErrorOnce = new PayloadError('task payload is not a JSON object', null);
    const session = new AnnotationSession(transport, 'alice');
    await session.start();
    expect(session.phase).toBe('payload-error');
    await session.skipCurrent();
    expect(session.phase).toBe('blocked');
    expect(session.errorMessage).toContain('cannot be skipped');
  });
});
