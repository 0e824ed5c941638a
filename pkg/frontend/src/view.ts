/**
 * DOM rendering for the annotation session.
 *
 * The whole panel is re-rendered from session state on every change;
 * nothing here keeps state of its own. Rubric tiers and translations are
 * rendered as escaped text nodes, never markup.
 */

import type { Label, Score } from './api.js';
import type { AnnotationSession } from './session.js';

const SCORES: readonly Score[] = [1, 2, 3];

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function banner(session: AnnotationSession): string {
  const parts: string[] = [];
  if (session.errorMessage) {
    parts.push(`<div class="banner banner-error" id="banner-error">${escapeHtml(session.errorMessage)}</div>`);
  }
  if (session.lastWarning) {
    parts.push(`<div class="banner banner-warning" id="banner-warning">${escapeHtml(session.lastWarning)}</div>`);
  }
  return parts.join('');
}

function scoreButtons(label: Label, selected: Score | null): string {
  const buttons = SCORES.map((score) => {
    const pressed = selected === score;
    return `<button type="button" class="score-btn${pressed ? ' selected' : ''}"
      data-label="${label}" data-score="${score}" aria-pressed="${pressed}">${score}</button>`;
  }).join('');
  return `<div class="score-row" data-score-row="${label}">${buttons}</div>`;
}

function annotatingHtml(session: AnnotationSession): string {
  const view = session.view;
  if (view === null) return '';
  const tiers = view.rubricTiers
    .map((tier) => `<li class="rubric-tier">${escapeHtml(tier)}</li>`)
    .join('');
  return `
    ${banner(session)}
    <div class="task-card">
      <div class="task-meta">
        <span id="task-id">${escapeHtml(view.taskId)}</span>
        <span id="local-progress">completed this session: ${session.completedCount}</span>
      </div>
      <h2>Original sentence</h2>
      <p id="source-sentence">${escapeHtml(view.sourceSentence)}</p>
      <h2>Idiom meaning</h2>
      <p id="idiom-meaning">${escapeHtml(view.idiomMeaning)}</p>
      <h2>Scoring rubric</h2>
      <ol class="rubric">${tiers}</ol>
      <div class="translations">
        <section class="translation">
          <h3>Translation A</h3>
          <p id="translation-a">${escapeHtml(view.translationA)}</p>
          ${scoreButtons('A', view.scoreA)}
        </section>
        <section class="translation">
          <h3>Translation B</h3>
          <p id="translation-b">${escapeHtml(view.translationB)}</p>
          ${scoreButtons('B', view.scoreB)}
        </section>
      </div>
      <button type="button" id="submit-btn" ${session.canSubmit ? '' : 'disabled'}>
        Submit both scores
      </button>
    </div>`;
}

function statusHtml(session: AnnotationSession): string {
  switch (session.phase) {
    case 'idle':
    case 'loading':
      return `<p class="status" id="status-loading">Loading next task...</p>`;
    case 'submitting':
      return `<p class="status" id="status-submitting">Submitting scores...</p>`;
    case 'offline': {
      const queued = session.pendingSubmissions.length;
      const note = queued > 0 ? `<p>${queued} unsent score(s) are queued locally.</p>` : '';
      return `
        ${banner(session)}
        <div class="retry-panel">
          ${note}
          <button type="button" id="retry-btn">Retry</button>
        </div>`;
    }
    case 'payload-error':
      return `
        ${banner(session)}
        <div class="retry-panel">
          <p>The server sent a task this client could not display.</p>
          <button type="button" id="skip-btn">Skip task</button>
        </div>`;
    case 'done': {
      const server = session.serverProgress;
      const serverLine = server
        ? `<p id="server-progress">server: ${server.completed_tasks} of ${server.total_tasks} tasks complete</p>`
        : '';
      return `
        ${banner(session)}
        <div class="done-panel">
          <h2 id="done-heading">All tasks complete</h2>
          <p>You scored ${session.completedCount} task(s) this session.</p>
          ${serverLine}
        </div>`;
    }
    case 'blocked':
      return `
        ${banner(session)}
        <div class="done-panel">
          <h2 id="blocked-heading">No more displayable tasks</h2>
          <p>${session.skippedCount} task(s) were skipped and remain unscored.</p>
        </div>`;
    default:
      return '';
  }
}

/** Paint the session into root and wire the controls to session methods. */
export function renderSession(root: HTMLElement, session: AnnotationSession): void {
  root.innerHTML = session.phase === 'annotating' ? annotatingHtml(session) : statusHtml(session);

  for (const button of Array.from(root.querySelectorAll<HTMLButtonElement>('.score-btn'))) {
    button.addEventListener('click', () => {
      const label = button.dataset.label as Label;
      const score = Number(button.dataset.score) as Score;
      session.setScore(label, score);
    });
  }
  root.querySelector<HTMLButtonElement>('#submit-btn')?.addEventListener('click', () => {
    void session.submit();
  });
  root.querySelector<HTMLButtonElement>('#retry-btn')?.addEventListener('click', () => {
    void session.retryPending();
  });
  root.querySelector<HTMLButtonElement>('#skip-btn')?.addEventListener('click', () => {
    void session.skipCurrent();
  });
}
