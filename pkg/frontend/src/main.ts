// Entry point: login form -> session -> render loop.

import { EvalApiClient } from './api.js';
import { AnnotationSession } from './session.js';
import { renderSession } from './view.js';

function startSession(annotator: string, token: string): void {
  const root = document.getElementById('app');
  const login = document.getElementById('login-panel');
  if (!root || !login) return;
  login.hidden = true;
  root.hidden = false;

  // Same-origin deployment: serve-eval hosts both the static files and
  // the API, so relative URLs are enough.
  const api = new EvalApiClient('', token);
  const session = new AnnotationSession(api, annotator, {
    storage: window.localStorage,
  });
  session.subscribe(() => renderSession(root, session));
  void session.start();
}

function wireLogin(): void {
  const form = document.getElementById('login-form') as HTMLFormElement | null;
  if (!form) return;
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const annotator = (document.getElementById('annotator-input') as HTMLInputElement).value.trim();
    const token = (document.getElementById('token-input') as HTMLInputElement).value.trim();
    const hint = document.getElementById('login-hint');
    if (!annotator) {
      if (hint) hint.textContent = 'Enter an annotator id to begin.';
      return;
    }
    startSession(annotator, token);
  });
}

wireLogin();
