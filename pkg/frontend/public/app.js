// src/rubric.ts
var RUBRIC_TIERS = [
  "1 point: Ignores, mistranslates, or only translates the literal meaning of the idiom.",
  "2 points: Conveys basic figurative meaning but may lack refinement or have minor imperfections.",
  "3 points: Exceptional translation, accurately conveying figurative meaning, context, and cultural nuances."
];
var RUBRIC_CRITERIA = RUBRIC_TIERS.join(" ");

// src/api.ts
var TOKEN_HEADER = "X-Eval-Token";
var ApiError = class extends Error {
  constructor(message, status) {
    super(message);
    this.status = status;
    this.name = "ApiError";
  }
};
var PayloadError = class extends Error {
  constructor(message, taskId = null) {
    super(message);
    this.taskId = taskId;
    this.name = "PayloadError";
  }
};
function isString(value) {
  return typeof value === "string";
}
function parseTaskPayload(raw) {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new PayloadError("task payload is not a JSON object");
  }
  const body = raw;
  const taskId = isString(body.task_id) && body.task_id ? body.task_id : null;
  const fail = (reason) => {
    throw new PayloadError(reason, taskId);
  };
  if (taskId === null) fail("task payload is missing task_id");
  if (!isString(body.source_sentence) || !body.source_sentence) {
    fail("task payload is missing source_sentence");
  }
  if (!isString(body.idiom_meaning)) fail("task payload is missing idiom_meaning");
  const translations = body.translations;
  if (!Array.isArray(translations) || translations.length !== 2) {
    fail("task payload must carry exactly two translations");
  }
  const labeled = [];
  for (const entry of translations) {
    const item = entry;
    if (typeof entry !== "object" || entry === null || !isString(item.text)) {
      fail("translation entries need a text field");
    }
    if (item.label !== "A" && item.label !== "B") {
      fail("translation labels must be A and B");
    }
    labeled.push({ label: item.label, text: item.text });
  }
  if (labeled[0]?.label === labeled[1]?.label) {
    fail("translation labels must be A and B");
  }
  const tiers = body.rubric_tiers;
  if (!Array.isArray(tiers) || tiers.length !== 3 || !tiers.every((tier, i) => tier === RUBRIC_TIERS[i])) {
    fail("rubric tiers do not match this client version");
  }
  if (body.rubric !== RUBRIC_CRITERIA) {
    fail("rubric text does not match this client version");
  }
  return {
    task_id: taskId,
    source_sentence: body.source_sentence,
    idiom_meaning: body.idiom_meaning,
    translations: labeled,
    rubric: RUBRIC_CRITERIA,
    rubric_tiers: [...RUBRIC_TIERS]
  };
}
var EvalApiClient = class {
  constructor(baseUrl, token, fetchFn) {
    this.baseUrl = baseUrl;
    this.token = token;
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }
  headers(json) {
    const headers = {};
    if (this.token) headers[TOKEN_HEADER] = this.token;
    if (json) headers["Content-Type"] = "application/json";
    return headers;
  }
  async errorFrom(response) {
    let detail = "";
    try {
      const body = await response.json();
      if (isString(body.error)) detail = body.error;
    } catch {
    }
    return new ApiError(detail || `request failed with status ${response.status}`, response.status);
  }
  /** Next unscored task for this annotator, or null when all are done. */
  async fetchNextTask(annotator) {
    const url = `${this.baseUrl}/tasks/next?annotator=${encodeURIComponent(annotator)}`;
    const response = await this.fetchFn(url, { headers: this.headers(false) });
    if (response.status === 204) return null;
    if (!response.ok) throw await this.errorFrom(response);
    let raw;
    try {
      raw = await response.json();
    } catch {
      throw new PayloadError("task payload is not valid JSON");
    }
    return parseTaskPayload(raw);
  }
  async submitScore(submission) {
    const response = await this.fetchFn(`${this.baseUrl}/scores`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(submission)
    });
    if (!response.ok) throw await this.errorFrom(response);
    return await response.json();
  }
  async fetchProgress() {
    const response = await this.fetchFn(`${this.baseUrl}/progress`, {
      headers: this.headers(false)
    });
    if (!response.ok) throw await this.errorFrom(response);
    return await response.json();
  }
};

// src/session.ts
function viewFromPayload(payload) {
  const byLabel = {};
  for (const t of payload.translations) byLabel[t.label] = t.text;
  return {
    taskId: payload.task_id,
    sourceSentence: payload.source_sentence,
    idiomMeaning: payload.idiom_meaning,
    translationA: byLabel.A ?? "",
    translationB: byLabel.B ?? "",
    rubricTiers: payload.rubric_tiers,
    scoreA: null,
    scoreB: null
  };
}
var AnnotationSession = class {
  constructor(api, annotator, options = {}) {
    this.api = api;
    this.annotator = annotator;
    this.phase = "idle";
    this.view = null;
    this.completedCount = 0;
    this.errorMessage = null;
    this.lastWarning = null;
    this.serverProgress = null;
    this.log = [];
    this.listeners = [];
    this.skippedTaskIds = /* @__PURE__ */ new Set();
    this.pendingQueue = [];
    this.acked = /* @__PURE__ */ new Set();
    this.pendingSkipId = null;
    if (!annotator) throw new Error("annotator id must be non-empty");
    this.storage = options.storage ?? null;
    this.storageKey = `annotator-queue:${annotator}`;
  }
  subscribe(listener) {
    this.listeners.push(listener);
    return () => {
      const i = this.listeners.indexOf(listener);
      if (i >= 0) this.listeners.splice(i, 1);
    };
  }
  emit() {
    for (const listener of [...this.listeners]) listener();
  }
  record(message) {
    this.log.push(`${(/* @__PURE__ */ new Date()).toISOString()} ${message}`);
  }
  get pendingSubmissions() {
    return this.pendingQueue;
  }
  get skippedCount() {
    return this.skippedTaskIds.size;
  }
  get canSubmit() {
    return this.phase === "annotating" && this.view !== null && this.view.scoreA !== null && this.view.scoreB !== null;
  }
  async start() {
    this.restoreQueue();
    if (this.pendingQueue.length > 0) {
      this.phase = "offline";
      this.errorMessage = "unsent scores found from an earlier session";
      this.record(`restored ${this.pendingQueue.length} queued scores from storage`);
      this.emit();
      return;
    }
    await this.fetchNext();
  }
  setScore(label, score) {
    if (this.phase !== "annotating" || this.view === null) return;
    if (label === "A") this.view.scoreA = score;
    else this.view.scoreB = score;
    this.emit();
  }
  async submit() {
    if (!this.canSubmit || this.view === null) return;
    const view = this.view;
    this.phase = "submitting";
    this.errorMessage = null;
    this.lastWarning = null;
    this.emit();
    const submissions = [
      { task_id: view.taskId, label: "A", score: view.scoreA, annotator: this.annotator },
      { task_id: view.taskId, label: "B", score: view.scoreB, annotator: this.annotator }
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
          this.phase = "annotating";
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
  async retryPending() {
    if (this.phase !== "offline") return;
    while (this.pendingQueue.length > 0) {
      const submission = this.pendingQueue[0];
      try {
        const ack = await this.api.submitScore(submission);
        if (ack.warning) {
          this.lastWarning = ack.warning;
          this.record(`server warning for ${submission.task_id}/${submission.label}: ${ack.warning}`);
        }
      } catch (err) {
        if (err instanceof ApiError) {
          this.errorMessage = `queued score for ${submission.task_id}/${submission.label} was rejected: ${err.message}`;
          this.record(`dropped rejected queued score ${submission.task_id}/${submission.label}: ${err.message}`);
          this.pendingQueue.shift();
          this.persistQueue();
          continue;
        }
        this.errorMessage = "still unreachable; scores remain queued";
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
    if (this.view !== null && this.acked.has("A") && this.acked.has("B")) {
      await this.advance();
      return;
    }
    await this.fetchNext();
  }
  /** Leave a malformed task behind; only possible when its id was readable. */
  async skipCurrent() {
    if (this.phase !== "payload-error") return;
    if (this.pendingSkipId === null) {
      this.phase = "blocked";
      this.errorMessage = "the malformed task carries no id, so it cannot be skipped";
      this.emit();
      return;
    }
    this.skippedTaskIds.add(this.pendingSkipId);
    this.record(`skipped malformed task ${this.pendingSkipId}`);
    this.pendingSkipId = null;
    await this.fetchNext();
  }
  async advance() {
    this.completedCount += 1;
    this.acked.clear();
    await this.fetchNext();
  }
  async fetchNext() {
    this.phase = "loading";
    this.view = null;
    this.acked.clear();
    this.emit();
    let payload;
    try {
      payload = await this.api.fetchNextTask(this.annotator);
    } catch (err) {
      if (err instanceof PayloadError) {
        this.pendingSkipId = err.taskId;
        this.phase = "payload-error";
        this.errorMessage = err.message;
        this.record(`malformed task payload${err.taskId ? ` (${err.taskId})` : ""}: ${err.message}`);
        this.emit();
        return;
      }
      this.phase = "offline";
      this.errorMessage = err instanceof ApiError ? err.message : "could not reach the eval server";
      this.record(`fetch failed: ${err instanceof Error ? err.message : String(err)}`);
      this.emit();
      return;
    }
    if (payload === null) {
      this.phase = "done";
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
      this.phase = "blocked";
      this.errorMessage = `${this.skippedTaskIds.size} skipped task(s) still unscored`;
      this.emit();
      return;
    }
    this.view = viewFromPayload(payload);
    this.phase = "annotating";
    this.emit();
  }
  queueFrom(submissions, reason) {
    this.pendingQueue = submissions.filter((s) => !this.acked.has(s.label));
    this.persistQueue();
    this.phase = "offline";
    this.errorMessage = "connection lost; your scores are saved and will be retried";
    this.record(`queued ${this.pendingQueue.length} scores after network failure: ${reason}`);
    this.emit();
  }
  persistQueue() {
    if (this.storage === null) return;
    if (this.pendingQueue.length === 0) {
      this.storage.removeItem(this.storageKey);
    } else {
      this.storage.setItem(this.storageKey, JSON.stringify(this.pendingQueue));
    }
  }
  restoreQueue() {
    if (this.storage === null) return;
    const raw = this.storage.getItem(this.storageKey);
    if (raw === null) return;
    try {
      const parsed = JSON.parse(raw);
      if (Array.isArray(parsed)) {
        this.pendingQueue = parsed.filter(
          (item) => typeof item === "object" && item !== null && typeof item.task_id === "string" && (item.label === "A" || item.label === "B") && [1, 2, 3].includes(item.score) && typeof item.annotator === "string"
        );
      }
    } catch {
      this.pendingQueue = [];
    }
    if (this.pendingQueue.length === 0) this.storage.removeItem(this.storageKey);
  }
};

// src/view.ts
var SCORES = [1, 2, 3];
function escapeHtml(text) {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}
function banner(session) {
  const parts = [];
  if (session.errorMessage) {
    parts.push(`<div class="banner banner-error" id="banner-error">${escapeHtml(session.errorMessage)}</div>`);
  }
  if (session.lastWarning) {
    parts.push(`<div class="banner banner-warning" id="banner-warning">${escapeHtml(session.lastWarning)}</div>`);
  }
  return parts.join("");
}
function scoreButtons(label, selected) {
  const buttons = SCORES.map((score) => {
    const pressed = selected === score;
    return `<button type="button" class="score-btn${pressed ? " selected" : ""}"
      data-label="${label}" data-score="${score}" aria-pressed="${pressed}">${score}</button>`;
  }).join("");
  return `<div class="score-row" data-score-row="${label}">${buttons}</div>`;
}
function annotatingHtml(session) {
  const view = session.view;
  if (view === null) return "";
  const tiers = view.rubricTiers.map((tier) => `<li class="rubric-tier">${escapeHtml(tier)}</li>`).join("");
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
          ${scoreButtons("A", view.scoreA)}
        </section>
        <section class="translation">
          <h3>Translation B</h3>
          <p id="translation-b">${escapeHtml(view.translationB)}</p>
          ${scoreButtons("B", view.scoreB)}
        </section>
      </div>
      <button type="button" id="submit-btn" ${session.canSubmit ? "" : "disabled"}>
        Submit both scores
      </button>
    </div>`;
}
function statusHtml(session) {
  switch (session.phase) {
    case "idle":
    case "loading":
      return `<p class="status" id="status-loading">Loading next task...</p>`;
    case "submitting":
      return `<p class="status" id="status-submitting">Submitting scores...</p>`;
    case "offline": {
      const queued = session.pendingSubmissions.length;
      const note = queued > 0 ? `<p>${queued} unsent score(s) are queued locally.</p>` : "";
      return `
        ${banner(session)}
        <div class="retry-panel">
          ${note}
          <button type="button" id="retry-btn">Retry</button>
        </div>`;
    }
    case "payload-error":
      return `
        ${banner(session)}
        <div class="retry-panel">
          <p>The server sent a task this client could not display.</p>
          <button type="button" id="skip-btn">Skip task</button>
        </div>`;
    case "done": {
      const server = session.serverProgress;
      const serverLine = server ? `<p id="server-progress">server: ${server.completed_tasks} of ${server.total_tasks} tasks complete</p>` : "";
      return `
        ${banner(session)}
        <div class="done-panel">
          <h2 id="done-heading">All tasks complete</h2>
          <p>You scored ${session.completedCount} task(s) this session.</p>
          ${serverLine}
        </div>`;
    }
    case "blocked":
      return `
        ${banner(session)}
        <div class="done-panel">
          <h2 id="blocked-heading">No more displayable tasks</h2>
          <p>${session.skippedCount} task(s) were skipped and remain unscored.</p>
        </div>`;
    default:
      return "";
  }
}
function renderSession(root, session) {
  root.innerHTML = session.phase === "annotating" ? annotatingHtml(session) : statusHtml(session);
  for (const button of Array.from(root.querySelectorAll(".score-btn"))) {
    button.addEventListener("click", () => {
      const label = button.dataset.label;
      const score = Number(button.dataset.score);
      session.setScore(label, score);
    });
  }
  root.querySelector("#submit-btn")?.addEventListener("click", () => {
    void session.submit();
  });
  root.querySelector("#retry-btn")?.addEventListener("click", () => {
    void session.retryPending();
  });
  root.querySelector("#skip-btn")?.addEventListener("click", () => {
    void session.skipCurrent();
  });
}

// src/main.ts
function startSession(annotator, token) {
  const root = document.getElementById("app");
  const login = document.getElementById("login-panel");
  if (!root || !login) return;
  login.hidden = true;
  root.hidden = false;
  const api = new EvalApiClient("", token);
  const session = new AnnotationSession(api, annotator, {
    storage: window.localStorage
  });
  session.subscribe(() => renderSession(root, session));
  void session.start();
}
function wireLogin() {
  const form = document.getElementById("login-form");
  if (!form) return;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const annotator = document.getElementById("annotator-input").value.trim();
    const token = document.getElementById("token-input").value.trim();
    const hint = document.getElementById("login-hint");
    if (!annotator) {
      if (hint) hint.textContent = "Enter an annotator id to begin.";
      return;
    }
    startSession(annotator, token);
  });
}
wireLogin();
