import { esc, pct } from "./html.js";
import type { QueueState } from "./queue.js";
import { currentItem } from "./queue.js";
import type { SessionState } from "./session.js";
import type {
  ClustersResponse,
  IrrResponse,
  ProjectionResponse,
  QueueItem,
  ReportResponse,
  RubricResponse,
  Suggestion,
} from "./types.js";

// Lexicon class of the tags an executable rule matched; mirrors the
// rubric's rule conditions (R1 fires on yes-class tags, R2C3 on
// maybe-class). Display only: the classification itself came from the
// server with the suggestion.
const RULE_TAG_CLASS: Record<string, string> = {
  R1: "yes",
  R2C3: "maybe",
};

export function hashtagClass(tag: string, suggestion: Suggestion | null): string {
  if (suggestion !== null && suggestion.matched_tags.includes(tag)) {
    return RULE_TAG_CLASS[suggestion.rule_id] ?? "unknown";
  }
  return "unknown";
}

export function renderHashtags(item: QueueItem): string {
  if (item.source_hashtags.length === 0) return "<span class=\"muted\">none</span>";
  return item.source_hashtags
    .map((tag) => {
      const cls = hashtagClass(tag, item.suggestion);
      return `<span class="hashtag lex-${esc(cls)}" title="lexicon: ${esc(cls)}">#${esc(tag)}</span>`;
    })
    .join(" ");
}

function renderHistogram(histogram: Record<string, number>): string {
  const entries = Object.entries(histogram).sort();
  if (entries.length === 0) return "<span class=\"muted\">no labels yet</span>";
  return entries
    .map(([value, count]) => `<span class="hist-entry">${esc(value)}: ${count}</span>`)
    .join(" ");
}

export function renderQueueItem(item: QueueItem): string {
  const suggestion = item.suggestion;
  const suggestionHtml =
    suggestion === null
      ? "<span class=\"muted\">no suggestion</span>"
      : `<span class="suggestion">suggests <strong>${esc(suggestion.value)}</strong>` +
        ` <span class="muted">(rule ${esc(suggestion.rule_id)})</span></span>`;
  return `
  <article class="queue-item" data-post-id="${esc(item.post_id)}">
    <header>
      <span class="post-id">${esc(item.post_id)}</span>
      <span class="cohort">${esc(item.cohort)}</span>
      <span class="cluster-chip">cluster ${item.cluster_id} &middot; ${item.cluster_size} posts</span>
    </header>
    <p class="raw-text">${esc(item.raw_text)}</p>
    <p class="cleaned-text"><span class="muted">cleaned:</span> ${esc(item.cleaned_tokens.join(" "))}</p>
    <div class="meta">
      <div class="hashtags">${renderHashtags(item)}</div>
      <div class="histogram">${renderHistogram(item.histogram)}</div>
      <div>${suggestionHtml}</div>
    </div>
  </article>`;
}

export function renderQueueView(q: QueueState, session: SessionState): string {
  const header = `
  <div class="queue-head">
    <span>round ${q.round ?? "-"}</span>
    <span>${q.submitted} submitted this session</span>
    <span>basis: <strong>${esc(session.basis)}</strong></span>
  </div>`;
  if (q.phase === "loading") return `${header}<p class="muted">loading queue...</p>`;
  if (q.phase === "error") {
    return `${header}
    <div class="banner error" id="queue-error">
      service unreachable <button data-action="retry-load">retry</button>
    </div>`;
  }
  const item = currentItem(q);
  if (q.phase === "empty" || item === null) {
    return `${header}
    <div class="round-complete">
      <p>Queue is empty: round complete.</p>
      <p><a href="#report" data-nav="report">See the report</a> for accuracy and coverage.</p>
    </div>`;
  }
  const banner =
    q.failed === null
      ? ""
      : `<div class="banner error" id="submit-failed">
           submission failed (${esc(q.failed.message)})
           <button data-action="retry-submit">retry</button>
         </div>`;
  const remaining = q.items.length - q.cursor;
  return `${header}${banner}${renderQueueItem(item)}
  <div class="actions">
    <button data-verdict="yes"><kbd>y</kbd> yes</button>
    <button data-verdict="unclear"><kbd>u</kbd> unclear</button>
    <button data-verdict="no"><kbd>n</kbd> no</button>
    <button data-verdict="removed"><kbd>r</kbd> removed</button>
    <span class="muted">${remaining} left in this batch</span>
  </div>`;
}

export function renderRubric(rubric: RubricResponse): string {
  const rows = rubric.rules
    .map(
      (rule) => `
      <li class="rule${rule.executable ? " executable" : ""}">
        <strong>${esc(rule.rule_id)}</strong>
        ${esc(rule.condition)}
        <span class="outcome">&rarr; ${esc(rule.outcome)}</span>
      </li>`,
    )
    .join("");
  return `
  <aside class="rubric" id="rubric">
    <h3>Labeling rules</h3>
    <ul>${rows}</ul>
    <p class="muted">lexicon classes: ${rubric.lexicon_classes.map(esc).join(", ")}</p>
  </aside>`;
}

// IRR numbers are shown at the table's reported precision (one decimal);
// the title attribute keeps the exact serialized value for inspection.
function irrCell(value: number): string {
  return `<td class="num" title="${esc(String(value))}">${esc(pct(value))}</td>`;
}

export function renderIrrView(irr: IrrResponse): string {
  const rows = irr.strata
    .map(
      (s) => `
      <tr data-stratum="${esc(s.stratum)}">
        <td>${esc(s.stratum)}</td>
        <td class="num">${s.comparable}</td>
        <td class="num">${s.same}</td>
        ${irrCell(s.percent_same)}
        ${irrCell(s.percent_different)}
        ${irrCell(s.percent_completely_incorrect)}
        ${irrCell(s.percent_partially_incorrect)}
      </tr>`,
    )
    .join("");
  return `
  <section class="irr">
    <h2>Agreement: ${esc(irr.rater_a)} vs ${esc(irr.rater_b)}
      <span class="muted">(${esc(irr.basis)})</span></h2>
    <table>
      <thead>
        <tr><th>stratum</th><th>comparable</th><th>same</th><th>% same</th>
            <th>% different</th><th>% completely</th><th>% partially</th></tr>
      </thead>
      <tbody>${rows}</tbody>
    </table>
  </section>`;
}

export function renderIrrEmptyState(message: string): string {
  return `
  <section class="irr">
    <h2>Agreement</h2>
    <p class="empty-state">${esc(message)}</p>
    <p class="muted">Two raters must label overlapping posts before percent
    agreement means anything. Pick a second rater id and label a few of the
    same posts.</p>
  </section>`;
}

const CLUSTER_COLORS = [
  "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1",
  "#76b7b2", "#edc948", "#ff9da7", "#9c755f", "#bab0ac",
];

const LABEL_MARKS: Record<string, string> = {
  yes: "M -5 5 L 0 -5 L 5 5 Z", // triangle
  no: "M -5 -5 L 5 -5 L 5 5 L -5 5 Z", // square
  unclear: "M 0 -6 L 6 0 L 0 6 L -6 0 Z", // diamond
  removed: "M -5 -5 L 5 5 M -5 5 L 5 -5", // cross
};

export function clusterColor(clusterId: number | null): string {
  if (clusterId === null) return "#888888";
  return CLUSTER_COLORS[((clusterId % CLUSTER_COLORS.length) + CLUSTER_COLORS.length) % CLUSTER_COLORS.length];
}

/** SVG scatter of the latest projection: dots colored by cluster, manual
 * labels overlaid as distinct marks. Pure string render; the shell wires
 * the click-to-detail behavior via data attributes. */
export function renderScatter(proj: ProjectionResponse, width = 640, height = 480): string {
  const xs = proj.points.map((p) => p.x);
  const ys = proj.points.map((p) => p.y);
  const xMin = Math.min(...xs), xMax = Math.max(...xs);
  const yMin = Math.min(...ys), yMax = Math.max(...ys);
  const pad = 20;
  const sx = (x: number) =>
    xMax === xMin ? width / 2 : pad + ((x - xMin) / (xMax - xMin)) * (width - 2 * pad);
  const sy = (y: number) =>
    yMax === yMin ? height / 2 : height - pad - ((y - yMin) / (yMax - yMin)) * (height - 2 * pad);
  const marks = proj.points
    .map((p) => {
      const cx = sx(p.x), cy = sy(p.y);
      const color = clusterColor(p.cluster_id);
      const base = `<circle class="pt" data-post-id="${esc(p.post_id)}" cx="${cx.toFixed(1)}"` +
        ` cy="${cy.toFixed(1)}" r="4" fill="${color}" data-cluster="${p.cluster_id ?? ""}"/>`;
      if (p.label === null) return base;
      const path = LABEL_MARKS[p.label];
      if (path === undefined) return base;
      return base +
        `<path class="label-mark" data-label="${esc(p.label)}" d="${path}"` +
        ` transform="translate(${cx.toFixed(1)} ${cy.toFixed(1)})"` +
        ` fill="none" stroke="#111" stroke-width="1.5"/>`;
    })
    .join("\n");
  return `
  <svg viewBox="0 0 ${width} ${height}" class="scatter" role="img"
       aria-label="${esc(proj.method)} projection, round ${proj.round}">
    ${marks}
  </svg>`;
}

export function renderClustersView(
  clusters: ClustersResponse,
  proj: ProjectionResponse | null,
): string {
  const rows = clusters.clusters
    .map(
      (c) => `
      <tr>
        <td><span class="swatch" style="background:${clusterColor(c.cluster_id)}"></span> ${c.cluster_id}</td>
        <td class="num">${c.size}</td>
        <td class="num">${c.labeled_count}</td>
        <td>${renderHistogram(c.histogram)}</td>
        <td>${c.decided ? esc(c.value ?? "") : "<span class=\"muted\">ambiguous</span>"}</td>
      </tr>`,
    )
    .join("");
  const scatter =
    proj === null
      ? `<p class="empty-state">No projection yet. Run
         <code>labelcycle project --state-dir &lt;dir&gt; --method pca</code>
         and reload.</p>`
      : renderScatter(proj) +
        `<p class="muted">marks: triangle yes, square no, diamond unclear, cross removed</p>` +
        `<div id="point-detail" class="muted">click a point to see its post</div>`;
  return `
  <section class="clusters">
    <h2>Round ${clusters.round}: k=${clusters.k}, WGSS ${clusters.wgss.toFixed(4)}</h2>
    <table>
      <thead><tr><th>cluster</th><th>size</th><th>labeled</th><th>histogram</th><th>verdict</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>
    ${scatter}
  </section>`;
}

export function renderReportView(report: ReportResponse): string {
  const rows = report.rounds
    .map(
      (r) => `
      <tr>
        <td class="num">${r.round}</td>
        <td>${esc(r.model)}</td>
        <td class="num">${r.k}</td>
        <td class="num">${r.cv_applicable && r.cv_accuracy !== null ? r.cv_accuracy.toFixed(4) : "N/A"}</td>
        <td class="num">${r.newly_labeled}</td>
        <td class="num">${(100 * r.labeled_fraction).toFixed(1)}%</td>
        <td class="num">${r.queue_length}</td>
      </tr>`,
    )
    .join("");
  return `
  <section class="report">
    <h2>Cycle report <span class="muted">(${report.n_posts} posts)</span></h2>
    <table>
      <thead><tr><th>round</th><th>model</th><th>k</th><th>CV accuracy</th>
          <th>newly labeled</th><th>labeled</th><th>queue</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>
  </section>`;
}

export function renderInterstitial(): string {
  return `
  <div class="interstitial" id="interstitial">
    <div class="interstitial-card">
      <h2>Before you start</h2>
      <p>Queued posts are unfiltered social-media text and may contain
      distressing content. Take breaks; step away whenever you need to.</p>
      <label>Your rater id
        <input id="rater-id" type="text" autocomplete="off" placeholder="e.g. r1"/>
      </label>
      <button id="acknowledge" disabled>I understand, start labeling</button>
    </div>
  </div>`;
}
