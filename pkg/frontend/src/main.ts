import { ApiClient, ApiError } from "./api.js";
import { QueueController } from "./queue.js";
import { loadSession, saveSession, toggleBasis } from "./session.js";
import type { SessionState } from "./session.js";
import {
  renderClustersView,
  renderInterstitial,
  renderIrrEmptyState,
  renderIrrView,
  renderQueueView,
  renderReportView,
  renderRubric,
} from "./views.js";

type Tab = "label" | "clusters" | "agreement" | "report";

const api = new ApiClient("");
let session: SessionState = loadSession(window.localStorage);
const controller = new QueueController(api, () => session);
let tab: Tab = "label";

const app = document.getElementById("app")!;
const rubricHost = document.getElementById("rubric-host")!;
const basisButton = document.getElementById("basis-toggle") as HTMLButtonElement;
const raterBadge = document.getElementById("rater-badge")!;

function persist(): void {
  saveSession(window.localStorage, session);
}

function renderChrome(): void {
  raterBadge.textContent = session.rater_id === "" ? "no rater" : session.rater_id;
  basisButton.textContent = `basis: ${session.basis}`;
  document.querySelectorAll<HTMLElement>("nav [data-tab]").forEach((el) => {
    el.classList.toggle("active", el.dataset.tab === tab);
  });
}

async function renderTab(): Promise<void> {
  renderChrome();
  if (tab === "label") {
    app.innerHTML = renderQueueView(controller.state, session);
    return;
  }
  if (tab === "clusters") {
    try {
      const clusters = await api.clusters();
      let proj = null;
      try {
        proj = await api.projection();
      } catch (err) {
        if (!(err instanceof ApiError)) throw err;
      }
      app.innerHTML = renderClustersView(clusters, proj);
      wireScatter();
    } catch (err) {
      app.innerHTML = `<p class="empty-state">${err instanceof ApiError ? err.message : "service unreachable"}</p>`;
    }
    return;
  }
  if (tab === "agreement") {
    try {
      app.innerHTML = renderIrrView(await api.irr(session.basis));
    } catch (err) {
      app.innerHTML = renderIrrEmptyState(
        err instanceof ApiError ? err.message : "service unreachable",
      );
    }
    return;
  }
  try {
    app.innerHTML = renderReportView(await api.report());
  } catch (err) {
    app.innerHTML = `<p class="empty-state">${err instanceof ApiError ? err.message : "service unreachable"}</p>`;
  }
}

function wireScatter(): void {
  const detail = document.getElementById("point-detail");
  document.querySelectorAll<SVGElement>(".scatter .pt").forEach((el) => {
    el.addEventListener("click", async () => {
      const postId = el.dataset.postId!;
      if (detail === null) return;
      const { records } = await api.labels({ post_id: postId });
      const queue = controller.state.items.find((it) => it.post_id === postId);
      const text = queue !== undefined ? queue.raw_text : "(text available in the queue view)";
      detail.textContent =
        `${postId}: ${text} ` +
        (records.length > 0 ? `[labels: ${records.map((r) => `${r.rater_id}=${r.value}`).join(", ")}]` : "[unlabeled]");
    });
  });
}

async function refreshQueue(): Promise<void> {
  await controller.refresh();
  if (tab === "label") await renderTab();
}

function wireGlobal(): void {
  document.querySelectorAll<HTMLElement>("nav [data-tab]").forEach((el) => {
    el.addEventListener("click", async () => {
      tab = el.dataset.tab as Tab;
      await renderTab();
    });
  });

  basisButton.addEventListener("click", async () => {
    session = toggleBasis(session);
    persist();
    await controller.basisChanged(session.basis);
    await renderTab();
  });

  document.addEventListener("keydown", async (ev) => {
    if (tab !== "label" || !session.warned) return;
    const target = ev.target as HTMLElement;
    if (target.tagName === "INPUT" || target.tagName === "TEXTAREA") return;
    await controller.handleKey(ev.key);
    await renderTab();
  });

  app.addEventListener("click", async (ev) => {
    const el = ev.target as HTMLElement;
    const verdict = el.closest<HTMLElement>("[data-verdict]")?.dataset.verdict;
    if (verdict !== undefined) {
      await controller.submit(verdict);
      await renderTab();
      return;
    }
    const action = el.closest<HTMLElement>("[data-action]")?.dataset.action;
    if (action === "retry-submit") {
      await controller.retry();
      await renderTab();
    } else if (action === "retry-load") {
      await refreshQueue();
    }
    const nav = el.closest<HTMLElement>("[data-nav]")?.dataset.nav;
    if (nav !== undefined) {
      tab = nav as Tab;
      await renderTab();
    }
  });
}

function showInterstitial(): void {
  const host = document.getElementById("interstitial-host")!;
  host.innerHTML = renderInterstitial();
  const input = document.getElementById("rater-id") as HTMLInputElement;
  const button = document.getElementById("acknowledge") as HTMLButtonElement;
  input.value = session.rater_id;
  button.disabled = input.value.trim() === "";
  input.addEventListener("input", () => {
    button.disabled = input.value.trim() === "";
  });
  button.addEventListener("click", async () => {
    session = { ...session, rater_id: input.value.trim(), warned: true };
    persist();
    host.innerHTML = "";
    await refreshQueue();
  });
}

async function start(): Promise<void> {
  wireGlobal();
  try {
    rubricHost.innerHTML = renderRubric(await api.rubric());
  } catch {
    rubricHost.innerHTML = "<p class=\"muted\">rubric unavailable</p>";
  }
  if (!session.warned || session.rater_id === "") {
    // content warning + rater identity gate before any post text renders
    await renderTab();
    showInterstitial();
  } else {
    await refreshQueue();
  }
}

void start();
