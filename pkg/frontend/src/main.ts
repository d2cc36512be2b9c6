// App bootstrap: hash routing between the queue and review screens.
//
//   #/queue            queue (optionally ?status=pending)
//   #/case/<case_id>   review screen
//
// URL query parameters scope the session: ?reviewer=<id> names the reviewer,
// ?token=<bearer> authorizes mutating calls, ?adjudicate=1 switches the
// review form into adjudicator mode (reviewer rubric + the final
// clinically-acceptable verdict).

import { extractPanels } from "./annotated.js";
import { ApiClient } from "./api.js";
import { renderQueue } from "./queue.js";
import { renderReviewScreen } from "./review.js";
import type { CaseView } from "./types.js";

function sessionParams(): { reviewer: string; token: string; adjudicator: boolean } {
  const params = new URLSearchParams(window.location.search);
  return {
    reviewer: params.get("reviewer") ?? "anonymous-reviewer",
    token: params.get("token") ?? "",
    adjudicator: params.get("adjudicate") === "1",
  };
}

async function showQueue(app: Element, api: ApiClient, status?: string): Promise<void> {
  const response = await api.queue(status || undefined);
  renderQueue(app, response.cases, {
    statusFilter: status ?? "",
    onSelect: (caseId) => {
      window.location.hash = `#/case/${encodeURIComponent(caseId)}`;
    },
    onFilter: (newStatus) => {
      void showQueue(app, api, newStatus);
    },
  });
}

async function showCase(app: Element, api: ApiClient, caseId: string): Promise<void> {
  const { reviewer, adjudicator } = sessionParams();
  const [caseData, annotatedPage] = await Promise.all([
    api.getCase(caseId),
    api.annotatedHtml(caseId),
  ]);
  const panels = extractPanels(annotatedPage);
  const view: CaseView = {
    caseData,
    sourceHtml: panels.sourceHtml,
    targetHtml: panels.targetHtml,
  };
  renderReviewScreen(app, view, {
    reviewerId: reviewer,
    adjudicator,
    onSubmitAssessment: (draft) => api.submitAssessment(caseId, draft),
    onSubmitAdjudication: (draft, clinicallyAcceptable) =>
      api.submitAdjudication(caseId, {
        adjudicator_id: reviewer,
        assessment: draft,
        clinically_acceptable: clinicallyAcceptable,
      }),
    onBack: () => {
      window.location.hash = "#/queue";
    },
  });
}

async function route(app: Element, api: ApiClient): Promise<void> {
  const hash = window.location.hash || "#/queue";
  const caseMatch = /^#\/case\/(.+)$/.exec(hash);
  try {
    if (caseMatch) {
      await showCase(app, api, decodeURIComponent(caseMatch[1]));
    } else {
      await showQueue(app, api);
    }
  } catch (err) {
    app.innerHTML = "";
    const failure = document.createElement("div");
    failure.className = "load-error";
    failure.textContent = `Could not load this view: ${err}`;
    const retry = document.createElement("button");
    retry.textContent = "Retry";
    retry.addEventListener("click", () => void route(app, api));
    failure.appendChild(document.createElement("br"));
    failure.appendChild(retry);
    app.appendChild(failure);
  }
}

export function start(): void {
  const app = document.getElementById("app");
  if (!app) throw new Error("missing #app container");
  const { token } = sessionParams();
  const api = new ApiClient("", token);
  window.addEventListener("hashchange", () => void route(app, api));
  void route(app, api);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  start();
}
