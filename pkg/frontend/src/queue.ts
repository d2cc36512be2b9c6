// Queue screen: server-ordered case list with routing and status badges.

import type { QueueEntry } from "./types.js";

const STATUS_FILTERS = ["", "pending", "in_review", "disagreement", "adjudicated", "closed"];

export function renderQueue(
  container: Element,
  entries: QueueEntry[],
  options: {
    statusFilter?: string;
    onSelect: (caseId: string) => void;
    onFilter?: (status: string) => void;
  },
): void {
  container.innerHTML = "";
  const heading = document.createElement("h2");
  heading.textContent = "Review queue";
  container.appendChild(heading);

  if (options.onFilter) {
    const select = document.createElement("select");
    select.className = "status-filter";
    for (const status of STATUS_FILTERS) {
      const option = document.createElement("option");
      option.value = status;
      option.textContent = status || "all statuses";
      option.selected = status === (options.statusFilter ?? "");
      select.appendChild(option);
    }
    select.addEventListener("change", () => options.onFilter!(select.value));
    container.appendChild(select);
  }

  if (entries.length === 0) {
    const empty = document.createElement("p");
    empty.className = "queue-empty";
    empty.textContent = "No cases in the queue.";
    container.appendChild(empty);
    return;
  }

  const list = document.createElement("ul");
  list.className = "queue-list";
  for (const entry of entries) {
    const row = document.createElement("li");
    row.className = "queue-row";
    row.dataset.caseId = entry.case_id;

    const link = document.createElement("a");
    link.href = `#/case/${encodeURIComponent(entry.case_id)}`;
    link.textContent = entry.case_id;
    link.addEventListener("click", (event) => {
      event.preventDefault();
      options.onSelect(entry.case_id);
    });
    row.appendChild(link);

    const routing = document.createElement("span");
    routing.className = `badge routing-${entry.routing}`;
    routing.textContent = entry.routing;
    row.appendChild(routing);

    const status = document.createElement("span");
    status.className = `badge status-${entry.status}`;
    status.textContent = entry.status;
    row.appendChild(status);

    if (entry.needs_adjudication) {
      const badge = document.createElement("span");
      badge.className = "badge needs-adjudication";
      badge.textContent = "needs adjudication";
      row.appendChild(badge);
    }

    const reviews = document.createElement("span");
    reviews.className = "review-count";
    reviews.textContent = `${entry.assessments}/2 reviews`;
    row.appendChild(reviews);

    list.appendChild(row);
  }
  container.appendChild(list);
}
