import { beforeEach, describe, expect, it } from "vitest";

import { renderQueue } from "../src/queue.js";
import { container, loadFixture } from "./helpers.js";

const fixture = loadFixture();

describe("queue screen", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("shows an explicit empty state", () => {
    const host = container();
    renderQueue(host, [], { onSelect: () => {} });
    expect(host.querySelector(".queue-empty")?.textContent).toBe(
      "No cases in the queue.",
    );
    expect(host.querySelectorAll(".queue-row").length).toBe(0);
  });

  it("renders one row per case with a routing badge", () => {
    const host = container();
    renderQueue(host, fixture.queue.cases, { onSelect: () => {} });
    const rows = host.querySelectorAll(".queue-row");
    expect(rows.length).toBe(3);
    for (const row of Array.from(rows)) {
      expect(row.querySelector("[class*=routing-]")).not.toBeNull();
    }
  });

  it("marks disagreement cases with a needs-adjudication badge", () => {
    const host = container();
    renderQueue(host, fixture.queue.cases, { onSelect: () => {} });
    const flagged = host.querySelector(
      `[data-case-id="${fixture.disagreement_case_id}"]`,
    );
    expect(flagged?.querySelector(".needs-adjudication")?.textContent).toBe(
      "needs adjudication",
    );
    const others = Array.from(host.querySelectorAll(".queue-row")).filter(
      (row) => row.getAttribute("data-case-id") !== fixture.disagreement_case_id,
    );
    for (const row of others) {
      expect(row.querySelector(".needs-adjudication")).toBeNull();
    }
  });

  it("selecting a case invokes the callback with its id", () => {
    const host = container();
    const selected: string[] = [];
    renderQueue(host, fixture.queue.cases, {
      onSelect: (id) => selected.push(id),
    });
    const link = host.querySelector<HTMLAnchorElement>(
      `[data-case-id="${fixture.mismatch_case_id}"] a`,
    );
    link?.click();
    expect(selected).toEqual([fixture.mismatch_case_id]);
  });

  it("status filter reflects the server-side filtered listing", () => {
    const host = container();
    const filters: string[] = [];
    renderQueue(host, fixture.queue_pending.cases, {
      statusFilter: "pending",
      onSelect: () => {},
      onFilter: (status) => filters.push(status),
    });
    const rows = host.querySelectorAll(".queue-row");
    expect(rows.length).toBe(fixture.queue_pending.cases.length);
    const select = host.querySelector<HTMLSelectElement>(".status-filter");
    expect(select?.value).toBe("pending");
  });
});
