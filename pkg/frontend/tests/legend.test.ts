import { beforeEach, describe, expect, it } from "vitest";

import { visibleAnnotationCount } from "../src/annotated.js";
import { renderReviewScreen } from "../src/review.js";
import { caseViewFor, container, loadFixture } from "./helpers.js";

const fixture = loadFixture();

function renderMismatchCase(): HTMLElement {
  const host = container();
  renderReviewScreen(host, caseViewFor(fixture, fixture.mismatch_case_id), {
    reviewerId: "tester",
    onSubmitAssessment: () => Promise.resolve(fixture.cases[fixture.mismatch_case_id]),
  });
  return host;
}

function toggle(host: HTMLElement, layer: string, checked: boolean): void {
  const box = host.querySelector<HTMLInputElement>(
    `.layer-toggles input[data-layer=${layer}]`,
  )!;
  box.checked = checked;
  box.dispatchEvent(new Event("change", { bubbles: true }));
}

describe("highlight legend and layer toggles", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("lists the four entity categories with their color classes", () => {
    const host = renderMismatchCase();
    const chips = Array.from(host.querySelectorAll(".legend .legend-chip"));
    const byLabel = new Map(chips.map((c) => [c.textContent, c.className]));
    expect(byLabel.get("matched drug")).toContain("drug-matched");
    expect(byLabel.get("unmatched drug")).toContain("drug-unmatched");
    expect(byLabel.get("matched AE")).toContain("ae-matched");
    expect(byLabel.get("unmatched AE")).toContain("ae-unmatched");
  });

  it("toggling entropy off leaves zero visible entropy annotations", () => {
    const host = renderMismatchCase();
    const panels = host.querySelector(".panels")!;
    const before =
      visibleAnnotationCount(panels, "tluq-l1") +
      visibleAnnotationCount(panels, "tluq-l2") +
      visibleAnnotationCount(panels, "tluq-l3");
    expect(before).toBeGreaterThan(0);
    toggle(host, "entropy", false);
    for (const cssClass of ["tluq-l1", "tluq-l2", "tluq-l3"]) {
      expect(visibleAnnotationCount(panels, cssClass)).toBe(0);
    }
  });

  it("keeps at least one unmatched drug span visible with all layers on", () => {
    const host = renderMismatchCase();
    const panels = host.querySelector(".panels")!;
    expect(visibleAnnotationCount(panels, "drug-unmatched")).toBeGreaterThan(0);
  });

  it("layers toggle independently", () => {
    const host = renderMismatchCase();
    const panels = host.querySelector(".panels")!;
    toggle(host, "drug", false);
    expect(visibleAnnotationCount(panels, "drug-matched")).toBe(0);
    expect(visibleAnnotationCount(panels, "drug-unmatched")).toBe(0);
    expect(visibleAnnotationCount(panels, "ae-matched")).toBeGreaterThan(0);
    toggle(host, "drug", true);
    expect(visibleAnnotationCount(panels, "drug-unmatched")).toBeGreaterThan(0);
  });
});
