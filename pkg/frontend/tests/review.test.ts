import { beforeEach, describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import { renderQueue } from "../src/queue.js";
import { renderReviewScreen } from "../src/review.js";
import { LIKERT_QUESTIONS } from "../src/rubric.js";
import type { AssessmentDraft, QueueEntry, ReviewCase } from "../src/types.js";
import { caseViewFor, container, flush, loadFixture } from "./helpers.js";

const fixture = loadFixture();

function render(
  caseId: string,
  onSubmit: (draft: AssessmentDraft) => Promise<ReviewCase> = () =>
    Promise.resolve(fixture.cases[caseId]),
): HTMLElement {
  const host = container();
  renderReviewScreen(host, caseViewFor(fixture, caseId), {
    reviewerId: "tester",
    onSubmitAssessment: onSubmit,
  });
  return host;
}

function fillLikert(host: HTMLElement, value = "4"): void {
  for (const select of Array.from(
    host.querySelectorAll<HTMLSelectElement>(".likert-field select"),
  )) {
    select.value = value;
    select.dispatchEvent(new Event("change", { bubbles: true }));
  }
}

function submitForm(host: HTMLElement): void {
  host
    .querySelector("form")!
    .dispatchEvent(new Event("submit", { cancelable: true }));
}

describe("review screen rendering", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("renders all four entity span classes for a mismatch case", () => {
    const host = render(fixture.mismatch_case_id);
    for (const cssClass of [
      "drug-matched",
      "drug-unmatched",
      "ae-matched",
      "ae-unmatched",
    ]) {
      expect(
        host.querySelectorAll(`.panels .${cssClass}`).length,
        cssClass,
      ).toBeGreaterThan(0);
    }
  });

  it("renders all three entropy bands for an entropy-annotated case", () => {
    const host = render(fixture.entropy_case_id);
    for (const cssClass of ["tluq-l1", "tluq-l2", "tluq-l3"]) {
      expect(
        host.querySelectorAll(`.panels .${cssClass}`).length,
        cssClass,
      ).toBeGreaterThan(0);
    }
  });

  it("shows the report summary without recomputing anything", () => {
    const host = render(fixture.mismatch_case_id);
    const summary = host.querySelector(".case-summary")!.textContent!;
    expect(summary).toContain("routing: review");
    expect(summary).toContain("mismatch:unmatched_target_drug");
  });

  it("exposes the five-point level descriptions as hover text", () => {
    const host = render(fixture.entropy_case_id);
    const select = host.querySelector<HTMLSelectElement>("#likert-llm_clear")!;
    const option3 = Array.from(select.options).find((o) => o.value === "3")!;
    expect(option3.title).toBe("Needs rereading to understand");
  });
});

describe("assessment form validation", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("disables submit until every five-point question is answered", () => {
    const host = render(fixture.entropy_case_id);
    const submit = host.querySelector<HTMLButtonElement>("button[type=submit]")!;
    expect(submit.disabled).toBe(true);
    fillLikert(host);
    expect(submit.disabled).toBe(false);
  });

  it("blocks an incomplete submission with a field-level message", async () => {
    const calls: AssessmentDraft[] = [];
    const host = render(fixture.entropy_case_id, (draft) => {
      calls.push(draft);
      return Promise.resolve(fixture.cases[fixture.entropy_case_id]);
    });
    // answer all but one question
    const selects = host.querySelectorAll<HTMLSelectElement>(".likert-field select");
    for (const select of Array.from(selects).slice(1)) {
      select.value = "4";
      select.dispatchEvent(new Event("change", { bubbles: true }));
    }
    submitForm(host);
    await flush();
    expect(calls.length).toBe(0);
    const firstKey = LIKERT_QUESTIONS[0].key;
    const field = host
      .querySelector(`#likert-${firstKey}`)!
      .closest(".likert-field")!;
    expect(field.querySelector(".field-error")!.textContent).toBe("required");
    expect(host.querySelector(".form-error")!.textContent).toContain(
      "Answer every five-point question",
    );
  });

  it("submits the full rubric and blocks a second submission", async () => {
    const calls: AssessmentDraft[] = [];
    const updated: ReviewCase = {
      ...fixture.cases[fixture.entropy_case_id],
      status: "in_review",
    };
    const host = render(fixture.entropy_case_id, (draft) => {
      calls.push(draft);
      return Promise.resolve(updated);
    });
    fillLikert(host, "5");
    const box = host.querySelector<HTMLInputElement>(
      "input[data-category=wrong_drug]",
    )!;
    box.checked = true;
    submitForm(host);
    await flush();
    expect(calls.length).toBe(1);
    expect(Object.keys(calls[0].likert).length).toBe(6);
    expect(calls[0].binary_flags["wrong_drug"]).toBe(true);
    expect(calls[0].reviewer_id).toBe("tester");
    // idempotent client side: the second submit never reaches the API
    submitForm(host);
    await flush();
    expect(calls.length).toBe(1);
    expect(host.querySelector<HTMLButtonElement>("button[type=submit]")!.disabled).toBe(true);
  });

  it("surfaces a conflict when the case closed meanwhile", async () => {
    const host = render(fixture.entropy_case_id, () =>
      Promise.reject(new ApiError("case_closed", "case no longer accepts assessments", 409)),
    );
    fillLikert(host);
    submitForm(host);
    await flush();
    expect(host.querySelector(".form-error")!.textContent).toContain("Conflict:");
    // the form stays usable for a corrected flow
    expect(
      host.querySelector<HTMLButtonElement>("button[type=submit]")!.disabled,
    ).toBe(false);
  });
});

describe("dual review to adjudication flow", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("conflicting assessments flip the queue badge to needs adjudication", async () => {
    // simulate the server-side transition the API performs on the second,
    // conflicting assessment (recorded fixture holds the real responses)
    let entry: QueueEntry = {
      case_id: "case-x",
      status: "in_review",
      routing: "review",
      routing_reasons: [],
      assessments: 1,
      needs_adjudication: false,
    };
    const submitConflicting = () => {
      entry = {
        ...entry,
        status: "disagreement",
        assessments: 2,
        needs_adjudication: true,
      };
      return Promise.resolve({
        ...fixture.cases[fixture.entropy_case_id],
        status: "disagreement" as const,
      });
    };
    const host = render(fixture.entropy_case_id, submitConflicting);
    fillLikert(host, "2");
    submitForm(host);
    await flush();

    const queueHost = container();
    renderQueue(queueHost, [entry], { onSelect: () => {} });
    expect(queueHost.querySelector(".needs-adjudication")).not.toBeNull();
  });

  it("adjudicator mode adds the clinically-acceptable verdict", async () => {
    const adjudications: { acceptable: boolean }[] = [];
    const host = container();
    renderReviewScreen(host, caseViewFor(fixture, fixture.disagreement_case_id), {
      reviewerId: "senior-expert",
      adjudicator: true,
      onSubmitAssessment: () => Promise.reject(new Error("not used")),
      onSubmitAdjudication: (_draft, acceptable) => {
        adjudications.push({ acceptable });
        return Promise.resolve({
          ...fixture.cases[fixture.disagreement_case_id],
          status: "adjudicated" as const,
        });
      },
    });
    const acceptable = host.querySelector<HTMLInputElement>("#clinically-acceptable")!;
    expect(acceptable).not.toBeNull();
    acceptable.checked = true;
    fillLikert(host, "3");
    submitForm(host);
    await flush();
    expect(adjudications).toEqual([{ acceptable: true }]);
  });
});
