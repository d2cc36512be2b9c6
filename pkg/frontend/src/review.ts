// Review screen: side-by-side annotated panels, layer toggles, the rubric
// form, and submission. In adjudicator mode the same rubric is reused plus
// the final "clinically acceptable for reporting" verdict.

import {
  applyLayerVisibility,
  defaultLayerState,
  renderLegend,
  type LayerState,
} from "./annotated.js";
import { ApiError } from "./api.js";
import { BINARY_CATEGORIES, LIKERT_QUESTIONS, descriptionFor } from "./rubric.js";
import type { AssessmentDraft, CaseView, ReviewCase } from "./types.js";

export interface ReviewScreenOptions {
  reviewerId: string;
  adjudicator?: boolean;
  onSubmitAssessment: (draft: AssessmentDraft) => Promise<ReviewCase>;
  onSubmitAdjudication?: (
    draft: AssessmentDraft,
    clinicallyAcceptable: boolean,
  ) => Promise<ReviewCase>;
  onBack?: () => void;
}

function summaryLine(view: CaseView): string {
  const report = view.caseData.report;
  const parts = [`routing: ${report.routing}`];
  if (report.routing_reasons.length) {
    parts.push(`reasons: ${report.routing_reasons.join(", ")}`);
  }
  if (report.tluq) {
    parts.push(`case entropy: ${report.tluq.case_entropy.toFixed(3)}`);
  }
  if (report.mismatch) {
    const unmatched =
      report.mismatch.unmatched_source_drug_ids.length +
      report.mismatch.unmatched_target_drug_ids.length +
      report.mismatch.unmatched_source_ae_ids.length +
      report.mismatch.unmatched_target_ae_ids.length;
    parts.push(`unmatched terms: ${unmatched}`);
  }
  return parts.join(" · ");
}

export function renderReviewScreen(
  container: Element,
  view: CaseView,
  options: ReviewScreenOptions,
): void {
  container.innerHTML = "";
  const caseData = view.caseData;

  const heading = document.createElement("h2");
  heading.textContent = `Case ${caseData.case_id}`;
  container.appendChild(heading);

  if (options.onBack) {
    const back = document.createElement("a");
    back.href = "#/queue";
    back.className = "back-link";
    back.textContent = "← back to queue";
    back.addEventListener("click", (event) => {
      event.preventDefault();
      options.onBack!();
    });
    container.appendChild(back);
  }

  const summary = document.createElement("p");
  summary.className = "case-summary";
  summary.textContent = summaryLine(view);
  container.appendChild(summary);

  const statusBadge = document.createElement("span");
  statusBadge.className = `badge status-${caseData.status}`;
  statusBadge.textContent = caseData.status;
  container.appendChild(statusBadge);

  // annotated panels with toggleable layers
  const legendHost = document.createElement("div");
  container.appendChild(legendHost);

  const panels = document.createElement("div");
  panels.className = "panels";
  const sourcePanel = document.createElement("div");
  sourcePanel.className = "panel source";
  sourcePanel.innerHTML = `<h3>Source</h3><div class="text">${view.sourceHtml}</div>`;
  const targetPanel = document.createElement("div");
  targetPanel.className = "panel target";
  targetPanel.innerHTML = `<h3>Target</h3><div class="text">${view.targetHtml}</div>`;
  panels.appendChild(sourcePanel);
  panels.appendChild(targetPanel);
  container.appendChild(panels);

  const layerState: LayerState = defaultLayerState();
  const refreshLayers = () => applyLayerVisibility(panels, layerState);
  renderLegend(legendHost, layerState, (layer, enabled) => {
    layerState[layer] = enabled;
    refreshLayers();
  });
  refreshLayers();

  container.appendChild(renderAssessmentForm(options));
}

function renderAssessmentForm(options: ReviewScreenOptions): HTMLFormElement {
  const form = document.createElement("form");
  form.className = "assessment-form";
  form.noValidate = true;

  const title = document.createElement("h3");
  title.textContent = options.adjudicator ? "Adjudication" : "Your assessment";
  form.appendChild(title);

  const selects = new Map<string, HTMLSelectElement>();
  const messages = new Map<string, HTMLElement>();

  for (const question of LIKERT_QUESTIONS) {
    const field = document.createElement("div");
    field.className = "field likert-field";
    const label = document.createElement("label");
    label.textContent = question.label;
    label.htmlFor = `likert-${question.key}`;
    field.appendChild(label);

    const select = document.createElement("select");
    select.id = `likert-${question.key}`;
    select.dataset.question = question.key;
    const placeholder = document.createElement("option");
    placeholder.value = "";
    placeholder.textContent = "— select —";
    select.appendChild(placeholder);
    for (let score = 5; score >= 1; score--) {
      const option = document.createElement("option");
      option.value = String(score);
      option.textContent = String(score);
      option.title = descriptionFor(question, score); // hover text
      select.appendChild(option);
    }
    field.appendChild(select);
    selects.set(question.key, select);

    const message = document.createElement("span");
    message.className = "field-error";
    field.appendChild(message);
    messages.set(question.key, message);

    form.appendChild(field);
  }

  const checkboxes = new Map<string, HTMLInputElement>();
  const flagsBlock = document.createElement("fieldset");
  flagsBlock.className = "binary-flags";
  const legend = document.createElement("legend");
  legend.textContent = "Error categories observed";
  flagsBlock.appendChild(legend);
  for (const category of BINARY_CATEGORIES) {
    const label = document.createElement("label");
    label.className = "binary-field";
    const box = document.createElement("input");
    box.type = "checkbox";
    box.dataset.category = category.key;
    label.appendChild(box);
    label.appendChild(document.createTextNode(` ${category.label}`));
    flagsBlock.appendChild(label);
    checkboxes.set(category.key, box);
  }
  form.appendChild(flagsBlock);

  const freeTextField = document.createElement("div");
  freeTextField.className = "field";
  const freeTextLabel = document.createElement("label");
  freeTextLabel.textContent = "Notes (optional)";
  freeTextLabel.htmlFor = "free-text";
  const freeText = document.createElement("textarea");
  freeText.id = "free-text";
  freeTextField.appendChild(freeTextLabel);
  freeTextField.appendChild(freeText);
  form.appendChild(freeTextField);

  let acceptableBox: HTMLInputElement | null = null;
  if (options.adjudicator) {
    const label = document.createElement("label");
    label.className = "clinically-acceptable";
    acceptableBox = document.createElement("input");
    acceptableBox.type = "checkbox";
    acceptableBox.id = "clinically-acceptable";
    label.appendChild(acceptableBox);
    label.appendChild(
      document.createTextNode(" Clinically acceptable for reporting"),
    );
    form.appendChild(label);
  }

  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = options.adjudicator ? "Submit adjudication" : "Submit assessment";
  submit.disabled = true;
  form.appendChild(submit);

  const formError = document.createElement("p");
  formError.className = "form-error";
  form.appendChild(formError);

  let submitted = false; // client-side idempotence: block re-submit after success

  const likertComplete = () =>
    LIKERT_QUESTIONS.every((q) => selects.get(q.key)!.value !== "");

  const refreshSubmitState = () => {
    if (!submitted) submit.disabled = !likertComplete();
  };
  for (const select of selects.values()) {
    select.addEventListener("change", () => {
      messages.get(select.dataset.question!)!.textContent = "";
      refreshSubmitState();
    });
  }
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (submitted) return;
    let blocked = false;
    for (const question of LIKERT_QUESTIONS) {
      const select = selects.get(question.key)!;
      const message = messages.get(question.key)!;
      if (select.value === "") {
        message.textContent = "required";
        blocked = true;
      } else {
        message.textContent = "";
      }
    }
    if (blocked) {
      formError.textContent = "Answer every five-point question before submitting.";
      return;
    }
    const draft: AssessmentDraft = {
      reviewer_id: options.reviewerId,
      likert: Object.fromEntries(
        LIKERT_QUESTIONS.map((q) => [q.key, Number(selects.get(q.key)!.value)]),
      ),
      binary_flags: Object.fromEntries(
        BINARY_CATEGORIES.map((c) => [c.key, checkboxes.get(c.key)!.checked]),
      ),
      free_text: freeText.value ? freeText.value : null,
    };
    submit.disabled = true;
    const submission = options.adjudicator
      ? options.onSubmitAdjudication!(draft, acceptableBox!.checked)
      : options.onSubmitAssessment(draft);
    submission
      .then((updated) => {
        submitted = true;
        formError.textContent = "";
        form.classList.add("submitted");
        submit.textContent = `Submitted — case is now ${updated.status}`;
      })
      .catch((err) => {
        submit.disabled = false;
        if (err instanceof ApiError) {
          formError.textContent =
            err.code === "case_closed" || err.code === "duplicate_reviewer"
              ? `Conflict: ${err.message}`
              : err.message;
        } else {
          formError.textContent = String(err);
        }
      });
  });

  return form;
}
