import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { extractPanels } from "../src/annotated.js";
import type { CaseView, QueueEntry, ReviewCase } from "../src/types.js";

export interface Fixture {
  token: string;
  mismatch_case_id: string;
  entropy_case_id: string;
  disagreement_case_id: string;
  queue: { cases: QueueEntry[] };
  queue_pending: { cases: QueueEntry[] };
  cases: Record<string, ReviewCase>;
  annotated: Record<string, string>;
}

const here = dirname(fileURLToPath(import.meta.url));

export function loadFixture(): Fixture {
  const raw = readFileSync(join(here, "..", "fixtures", "recorded_api.json"), "utf-8");
  return JSON.parse(raw) as Fixture;
}

export function caseViewFor(fixture: Fixture, caseId: string): CaseView {
  const panels = extractPanels(fixture.annotated[caseId]);
  return {
    caseData: fixture.cases[caseId],
    sourceHtml: panels.sourceHtml,
    targetHtml: panels.targetHtml,
  };
}

export function container(): HTMLElement {
  const el = document.createElement("div");
  document.body.appendChild(el);
  return el;
}

export async function flush(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
}

/** UTF-8 byte slice of a string, mirroring the server's span offsets. */
export function byteSlice(text: string, start: number, end: number): string {
  const bytes = new TextEncoder().encode(text);
  return new TextDecoder().decode(bytes.slice(start, end));
}
