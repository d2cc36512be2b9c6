// Server-rendered annotation handling: extract the two text panels from the
// /annotated endpoint's HTML and toggle highlight layers without ever
// recomputing a span client-side.

export interface PanelHtml {
  sourceHtml: string;
  targetHtml: string;
}

export function extractPanels(annotatedPage: string): PanelHtml {
  const doc = new DOMParser().parseFromString(annotatedPage, "text/html");
  const source = doc.querySelector(".panel.source .text");
  const target = doc.querySelector(".panel.target .text");
  if (!source || !target) {
    throw new Error("annotated page is missing its source/target panels");
  }
  return { sourceHtml: source.innerHTML, targetHtml: target.innerHTML };
}

export type LayerName = "drug" | "ae" | "entropy";

export const LAYER_CLASSES: Record<LayerName, string[]> = {
  drug: ["drug-matched", "drug-unmatched"],
  ae: ["ae-matched", "ae-unmatched"],
  entropy: ["tluq-l1", "tluq-l2", "tluq-l3"],
};

export type LayerState = Record<LayerName, boolean>;

export function defaultLayerState(): LayerState {
  return { drug: true, ae: true, entropy: true };
}

// A hidden layer gets .layer-off on each of its spans (background cleared by
// CSS); the spans stay in the DOM so text flow never changes.
export function applyLayerVisibility(root: Element, state: LayerState): void {
  for (const layer of Object.keys(LAYER_CLASSES) as LayerName[]) {
    for (const cssClass of LAYER_CLASSES[layer]) {
      for (const el of Array.from(root.querySelectorAll(`.${cssClass}`))) {
        el.classList.toggle("layer-off", !state[layer]);
      }
    }
  }
}

export function visibleAnnotationCount(root: Element, cssClass: string): number {
  return Array.from(root.querySelectorAll(`.${cssClass}`)).filter(
    (el) => !el.classList.contains("layer-off"),
  ).length;
}

// The four entity categories of the legend plus the three entropy bands.
export const LEGEND_ITEMS: { cssClass: string; label: string; layer: LayerName }[] = [
  { cssClass: "drug-matched", label: "matched drug", layer: "drug" },
  { cssClass: "drug-unmatched", label: "unmatched drug", layer: "drug" },
  { cssClass: "ae-matched", label: "matched AE", layer: "ae" },
  { cssClass: "ae-unmatched", label: "unmatched AE", layer: "ae" },
  { cssClass: "tluq-l1", label: "entropy band L1", layer: "entropy" },
  { cssClass: "tluq-l2", label: "entropy band L2", layer: "entropy" },
  { cssClass: "tluq-l3", label: "entropy band L3", layer: "entropy" },
];

export function renderLegend(
  container: Element,
  state: LayerState,
  onToggle: (layer: LayerName, enabled: boolean) => void,
): void {
  container.innerHTML = "";
  const list = document.createElement("div");
  list.className = "legend";
  for (const item of LEGEND_ITEMS) {
    const chip = document.createElement("span");
    chip.className = `legend-chip ${item.cssClass}`;
    chip.textContent = item.label;
    list.appendChild(chip);
  }
  container.appendChild(list);

  const toggles = document.createElement("div");
  toggles.className = "layer-toggles";
  const layers: { layer: LayerName; label: string }[] = [
    { layer: "drug", label: "Drug matches" },
    { layer: "ae", label: "AE matches" },
    { layer: "entropy", label: "Entropy bands" },
  ];
  for (const { layer, label } of layers) {
    const wrapper = document.createElement("label");
    wrapper.className = "layer-toggle";
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = state[layer];
    box.dataset.layer = layer;
    box.addEventListener("change", () => onToggle(layer, box.checked));
    wrapper.appendChild(box);
    wrapper.appendChild(document.createTextNode(` ${label}`));
    toggles.appendChild(wrapper);
  }
  container.appendChild(toggles);
}
