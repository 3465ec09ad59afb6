import { ApiClient } from "./api.js";
import { buildRenderModel, colorOf, drawScatter, hitTest } from "./scatter.js";
import { AuditStore } from "./state.js";
import type { ViewState } from "./state.js";

const api = new ApiClient("");
const store = new AuditStore(api);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

const canvas = el<HTMLCanvasElement>("scatter");
const ctx = canvas.getContext("2d")!;
const banner = el<HTMLDivElement>("banner");
const toast = el<HTMLDivElement>("toast");
const legend = el<HTMLDivElement>("legend");
const kSlider = el<HTMLInputElement>("k-slider");
const kValue = el<HTMLSpanElement>("k-value");
const flaggedToggle = el<HTMLInputElement>("flagged-only");
const neighborPanel = el<HTMLDivElement>("neighbors");
const selectedInfo = el<HTMLDivElement>("selected-info");
const classifyInput = el<HTMLTextAreaElement>("classify-text");
const classifyButton = el<HTMLButtonElement>("classify-submit");
const classifyOut = el<HTMLDivElement>("classify-result");
const relabelSelect = el<HTMLSelectElement>("relabel-label");
const relabelButton = el<HTMLButtonElement>("relabel-submit");
const addText = el<HTMLTextAreaElement>("add-text");
const addLabel = el<HTMLInputElement>("add-label");
const addButton = el<HTMLButtonElement>("add-submit");
const metaLine = el<HTMLDivElement>("meta-line");

let model = buildRenderModel([], new Set(), [], canvas.width, canvas.height);

function render(state: ViewState): void {
  banner.style.display = state.banner ? "block" : "none";
  if (state.banner) {
    banner.textContent = state.banner + " ";
    const retry = document.createElement("button");
    retry.textContent = "retry";
    retry.onclick = () => void store.init();
    banner.appendChild(retry);
  }
  toast.style.display = state.toast ? "block" : "none";
  toast.textContent = state.toast ?? "";

  metaLine.textContent = state.ready
    ? `${state.indexSize} indexed docs, k=${state.k}`
    : "not connected";

  model = buildRenderModel(
    state.points, state.flagged, state.vocab, canvas.width, canvas.height,
  );
  if (model.empty && state.ready) {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.fillStyle = "#666";
    ctx.fillText("projection is empty", 20, 30);
  } else {
    drawScatter(ctx, model, state.selectedId, state.showFlaggedOnly);
  }

  kSlider.max = String(state.kMax);
  kSlider.value = String(state.k);
  kValue.textContent = String(state.k);

  legend.innerHTML = "";
  state.vocab.forEach((name, i) => {
    const chip = document.createElement("span");
    chip.className = "chip";
    chip.innerHTML = `<i style="background:${colorOf(i)}"></i>${name}`;
    legend.appendChild(chip);
  });

  relabelSelect.innerHTML = "";
  for (const name of state.vocab) {
    const opt = document.createElement("option");
    opt.value = name;
    opt.textContent = name;
    relabelSelect.appendChild(opt);
  }
  relabelButton.disabled = state.selectedId === null;

  selectedInfo.textContent =
    state.selectedId === null ? "click a point" : `doc ${state.selectedId}`;
  neighborPanel.innerHTML = "";
  for (const row of state.neighbors) {
    const div = document.createElement("div");
    div.className = "neighbor";
    div.innerHTML =
      `<b>${row.label}</b> <small>d=${row.distance.toFixed(4)} #${row.id}</small>` +
      `<p>${escapeHtml(row.text)}</p>`;
    div.onclick = () => void store.select(row.id);
    neighborPanel.appendChild(div);
  }

  classifyButton.disabled = classifyInput.value.trim().length === 0;
  const result = state.classifyResult;
  if (result) {
    const votes = Object.entries(result.prediction.votes)
      .map(([name, count]) => `${name}:${count}`)
      .join(" ");
    const rows = result.explanation.neighbors
      .map(
        (n) =>
          `<div class="neighbor clickable" data-id="${n.id}">` +
          `<b>${n.label}</b> <small>d=${n.distance.toFixed(4)}</small>` +
          `<p>${escapeHtml(n.text)}</p></div>`,
      )
      .join("");
    classifyOut.innerHTML =
      `<div>predicted <b>${result.prediction.label}</b> (votes ${votes})</div>` + rows;
    classifyOut.querySelectorAll<HTMLElement>(".clickable").forEach((node) => {
      node.onclick = () => void store.select(Number(node.dataset.id));
    });
  } else {
    classifyOut.textContent = "";
  }
}

store.subscribe(render);

canvas.addEventListener("click", (event) => {
  const rect = canvas.getBoundingClientRect();
  const id = hitTest(
    model,
    event.clientX - rect.left,
    event.clientY - rect.top,
    10,
    store.state.showFlaggedOnly,
  );
  if (id !== null) {
    void store.select(id);
  }
});

kSlider.addEventListener("change", () => void store.setK(Number(kSlider.value)));
flaggedToggle.addEventListener("change", () => store.setFlaggedOnly(flaggedToggle.checked));
classifyInput.addEventListener("input", () => {
  classifyButton.disabled = classifyInput.value.trim().length === 0;
});
classifyButton.addEventListener("click", () => {
  void store.classify(classifyInput.value);
});
relabelButton.addEventListener("click", () => {
  if (store.state.selectedId !== null) {
    void store.relabel(store.state.selectedId, relabelSelect.value);
  }
});
addButton.addEventListener("click", () => {
  const text = addText.value.trim();
  const label = addLabel.value.trim();
  if (text && label) {
    void store.addDocument(text, label).then((ok) => {
      if (ok) {
        addText.value = "";
      }
    });
  }
});

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

void store.init();
