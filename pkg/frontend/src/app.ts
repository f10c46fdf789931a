// Page wiring. Reads workspace and server location from query parameters,
// keeps one store per page, and swaps three panels over a shared plot:
// comparison entry, individual estimate, peer review.

import { ApiError, RiskkitClient } from "./api.js";
import { ComparisonPanel, Choice, describeRelation } from "./comparisons.js";
import { PeerReviewPanel } from "./peer.js";
import { renderPlot } from "./plot.js";
import { PosEntryPanel } from "./pos.js";
import { WorkspaceStore } from "./state.js";

type Mode = "compare" | "estimate" | "review";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function option(value: string, label: string): HTMLOptionElement {
  const el = document.createElement("option");
  el.value = value;
  el.textContent = label;
  return el;
}

class App {
  client: RiskkitClient;
  store: WorkspaceStore;
  mode: Mode = "compare";
  expertId = "";
  characterizationId = "";
  comparison: ComparisonPanel | null = null;
  estimate: PosEntryPanel | null = null;
  review: PeerReviewPanel | null = null;

  constructor() {
    const params = new URLSearchParams(window.location.search);
    const base = params.get("api") ?? "";
    const workspace = params.get("workspace") ?? "default";
    this.client = new RiskkitClient(base, workspace);
    this.store = new WorkspaceStore(this.client);
    this.store.onConflict(() => this.showConflictBanner());
  }

  async start(): Promise<void> {
    await this.store.refresh();
    const summary = this.store.summary!;
    byId<HTMLSpanElement>("workspace-name").textContent = summary.id;

    const expertSelect = byId<HTMLSelectElement>("expert-select");
    expertSelect.innerHTML = "";
    for (const e of summary.experts) {
      expertSelect.appendChild(option(e.id, e.display_name));
    }
    this.expertId = summary.experts.length > 0 ? summary.experts[0].id : "";
    expertSelect.addEventListener("change", () => {
      this.expertId = expertSelect.value;
      void this.openPanels();
    });

    const charSelect = byId<HTMLSelectElement>("char-select");
    charSelect.innerHTML = "";
    for (const c of summary.characterizations) {
      charSelect.appendChild(option(c.id, `${c.id} (${c.status})`));
    }
    this.characterizationId =
      summary.characterizations.length > 0 ? summary.characterizations[0].id : "";
    charSelect.addEventListener("change", () => {
      this.characterizationId = charSelect.value;
      void this.openPanels();
    });

    for (const mode of ["compare", "estimate", "review"] as Mode[]) {
      byId<HTMLButtonElement>(`tab-${mode}`).addEventListener("click", () => {
        this.mode = mode;
        void this.openPanels();
      });
    }

    byId<HTMLButtonElement>("conflict-reload").addEventListener("click", () => {
      void this.reloadAfterConflict();
    });

    this.wireComparisonControls();
    this.wireEstimateControls();
    this.wireReviewControls();
    await this.openPanels();
  }

  showConflictBanner(): void {
    byId<HTMLDivElement>("conflict-banner").hidden = false;
  }

  async reloadAfterConflict(): Promise<void> {
    byId<HTMLDivElement>("conflict-banner").hidden = true;
    await this.store.refresh();
    await this.openPanels();
  }

  async openPanels(): Promise<void> {
    for (const mode of ["compare", "estimate", "review"] as Mode[]) {
      byId<HTMLButtonElement>(`tab-${mode}`).classList.toggle("active", mode === this.mode);
      byId<HTMLDivElement>(`panel-${mode}`).hidden = mode !== this.mode;
    }
    byId<HTMLSpanElement>("workspace-version").textContent = String(this.store.version);
    try {
      if (this.mode === "compare") await this.openComparison();
      else if (this.mode === "estimate") await this.openEstimate();
      else await this.openReview();
    } catch (error) {
      this.showStatus(error instanceof ApiError ? error.message : String(error));
    }
  }

  showStatus(text: string): void {
    byId<HTMLDivElement>("status-line").textContent = text;
  }

  // --- comparison panel ------------------------------------------------

  wireComparisonControls(): void {
    const pairB = byId<HTMLSelectElement>("pair-b");
    byId<HTMLButtonElement>("pick-similar").addEventListener("click", async () => {
      if (!this.comparison) return;
      const pair = await this.comparison.suggestPair(this.characterizationId);
      if (!pair) {
        this.showStatus("every similar characterization is already related to this one");
        return;
      }
      this.comparison.selectPair(pair[0], pair[1]);
      pairB.value = pair[1];
      this.renderComparison();
    });
    pairB.addEventListener("change", () => {
      if (!this.comparison) return;
      this.comparison.selectPair(this.characterizationId, pairB.value);
      this.renderComparison();
    });
    for (const choice of ["a_higher", "b_higher", "same"] as Choice[]) {
      byId<HTMLButtonElement>(`choice-${choice}`).addEventListener("click", async () => {
        if (!this.comparison) return;
        await this.comparison.submit(choice);
        this.renderComparison();
      });
    }
  }

  async openComparison(): Promise<void> {
    this.comparison = new ComparisonPanel(this.client, this.store, this.expertId);
    await this.comparison.load();
    const pairB = byId<HTMLSelectElement>("pair-b");
    pairB.innerHTML = "";
    for (const c of this.store.summary!.characterizations) {
      if (c.id !== this.characterizationId) pairB.appendChild(option(c.id, c.id));
    }
    if (pairB.options.length > 0) {
      this.comparison.selectPair(this.characterizationId, pairB.options[0].value);
    }
    this.renderComparison();
  }

  renderComparison(): void {
    if (!this.comparison) return;
    const state = this.comparison.state;
    byId<HTMLSpanElement>("pair-a").textContent = state.a ?? "?";
    const list = byId<HTMLUListElement>("recorded-list");
    list.innerHTML = "";
    for (const row of state.recorded) {
      const item = document.createElement("li");
      item.textContent = `${row.a} ${row.kind} ${row.b}`;
      const undo = document.createElement("button");
      undo.textContent = "remove";
      undo.addEventListener("click", async () => {
        await this.comparison!.remove(row.comparison_id);
        this.renderComparison();
      });
      item.appendChild(undo);
      list.appendChild(item);
    }
    const outcomeEl = byId<HTMLDivElement>("comparison-outcome");
    outcomeEl.innerHTML = "";
    const o = state.outcome;
    if (o.kind === "recorded" || o.kind === "implied") {
      const note = document.createElement("p");
      note.textContent =
        o.kind === "implied"
          ? "already implied by earlier judgments, nothing was added"
          : "recorded";
      outcomeEl.appendChild(note);
      const scores = document.createElement("p");
      const parts = Object.entries(o.scale.scores)
        .sort(([x], [y]) => (x < y ? -1 : 1))
        .map(([id, s]) => `${id}: ${s.toFixed(3)}`);
      scores.textContent = `updated scale: ${parts.join(", ")}`;
      outcomeEl.appendChild(scores);
    } else if (o.kind === "contradiction") {
      const head = document.createElement("p");
      head.className = "contradiction";
      head.textContent = o.rejected
        ? `rejected: ${describeRelation(o.rejected)} conflicts with what you already said`
        : "rejected: conflicts with what you already said";
      outcomeEl.appendChild(head);
      const chain = document.createElement("ul");
      chain.className = "witness";
      for (const rel of o.witness) {
        const item = document.createElement("li");
        item.textContent = describeRelation(rel);
        chain.appendChild(item);
      }
      outcomeEl.appendChild(chain);
    } else if (o.kind === "conflict" || o.kind === "error") {
      const note = document.createElement("p");
      note.textContent = o.message;
      outcomeEl.appendChild(note);
    }
  }

  // --- individual estimate panel ---------------------------------------

  wireEstimateControls(): void {
    const slider = byId<HTMLInputElement>("pos-slider");
    const readout = byId<HTMLSpanElement>("pos-readout");
    slider.addEventListener("change", async () => {
      if (!this.estimate) return;
      const state = await this.estimate.moveSlider(parseFloat(slider.value));
      if (state.slider !== null) {
        slider.value = String(state.slider);
        readout.textContent = state.slider.toFixed(4) + (state.snapped ? " (snapped)" : "");
      }
      this.renderEstimatePlot();
    });
    byId<HTMLButtonElement>("pos-submit").addEventListener("click", async () => {
      if (!this.estimate) return;
      const state = await this.estimate.submit();
      this.showStatus(state.message ?? "");
      await this.store.refresh();
    });
  }

  async openEstimate(): Promise<void> {
    this.estimate = new PosEntryPanel(
      this.client,
      this.store,
      this.characterizationId,
      this.expertId,
    );
    const state = await this.estimate.load();
    if (state.message) this.showStatus(state.message);
    const slider = byId<HTMLInputElement>("pos-slider");
    if (state.slider !== null) slider.value = String(state.slider);
    byId<HTMLSpanElement>("lok-readout").textContent =
      state.lok === null ? "?" : state.lok.toFixed(3);
    this.renderEstimatePlot();
  }

  renderEstimatePlot(): void {
    if (this.estimate?.state.plot) {
      renderPlot(byId<HTMLElement>("plot") as unknown as SVGSVGElement, this.estimate.state.plot);
    }
  }

  // --- peer review panel -----------------------------------------------

  wireReviewControls(): void {
    const input = byId<HTMLInputElement>("final-pos");
    byId<HTMLButtonElement>("final-check").addEventListener("click", async () => {
      if (!this.review) return;
      const state = await this.review.choose(parseFloat(input.value));
      if (state.chosen !== null) input.value = String(state.chosen);
    });
    byId<HTMLButtonElement>("final-submit").addEventListener("click", async () => {
      if (!this.review) return;
      const state = await this.review.recordFinal();
      this.showStatus(state.message ?? "");
      await this.store.refresh();
    });
  }

  async openReview(): Promise<void> {
    this.review = new PeerReviewPanel(this.client, this.store, this.characterizationId);
    const state = await this.review.load();
    if (state.message) this.showStatus(state.message);
    const suggestionEl = byId<HTMLSpanElement>("suggestion-readout");
    suggestionEl.textContent = state.suggestion
      ? `${state.suggestion.pos.toFixed(4)} from ${state.suggestion.entry_count} entries`
      : "no entries yet";
    if (state.chosen !== null) {
      byId<HTMLInputElement>("final-pos").value = String(state.chosen);
    }
    if (state.plot) {
      renderPlot(byId<HTMLElement>("plot-review") as unknown as SVGSVGElement, state.plot);
    }
  }
}

window.addEventListener("DOMContentLoaded", () => {
  const app = new App();
  app.start().catch((error) => {
    const line = document.getElementById("status-line");
    if (line) line.textContent = `failed to load workspace: ${error}`;
  });
});
