// Probability-of-success entry for one expert. The slider travels along
// the expert's knowledge-level line and is confined to the allowed
// intervals the server reports for that level; out-of-band drags snap to
// the server's nearest admissible value. No interval arithmetic happens
// here beyond a membership check.

import { Api, ApiError } from "./api.js";
import { buildPlotModel, insideIntervals, PlotModel } from "./plot.js";
import { WorkspaceStore } from "./state.js";

export interface PosEntryViewState {
  characterizationId: string;
  expertId: string;
  scaleKind: "expert" | "global";
  lok: number | null;
  intervals: [number, number][];
  slider: number | null;
  snapped: boolean;
  plot: PlotModel | null;
  message: string | null;
}

export class PosEntryPanel {
  state: PosEntryViewState;

  constructor(
    private client: Api,
    private store: WorkspaceStore,
    characterizationId: string,
    expertId: string,
    scaleKind: "expert" | "global" = "expert",
  ) {
    this.state = {
      characterizationId,
      expertId,
      scaleKind,
      lok: null,
      intervals: [],
      slider: null,
      snapped: false,
      plot: null,
      message: null,
    };
  }

  async load(): Promise<PosEntryViewState> {
    const scale =
      this.state.scaleKind === "global"
        ? await this.client.globalScale()
        : await this.client.expertScale(this.state.expertId);
    const lok = scale.scores[this.state.characterizationId];
    if (lok === undefined) {
      this.state.message = `${this.state.characterizationId} has no score on this scale`;
      return this.state;
    }
    this.state.lok = lok;
    const [region, plotData] = await Promise.all([
      this.client.posRegion(lok),
      this.client.plotData(this.state.characterizationId),
    ]);
    this.state.intervals = region.intervals;
    this.state.plot = buildPlotModel({
      plotData,
      lok,
      intervals: region.intervals,
      entries: [],
      suggestedPos: null,
    });
    if (region.intervals.length > 0) {
      this.state.slider = region.intervals[0][0];
    }
    return this.state;
  }

  async moveSlider(pos: number): Promise<PosEntryViewState> {
    if (this.state.lok === null) return this.state;
    if (insideIntervals(pos, this.state.intervals)) {
      this.state.slider = pos;
      this.state.snapped = false;
      return this.state;
    }
    const verdict = await this.client.posValidate(this.state.lok, pos);
    this.state.slider = verdict.nearest;
    this.state.snapped = !verdict.accepted;
    return this.state;
  }

  async submit(): Promise<PosEntryViewState> {
    const { lok, slider } = this.state;
    if (lok === null || slider === null) {
      this.state.message = "nothing to submit";
      return this.state;
    }
    try {
      await this.store.mutate((version) =>
        this.client.addPosEntry(
          this.state.expertId,
          this.state.characterizationId,
          slider,
          lok,
          this.state.scaleKind,
          version,
        ),
      );
      this.state.message = `recorded ${slider.toFixed(4)} for ${this.state.characterizationId}`;
    } catch (error) {
      this.state.message = error instanceof ApiError ? error.message : String(error);
    }
    return this.state;
  }
}
