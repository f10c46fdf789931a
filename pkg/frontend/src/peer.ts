// Peer review of one characterization: every expert's entry drawn as a
// circle on the global knowledge-level line, the server's consensus
// suggestion as a distinct marker, and a facilitator control to record
// the final assessment. The suggested value comes straight from
// POST pos/consensus; picking a different one goes through the same
// snap-to-allowed flow as individual entry.

import { Api, ApiError, PosConsensus } from "./api.js";
import { buildPlotModel, insideIntervals, PlotModel } from "./plot.js";
import { WorkspaceStore } from "./state.js";

export interface PeerReviewViewState {
  characterizationId: string;
  globalLok: number | null;
  intervals: [number, number][];
  entries: { expert_id: string; pos: number }[];
  suggestion: PosConsensus | null;
  chosen: number | null;
  plot: PlotModel | null;
  message: string | null;
}

export class PeerReviewPanel {
  state: PeerReviewViewState;

  constructor(
    private client: Api,
    private store: WorkspaceStore,
    characterizationId: string,
  ) {
    this.state = {
      characterizationId,
      globalLok: null,
      intervals: [],
      entries: [],
      suggestion: null,
      chosen: null,
      plot: null,
      message: null,
    };
  }

  async load(): Promise<PeerReviewViewState> {
    const cid = this.state.characterizationId;
    const scale = await this.client.globalScale();
    const lok = scale.scores[cid];
    if (lok === undefined) {
      this.state.message = `${cid} has no global score yet`;
      return this.state;
    }
    this.state.globalLok = lok;
    this.state.entries = this.store
      .entriesFor(cid)
      .map((e) => ({ expert_id: e.expert_id, pos: e.pos }));
    try {
      this.state.suggestion = await this.client.posConsensus(cid);
    } catch (error) {
      // no entries yet is a legitimate state, anything else surfaces
      if (error instanceof ApiError && error.code === "nothing_to_solve") {
        this.state.suggestion = null;
      } else {
        throw error;
      }
    }
    const [region, plotData] = await Promise.all([
      this.client.posRegion(lok),
      this.client.plotData(cid),
    ]);
    this.state.intervals = region.intervals;
    this.state.chosen = this.state.suggestion ? this.state.suggestion.pos : null;
    this.state.plot = buildPlotModel({
      plotData,
      lok,
      intervals: region.intervals,
      entries: this.state.entries,
      suggestedPos: this.state.suggestion ? this.state.suggestion.pos : null,
    });
    return this.state;
  }

  async choose(pos: number): Promise<PeerReviewViewState> {
    if (this.state.globalLok === null) return this.state;
    if (insideIntervals(pos, this.state.intervals)) {
      this.state.chosen = pos;
    } else {
      const verdict = await this.client.posValidate(this.state.globalLok, pos);
      this.state.chosen = verdict.nearest;
    }
    return this.state;
  }

  async recordFinal(): Promise<PeerReviewViewState> {
    const { characterizationId, globalLok, chosen } = this.state;
    if (globalLok === null || chosen === null) {
      this.state.message = "no value chosen";
      return this.state;
    }
    try {
      await this.store.mutate((version) =>
        this.client.recordAssessment(characterizationId, globalLok, chosen, version),
      );
      this.state.message = `assessment recorded at ${chosen.toFixed(4)}`;
    } catch (error) {
      this.state.message = error instanceof ApiError ? error.message : String(error);
    }
    return this.state;
  }
}
