// Pairwise comparison entry. The expert answers one question per pair:
// which characterization deserves the higher knowledge level, or are they
// on par. Outcomes mirror the server's verdict verbatim, including the
// witness chain when a judgment closes a cycle.

import { Api, ApiError, Relation, ScalePayload } from "./api.js";
import { WorkspaceStore } from "./state.js";

export type Choice = "a_higher" | "b_higher" | "same";

export type ComparisonOutcome =
  | { kind: "idle" }
  | { kind: "recorded"; comparisonId: string; scale: ScalePayload }
  | { kind: "implied"; scale: ScalePayload }
  | { kind: "contradiction"; rejected: Relation | null; witness: Relation[] }
  | { kind: "conflict"; message: string }
  | { kind: "error"; message: string };

export interface ComparisonRow {
  comparison_id: string;
  kind: string;
  a: string;
  b: string;
}

export interface ComparisonViewState {
  expertId: string;
  a: string | null;
  b: string | null;
  recorded: ComparisonRow[];
  outcome: ComparisonOutcome;
}

export function relationFor(choice: Choice, a: string, b: string): Relation {
  // lt means "first argument sits below the second", so "a higher" is b < a
  switch (choice) {
    case "a_higher":
      return { kind: "lt", a: b, b: a };
    case "b_higher":
      return { kind: "lt", a, b };
    case "same":
      return { kind: "eq", a, b };
  }
}

export class ComparisonPanel {
  state: ComparisonViewState;

  constructor(
    private client: Api,
    private store: WorkspaceStore,
    expertId: string,
  ) {
    this.state = { expertId, a: null, b: null, recorded: [], outcome: { kind: "idle" } };
  }

  async load(): Promise<ComparisonViewState> {
    const listing = await this.client.comparisons(this.state.expertId);
    this.state.recorded = listing.comparisons;
    return this.state;
  }

  selectPair(a: string, b: string): ComparisonViewState {
    this.state.a = a;
    this.state.b = b;
    this.state.outcome = { kind: "idle" };
    return this.state;
  }

  // The shortcut pair: the target plus its most similar characterization
  // that this expert has not yet related to it, directly or through the
  // closure. Falls back to null when every neighbour is already ordered.
  async suggestPair(targetId: string): Promise<[string, string] | null> {
    const [similar, listing] = await Promise.all([
      this.client.similar(targetId, 10),
      this.client.comparisons(this.state.expertId),
    ]);
    const related = new Set<string>();
    for (const edge of listing.closure) {
      if (edge.from === targetId) related.add(edge.to);
      if (edge.to === targetId) related.add(edge.from);
    }
    for (const row of similar.similar) {
      if (row.characterization_id === targetId) continue;
      if (!related.has(row.characterization_id)) {
        return [targetId, row.characterization_id];
      }
    }
    return null;
  }

  async submit(choice: Choice): Promise<ComparisonViewState> {
    const { a, b, expertId } = this.state;
    if (!a || !b) {
      this.state.outcome = { kind: "error", message: "pick a pair first" };
      return this.state;
    }
    const relation = relationFor(choice, a, b);
    try {
      const result = await this.store.mutate((version) =>
        this.client.addComparison(expertId, relation, version),
      );
      const scale = await this.client.expertScale(expertId);
      this.state.outcome = result.implied
        ? { kind: "implied", scale }
        : { kind: "recorded", comparisonId: result.comparison_id as string, scale };
      await this.load();
    } catch (error) {
      this.state.outcome = outcomeForError(error);
    }
    return this.state;
  }

  async remove(comparisonId: string): Promise<ComparisonViewState> {
    try {
      await this.store.mutate((version) =>
        this.client.removeComparison(this.state.expertId, comparisonId, version),
      );
      this.state.outcome = { kind: "idle" };
      await this.load();
    } catch (error) {
      this.state.outcome = outcomeForError(error);
    }
    return this.state;
  }
}

export function outcomeForError(error: unknown): ComparisonOutcome {
  if (error instanceof ApiError) {
    if (error.code === "contradiction") {
      return { kind: "contradiction", rejected: error.rejected, witness: error.witness };
    }
    if (error.code === "version_conflict") {
      return { kind: "conflict", message: error.message };
    }
    return { kind: "error", message: error.message };
  }
  return { kind: "error", message: String(error) };
}

// Text form of a relation used by the witness list. Chains read top to
// bottom as "is known less well than" / "is on par with".
export function describeRelation(relation: Relation): string {
  const verb = relation.kind === "eq" ? "is on par with" : "is known less well than";
  return `${relation.a} ${verb} ${relation.b}`;
}
