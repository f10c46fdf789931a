// Workspace snapshot cache plus the optimistic-concurrency protocol: every
// mutation sends the version we last saw, and a version_conflict answer
// flips the store into "stale" until the user confirms a refetch.

import { Api, ApiError, WorkspaceSummary } from "./api.js";

export type ConflictListener = (message: string) => void;

export class WorkspaceStore {
  summary: WorkspaceSummary | null = null;
  private conflictListeners: ConflictListener[] = [];

  constructor(readonly client: Api) {}

  get version(): number {
    if (!this.summary) throw new Error("workspace not loaded");
    return this.summary.version;
  }

  onConflict(listener: ConflictListener): void {
    this.conflictListeners.push(listener);
  }

  async refresh(): Promise<WorkspaceSummary> {
    this.summary = await this.client.workspace();
    return this.summary;
  }

  // Wraps a mutation callback. Version conflicts are reported to the
  // banner and rethrown so callers can abort their flow; the caller
  // retries manually after the user accepts the refetch.
  async mutate<T extends { version: number }>(
    action: (expectedVersion: number) => Promise<T>,
  ): Promise<T> {
    try {
      const result = await action(this.version);
      if (this.summary) this.summary.version = result.version;
      return result;
    } catch (error) {
      if (error instanceof ApiError && error.code === "version_conflict") {
        for (const listener of this.conflictListeners) {
          listener(error.message);
        }
      }
      throw error;
    }
  }

  entriesFor(characterizationId: string): { expert_id: string; pos: number; lok_used: number }[] {
    if (!this.summary) return [];
    return this.summary.pos_entries.filter(
      (e) => e.characterization_id === characterizationId,
    );
  }
}
