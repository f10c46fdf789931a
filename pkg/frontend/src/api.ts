// Typed client for the riskkit HTTP API. Every number the UI shows comes
// out of these payloads; nothing is recomputed on the client.

export interface Relation {
  kind: "lt" | "eq";
  a: string;
  b: string;
}

export interface ErrorEnvelope {
  error: {
    code: string;
    message: string;
    details: Record<string, unknown>;
  };
}

export class ApiError extends Error {
  code: string;
  status: number;
  details: Record<string, unknown>;

  constructor(status: number, envelope: ErrorEnvelope["error"]) {
    super(envelope.message);
    this.status = status;
    this.code = envelope.code;
    this.details = envelope.details ?? {};
  }

  get witness(): Relation[] {
    return (this.details.witness as Relation[]) ?? [];
  }

  get rejected(): Relation | null {
    return (this.details.rejected as Relation) ?? null;
  }
}

export interface WorkspaceSummary {
  id: string;
  version: number;
  experts: { id: string; display_name: string }[];
  characterizations: {
    id: string;
    prospect_id: string;
    risk_factor_id: string;
    answers: Record<string, string>;
    status: string;
  }[];
  records: Record<string, { global_lok: number | null; consensus_pos: number | null }>;
  comparisons: Record<
    string,
    { comparison_id: string; kind: string; a: string; b: string }[]
  >;
  pos_entries: {
    expert_id: string;
    characterization_id: string;
    pos: number;
    lok_used: number;
    scale_kind: string;
  }[];
}

export interface ScalePayload {
  kind: "expert" | "global";
  expert_id: string | null;
  scores: Record<string, number>;
  objective: number;
  threshold: number;
  reference: Record<string, number>;
  version: number;
  consensus_levels?: Record<string, number>;
  consensus_objective?: number;
}

export interface ClosureEdge {
  from: string;
  to: string;
  kind: "gt" | "eq";
}

export interface ComparisonListing {
  version: number;
  comparisons: { comparison_id: string; kind: string; a: string; b: string }[];
  closure: ClosureEdge[];
}

export interface RegionIntervals {
  version: number;
  lok: number;
  intervals: [number, number][];
}

export interface PosValidation {
  version: number;
  accepted: boolean;
  nearest: number;
}

export interface PosConsensus {
  version: number;
  characterization_id: string;
  pos: number;
  global_lok: number;
  entry_count: number;
  expert_ids: string[];
}

export interface PlotPoint {
  characterization_id: string;
  similarity: number;
  pos: number;
  lok: number;
}

export interface PlotData {
  version: number;
  region: { left: [number, number][]; right: [number, number][] };
  points: PlotPoint[];
}

export interface SimilarRow {
  characterization_id: string;
  similarity: number;
  status: string;
  global_lok: number | null;
  consensus_pos: number | null;
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  const body = await response.json();
  if (!response.ok) {
    if (body && body.error) {
      throw new ApiError(response.status, body.error);
    }
    throw new Error(`request failed with status ${response.status}`);
  }
  return body as T;
}

function post(payload: unknown, expertId?: string): RequestInit {
  const headers: Record<string, string> = { "Content-Type": "application/json" };
  if (expertId) headers["X-Expert-Id"] = expertId;
  return { method: "POST", headers, body: JSON.stringify(payload) };
}

// Structural method surface of the client, so panels can be driven by a
// test double without the class's private fields getting in the way.
export type Api = Pick<
  RiskkitClient,
  | "workspace"
  | "expertScale"
  | "globalScale"
  | "comparisons"
  | "addComparison"
  | "removeComparison"
  | "posRegion"
  | "posValidate"
  | "addPosEntry"
  | "posConsensus"
  | "recordAssessment"
  | "similar"
  | "plotData"
>;

export class RiskkitClient {
  constructor(
    private base: string,
    private workspaceId: string,
  ) {}

  private url(path: string): string {
    return `${this.base}/workspaces/${this.workspaceId}${path}`;
  }

  workspace(): Promise<WorkspaceSummary> {
    return request(this.url(""));
  }

  expertScale(expertId: string): Promise<ScalePayload> {
    return request(this.url(`/experts/${expertId}/lok-scale`));
  }

  globalScale(): Promise<ScalePayload> {
    return request(this.url("/global-lok-scale"));
  }

  comparisons(expertId: string): Promise<ComparisonListing> {
    return request(this.url(`/experts/${expertId}/comparisons`));
  }

  addComparison(
    expertId: string,
    relation: Relation,
    expectedVersion: number,
  ): Promise<{ version: number; comparison_id: string | null; implied: boolean }> {
    return request(
      this.url(`/experts/${expertId}/comparisons`),
      post({ ...relation, expected_version: expectedVersion }, expertId),
    );
  }

  removeComparison(
    expertId: string,
    comparisonId: string,
    expectedVersion: number,
  ): Promise<{ version: number }> {
    return request(
      this.url(
        `/experts/${expertId}/comparisons/${comparisonId}?expected_version=${expectedVersion}`,
      ),
      { method: "DELETE", headers: { "X-Expert-Id": expertId } },
    );
  }

  posRegion(lok: number): Promise<RegionIntervals> {
    return request(this.url(`/pos/region?lok=${lok}`));
  }

  posValidate(lok: number, pos: number): Promise<PosValidation> {
    return request(this.url("/pos/validate"), post({ lok, pos }));
  }

  addPosEntry(
    expertId: string,
    characterizationId: string,
    pos: number,
    lokUsed: number,
    scaleKind: string,
    expectedVersion: number,
  ): Promise<{ version: number }> {
    return request(
      this.url("/pos/entries"),
      post(
        {
          expert_id: expertId,
          characterization_id: characterizationId,
          pos,
          lok_used: lokUsed,
          scale_kind: scaleKind,
          expected_version: expectedVersion,
        },
        expertId,
      ),
    );
  }

  posConsensus(characterizationId: string): Promise<PosConsensus> {
    return request(
      this.url("/pos/consensus"),
      post({ characterization_id: characterizationId }),
    );
  }

  recordAssessment(
    characterizationId: string,
    globalLok: number,
    consensusPos: number,
    expectedVersion: number,
  ): Promise<{ version: number }> {
    return request(
      this.url("/assessments"),
      post({
        characterization_id: characterizationId,
        global_lok: globalLok,
        consensus_pos: consensusPos,
        expected_version: expectedVersion,
      }),
    );
  }

  similar(characterizationId: string, k = 5): Promise<{ version: number; similar: SimilarRow[] }> {
    return request(this.url(`/characterizations/${characterizationId}/similar?k=${k}`));
  }

  plotData(characterizationId: string, k = 5): Promise<PlotData> {
    return request(this.url(`/characterizations/${characterizationId}/plot-data?k=${k}`));
  }
}
