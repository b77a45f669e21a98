/** Typed client for the label service. Same origin as the served UI, so
 * the base is empty in production; tests point it at a live server.
 *
 * Calls never throw on HTTP error statuses: the review flow needs to act
 * on 404 (stale pair) and 422 (validation) explicitly, so every method
 * resolves to {status, data}.
 */

export interface IdentityCard {
  id: number;
  author: string;
  name: string;
  email: string;
  affiliation?: string;
  first_commit?: number;
  last_commit?: number;
}

export interface QueueEntry {
  pair_id: string;
  a1: IdentityCard;
  a2: IdentityCard;
  features: Record<string, number>;
  votes: boolean[];
  probability: number;
}

export interface LabelSubmission {
  pair_id: string;
  match: number;
  canonical_id?: number;
  rater: string;
}

export interface ClusterMember {
  id: number;
  author?: string;
  name?: string;
  email?: string;
  commits?: number;
}

export interface ClusterView {
  cluster_id: number;
  size: number;
  members: ClusterMember[];
  suggest_dissolve: boolean;
}

export interface ApiResult<T> {
  status: number;
  data: T;
}

async function asResult<T>(response: Response): Promise<ApiResult<T>> {
  let data: unknown = null;
  try {
    data = await response.json();
  } catch {
    data = null;
  }
  return { status: response.status, data: data as T };
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  async fetchQueue(limit = 25): Promise<ApiResult<QueueEntry[]>> {
    return asResult(await fetch(this.url(`/api/queue?limit=${limit}`)));
  }

  async submitLabel(body: LabelSubmission): Promise<ApiResult<{ stored: number; queue: number }>> {
    return asResult(
      await fetch(this.url("/api/labels"), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
  }

  async suggestions(): Promise<ApiResult<unknown[]>> {
    return asResult(await fetch(this.url("/api/suggestions")));
  }

  async retrain(): Promise<ApiResult<Record<string, number>>> {
    return asResult(await fetch(this.url("/api/retrain"), { method: "POST" }));
  }

  async clusters(minSize: number): Promise<ApiResult<ClusterView[]>> {
    return asResult(await fetch(this.url(`/api/clusters?min_size=${minSize}`)));
  }

  async splitCluster(
    clusterId: number,
    assignments: Record<string, string>,
  ): Promise<ApiResult<{ clusters: number }>> {
    return asResult(
      await fetch(this.url(`/api/clusters/${clusterId}/split`), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ assignments }),
      }),
    );
  }
}
