/** Thin typed client for the review service HTTP API. */

import type { Correction, DocList, DocPayload, HiaRecord } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function asJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = (await res.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep statusText
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export class ReviewApi {
  constructor(
    private base: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  listDocs(split = "", page = 0, pageSize = 50): Promise<DocList> {
    const q = new URLSearchParams({
      split,
      page: String(page),
      page_size: String(pageSize),
    });
    return this.fetchFn(`${this.base}/api/docs?${q}`).then((r) => asJson<DocList>(r));
  }

  getDoc(id: string): Promise<DocPayload> {
    return this.fetchFn(`${this.base}/api/docs/${encodeURIComponent(id)}`).then((r) =>
      asJson<DocPayload>(r),
    );
  }

  getHia(id: string): Promise<HiaRecord> {
    return this.fetchFn(`${this.base}/api/docs/${encodeURIComponent(id)}/hia`).then((r) =>
      asJson<HiaRecord>(r),
    );
  }

  postCorrection(c: Correction): Promise<{ status: string; doc_id: string }> {
    return this.fetchFn(`${this.base}/api/corrections`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(c),
    }).then((r) => asJson<{ status: string; doc_id: string }>(r));
  }

  getReport(): Promise<unknown> {
    return this.fetchFn(`${this.base}/api/report`).then((r) => asJson<unknown>(r));
  }
}
