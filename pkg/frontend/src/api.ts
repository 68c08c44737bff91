import {
  ApiError,
  ApiErrorBody,
  CorpusOut,
  JobOut,
  ReviewOut,
  SessionOut,
  TextCardOut,
} from "./types.js";

export type FetchLike = typeof fetch;

/** Thin typed client over the /v1 HTTP interface. Each method is one call;
 *  jobs are polled until they settle. */
export class ApiClient {
  constructor(
    private readonly fetchImpl: FetchLike = fetch,
    private readonly base = "/v1",
    private readonly pollIntervalMs = 150,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(`${this.base}${path}`, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let parsed: ApiErrorBody = { code: "http_error", message: resp.statusText };
      try {
        parsed = (await resp.json()) as ApiErrorBody;
      } catch {
        /* non-JSON error body; keep the status text */
      }
      throw new ApiError(parsed.code, parsed.message, resp.status);
    }
    return (await resp.json()) as T;
  }

  getCorpus(): Promise<CorpusOut> {
    return this.request("GET", "/corpus");
  }

  async createSession(subjects: string[], materialIds: string[]): Promise<string> {
    const out = await this.request<{ session_id: string }>("POST", "/sessions", {
      subjects,
      material_ids: materialIds,
    });
    return out.session_id;
  }

  getSession(sid: string): Promise<SessionOut> {
    return this.request("GET", `/sessions/${sid}`);
  }

  async waitForJob(job: JobOut): Promise<JobOut> {
    let current = job;
    while (current.status === "pending") {
      await new Promise((r) => setTimeout(r, this.pollIntervalMs));
      current = await this.request<JobOut>("GET", `/jobs/${current.job_id}`);
    }
    if (current.status === "failed") {
      const err = current.error ?? { code: "job_failed", message: "job failed" };
      throw new ApiError(err.code, err.message, 502);
    }
    return current;
  }

  async recommendContexts(sid: string): Promise<JobOut> {
    const job = await this.request<JobOut>("POST", `/sessions/${sid}/contexts/recommend`);
    return this.waitForJob(job);
  }

  async addManualContext(sid: string, title: string, background: string): Promise<JobOut> {
    const job = await this.request<JobOut>("POST", `/sessions/${sid}/contexts/manual`, {
      title,
      background,
    });
    return this.waitForJob(job);
  }

  star(sid: string, cardId: string): Promise<{ card_id: string; state: string }> {
    return this.request("POST", `/sessions/${sid}/cards/${cardId}/star`);
  }

  unstar(sid: string, cardId: string): Promise<{ card_id: string; state: string }> {
    return this.request("POST", `/sessions/${sid}/cards/${cardId}/unstar`);
  }

  deleteCard(sid: string, cardId: string): Promise<{ card_id: string; state: string }> {
    return this.request("POST", `/sessions/${sid}/cards/${cardId}/delete`);
  }

  async find(sid: string, cardId: string, question: string): Promise<string> {
    const out = await this.request<{ answer: string }>(
      "POST",
      `/sessions/${sid}/cards/${cardId}/find`,
      { question },
    );
    return out.answer;
  }

  edit(sid: string, cardId: string, newText: string): Promise<ReviewOut> {
    return this.request("POST", `/sessions/${sid}/cards/${cardId}/edit`, {
      new_text: newText,
    });
  }

  addText(sid: string, contextCardId: string, materialId: string): Promise<TextCardOut> {
    return this.request("POST", `/sessions/${sid}/contexts/${contextCardId}/texts`, {
      material_id: materialId,
    });
  }

  async analyzeBatch(sid: string, contextCardId: string): Promise<JobOut> {
    const job = await this.request<JobOut>(
      "POST",
      `/sessions/${sid}/contexts/${contextCardId}/analyze`,
    );
    return this.waitForJob(job);
  }

  async generatePlan(sid: string, contextCardId: string, lessons: number): Promise<JobOut> {
    const job = await this.request<JobOut>("POST", `/sessions/${sid}/outcome/plan`, {
      context_card_id: contextCardId,
      expected_lesson_count: lessons,
    });
    return this.waitForJob(job);
  }

  async generateActivities(sid: string, contextCardId: string): Promise<JobOut> {
    const job = await this.request<JobOut>("POST", `/sessions/${sid}/outcome/activities`, {
      context_card_id: contextCardId,
    });
    return this.waitForJob(job);
  }

  deleteActivity(sid: string, title: string): Promise<{ deleted: string }> {
    return this.request(
      "DELETE",
      `/sessions/${sid}/outcome/activities/${encodeURIComponent(title)}`,
    );
  }

  downloadUrl(sid: string, format: "txt" | "html"): string {
    return `${this.base}/sessions/${sid}/outcome/download?format=${format}`;
  }
}
