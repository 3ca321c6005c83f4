/** Thin typed client for the annotation service. */

import type {
  BatchResponse,
  CurveResponse,
  DeclareResponse,
  ProgressResponse,
  SlotsResponse,
  SubmitResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function fail(response: Response): Promise<never> {
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = (await response.json()) as { error?: string; detail?: unknown };
    if (body.error) message = body.error;
    else if (body.detail) message = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, message);
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.base + path);
    if (!response.ok) await fail(response);
    return (await response.json()) as T;
  }

  private async post<T>(path: string, payload: unknown): Promise<T> {
    const response = await fetch(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!response.ok) await fail(response);
    return (await response.json()) as T;
  }

  getBatch(annotator: string, maxItems: number): Promise<BatchResponse> {
    const params = new URLSearchParams({ annotator, max: String(maxItems) });
    return this.get(`/api/batch?${params}`);
  }

  submitSlot(taskId: string, annotator: string, slot: string): Promise<SubmitResponse> {
    return this.post(`/api/tasks/${encodeURIComponent(taskId)}/label`, { schema: "v1", annotator, slot });
  }

  submitNewSlot(
    taskId: string,
    annotator: string,
    name: string,
    description: string,
  ): Promise<SubmitResponse> {
    return this.post(`/api/tasks/${encodeURIComponent(taskId)}/label`, {
      schema: "v1",
      annotator,
      new_slot: { name, description },
    });
  }

  skipTask(taskId: string, annotator: string): Promise<SubmitResponse> {
    return this.post(`/api/tasks/${encodeURIComponent(taskId)}/skip`, { schema: "v1", annotator });
  }

  declareSlot(name: string, description: string): Promise<DeclareResponse> {
    return this.post("/api/slots", { schema: "v1", name, description });
  }

  progress(): Promise<ProgressResponse> {
    return this.get("/api/progress");
  }

  curve(): Promise<CurveResponse> {
    return this.get("/api/curve");
  }

  slots(): Promise<SlotsResponse> {
    return this.get("/api/slots");
  }
}
