/** Typed client for the annotation service.
 *
 * Every response is validated with zod before use, and every exchange is
 * appended to `log` so a session can be recorded and replayed elsewhere.
 */

import {
  AnnotationsResponseSchema,
  BevResponseSchema,
  FramesResponseSchema,
  RecoverResponseSchema,
  type AnnotationRecord,
  type BevPoints,
  type RecoverRequest,
  type RecoverResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export interface ExchangeLogEntry {
  method: string;
  path: string;
  body: unknown;
  response: unknown;
}

type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  readonly log: ExchangeLogEntry[] = [];
  private readonly fetchFn: FetchFn;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchFn,
  ) {
    // bind through an arrow: a bare `fetch` reference loses its receiver
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const text = await resp.text();
    if (!resp.ok) {
      throw new ApiError(resp.status, text);
    }
    const parsed: unknown = JSON.parse(text);
    this.log.push({ method, path, body: body ?? null, response: parsed });
    return parsed;
  }

  async listFrames(): Promise<string[]> {
    const data = await this.request("GET", "/frames");
    return FramesResponseSchema.parse(data).frames;
  }

  async getBev(frame: string, decimate?: number): Promise<BevPoints> {
    const query = decimate === undefined ? "" : `?decimate=${decimate}`;
    const data = await this.request("GET", `/frames/${frame}/bev${query}`);
    return BevResponseSchema.parse(data);
  }

  async getAnnotations(frame: string): Promise<AnnotationRecord[]> {
    const data = await this.request("GET", `/frames/${frame}/annotations`);
    return AnnotationsResponseSchema.parse(data).records;
  }

  async putAnnotations(frame: string, records: AnnotationRecord[]): Promise<number> {
    const data = await this.request("PUT", `/frames/${frame}/annotations`, { records });
    return AnnotationsResponseSchema.parse(data).records.length;
  }

  async recover(frame: string, body: RecoverRequest): Promise<RecoverResponse> {
    const data = await this.request("POST", `/frames/${frame}/recover`, body);
    return RecoverResponseSchema.parse(data);
  }
}
