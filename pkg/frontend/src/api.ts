/** Thin typed client over the gateway's JSON API.
 *
 * The fetch implementation is injectable so tests can run without a
 * network; the console performs no recognition math, it only relays
 * what the API returns.
 */

import {
  EnrollResponse,
  EventsResponse,
  IdentifyResponse,
  ReportResponse,
  SpcResponse,
  SubjectsResponse,
  VerifyResponse,
} from "./types.js";
import { EnrollForm, validateEnrollForm } from "./validation.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

/** Thrown before any request when client-side validation fails. */
export class ValidationError extends Error {
  constructor(readonly errors: string[]) {
    super(errors.join("; "));
    this.name = "ValidationError";
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchImpl(this.baseUrl + path, init);
    const payload = await res.json();
    if (!res.ok) {
      // FastAPI error bodies carry the message under "detail"
      throw new ApiError(res.status, String(payload.detail ?? res.status));
    }
    return payload as T;
  }

  /** Validates the form first; no request leaves the client on invalid input. */
  enroll(form: EnrollForm): Promise<EnrollResponse> {
    const errors = validateEnrollForm(form);
    if (errors.length > 0) {
      return Promise.reject(new ValidationError(errors));
    }
    return this.request<EnrollResponse>("POST", "/api/enroll", {
      subject_id: form.subjectId,
      display_name: form.displayName,
      pin: form.pin,
      images: form.images,
    });
  }

  verify(subjectId: string, pin: string, image: string, doorId = "main"): Promise<VerifyResponse> {
    return this.request<VerifyResponse>("POST", "/api/verify", {
      subject_id: subjectId,
      pin,
      image,
      door_id: doorId,
    });
  }

  identify(image: string, doorId = "main"): Promise<IdentifyResponse> {
    return this.request<IdentifyResponse>("POST", "/api/identify", { image, door_id: doorId });
  }

  events(since = 0): Promise<EventsResponse> {
    return this.request<EventsResponse>("GET", `/api/events?since=${since}`);
  }

  report(tFrom: number, tTo: number): Promise<ReportResponse> {
    return this.request<ReportResponse>("GET", `/api/reports?t_from=${tFrom}&t_to=${tTo}`);
  }

  spc(window = 20): Promise<SpcResponse> {
    return this.request<SpcResponse>("GET", `/api/spc?window=${window}`);
  }

  ackAlert(eventId: number): Promise<{ acknowledged: number }> {
    return this.request<{ acknowledged: number }>("POST", `/api/alerts/${eventId}/ack`);
  }

  subjects(): Promise<SubjectsResponse> {
    return this.request<SubjectsResponse>("GET", "/api/subjects");
  }
}
