import { FetchLike } from "../src/api.js";
import { EventsResponse, GatewayEvent } from "../src/types.js";

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

/** Records every request and replays canned responses in order. */
export function mockFetch(responses: Array<Response | Error>): {
  fetch: FetchLike;
  calls: Array<{ url: string; init?: RequestInit }>;
} {
  const calls: Array<{ url: string; init?: RequestInit }> = [];
  const queue = [...responses];
  const fetch: FetchLike = (url, init) => {
    calls.push({ url, init });
    const next = queue.shift();
    if (next === undefined) {
      return Promise.reject(new Error("mockFetch: no response queued"));
    }
    return next instanceof Error ? Promise.reject(next) : Promise.resolve(next);
  };
  return { fetch, calls };
}

export function event(id: number, kind = "verify_accept", extra: Partial<GatewayEvent> = {}): GatewayEvent {
  return {
    event_id: id,
    timestamp: 1700000000 + id,
    kind,
    door_id: "main",
    subject_id: null,
    fused_score: null,
    details: {},
    ...extra,
  };
}

export function feed(events: GatewayEvent[], unacked: number[] = []): EventsResponse {
  return { schema_version: "1", events, unacknowledged_alerts: unacked };
}
