/** Console state container.
 *
 * The event feed is strictly ordered by event_id and survives reconnects:
 * polling resumes from the last seen id, and a gap in ids signals that the
 * whole feed must be refetched from zero.  Alert acknowledgments are kept
 * in persistent storage so an acknowledged alert never comes back after a
 * page reload.
 */

import { ConnectionStatus, EventsResponse, GatewayEvent } from "./types.js";

/** The subset of window.localStorage the console needs, injectable for tests. */
export interface KeyValueStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export class MemoryStorage implements KeyValueStorage {
  private items = new Map<string, string>();
  getItem(key: string): string | null {
    return this.items.get(key) ?? null;
  }
  setItem(key: string, value: string): void {
    this.items.set(key, value);
  }
}

const ACK_KEY = "iris-console.acked-alerts";

export type FeedResult = "ok" | "gap";

export class ConsoleState {
  readonly events: GatewayEvent[] = [];
  connection: ConnectionStatus = "offline";
  private serverUnacked: number[] = [];
  private acked: Set<number>;

  constructor(private readonly storage: KeyValueStorage = new MemoryStorage()) {
    const saved = storage.getItem(ACK_KEY);
    this.acked = new Set(saved ? (JSON.parse(saved) as number[]) : []);
  }

  get lastEventId(): number {
    return this.events.length > 0 ? this.events[this.events.length - 1].event_id : 0;
  }

  /** Alerts the supervisor still has to deal with. */
  get unacknowledgedAlerts(): number[] {
    return this.serverUnacked.filter((id) => !this.acked.has(id));
  }

  /**
   * Merge one poll response into the feed.  Returns "gap" when the batch
   * does not continue the feed contiguously, in which case the caller must
   * refetch from since=0 (the feed itself is left untouched).
   */
  applyFeed(response: EventsResponse, since: number): FeedResult {
    const batch = response.events;
    for (let i = 1; i < batch.length; i++) {
      if (batch[i].event_id <= batch[i - 1].event_id) {
        return "gap";
      }
    }
    if (batch.length > 0 && since === this.lastEventId && batch[0].event_id <= this.lastEventId) {
      return "gap";
    }
    this.events.push(...batch.filter((e) => e.event_id > this.lastEventId));
    this.serverUnacked = response.unacknowledged_alerts;
    this.connection = "online";
    return "ok";
  }

  /** Replace the whole feed (recovery path after a gap). */
  resetFeed(response: EventsResponse): void {
    this.events.length = 0;
    this.events.push(...response.events);
    this.serverUnacked = response.unacknowledged_alerts;
    this.connection = "online";
  }

  markOffline(): void {
    this.connection = "offline";
  }

  /** Record a successful /api/alerts/{id}/ack; survives reload via storage. */
  acknowledge(eventId: number): void {
    this.acked.add(eventId);
    this.storage.setItem(ACK_KEY, JSON.stringify([...this.acked].sort((a, b) => a - b)));
  }
}
