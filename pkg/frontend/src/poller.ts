/** Live event feed: poll GET /api/events?since=last_id every two seconds.
 *
 * One poll is in flight at a time; a failed poll freezes the feed and flips
 * the connection status to offline, and the next successful poll resumes
 * from the last seen id so nothing is lost across an outage.
 */

import { ApiClient } from "./api.js";
import { ConsoleState } from "./state.js";

export const POLL_INTERVAL_MS = 2000;

export class FeedPoller {
  private inFlight = false;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly client: ApiClient,
    private readonly state: ConsoleState,
    private readonly onChange: () => void = () => {},
  ) {}

  start(intervalMs = POLL_INTERVAL_MS): void {
    if (this.timer !== null) {
      return;
    }
    void this.tick();
    this.timer = setInterval(() => void this.tick(), intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** One poll cycle; exposed so tests can drive the poller synchronously. */
  async tick(): Promise<void> {
    if (this.inFlight) {
      return;
    }
    this.inFlight = true;
    try {
      const since = this.state.lastEventId;
      const response = await this.client.events(since);
      if (this.state.applyFeed(response, since) === "gap") {
        this.state.resetFeed(await this.client.events(0));
      }
      this.onChange();
    } catch {
      this.state.markOffline();
      this.onChange();
    } finally {
      this.inFlight = false;
    }
  }
}
