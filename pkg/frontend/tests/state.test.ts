import { describe, expect, it } from "vitest";

import { ConsoleState, MemoryStorage } from "../src/state.js";
import { renderAlertBanner } from "../src/views.js";
import { event, feed } from "./helpers.js";

describe("feed ordering", () => {
  it("appends contiguous batches in order", () => {
    const state = new ConsoleState();
    expect(state.applyFeed(feed([event(1), event(2)]), 0)).toBe("ok");
    expect(state.applyFeed(feed([event(3)]), 2)).toBe("ok");
    expect(state.events.map((e) => e.event_id)).toEqual([1, 2, 3]);
    expect(state.lastEventId).toBe(3);
  });

  it("flags an out-of-order batch as a gap", () => {
    const state = new ConsoleState();
    state.applyFeed(feed([event(1)]), 0);
    expect(state.applyFeed(feed([event(5), event(3)]), 1)).toBe("gap");
    expect(state.events.map((e) => e.event_id)).toEqual([1]); // untouched
  });

  it("recovers from a gap with a full refetch", () => {
    const state = new ConsoleState();
    state.applyFeed(feed([event(1), event(2)]), 0);
    state.resetFeed(feed([event(1), event(2), event(3), event(4)]));
    expect(state.events.map((e) => e.event_id)).toEqual([1, 2, 3, 4]);
  });
});

describe("alert acknowledgment", () => {
  it("shows a banner while an alert is unacknowledged and clears it on ack", () => {
    const state = new ConsoleState();
    state.applyFeed(feed([event(1, "verify_reject"), event(2, "alert")], [2]), 0);
    expect(state.unacknowledgedAlerts).toEqual([2]);
    expect(renderAlertBanner(state)).toContain('data-alert-id="2"');
    state.acknowledge(2);
    expect(state.unacknowledgedAlerts).toEqual([]);
    expect(renderAlertBanner(state)).toBe("");
  });

  it("keeps acknowledgments across a reload", () => {
    const storage = new MemoryStorage();
    const before = new ConsoleState(storage);
    before.applyFeed(feed([event(2, "alert")], [2]), 0);
    before.acknowledge(2);

    const after = new ConsoleState(storage); // fresh page, same storage
    after.applyFeed(feed([event(2, "alert")], [2]), 0);
    expect(after.unacknowledgedAlerts).toEqual([]);
  });

  it("never returns an acknowledged alert to unacknowledged", () => {
    const state = new ConsoleState();
    state.applyFeed(feed([event(2, "alert")], [2]), 0);
    state.acknowledge(2);
    state.applyFeed(feed([event(3, "alert")], [2, 3]), 2);
    expect(state.unacknowledgedAlerts).toEqual([3]);
  });
});

describe("connection status", () => {
  it("starts offline, goes online on a successful poll, offline on failure", () => {
    const state = new ConsoleState();
    expect(state.connection).toBe("offline");
    state.applyFeed(feed([]), 0);
    expect(state.connection).toBe("online");
    state.markOffline();
    expect(state.connection).toBe("offline");
  });
});
