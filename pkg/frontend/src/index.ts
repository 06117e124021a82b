export { ApiClient, ApiError, ValidationError } from "./api.js";
export type { FetchLike } from "./api.js";
export { ConsoleState, MemoryStorage } from "./state.js";
export type { FeedResult, KeyValueStorage } from "./state.js";
export { FeedPoller, POLL_INTERVAL_MS } from "./poller.js";
export * from "./types.js";
export * from "./validation.js";
export * from "./views.js";
