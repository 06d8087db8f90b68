/**
 * Pushes the offline queue and merges pulled events, so a client that was
 * offline converges on the server state. Flushing is safe to repeat: ops
 * keep their ids, so a second push of the same batch yields DUPLICATE
 * results, which settle pending entries exactly like APPLIED ones.
 */

import type { ApiClient } from "./api.js";
import { ApiError, NetworkError } from "./api.js";
import type { OfflineQueue } from "./queue.js";
import type { CachedState } from "./state.js";
import { GapError, clientMerge, emptyState, stateFromJson, stateToJson } from "./state.js";
import type { KeyValueStorage } from "./storage.js";
import { STORAGE_KEYS } from "./storage.js";
import type { RejectedOp } from "./types.js";

const PUSH_BATCH_LIMIT = 500;

export interface FlushReport {
  pushed: number;
  applied: number;
  duplicate: number;
  rejected: RejectedOp[];
  /** True when the network failed; the queue is untouched and a retry is due. */
  offline: boolean;
}

export class SyncManager {
  private readonly api: ApiClient;
  private readonly queue: OfflineQueue;
  private readonly storage: KeyValueStorage;
  state: CachedState;

  constructor(api: ApiClient, queue: OfflineQueue, storage: KeyValueStorage) {
    this.api = api;
    this.queue = queue;
    this.storage = storage;
    const cached = storage.getItem(STORAGE_KEYS.state);
    this.state = cached !== null ? stateFromJson(cached) : emptyState();
  }

  /** Stable per-install id sent with every push. */
  clientId(): string {
    let id = this.storage.getItem(STORAGE_KEYS.clientId);
    if (id === null) {
      id = crypto.randomUUID();
      this.storage.setItem(STORAGE_KEYS.clientId, id);
    }
    return id;
  }

  private persistState(): void {
    this.storage.setItem(STORAGE_KEYS.state, stateToJson(this.state));
  }

  /**
   * Push all pending ops in order, then pull to the head. On network
   * failure nothing is lost: the queue and cursor stay as they were and
   * the caller can retry after a backoff.
   */
  async flush(): Promise<FlushReport> {
    const report: FlushReport = {
      pushed: 0,
      applied: 0,
      duplicate: 0,
      rejected: [],
      offline: false,
    };
    try {
      while (this.queue.pending().length > 0) {
        const batch = this.queue.pending().slice(0, PUSH_BATCH_LIMIT);
        const outcome = await this.api.push(
          this.clientId(),
          batch.map((op) => ({ opId: op.opId, kind: op.kind, body: op.body })),
        );
        for (let i = 0; i < batch.length; i++) {
          const op = batch[i]!;
          const result = outcome.results[i]!;
          report.pushed += 1;
          if (result.status === "APPLIED") {
            report.applied += 1;
            this.queue.settle(op.opId);
          } else if (result.status === "DUPLICATE") {
            report.duplicate += 1;
            this.queue.settle(op.opId);
          } else {
            const violation = result.violation ?? "REJECTED";
            this.queue.reject(op.opId, violation, result.details ?? []);
            report.rejected.push({ ...op, violation, details: result.details ?? [] });
          }
        }
      }
      await this.pullToHead();
    } catch (error) {
      if (error instanceof NetworkError) {
        report.offline = true;
        return report;
      }
      throw error;
    }
    return report;
  }

  /** Merge new events until the server has nothing after our cursor. */
  async pullToHead(): Promise<void> {
    for (;;) {
      let page;
      try {
        page = await this.api.pull(this.state.seq);
        clientMerge(this.state, page);
      } catch (error) {
        // A stale or corrupt local cursor cannot be repaired incrementally;
        // drop the cache and replay the log from the start.
        if (error instanceof GapError || (error instanceof ApiError && error.code === "CURSOR_AHEAD")) {
          await this.fullResync();
          return;
        }
        throw error;
      }
      this.persistState();
      if (!page.hasMore) return;
    }
  }

  /** Rebuild the cache from the very first event. */
  async fullResync(): Promise<void> {
    this.state = emptyState();
    for (;;) {
      const page = await this.api.pull(this.state.seq);
      clientMerge(this.state, page);
      this.persistState();
      if (!page.hasMore) return;
    }
  }
}

/**
 * Retry helper around flush: calls it until the network cooperates,
 * doubling the wait between attempts. Returns the first online report.
 */
export async function flushWithBackoff(
  manager: SyncManager,
  options: { initialDelayMs?: number; maxAttempts?: number; sleep?: (ms: number) => Promise<void> } = {},
): Promise<FlushReport> {
  const sleep = options.sleep ?? ((ms) => new Promise((resolve) => setTimeout(resolve, ms)));
  const maxAttempts = options.maxAttempts ?? 5;
  let delay = options.initialDelayMs ?? 500;
  let report = await manager.flush();
  for (let attempt = 1; report.offline && attempt < maxAttempts; attempt++) {
    await sleep(delay);
    delay *= 2;
    report = await manager.flush();
  }
  return report;
}
