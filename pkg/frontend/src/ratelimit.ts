// Outgoing frame discipline: rod drags are throttled to the broadcast rate
// and frames sent while disconnected wait briefly for a reconnect.

export class Throttle {
  private last = -Infinity;

  constructor(private minIntervalMs: number) {}

  // True when a frame may be sent at time `nowMs`.
  allow(nowMs: number): boolean {
    if (nowMs - this.last >= this.minIntervalMs) {
      this.last = nowMs;
      return true;
    }
    return false;
  }
}

export interface QueuedFrame {
  payload: string;
  queuedAtMs: number;
}

export class OfflineQueue {
  private items: QueuedFrame[] = [];

  constructor(private maxAgeMs = 1000) {}

  push(payload: string, nowMs: number): void {
    this.items.push({ payload, queuedAtMs: nowMs });
  }

  // Frames that survived the wait; expired ones are dropped and counted.
  drain(nowMs: number): { send: string[]; dropped: number } {
    const send: string[] = [];
    let dropped = 0;
    for (const it of this.items) {
      if (nowMs - it.queuedAtMs <= this.maxAgeMs) send.push(it.payload);
      else dropped += 1;
    }
    this.items = [];
    return { send, dropped };
  }

  expire(nowMs: number): number {
    const before = this.items.length;
    this.items = this.items.filter(it => nowMs - it.queuedAtMs <= this.maxAgeMs);
    return before - this.items.length;
  }

  get length(): number {
    return this.items.length;
  }
}
