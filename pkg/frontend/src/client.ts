// Websocket session client with the version handshake and offline queueing.

import { ClientFrame, PROTOCOL_VERSION, ServerFrame, hello,
         parseServerFrame, validClientFrame } from "./protocol.js";
import { OfflineQueue } from "./ratelimit.js";

export type FrameHandler = (frame: ServerFrame) => void;
export type StatusHandler = (connected: boolean) => void;

export class SessionClient {
  private ws: WebSocket | null = null;
  private queue = new OfflineQueue(1000);
  connected = false;
  onFrame: FrameHandler = () => {};
  onStatus: StatusHandler = () => {};
  onDrop: (n: number) => void = () => {};

  constructor(private url: string) {}

  connect(): void {
    this.ws = new WebSocket(this.url);
    this.ws.onopen = () => {
      this.ws!.send(JSON.stringify(hello()));
      this.connected = true;
      this.onStatus(true);
      const { send, dropped } = this.queue.drain(performance.now());
      for (const payload of send) this.ws!.send(payload);
      if (dropped > 0) this.onDrop(dropped);
    };
    this.ws.onmessage = (ev) => {
      const frame = parseServerFrame(String(ev.data));
      if (frame) this.onFrame(frame);
    };
    this.ws.onclose = () => {
      this.connected = false;
      this.onStatus(false);
    };
    this.ws.onerror = () => {
      this.connected = false;
      this.onStatus(false);
    };
  }

  send(frame: ClientFrame): boolean {
    if (!validClientFrame(frame)) return false;
    const payload = JSON.stringify(frame);
    if (this.connected && this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(payload);
      return true;
    }
    this.queue.push(payload, performance.now());
    setTimeout(() => {
      const n = this.queue.expire(performance.now());
      if (n > 0) this.onDrop(n);
    }, 1100);
    return false;
  }

  close(): void {
    this.ws?.close();
  }
}

export { PROTOCOL_VERSION };
