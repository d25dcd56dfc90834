// Headless protocol check against a running server: connect, switch to
// deploy, point at a target, and verify the robot closes in on it within
// 20 broadcast frames.
//
// Usage: node dist/scripts/headless_check.js [ws://host:port/ws] [tx] [ty]

import WebSocket from "ws";

import { hello, mode, parseServerFrame, point, verbal } from "../src/protocol.js";

const url = process.argv[2] ?? "ws://127.0.0.1:8000/ws";
const tx = Number(process.argv[3] ?? 2.0);
const ty = Number(process.argv[4] ?? 0.0);

const ws = new WebSocket(url);
let startDist: number | null = null;
let frames = 0;
let deployed = false;

function dist(px: number, py: number): number {
  return Math.hypot(px - tx, py - ty);
}

const timer = setTimeout(() => {
  console.error("FAIL: timed out waiting for broadcasts");
  process.exit(1);
}, 30000);

ws.on("open", () => {
  ws.send(JSON.stringify(hello()));
  ws.send(JSON.stringify(mode("deploy")));
  ws.send(JSON.stringify(verbal("go there")));
  ws.send(JSON.stringify(point(tx, ty)));
});

ws.on("message", (data: Buffer) => {
  const frame = parseServerFrame(data.toString());
  if (!frame) return;
  if (frame.type === "error") {
    console.error(`FAIL: server error: ${frame.message}`);
    process.exit(1);
  }
  if (frame.type === "ack" && frame.of === "mode") deployed = true;
  if (frame.type !== "state" || !deployed) return;
  const d = dist(frame.robot.px, frame.robot.py);
  if (startDist === null) {
    startDist = d;
    return;
  }
  frames += 1;
  if (frames >= 20) {
    clearTimeout(timer);
    const moved = startDist - d;
    if (moved > 0.05) {
      console.log(`OK: displacement toward target ${moved.toFixed(3)} m ` +
                  `over ${frames} frames (${startDist.toFixed(2)} -> ${d.toFixed(2)})`);
      process.exit(0);
    }
    console.error(`FAIL: no displacement toward target (${startDist.toFixed(2)} -> ${d.toFixed(2)})`);
    process.exit(1);
  }
});

ws.on("error", (e: Error) => {
  console.error(`FAIL: ${e.message}`);
  process.exit(1);
});
