// Browser entry point: canvas, command panel, and the live session loop.

import { SessionClient } from "./client.js";
import { ViewModel, applyServerFrame, emptyViewModel } from "./model.js";
import { lure, mode, point, posture, verbal } from "./protocol.js";
import { Throttle } from "./ratelimit.js";
import { Viewport, defaultViewport, renderFrame, screenToWorld } from "./view.js";

const BOUNDS_FALLBACK = 12;

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const g = canvas.getContext("2d")!;
const statusEl = document.getElementById("status")!;
const modeBtn = document.getElementById("mode-toggle") as HTMLButtonElement;
const toolSel = document.getElementById("tool") as HTMLSelectElement;
const textBox = document.getElementById("say") as HTMLInputElement;
const noticeEl = document.getElementById("notice")!;

let vm: ViewModel = emptyViewModel();
let boundsM = BOUNDS_FALLBACK;
let vp: Viewport = defaultViewport(canvas.width, canvas.height, boundsM);
let dragging = false;

const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
const client = new SessionClient(wsUrl);
const rodThrottle = new Throttle(100);   // lure frames at most at 10 Hz

fetch("/api/scene").then(r => r.json()).then(scene => {
  boundsM = scene.bounds_m ?? BOUNDS_FALLBACK;
  vp = defaultViewport(canvas.width, canvas.height, boundsM);
}).catch(() => {});

client.onFrame = (frame) => {
  vm = applyServerFrame(vm, frame);
  if (frame.type === "error") notice(`server: ${frame.message}`);
  if (frame.type === "ack" && frame.of === "save" && frame.detail) {
    notice(`saved ${frame.detail}`);
  }
};
client.onStatus = (connected) => {
  vm = { ...vm, connected };
};
client.onDrop = (n) => notice(`${n} frame(s) dropped while disconnected`);
client.connect();

function notice(text: string) {
  noticeEl.textContent = text;
  setTimeout(() => {
    if (noticeEl.textContent === text) noticeEl.textContent = "";
  }, 4000);
}

function canvasWorld(ev: MouseEvent): [number, number] {
  const rect = canvas.getBoundingClientRect();
  const sx = (ev.clientX - rect.left) * (canvas.width / rect.width);
  const sy = (ev.clientY - rect.top) * (canvas.height / rect.height);
  return screenToWorld(vp, sx, sy);
}

canvas.addEventListener("mousedown", (ev) => {
  if (toolSel.value === "rod") {
    dragging = true;
    const [wx, wy] = canvasWorld(ev);
    client.send(lure(wx, wy));
  }
});

canvas.addEventListener("mousemove", (ev) => {
  if (dragging && toolSel.value === "rod" && rodThrottle.allow(performance.now())) {
    const [wx, wy] = canvasWorld(ev);
    client.send(lure(wx, wy));
  }
});

window.addEventListener("mouseup", () => { dragging = false; });

canvas.addEventListener("click", (ev) => {
  if (toolSel.value === "point") {
    const [wx, wy] = canvasWorld(ev);
    client.send(point(wx, wy));
  }
});

modeBtn.addEventListener("click", () => {
  const next = vm.mode === "teach" ? "deploy" : "teach";
  client.send(mode(next));
});

for (const btn of document.querySelectorAll<HTMLButtonElement>("[data-posture]")) {
  btn.addEventListener("click", () => client.send(posture(btn.dataset.posture!)));
}

document.getElementById("send-text")!.addEventListener("click", sendText);
textBox.addEventListener("keydown", (ev) => {
  if (ev.key === "Enter") sendText();
});

function sendText() {
  const text = textBox.value.trim();
  if (text) {
    client.send(verbal(text));
    textBox.value = "";
  }
}

document.getElementById("reset")!.addEventListener("click",
  () => client.send({ type: "reset" }));
document.getElementById("save")!.addEventListener("click",
  () => client.send({ type: "save" }));

function loop() {
  renderFrame(g, vp, vm.lastState, vm.connected, boundsM);
  const r = vm.lastState?.robot;
  statusEl.textContent =
    `${vm.connected ? "connected" : "offline"} | scene ${vm.sceneId || "?"} | ` +
    `mode ${vm.mode}${vm.recording ? " (recording)" : ""}` +
    (r ? ` | robot (${r.px.toFixed(2)}, ${r.py.toFixed(2)})` +
         `${r.airborne ? " airborne" : r.standing ? " standing" : " walking"}` : "");
  modeBtn.textContent = vm.mode === "teach" ? "switch to deploy" : "switch to teach";
  requestAnimationFrame(loop);
}
requestAnimationFrame(loop);
