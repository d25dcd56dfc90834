// Top-down scene rendering and the world <-> screen mapping.

import { ObstacleMsg, StateFrame } from "./protocol.js";

export interface Viewport {
  width: number;        // canvas pixels
  height: number;
  scale: number;        // pixels per meter
  cx: number;           // world point at the canvas center
  cy: number;
}

export function defaultViewport(width: number, height: number,
                                boundsM: number): Viewport {
  const scale = Math.min(width, height) / boundsM;
  return { width, height, scale, cx: 0, cy: 0 };
}

// World +x -> screen right, world +y -> screen up (canvas y flipped).
export function worldToScreen(vp: Viewport, wx: number, wy: number): [number, number] {
  return [
    vp.width / 2 + (wx - vp.cx) * vp.scale,
    vp.height / 2 - (wy - vp.cy) * vp.scale,
  ];
}

export function screenToWorld(vp: Viewport, sx: number, sy: number): [number, number] {
  return [
    vp.cx + (sx - vp.width / 2) / vp.scale,
    vp.cy - (sy - vp.height / 2) / vp.scale,
  ];
}

const OBSTACLE_FILL: Record<string, string> = {
  box: "#8d6e63",
  tire: "#455a64",
  distractor_square: "#b0a48e",
  distractor_circle: "#a0aab4",
};

function drawObstacle(g: CanvasRenderingContext2D, vp: Viewport, o: ObstacleMsg) {
  g.save();
  const [sx, sy] = worldToScreen(vp, o.x, o.y);
  g.translate(sx, sy);
  g.rotate(-o.yaw);
  g.fillStyle = OBSTACLE_FILL[o.kind] ?? "#999";
  g.strokeStyle = "#37474f";
  if (o.kind === "tire" || o.kind === "distractor_circle") {
    const r = o.dims[0] * vp.scale;
    g.beginPath();
    g.arc(0, 0, r, 0, 2 * Math.PI);
    g.fill();
    g.stroke();
  } else {
    const w = o.dims[0] * vp.scale;
    const l = o.dims[1] * vp.scale;
    g.fillRect(-w / 2, -l / 2, w, l);
    g.strokeRect(-w / 2, -l / 2, w, l);
  }
  g.restore();
}

export function renderFrame(g: CanvasRenderingContext2D, vp: Viewport,
                            state: StateFrame | null, connected: boolean,
                            boundsM: number) {
  g.clearRect(0, 0, vp.width, vp.height);
  // arena
  const [ax, ay] = worldToScreen(vp, -boundsM / 2, boundsM / 2);
  const side = boundsM * vp.scale;
  g.fillStyle = "#f5f2ea";
  g.fillRect(ax, ay, side, side);
  g.strokeStyle = "#c9c2b2";
  g.strokeRect(ax, ay, side, side);
  if (!state) return;

  for (const o of state.obstacles) drawObstacle(g, vp, o);

  // trail
  if (state.trail.length > 1) {
    g.beginPath();
    const [tx, ty] = worldToScreen(vp, state.trail[0][0], state.trail[0][1]);
    g.moveTo(tx, ty);
    for (const [wx, wy] of state.trail) {
      const [sx, sy] = worldToScreen(vp, wx, wy);
      g.lineTo(sx, sy);
    }
    g.strokeStyle = "rgba(46, 125, 50, 0.55)";
    g.lineWidth = 2;
    g.stroke();
    g.lineWidth = 1;
  }

  // goal marker
  if (state.goal) {
    const [gx, gy] = worldToScreen(vp, state.goal[0], state.goal[1]);
    g.strokeStyle = "#d84315";
    g.beginPath();
    g.arc(gx, gy, 7, 0, 2 * Math.PI);
    g.moveTo(gx - 10, gy);
    g.lineTo(gx + 10, gy);
    g.moveTo(gx, gy - 10);
    g.lineTo(gx, gy + 10);
    g.stroke();
  }

  // robot: airborne robots cast a lifted shadow-circle, grounded ones a wedge
  const r = state.robot;
  const [rx, ry] = worldToScreen(vp, r.px, r.py);
  g.save();
  g.translate(rx, ry);
  g.rotate(-r.yaw);
  const size = 0.28 * vp.scale;
  g.fillStyle = r.airborne ? "#7b1fa2" : r.standing ? "#1565c0" : "#2e7d32";
  g.beginPath();
  g.moveTo(size, 0);
  g.lineTo(-0.6 * size, 0.6 * size);
  g.lineTo(-0.3 * size, 0);
  g.lineTo(-0.6 * size, -0.6 * size);
  g.closePath();
  g.fill();
  g.restore();

  if (!connected) {
    g.fillStyle = "rgba(0,0,0,0.45)";
    g.fillRect(0, 0, vp.width, 34);
    g.fillStyle = "#fff";
    g.font = "14px sans-serif";
    g.fillText("disconnected - showing last state", 10, 22);
  }
}
