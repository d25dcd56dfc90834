// Wire protocol for the teaching session websocket. Mirrors the server's
// pydantic models; every outgoing frame is produced here and every incoming
// frame is validated here.

export const PROTOCOL_VERSION = 1;

export interface HelloFrame { type: "hello"; version: number }
export interface VerbalFrame { type: "verbal"; text: string }
export interface PointFrame { type: "point"; target: [number, number] }
export interface PostureFrame { type: "posture"; name: string }
export interface LureFrame { type: "lure"; rod: [number, number, number] }
export interface ModeFrame { type: "mode"; value: "teach" | "deploy" }
export interface ResetFrame { type: "reset" }
export interface SaveFrame { type: "save" }
export type ClientFrame =
  HelloFrame | VerbalFrame | PointFrame | PostureFrame |
  LureFrame | ModeFrame | ResetFrame | SaveFrame;

export interface RobotStateMsg {
  px: number; py: number; pz: number; yaw: number;
  speed: number; standing: boolean; airborne: boolean;
}
export interface ObstacleMsg {
  kind: string; x: number; y: number; yaw: number; dims: number[];
}
export interface ServerHello {
  type: "hello"; version: number; mode: string; scene_id: string;
}
export interface StateFrame {
  type: "state"; t: number; tick: number; robot: RobotStateMsg;
  obstacles: ObstacleMsg[]; goal: number[] | null;
  trail: [number, number][]; mode: string; recording: boolean;
}
export interface AckFrame { type: "ack"; of: string; detail: string }
export interface ErrorFrame { type: "error"; message: string }
export type ServerFrame = ServerHello | StateFrame | AckFrame | ErrorFrame;

function isNum(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function isVec(v: unknown, n: number): boolean {
  return Array.isArray(v) && v.length === n && v.every(isNum);
}

export function hello(): HelloFrame {
  return { type: "hello", version: PROTOCOL_VERSION };
}

export function verbal(text: string): VerbalFrame {
  return { type: "verbal", text };
}

export function point(wx: number, wy: number): PointFrame {
  return { type: "point", target: [wx, wy] };
}

export function posture(name: string): PostureFrame {
  return { type: "posture", name };
}

export function lure(x: number, y: number, z = 0): LureFrame {
  return { type: "lure", rod: [x, y, z] };
}

export function mode(value: "teach" | "deploy"): ModeFrame {
  return { type: "mode", value };
}

// Validates a frame built locally before it goes on the wire.
export function validClientFrame(f: ClientFrame): boolean {
  switch (f.type) {
    case "hello": return Number.isInteger(f.version);
    case "verbal": return typeof f.text === "string";
    case "point": return isVec(f.target, 2);
    case "posture": return typeof f.name === "string" && f.name.length > 0;
    case "lure": return isVec(f.rod, 3);
    case "mode": return f.value === "teach" || f.value === "deploy";
    case "reset":
    case "save": return true;
    default: return false;
  }
}

export function parseServerFrame(raw: string): ServerFrame | null {
  let msg: unknown;
  try {
    msg = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null) return null;
  const f = msg as Record<string, unknown>;
  switch (f.type) {
    case "hello":
      return isNum(f.version) && typeof f.mode === "string" &&
        typeof f.scene_id === "string" ? (msg as ServerHello) : null;
    case "state": {
      const r = f.robot as Record<string, unknown> | undefined;
      const ok = isNum(f.t) && isNum(f.tick) && r !== undefined &&
        isNum(r.px) && isNum(r.py) && isNum(r.yaw) &&
        Array.isArray(f.obstacles) && Array.isArray(f.trail) &&
        (f.goal === null || isVec(f.goal, 3)) &&
        typeof f.mode === "string" && typeof f.recording === "boolean";
      return ok ? (msg as StateFrame) : null;
    }
    case "ack":
      return typeof f.of === "string" ? (msg as AckFrame) : null;
    case "error":
      return typeof f.message === "string" ? (msg as ErrorFrame) : null;
    default:
      return null;
  }
}
