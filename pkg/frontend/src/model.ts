// Client-side mirror of the session: the view renders this and nothing else.

import { ServerFrame, StateFrame } from "./protocol.js";

export const TRAIL_CAP = 600;

export interface ViewModel {
  connected: boolean;
  mode: string;
  recording: boolean;
  sceneId: string;
  lastState: StateFrame | null;
  lastError: string;
  lastAck: string;
  savedPath: string;
}

export function emptyViewModel(): ViewModel {
  return { connected: false, mode: "teach", recording: false, sceneId: "",
           lastState: null, lastError: "", lastAck: "", savedPath: "" };
}

// Applies one server frame; state frames replace the mirror wholesale so the
// UI can never invent robot state.
export function applyServerFrame(vm: ViewModel, frame: ServerFrame): ViewModel {
  switch (frame.type) {
    case "hello":
      return { ...vm, sceneId: frame.scene_id, mode: frame.mode };
    case "state": {
      const trail = frame.trail.length > TRAIL_CAP
        ? frame.trail.slice(frame.trail.length - TRAIL_CAP)
        : frame.trail;
      return { ...vm, lastState: { ...frame, trail }, mode: frame.mode,
               recording: frame.recording };
    }
    case "ack": {
      const saved = frame.of === "save" ? frame.detail : vm.savedPath;
      return { ...vm, lastAck: frame.of, savedPath: saved };
    }
    case "error":
      return { ...vm, lastError: frame.message };
  }
}
