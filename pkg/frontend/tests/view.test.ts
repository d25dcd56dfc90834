import { describe, expect, it } from "vitest";

import { defaultViewport, screenToWorld, worldToScreen } from "../src/view.js";

describe("world <-> screen mapping", () => {
  const vp = defaultViewport(720, 720, 12);

  it("world origin lands at the canvas center", () => {
    expect(worldToScreen(vp, 0, 0)).toEqual([360, 360]);
  });

  it("is invertible within one pixel's world size", () => {
    const pixelWorld = 1 / vp.scale;
    for (const [wx, wy] of [[2, 0], [-3.5, 4.2], [5.99, -5.99], [0.123, 0.456]]) {
      const [sx, sy] = worldToScreen(vp, wx, wy);
      const [bx, by] = screenToWorld(vp, sx, sy);
      expect(Math.abs(bx - wx)).toBeLessThan(pixelWorld);
      expect(Math.abs(by - wy)).toBeLessThan(pixelWorld);
    }
  });

  it("world +y goes up on screen", () => {
    const [, syLow] = worldToScreen(vp, 0, -1);
    const [, syHigh] = worldToScreen(vp, 0, 1);
    expect(syHigh).toBeLessThan(syLow);
  });

  it("fits the whole arena on the canvas", () => {
    const [sx0, sy0] = worldToScreen(vp, -6, 6);
    const [sx1, sy1] = worldToScreen(vp, 6, -6);
    expect(sx0).toBeGreaterThanOrEqual(0);
    expect(sy0).toBeGreaterThanOrEqual(0);
    expect(sx1).toBeLessThanOrEqual(720);
    expect(sy1).toBeLessThanOrEqual(720);
  });
});
