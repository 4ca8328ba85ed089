import { describe, expect, it } from "vitest";

import { darkness, distanceScale, markerColor } from "../src/shading.js";

describe("darkness mapping", () => {
  it("is 1 at distance zero", () => {
    expect(darkness(0, 1)).toBe(1);
    expect(darkness(0, 0.37)).toBe(1);
  });

  it("is strictly decreasing in distance", () => {
    const scale = 0.8;
    let prev = darkness(0, scale);
    for (let i = 1; i <= 50; i++) {
      const d = (i / 50) * 2 * scale;
      const cur = darkness(d, scale);
      expect(cur).toBeLessThan(prev);
      prev = cur;
    }
  });

  it("stays in (0, 1]", () => {
    for (const d of [0, 0.1, 0.5, 1, 3, 100]) {
      const v = darkness(d, 1);
      expect(v).toBeGreaterThan(0);
      expect(v).toBeLessThanOrEqual(1);
    }
  });

  it("degenerate scale falls back to full darkness", () => {
    expect(darkness(0.5, 0)).toBe(1);
  });
});

describe("marker colors", () => {
  it("on-axis points are black regardless of distance", () => {
    expect(markerColor(0.9, 1, true)).toBe("rgb(0,0,0)");
  });

  it("closer projected points are darker (lower channel values)", () => {
    const parse = (c: string) => c.match(/\d+/g)!.map(Number);
    const near = parse(markerColor(0.05, 1, false));
    const far = parse(markerColor(0.9, 1, false));
    // the green and blue channels whiten with distance
    expect(near[1]).toBeLessThan(far[1]);
    expect(near[2]).toBeLessThan(far[2]);
  });
});

describe("distance scale", () => {
  it("uses the largest distance", () => {
    expect(distanceScale([0.2, 0.7, 0.4])).toBe(0.7);
  });
  it("handles empty and all-zero input", () => {
    expect(distanceScale([])).toBe(1);
    expect(distanceScale([0, 0])).toBe(1);
  });
});
