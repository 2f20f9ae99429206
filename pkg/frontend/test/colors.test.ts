import { describe, expect, it } from "vitest";

import { STATUS_COLOR, colorOf, isSpotStatus } from "../src/shared/colors.js";

describe("status color mapping", () => {
  it("matches the gateway bulb table exactly", () => {
    expect(STATUS_COLOR).toEqual({ closed: "red", occupied: "yellow", free: "green" });
  });

  it("is total over the status enum", () => {
    for (const status of ["free", "occupied", "closed"] as const) {
      expect(["green", "yellow", "red"]).toContain(colorOf(status));
    }
  });

  it("rejects anything outside the enum", () => {
    expect(isSpotStatus("purple")).toBe(false);
    expect(isSpotStatus(undefined)).toBe(false);
    expect(isSpotStatus("occupied")).toBe(true);
  });
});
