import { describe, expect, it } from "vitest";

import { decodePgm } from "../src/pgm.js";

export function makePgm(width: number, height: number, pixels: number[]): string {
  const header = Buffer.from(`P5\n${width} ${height}\n255\n`, "ascii");
  return Buffer.concat([header, Buffer.from(pixels)]).toString("base64");
}

describe("decodePgm", () => {
  it("decodes header and payload", () => {
    const img = decodePgm(makePgm(2, 2, [0, 128, 255, 64]));
    expect(img.width).toBe(2);
    expect(img.height).toBe(2);
    expect([...img.pixels]).toEqual([0, 128, 255, 64]);
  });

  it("rejects non-PGM data", () => {
    expect(() => decodePgm(Buffer.from("PNG....").toString("base64"))).toThrow(/magic/);
  });

  it("rejects truncated payloads", () => {
    expect(() => decodePgm(makePgm(4, 4, [1, 2, 3]))).toThrow(/truncated/);
  });
});
