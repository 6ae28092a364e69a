import { describe, expect, it } from "vitest";

import {
  FormatError,
  decodeMgf,
  decodePgm,
  encodeMgf,
  encodePgm,
} from "../src/formats.js";

describe("pgm codec", () => {
  it("round-trips a grid", () => {
    const data = Uint16Array.from([0, 1, 513, 65535, 7, 42]);
    const grid = { height: 2, width: 3, data };
    const back = decodePgm(encodePgm(grid));
    expect(back.height).toBe(2);
    expect(back.width).toBe(3);
    expect(Array.from(back.data)).toEqual(Array.from(data));
  });

  it("emits the fixed header and big-endian samples", () => {
    const bytes = encodePgm({ height: 1, width: 2, data: Uint16Array.from([1, 513]) });
    const header = new TextDecoder().decode(bytes.subarray(0, 12));
    expect(header).toBe("P5\n2 1\n65535");
    expect(Array.from(bytes.subarray(13))).toEqual([0, 1, 2, 1]);
  });

  it("tolerates header comments and 8-bit rasters", () => {
    const text = new TextEncoder().encode("P5 #x\n# c\n2 1\n255\n");
    const bytes = new Uint8Array([...text, 9, 200]);
    const grid = decodePgm(bytes);
    expect(Array.from(grid.data)).toEqual([9, 200]);
  });

  it("rejects a wrong magic", () => {
    const bytes = new TextEncoder().encode("P6\n1 1\n255\n ");
    expect(() => decodePgm(bytes)).toThrow(FormatError);
  });

  it("rejects truncated rasters", () => {
    const bytes = new TextEncoder().encode("P5\n4 4\n65535\n\x00");
    expect(() => decodePgm(bytes)).toThrow(/truncated/);
  });
});

describe("mgf codec", () => {
  it("round-trips single and multi channel fields", () => {
    for (const channels of [1, 3]) {
      const data = new Float32Array(2 * 4 * channels);
      for (let i = 0; i < data.length; i++) data[i] = Math.fround(Math.sin(i) * 3.7);
      const back = decodeMgf(encodeMgf({ height: 2, width: 4, channels, data }));
      expect(back.channels).toBe(channels);
      expect(Array.from(back.data)).toEqual(Array.from(data));
    }
  });

  it("lays out the header as magic plus little-endian u32 triplet", () => {
    const bytes = encodeMgf({ height: 2, width: 3, channels: 1, data: new Float32Array(6) });
    expect(new TextDecoder().decode(bytes.subarray(0, 4))).toBe("MGF1");
    const view = new DataView(bytes.buffer);
    expect(view.getUint32(4, true)).toBe(2);
    expect(view.getUint32(8, true)).toBe(3);
    expect(view.getUint32(12, true)).toBe(1);
    expect(bytes.length).toBe(16 + 24);
  });

  it("rejects a wrong magic", () => {
    const bytes = encodeMgf({ height: 1, width: 1, channels: 1, data: new Float32Array(1) });
    bytes[3] = 0x32;
    expect(() => decodeMgf(bytes)).toThrow(FormatError);
  });
});
