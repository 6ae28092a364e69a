/** Binary grid and field codecs: 16-bit PGM (P5) and MGF1 float fields. */

const MGF_MAGIC = 0x4d474631; // "MGF1" big-endian byte order

export class FormatError extends Error {}

export interface Grid {
  height: number;
  width: number;
  /** Row-major instance or class ids. */
  data: Uint16Array;
}

export interface Field {
  height: number;
  width: number;
  channels: number;
  /** Row-major values, channels fastest. */
  data: Float32Array;
}

export function encodePgm(grid: Grid): Uint8Array {
  const { height, width, data } = grid;
  if (data.length !== height * width) {
    throw new FormatError(`grid data length ${data.length} != ${height}x${width}`);
  }
  const header = new TextEncoder().encode(`P5\n${width} ${height}\n65535\n`);
  const out = new Uint8Array(header.length + data.length * 2);
  out.set(header, 0);
  const view = new DataView(out.buffer, header.length);
  for (let i = 0; i < data.length; i++) {
    view.setUint16(i * 2, data[i], false); // big-endian samples
  }
  return out;
}

export function decodePgm(bytes: Uint8Array): Grid {
  let pos = 0;
  const isSpace = (c: number) => c === 0x20 || c === 0x09 || c === 0x0a || c === 0x0d;
  const token = (): string => {
    while (pos < bytes.length) {
      if (bytes[pos] === 0x23) {
        while (pos < bytes.length && bytes[pos] !== 0x0a) pos++;
      } else if (isSpace(bytes[pos])) {
        pos++;
      } else {
        break;
      }
    }
    const start = pos;
    while (pos < bytes.length && !isSpace(bytes[pos])) pos++;
    if (start === pos) throw new FormatError("truncated PGM header");
    return new TextDecoder().decode(bytes.subarray(start, pos));
  };
  if (token() !== "P5") throw new FormatError("not a binary PGM (P5) stream");
  const width = Number(token());
  const height = Number(token());
  const maxval = Number(token());
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    throw new FormatError("invalid PGM dimensions");
  }
  if (!Number.isInteger(maxval) || maxval < 1 || maxval > 65535) {
    throw new FormatError("invalid PGM maxval");
  }
  pos++; // single whitespace after maxval
  const n = height * width;
  const data = new Uint16Array(n);
  if (maxval > 255) {
    if (bytes.length - pos < n * 2) throw new FormatError("truncated PGM raster");
    const view = new DataView(bytes.buffer, bytes.byteOffset + pos);
    for (let i = 0; i < n; i++) data[i] = view.getUint16(i * 2, false);
  } else {
    if (bytes.length - pos < n) throw new FormatError("truncated PGM raster");
    for (let i = 0; i < n; i++) data[i] = bytes[pos + i];
  }
  return { height, width, data };
}

export function encodeMgf(field: Field): Uint8Array {
  const { height, width, channels, data } = field;
  if (data.length !== height * width * channels) {
    throw new FormatError(
      `field data length ${data.length} != ${height}x${width}x${channels}`,
    );
  }
  const out = new Uint8Array(16 + data.length * 4);
  const view = new DataView(out.buffer);
  view.setUint32(0, MGF_MAGIC, false);
  view.setUint32(4, height, true);
  view.setUint32(8, width, true);
  view.setUint32(12, channels, true);
  for (let i = 0; i < data.length; i++) {
    view.setFloat32(16 + i * 4, data[i], true);
  }
  return out;
}

export function decodeMgf(bytes: Uint8Array): Field {
  if (bytes.length < 16) throw new FormatError("truncated MGF1 stream");
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  if (view.getUint32(0, false) !== MGF_MAGIC) {
    throw new FormatError("not an MGF1 stream");
  }
  const height = view.getUint32(4, true);
  const width = view.getUint32(8, true);
  const channels = view.getUint32(12, true);
  const n = height * width * channels;
  if (bytes.length < 16 + n * 4) throw new FormatError("truncated MGF1 payload");
  const data = new Float32Array(n);
  for (let i = 0; i < n; i++) data[i] = view.getFloat32(16 + i * 4, true);
  return { height, width, channels, data };
}
