/** Decoding of the server's base64 binary PGM (P5) images. */

export interface GrayImage {
  width: number;
  height: number;
  /** row-major 0..255 */
  pixels: Uint8Array;
}

function base64ToBytes(b64: string): Uint8Array {
  if (typeof atob === "function") {
    const bin = atob(b64);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
    return out;
  }
  // Node (tests) — reached without DOM atob
  const nodeBuffer = (
    globalThis as { Buffer?: { from(s: string, enc: string): Uint8Array } }
  ).Buffer;
  if (nodeBuffer) return new Uint8Array(nodeBuffer.from(b64, "base64"));
  throw new Error("no base64 decoder available");
}

export function decodePgm(b64: string): GrayImage {
  const bytes = base64ToBytes(b64);
  // header: "P5\n<w> <h>\n<maxval>\n" followed by raw bytes
  let pos = 0;
  const token = (): string => {
    while (bytes[pos] === 0x20 || bytes[pos] === 0x0a) pos++;
    const start = pos;
    while (pos < bytes.length && bytes[pos] !== 0x20 && bytes[pos] !== 0x0a) pos++;
    return String.fromCharCode(...bytes.subarray(start, pos));
  };
  const magic = token();
  if (magic !== "P5") throw new Error(`not a binary PGM (magic ${magic})`);
  const width = Number(token());
  const height = Number(token());
  const maxval = Number(token());
  pos++; // the single whitespace byte after maxval
  if (!Number.isFinite(width) || !Number.isFinite(height) || maxval !== 255) {
    throw new Error("malformed PGM header");
  }
  const pixels = bytes.subarray(pos, pos + width * height);
  if (pixels.length !== width * height) throw new Error("truncated PGM payload");
  return { width, height, pixels: new Uint8Array(pixels) };
}
