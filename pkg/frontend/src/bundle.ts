/**
 * Codec for `.tmb` map bundles (see ../../docs/bundle_format.md).
 *
 * Reading produces typed-array views over the source buffer wherever the
 * plane offset is aligned for the element type; misaligned or big-endian
 * hosts fall back to copying. Writing always serializes little-endian.
 */

import { endianness } from "node:os";

export const BUNDLE_MAGIC = Buffer.from("TXMBNDL\0", "latin1");
export const BUNDLE_VERSION = 1;

const HEADER_BYTES = 16;
const DIMS_BYTES = 16;

const KIND_LABELS = 0;
const KIND_SCORES = 1;

const MODE_CODE = { bidir: 0, msr: 1 } as const;

export type ExpressionMode = keyof typeof MODE_CODE;

type PlaneKind = "u8" | "i32" | "f32";

/** Row-major plane plus its shape descriptor. */
export interface MapBuffer<T extends Uint8Array | Int32Array | Float32Array = Uint8Array | Int32Array | Float32Array> {
  data: T;
  height: number;
  width: number;
  channels: number;
}

export interface LabelMapBuffers {
  kind: "labels";
  mode: ExpressionMode;
  height: number;
  width: number;
  textRegion: MapBuffer<Uint8Array>;
  textKernel: MapBuffer<Uint8Array>;
  trainMask: MapBuffer<Uint8Array>;
  instanceId: MapBuffer<Int32Array>;
  offsetX: MapBuffer<Float32Array>;
  offsetY: MapBuffer<Float32Array>;
  orientationX: MapBuffer<Float32Array>;
  orientationY: MapBuffer<Float32Array>;
}

export interface ScoreMapBuffers {
  kind: "scores";
  height: number;
  width: number;
  textRegion: MapBuffer<Float32Array>;
  textKernel: MapBuffer<Float32Array>;
  offsetX: MapBuffer<Float32Array>;
  offsetY: MapBuffer<Float32Array>;
  orientationX: MapBuffer<Float32Array>;
  orientationY: MapBuffer<Float32Array>;
}

export type MapBundle = LabelMapBuffers | ScoreMapBuffers;

const LABEL_PLANES: ReadonlyArray<readonly [keyof LabelMapBuffers, PlaneKind]> = [
  ["textRegion", "u8"],
  ["textKernel", "u8"],
  ["trainMask", "u8"],
  ["instanceId", "i32"],
  ["offsetX", "f32"],
  ["offsetY", "f32"],
  ["orientationX", "f32"],
  ["orientationY", "f32"],
];

const SCORE_PLANES: ReadonlyArray<readonly [keyof ScoreMapBuffers, PlaneKind]> = [
  ["textRegion", "f32"],
  ["textKernel", "f32"],
  ["offsetX", "f32"],
  ["offsetY", "f32"],
  ["orientationX", "f32"],
  ["orientationY", "f32"],
];

const ELEMENT_BYTES: Record<PlaneKind, number> = { u8: 1, i32: 4, f32: 4 };

const HOST_LITTLE_ENDIAN = endianness() === "LE";

function pad4(n: number): number {
  return (4 - (n % 4)) % 4;
}

function viewPlane(buf: Buffer, offset: number, count: number, kind: PlaneKind) {
  const byteOffset = buf.byteOffset + offset;
  if (kind === "u8") {
    return new Uint8Array(buf.buffer, byteOffset, count);
  }
  if (byteOffset % 4 === 0 && HOST_LITTLE_ENDIAN) {
    return kind === "i32"
      ? new Int32Array(buf.buffer, byteOffset, count)
      : new Float32Array(buf.buffer, byteOffset, count);
  }
  // Copy path: misaligned view or big-endian host.
  const out = kind === "i32" ? new Int32Array(count) : new Float32Array(count);
  const dv = new DataView(buf.buffer, byteOffset, count * ELEMENT_BYTES[kind]);
  for (let i = 0; i < count; i++) {
    out[i] = kind === "i32" ? dv.getInt32(i * 4, true) : dv.getFloat32(i * 4, true);
  }
  return out;
}

function planeBytes(plane: MapBuffer): Buffer {
  const data = plane.data;
  if (HOST_LITTLE_ENDIAN || data instanceof Uint8Array) {
    return Buffer.from(data.buffer, data.byteOffset, data.byteLength);
  }
  const dv = new DataView(new ArrayBuffer(data.byteLength));
  if (data instanceof Int32Array) {
    data.forEach((v, i) => dv.setInt32(i * 4, v, true));
  } else {
    (data as Float32Array).forEach((v, i) => dv.setFloat32(i * 4, v, true));
  }
  return Buffer.from(dv.buffer);
}

function expectPlane(bundle: MapBundle, name: string): MapBuffer {
  const plane = (bundle as unknown as Record<string, MapBuffer>)[name];
  if (!plane || typeof plane.height !== "number") {
    throw new Error(`bundle is missing plane ${name}`);
  }
  return plane;
}

/** Serialize a bundle to the on-disk byte layout. */
export function writeBundle(bundle: MapBundle): Buffer {
  const { height, width } = bundle;
  const planes = bundle.kind === "labels" ? LABEL_PLANES : SCORE_PLANES;
  const kind = bundle.kind === "labels" ? KIND_LABELS : KIND_SCORES;
  const flags = bundle.kind === "labels" ? MODE_CODE[bundle.mode] : 0;

  const chunks: Buffer[] = [];
  const header = Buffer.alloc(HEADER_BYTES + DIMS_BYTES);
  BUNDLE_MAGIC.copy(header, 0);
  header.writeUInt16LE(BUNDLE_VERSION, 8);
  header.writeUInt32LE(height, 16);
  header.writeUInt32LE(width, 20);
  header.writeUInt32LE(kind, 24);
  header.writeUInt32LE(flags, 28);
  chunks.push(header);

  for (const [name, planeKind] of planes) {
    const plane = expectPlane(bundle, name as string);
    const expected = height * width * plane.channels;
    if (plane.data.length !== expected) {
      throw new Error(
        `plane ${String(name)} has ${plane.data.length} elements, expected ${expected}`,
      );
    }
    const raw = planeBytes(plane);
    chunks.push(raw);
    const padding = pad4(raw.length);
    if (padding) chunks.push(Buffer.alloc(padding));
    void planeKind;
  }
  return Buffer.concat(chunks);
}

/** Parse bundle bytes into typed planes (zero-copy where alignment allows). */
export function readBundle(buf: Buffer): MapBundle {
  if (buf.length < HEADER_BYTES + DIMS_BYTES) {
    throw new Error(`bundle too short: ${buf.length} bytes`);
  }
  if (!buf.subarray(0, 8).equals(BUNDLE_MAGIC)) {
    throw new Error("bad bundle magic");
  }
  const version = buf.readUInt16LE(8);
  if (version !== BUNDLE_VERSION) {
    throw new Error(`unsupported bundle version ${version}`);
  }
  const height = buf.readUInt32LE(16);
  const width = buf.readUInt32LE(20);
  const kind = buf.readUInt32LE(24);
  const flags = buf.readUInt32LE(28);
  if (height === 0 || width === 0) {
    throw new Error(`bad bundle dimensions ${width}x${height}`);
  }
  const planes = kind === KIND_LABELS ? LABEL_PLANES : kind === KIND_SCORES ? SCORE_PLANES : null;
  if (planes === null) {
    throw new Error(`unknown bundle kind ${kind}`);
  }
  const count = height * width;

  let expected = HEADER_BYTES + DIMS_BYTES;
  for (const [, planeKind] of planes) {
    const nbytes = count * ELEMENT_BYTES[planeKind];
    expected += nbytes + pad4(nbytes);
  }
  if (buf.length !== expected) {
    throw new Error(`bundle length ${buf.length} != expected ${expected}`);
  }

  let offset = HEADER_BYTES + DIMS_BYTES;
  const fields: Record<string, MapBuffer> = {};
  for (const [name, planeKind] of planes) {
    const data = viewPlane(buf, offset, count, planeKind);
    fields[name as string] = { data, height, width, channels: 1 };
    const nbytes = count * ELEMENT_BYTES[planeKind];
    offset += nbytes + pad4(nbytes);
  }

  if (kind === KIND_LABELS) {
    const mode = (Object.keys(MODE_CODE) as ExpressionMode[]).find(
      (m) => MODE_CODE[m] === flags,
    );
    if (!mode) throw new Error(`unknown label mode flag ${flags}`);
    return { kind: "labels", mode, height, width, ...fields } as LabelMapBuffers;
  }
  return { kind: "scores", height, width, ...fields } as ScoreMapBuffers;
}

/** Treat label buffers as perfect score maps (masks cast to 0/1 floats). */
export function labelsToScores(labels: LabelMapBuffers): ScoreMapBuffers {
  const toFloat = (plane: MapBuffer<Uint8Array>): MapBuffer<Float32Array> => ({
    data: Float32Array.from(plane.data),
    height: plane.height,
    width: plane.width,
    channels: plane.channels,
  });
  return {
    kind: "scores",
    height: labels.height,
    width: labels.width,
    textRegion: toFloat(labels.textRegion),
    textKernel: toFloat(labels.textKernel),
    offsetX: labels.offsetX,
    offsetY: labels.offsetY,
    orientationX: labels.orientationX,
    orientationY: labels.orientationY,
  };
}
