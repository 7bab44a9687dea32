/**
 * Node bindings for the textmaps label-map codec.
 *
 * Four entry points cross the process boundary to the native core:
 * {@link encode}, {@link decode}, {@link decodeMsr} and
 * {@link computeLosses}. Map planes travel through the binary bundle
 * format and come back as typed-array views (zero-copy where the plane
 * alignment permits); scalars travel as full-precision decimal strings.
 */

import { readFile, writeFile, mkdir } from "node:fs/promises";
import { join } from "node:path";

import {
  type LabelMapBuffers,
  type MapBundle,
  type ScoreMapBuffers,
  readBundle,
  writeBundle,
} from "./bundle.js";
import { runCli, withTempDir } from "./native.js";

export {
  BUNDLE_MAGIC,
  BUNDLE_VERSION,
  labelsToScores,
  readBundle,
  writeBundle,
} from "./bundle.js";
export type {
  ExpressionMode,
  LabelMapBuffers,
  MapBuffer,
  MapBundle,
  ScoreMapBuffers,
} from "./bundle.js";
export { NativeError, PYTHON } from "./native.js";

/** Version of this package; must match the native core's version. */
export const VERSION = "0.1.0";

export interface AnnotationInput {
  /** Flat polygon coordinates x1,y1,...,xn,yn (at least 3 vertices). */
  points: ArrayLike<number>;
  /** Mark the instance "do not care": excluded from training and scoring. */
  ignore?: boolean;
}

export interface ImageSize {
  width: number;
  height: number;
}

export interface EncodeOptions {
  alpha?: number;
  beta?: number;
  mode?: "bidir" | "msr";
}

export interface DecodeOptions {
  gamma?: number;
  epsilon?: number;
}

export interface LossOptions {
  lambda1?: number;
  lambda2?: number;
  ohemRatio?: number;
}

export interface Detection {
  score: number;
  /** Flat polygon coordinates x1,y1,...,xn,yn. */
  polygon: Float64Array;
}

export interface LossBreakdown {
  text: number;
  kernel: number;
  offset: number;
  orientation: number;
  total: number;
}

function annotationLines(annotations: AnnotationInput[]): string {
  const lines: string[] = [];
  for (const ann of annotations) {
    const coords = Array.from(ann.points, (v) => String(v));
    lines.push(ann.ignore ? [...coords, "###"].join(",") : coords.join(","));
  }
  return lines.length ? lines.join("\n") + "\n" : "";
}

function parseDetections(text: string): Detection[] {
  const detections: Detection[] = [];
  for (const line of text.split("\n")) {
    if (!line.trim()) continue;
    const values = line.split(",").map(Number);
    const score = values[0];
    if (score === undefined || values.some((v) => Number.isNaN(v))) {
      throw new Error(`unparseable detection line: ${line}`);
    }
    detections.push({ score, polygon: Float64Array.from(values.slice(1)) });
  }
  return detections;
}

/**
 * Encode annotation polygons into label map buffers.
 *
 * Value-equivalent to the native encoder: the returned planes are the
 * bytes the CLI wrote, parsed without transformation.
 */
export async function encode(
  annotations: AnnotationInput[],
  size: ImageSize,
  options: EncodeOptions = {},
): Promise<LabelMapBuffers> {
  return withTempDir(async (dir) => {
    const gtDir = join(dir, "gt");
    await mkdir(gtDir);
    await writeFile(join(gtDir, "image.txt"), annotationLines(annotations), "utf-8");
    const args = [
      "encode",
      "--annotations", gtDir,
      "--out", join(dir, "maps"),
      "--size", String(size.width), String(size.height),
    ];
    if (options.alpha !== undefined) args.push("--alpha", String(options.alpha));
    if (options.beta !== undefined) args.push("--beta", String(options.beta));
    if (options.mode !== undefined) args.push("--mode", options.mode);
    await runCli(args);
    const bundle = readBundle(await readFile(join(dir, "maps", "image.tmb")));
    if (bundle.kind !== "labels") {
      throw new Error("native encoder produced a non-label bundle");
    }
    return bundle;
  });
}

async function decodeWithMode(
  maps: MapBundle,
  mode: "bidir" | "msr",
  options: DecodeOptions,
): Promise<Detection[]> {
  return withTempDir(async (dir) => {
    await writeFile(join(dir, "image.tmb"), writeBundle(maps));
    const args = [
      "decode",
      "--maps", join(dir, "image.tmb"),
      "--out", join(dir, "det"),
      "--mode", mode,
    ];
    if (options.gamma !== undefined) args.push("--gamma", String(options.gamma));
    if (options.epsilon !== undefined) args.push("--epsilon", String(options.epsilon));
    await runCli(args);
    return parseDetections(await readFile(join(dir, "det", "image.txt"), "utf-8"));
  });
}

/**
 * Reconstruct text instances from map buffers (label or score bundles)
 * with the orientation-gated border grouping.
 */
export async function decode(
  maps: MapBundle,
  options: DecodeOptions = {},
): Promise<Detection[]> {
  return decodeWithMode(maps, "bidir", options);
}

/** Comparison-mode reconstruction: kernel pixels shifted directly. */
export async function decodeMsr(
  maps: MapBundle,
  options: DecodeOptions = {},
): Promise<Detection[]> {
  return decodeWithMode(maps, "msr", options);
}

/**
 * Loss breakdown between predicted maps and ground-truth label maps:
 * dice-with-OHEM text term, masked dice kernel term, smooth-L1 offsets,
 * cosine orientations, and the weighted total.
 */
export async function computeLosses(
  pred: MapBundle,
  truth: LabelMapBuffers,
  options: LossOptions = {},
): Promise<LossBreakdown> {
  return withTempDir(async (dir) => {
    await writeFile(join(dir, "pred.tmb"), writeBundle(pred));
    await writeFile(join(dir, "gt.tmb"), writeBundle(truth));
    const args = [
      "losses",
      "--pred", join(dir, "pred.tmb"),
      "--gt", join(dir, "gt.tmb"),
    ];
    if (options.lambda1 !== undefined) args.push("--lambda1", String(options.lambda1));
    if (options.lambda2 !== undefined) args.push("--lambda2", String(options.lambda2));
    if (options.ohemRatio !== undefined) {
      args.push("--ohem-ratio", String(options.ohemRatio));
    }
    const stdout = await runCli(args);
    const raw = JSON.parse(stdout) as Record<keyof LossBreakdown, string>;
    return {
      text: Number(raw.text),
      kernel: Number(raw.kernel),
      offset: Number(raw.offset),
      orientation: Number(raw.orientation),
      total: Number(raw.total),
    };
  });
}

/** Version string reported by the native core. */
export async function nativeVersion(): Promise<string> {
  const stdout = await runCli(["--version"]);
  const match = stdout.match(/(\d+\.\d+\.\d+)/);
  if (!match || match[1] === undefined) {
    throw new Error(`cannot parse native version from ${JSON.stringify(stdout)}`);
  }
  return match[1];
}
