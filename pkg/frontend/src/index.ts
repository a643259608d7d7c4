// Batched entry points over contiguous arrays for detection pipelines.
// Boxes are row-major N x 5 Float64Arrays with columns (cx, cy, w, h, theta),
// theta in radians. Inputs are validated and never mutated; outputs are
// freshly allocated. Results match the reference toolkit's CLI within 1e-12
// (see the equivalence test suite).

import {
  CLIP_EPS,
  rboxCorners,
  skewIou,
  smoothL1,
  smoothL1Grad,
} from "./geometry.js";

export * from "./geometry.js";

const IOU_CLAMP_MIN = 1e-10;
const MAX_LOG_RATIO = 50.0;

function checkBoxes(arr: Float64Array, name: string): number {
  if (arr.length % 5 !== 0) {
    throw new Error(`${name}: length ${arr.length} is not a multiple of 5`);
  }
  const n = arr.length / 5;
  for (let i = 0; i < arr.length; i++) {
    if (!Number.isFinite(arr[i])) throw new Error(`${name}: non-finite value at ${i}`);
  }
  for (let r = 0; r < n; r++) {
    if (arr[r * 5 + 2] <= 0 || arr[r * 5 + 3] <= 0) {
      throw new Error(`${name}: non-positive size in row ${r}`);
    }
  }
  return n;
}

function checkFinite(arr: Float64Array, name: string): void {
  for (let i = 0; i < arr.length; i++) {
    if (!Number.isFinite(arr[i])) throw new Error(`${name}: non-finite value at ${i}`);
  }
}

function row(arr: Float64Array, r: number): number[] {
  return [arr[r * 5], arr[r * 5 + 1], arr[r * 5 + 2], arr[r * 5 + 3], arr[r * 5 + 4]];
}

/** Pairwise skew IoU: element (i, j) of the N x M result is iou(a_i, b_j). */
export function iouMatrix(a: Float64Array, b: Float64Array): Float64Array {
  const n = checkBoxes(a, "a");
  const m = checkBoxes(b, "b");
  const out = new Float64Array(n * m);
  for (let i = 0; i < n; i++) {
    const boxA = row(a, i);
    for (let j = 0; j < m; j++) {
      out[i * m + j] = skewIou(boxA, row(b, j));
    }
  }
  return out;
}

/** Row-wise regression offsets of gts against anchors (both N x 5). */
export function encodeBatch(gts: Float64Array, anchors: Float64Array): Float64Array {
  const n = checkBoxes(gts, "gts");
  if (checkBoxes(anchors, "anchors") !== n) throw new Error("row count mismatch");
  const out = new Float64Array(n * 5);
  for (let r = 0; r < n; r++) {
    const g = row(gts, r);
    const a = row(anchors, r);
    out[r * 5] = (g[0] - a[0]) / a[2];
    out[r * 5 + 1] = (g[1] - a[1]) / a[3];
    out[r * 5 + 2] = Math.log(g[2] / a[2]);
    out[r * 5 + 3] = Math.log(g[3] / a[3]);
    out[r * 5 + 4] = g[4] - a[4];
  }
  return out;
}

/** Row-wise inverse of encodeBatch. */
export function decodeBatch(targets: Float64Array, anchors: Float64Array): Float64Array {
  if (targets.length % 5 !== 0) throw new Error("targets: length is not a multiple of 5");
  checkFinite(targets, "targets");
  const n = targets.length / 5;
  if (checkBoxes(anchors, "anchors") !== n) throw new Error("row count mismatch");
  const out = new Float64Array(n * 5);
  for (let r = 0; r < n; r++) {
    const tw = targets[r * 5 + 2];
    const th = targets[r * 5 + 3];
    if (Math.abs(tw) > MAX_LOG_RATIO || Math.abs(th) > MAX_LOG_RATIO) {
      throw new Error(`decodeBatch: log size ratio out of range in row ${r}`);
    }
    const a = row(anchors, r);
    out[r * 5] = targets[r * 5] * a[2] + a[0];
    out[r * 5 + 1] = targets[r * 5 + 1] * a[3] + a[1];
    out[r * 5 + 2] = a[2] * Math.exp(tw);
    out[r * 5 + 3] = a[3] * Math.exp(th);
    out[r * 5 + 4] = targets[r * 5 + 4] + a[4];
  }
  return out;
}

export interface LossBatchResult {
  values: Float64Array; // N
  grads: Float64Array; // N x 5, d value / d predicted offset
}

/**
 * IoU-rescaled smooth-L1 regression loss per row: every nonzero offset
 * component contributes |-log iou(predBox, gtBox)|; gradients are the
 * smooth-L1 direction rescaled by the detached magnitude factors.
 */
export function lossBatch(
  predT: Float64Array,
  tgtT: Float64Array,
  predBoxes: Float64Array,
  gtBoxes: Float64Array,
): LossBatchResult {
  const n = checkBoxes(predBoxes, "predBoxes");
  if (checkBoxes(gtBoxes, "gtBoxes") !== n) throw new Error("row count mismatch");
  if (predT.length !== n * 5 || tgtT.length !== n * 5) throw new Error("offset shape mismatch");
  checkFinite(predT, "predT");
  checkFinite(tgtT, "tgtT");

  const values = new Float64Array(n);
  const grads = new Float64Array(n * 5);
  for (let r = 0; r < n; r++) {
    const iou = skewIou(row(predBoxes, r), row(gtBoxes, r));
    const magnitude = Math.abs(-Math.log(Math.min(Math.max(iou, IOU_CLAMP_MIN), 1.0)));
    let value = 0.0;
    for (let j = 0; j < 5; j++) {
      const d = predT[r * 5 + j] - tgtT[r * 5 + j];
      const lossJ = smoothL1(d);
      if (lossJ === 0.0) {
        grads[r * 5 + j] = 0.0;
        continue;
      }
      value += magnitude;
      grads[r * 5 + j] = (smoothL1Grad(d) / lossJ) * magnitude;
    }
    values[r] = value;
  }
  return { values, grads };
}

/**
 * Per-category greedy rotated NMS. Returns kept row indices ordered by
 * descending score (input order on ties), matching the reference CLI.
 */
export function rnmsBatch(
  boxes: Float64Array,
  scores: Float64Array,
  categories: readonly string[],
  thresholds: Readonly<Record<string, number>>,
  defaultThreshold?: number,
): number[] {
  const n = checkBoxes(boxes, "boxes");
  if (scores.length !== n || categories.length !== n) throw new Error("row count mismatch");
  for (let i = 0; i < n; i++) {
    if (!Number.isFinite(scores[i]) || scores[i] < 0 || scores[i] > 1) {
      throw new Error(`scores: value out of [0,1] at ${i}`);
    }
  }
  const thresholdFor = (cat: string): number => {
    if (cat in thresholds) return thresholds[cat];
    if (defaultThreshold !== undefined) return defaultThreshold;
    throw new Error(`no R-NMS threshold for category ${cat}`);
  };

  const byCat = new Map<string, number[]>();
  for (let i = 0; i < n; i++) {
    const group = byCat.get(categories[i]);
    if (group) group.push(i);
    else byCat.set(categories[i], [i]);
  }

  const kept: number[] = [];
  for (const [cat, group] of byCat) {
    const thresh = thresholdFor(cat);
    const order = group.slice().sort((x, y) => scores[y] - scores[x] || x - y);
    const catKept: number[] = [];
    for (const i of order) {
      const boxI = row(boxes, i);
      let suppressed = false;
      for (const k of catKept) {
        if (skewIou(boxI, row(boxes, k)) > thresh) {
          suppressed = true;
          break;
        }
      }
      if (!suppressed) catKept.push(i);
    }
    kept.push(...catKept);
  }
  return kept.sort((x, y) => scores[y] - scores[x] || x - y);
}

/**
 * Binary foreground mask over a rows x cols grid: a cell is 1 when its
 * center ((j+0.5)*downscale, (i+0.5)*downscale) lies inside any box polygon.
 */
export function maskBatch(
  boxes: Float64Array,
  rows: number,
  cols: number,
  downscale: number,
): Uint8Array {
  const n = checkBoxes(boxes, "boxes");
  if (!Number.isInteger(rows) || !Number.isInteger(cols) || rows < 1 || cols < 1) {
    throw new Error("rows and cols must be positive integers");
  }
  if (!(downscale > 0)) throw new Error("downscale must be positive");

  const out = new Uint8Array(rows * cols);
  for (let r = 0; r < n; r++) {
    const corners = rboxCorners(
      boxes[r * 5], boxes[r * 5 + 1], boxes[r * 5 + 2], boxes[r * 5 + 3], boxes[r * 5 + 4],
    );
    for (let i = 0; i < rows; i++) {
      const cyPix = (i + 0.5) * downscale;
      for (let j = 0; j < cols; j++) {
        if (out[i * cols + j]) continue;
        const cxPix = (j + 0.5) * downscale;
        let inside = true;
        for (let k = 0; k < 4 && inside; k++) {
          const [x0, y0] = corners[k];
          const [x1, y1] = corners[(k + 1) % 4];
          inside = (x1 - x0) * (cyPix - y0) - (y1 - y0) * (cxPix - x0) >= -CLIP_EPS;
        }
        if (inside) out[i * cols + j] = 1;
      }
    }
  }
  return out;
}
