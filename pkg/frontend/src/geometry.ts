// Scalar rotated-box geometry. Mirrors the reference toolkit operation for
// operation (same corner order, same clipping predicates, same operand
// ordering) so double-precision results agree with its CLI output.

export const CLIP_EPS = 1e-9;

export type Point = [number, number];

/** Corners of the w x h rectangle at (cx, cy) rotated by theta, counter-clockwise. */
export function rboxCorners(cx: number, cy: number, w: number, h: number, theta: number): Point[] {
  const c = Math.cos(theta);
  const s = Math.sin(theta);
  const hw = 0.5 * w;
  const hh = 0.5 * h;
  const local: Point[] = [
    [-hw, -hh],
    [hw, -hh],
    [hw, hh],
    [-hw, hh],
  ];
  return local.map(([dx, dy]) => [cx + dx * c - dy * s, cy + dx * s + dy * c]);
}

/** Signed shoelace area; >= 0 for counter-clockwise rings. */
export function shoelaceArea(vertices: Point[]): number {
  const n = vertices.length;
  if (n < 3) return 0.0;
  let acc = 0.0;
  for (let i = 0; i < n; i++) {
    const [x0, y0] = vertices[i];
    const [x1, y1] = vertices[(i + 1) % n];
    acc += x0 * y1 - x1 * y0;
  }
  return 0.5 * acc;
}

/** Sutherland-Hodgman clip of convex CCW `subject` against convex CCW `clip`. */
export function convexIntersection(subject: Point[], clip: Point[]): Point[] {
  let output = subject.slice();
  if (output.length === 0 || clip.length === 0) return [];

  for (let k = 0; k < clip.length; k++) {
    if (output.length === 0) break;
    const e1 = clip[k];
    const e2 = clip[(k + 1) % clip.length];
    const edgeX = e2[0] - e1[0];
    const edgeY = e2[1] - e1[1];

    const inside = (p: Point): boolean =>
      edgeX * (p[1] - e1[1]) - edgeY * (p[0] - e1[0]) >= -CLIP_EPS;

    const intersect = (p: Point, q: Point): Point | null => {
      const dpx = q[0] - p[0];
      const dpy = q[1] - p[1];
      const denom = edgeX * dpy - edgeY * dpx;
      if (denom === 0.0) return null;
      const t = (edgeX * (p[1] - e1[1]) - edgeY * (p[0] - e1[0])) / denom;
      return [p[0] - t * dpx, p[1] - t * dpy];
    };

    const clipped: Point[] = [];
    let s = output[output.length - 1];
    let sIn = inside(s);
    for (const e of output) {
      const eIn = inside(e);
      if (eIn) {
        if (!sIn) {
          const x = intersect(s, e);
          if (x !== null) clipped.push(x);
        }
        clipped.push(e);
      } else if (sIn) {
        const x = intersect(s, e);
        if (x !== null) clipped.push(x);
      }
      s = e;
      sIn = eIn;
    }
    output = clipped;
  }

  const merged: Point[] = [];
  for (const p of output) {
    if (merged.length > 0) {
      const last = merged[merged.length - 1];
      if (Math.hypot(p[0] - last[0], p[1] - last[1]) < CLIP_EPS) continue;
    }
    merged.push(p);
  }
  if (merged.length >= 2) {
    const first = merged[0];
    const last = merged[merged.length - 1];
    if (Math.hypot(first[0] - last[0], first[1] - last[1]) < CLIP_EPS) merged.pop();
  }
  return merged.length < 3 ? [] : merged;
}

function lexCompare(a: number[], b: number[]): number {
  for (let i = 0; i < 5; i++) {
    if (a[i] < b[i]) return -1;
    if (a[i] > b[i]) return 1;
  }
  return 0;
}

/** Skew IoU of two five-parameter boxes [cx, cy, w, h, theta]. */
export function skewIou(boxA: number[], boxB: number[]): number {
  let a = boxA;
  let b = boxB;
  if (lexCompare(b, a) < 0) {
    a = boxB;
    b = boxA;
  }
  const qa = rboxCorners(a[0], a[1], a[2], a[3], a[4]);
  const qb = rboxCorners(b[0], b[1], b[2], b[3], b[4]);
  const inter = Math.max(shoelaceArea(convexIntersection(qa, qb)), 0.0);
  const union = shoelaceArea(qa) + shoelaceArea(qb) - inter;
  if (union <= 0.0) return 0.0;
  return Math.min(Math.max(inter / union, 0.0), 1.0);
}

export function smoothL1(x: number): number {
  const ax = Math.abs(x);
  return ax < 1.0 ? 0.5 * x * x : ax - 0.5;
}

export function smoothL1Grad(x: number): number {
  const ax = Math.abs(x);
  return ax < 1.0 ? x : Math.sign(x);
}
