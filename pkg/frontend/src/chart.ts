/** Pure slice-chart geometry: payloads in, SVG-ready view models out.
 *
 * Everything here is plain data computation so it can be unit-tested
 * without a browser; the DOM layer only concatenates the markup.
 */

import { darkness, distanceScale, markerColor } from "./shading.js";
import type { SlicePayload } from "./types.js";

export interface ChartSize {
  width: number;
  height: number;
  margin: number;
}

export const DEFAULT_SIZE: ChartSize = { width: 420, height: 260, margin: 36 };

export interface Marker {
  x: number;
  y: number;
  color: string;
  radius: number;
  onAxis: boolean;
  darkness: number;
}

export interface CurveView {
  path: string;
  cssClass: string;
  label: string;
}

export interface SliceView {
  curves: CurveView[];
  markers: Marker[];
  xDomain: [number, number];
  yDomain: [number, number];
  xTicks: { pos: number; label: string }[];
  yTicks: { pos: number; label: string }[];
  axisLabel: string;
  extrapolation: boolean;
}

function domain(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const pad = 0.05 * (hi - lo);
  return [lo - pad, hi + pad];
}

function scaler(dom: [number, number], outLo: number, outHi: number) {
  const [a, b] = dom;
  return (v: number) => outLo + ((v - a) / (b - a)) * (outHi - outLo);
}

function ticks(dom: [number, number], n: number): number[] {
  const [a, b] = dom;
  return Array.from({ length: n }, (_, i) => a + ((b - a) * i) / (n - 1));
}

/** Build the view model for one slice, optionally overlaying a second
 * iteration's slice along the same axis/anchor for before/after comparison. */
export function buildSliceView(
  primary: SlicePayload,
  overlay: SlicePayload | null = null,
  size: ChartSize = DEFAULT_SIZE,
): SliceView {
  const xs = primary.curve.map((p) => p.t);
  const ys = primary.curve.map((p) => p.yhat);
  const pointYs = primary.points.map((p) => p.y);
  const overlayYs = overlay ? overlay.curve.map((p) => p.yhat) : [];
  const xDomain = domain(xs.concat(primary.points.map((p) => p.t)));
  const yDomain = domain(ys.concat(pointYs, overlayYs));

  const sx = scaler(xDomain, size.margin, size.width - size.margin);
  const sy = scaler(yDomain, size.height - size.margin, size.margin);

  const toPath = (pts: { t: number; yhat: number }[]) =>
    pts
      .map((p, i) => `${i === 0 ? "M" : "L"}${sx(p.t).toFixed(2)},${sy(p.yhat).toFixed(2)}`)
      .join(" ");

  const curves: CurveView[] = [];
  if (overlay) {
    curves.push({
      path: toPath(overlay.curve),
      cssClass: "curve-previous",
      label: `iteration ${overlay.iteration}`,
    });
  }
  curves.push({
    path: toPath(primary.curve),
    cssClass: "curve-current",
    label: `iteration ${primary.iteration}`,
  });

  const scale = distanceScale(primary.points.map((p) => p.distance));
  const markers: Marker[] = primary.points.map((p) => ({
    x: sx(p.t),
    y: sy(p.y),
    color: markerColor(p.distance, scale, p.on_axis),
    radius: p.on_axis ? 4 : 3,
    onAxis: p.on_axis,
    darkness: p.on_axis ? 1 : darkness(p.distance, scale),
  }));

  return {
    curves,
    markers,
    xDomain,
    yDomain,
    xTicks: ticks(xDomain, 5).map((v) => ({ pos: sx(v), label: v.toPrecision(3) })),
    yTicks: ticks(yDomain, 5).map((v) => ({ pos: sy(v), label: v.toPrecision(3) })),
    axisLabel: primary.axis_name,
    extrapolation: primary.extrapolation,
  };
}

/** Serialize a view model to SVG markup. */
export function renderSliceSvg(view: SliceView, size: ChartSize = DEFAULT_SIZE): string {
  const parts: string[] = [];
  parts.push(
    `<svg viewBox="0 0 ${size.width} ${size.height}" class="slice-chart" role="img">`,
  );
  for (const t of view.xTicks) {
    parts.push(
      `<line x1="${t.pos.toFixed(2)}" y1="${size.height - size.margin}" x2="${t.pos.toFixed(2)}" y2="${size.height - size.margin + 4}" class="tick"/>`,
      `<text x="${t.pos.toFixed(2)}" y="${size.height - size.margin + 16}" class="tick-label" text-anchor="middle">${t.label}</text>`,
    );
  }
  for (const t of view.yTicks) {
    parts.push(
      `<line x1="${size.margin - 4}" y1="${t.pos.toFixed(2)}" x2="${size.margin}" y2="${t.pos.toFixed(2)}" class="tick"/>`,
      `<text x="${size.margin - 7}" y="${(t.pos + 3).toFixed(2)}" class="tick-label" text-anchor="end">${t.label}</text>`,
    );
  }
  for (const c of view.curves) {
    parts.push(`<path d="${c.path}" class="${c.cssClass}" fill="none"/>`);
  }
  for (const m of view.markers) {
    parts.push(
      `<circle cx="${m.x.toFixed(2)}" cy="${m.y.toFixed(2)}" r="${m.radius}" fill="${m.color}" class="${m.onAxis ? "pt-on-axis" : "pt-projected"}"/>`,
    );
  }
  parts.push(
    `<text x="${size.width / 2}" y="${size.height - 4}" text-anchor="middle" class="axis-label">${view.axisLabel}</text>`,
  );
  if (view.extrapolation) {
    parts.push(
      `<text x="${size.width - size.margin}" y="${size.margin - 8}" text-anchor="end" class="extrapolation-flag">extrapolating</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

/** Placeholder markup shown while a slice payload is absent. */
export function renderPlaceholder(message: string): string {
  return `<div class="slice-placeholder"><p>${message}</p><button data-action="retry">retry</button></div>`;
}
