/** Distance-to-darkness mapping for projected training points.
 *
 * Points projected onto a slice are drawn darker the closer they lie to the
 * slice line, so the expert can tell which observations actually support
 * the curve in view.  The mapping is exponential decay,
 *
 *     darkness(d) = exp(-3 * d / scale)   in (0, 1],
 *
 * strictly decreasing in d with darkness(0) = 1; at d = scale the marker
 * retains ~5% darkness.  `scale` defaults to the largest distance in view,
 * so a panel always uses its full dynamic range.
 */

export function darkness(distance: number, scale: number): number {
  if (!(scale > 0)) return 1.0;
  const d = Math.max(0, distance);
  return Math.exp((-3 * d) / scale);
}

/** Marker fill for a projected point: on-axis points are black, projected
 * points fade from dark amber to near-white with distance. */
export function markerColor(distance: number, scale: number, onAxis: boolean): string {
  if (onAxis) return "rgb(0,0,0)";
  const k = darkness(distance, scale);
  // interpolate amber (230,140,30) toward a pale background (250,235,215)
  const mix = (dark: number, pale: number) => Math.round(pale + (dark - pale) * k);
  return `rgb(${mix(230, 250)},${mix(140, 235)},${mix(30, 215)})`;
}

export function distanceScale(distances: number[]): number {
  let max = 0;
  for (const d of distances) if (d > max) max = d;
  return max > 0 ? max : 1;
}
