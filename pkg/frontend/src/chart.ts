import type { TrajectoryPoint } from "./types.js";

export interface ChartGeometry {
  width: number;
  height: number;
  pad: number;
}

export interface ChartPaths {
  /** SVG path through (step, theta), theta mapped from the fixed [-4, 4] scale. */
  theta: string;
  /** SVG path through (step, se); points with no finite SE are skipped. */
  se: string;
  seMax: number;
  zeroY: number;
}

const THETA_MIN = -4;
const THETA_MAX = 4;

function x(step: number, lastStep: number, geom: ChartGeometry): number {
  const span = Math.max(lastStep - 1, 1);
  return geom.pad + ((step - 1) / span) * (geom.width - 2 * geom.pad);
}

function yTheta(theta: number, geom: ChartGeometry): number {
  const frac = (theta - THETA_MIN) / (THETA_MAX - THETA_MIN);
  return geom.height - geom.pad - frac * (geom.height - 2 * geom.pad);
}

function ySe(se: number, seMax: number, geom: ChartGeometry): number {
  return geom.height - geom.pad - (se / seMax) * (geom.height - 2 * geom.pad);
}

function path(points: Array<[number, number]>): string {
  return points
    .map(([px, py], i) => `${i === 0 ? "M" : "L"}${px.toFixed(2)},${py.toFixed(2)}`)
    .join(" ");
}

/**
 * Build the two polyline paths for the live trajectory chart. Pure string
 * output so it can be tested without a DOM; the renderer drops the strings
 * into <path d=...> attributes.
 */
export function trajectoryPaths(points: TrajectoryPoint[], geom: ChartGeometry): ChartPaths {
  const last = points.length > 0 ? points[points.length - 1].step : 1;
  const finiteSe = points.filter((p) => p.se !== null).map((p) => p.se as number);
  const seMax = Math.max(1, ...finiteSe);
  return {
    theta: path(points.map((p) => [x(p.step, last, geom), yTheta(p.theta, geom)])),
    se: path(points.filter((p) => p.se !== null)
      .map((p) => [x(p.step, last, geom), ySe(p.se as number, seMax, geom)])),
    seMax,
    zeroY: yTheta(0, geom),
  };
}
