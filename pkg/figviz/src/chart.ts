// Layout shared by the SVG and PNG backends: a log-scaled gamma axis,
// a linear [0, 1] probability axis, and the fixed curve styling.

import type { ColumnName, CurveTable } from "./csv.js";

export type CurveStyle = {
  column: ColumnName;
  label: string;
  color: string;
  rgb: [number, number, number];
};

// column -> (legend label, color); blue/black/red/green in this order
export const CURVES: CurveStyle[] = [
  { column: "beta1", label: "no access, assumed no access", color: "blue", rgb: [0, 0, 255] },
  { column: "beta2_tilde", label: "no access, assumed access", color: "black", rgb: [0, 0, 0] },
  { column: "beta2", label: "access, assumed access", color: "red", rgb: [255, 0, 0] },
  { column: "beta1_tilde", label: "access, assumed no access", color: "green", rgb: [0, 128, 0] },
];

export const WIDTH = 760;
export const HEIGHT = 500;
export const MARGIN = { left: 64, right: 24, top: 24, bottom: 56 };

export type Layout = {
  xOf: (gamma: number) => number;
  yOf: (p: number) => number;
  xTicks: number[];
  yTicks: number[];
  gammaMin: number;
  gammaMax: number;
};

export function makeLayout(table: CurveTable): Layout {
  const gammas = table.columns.gamma;
  const gammaMin = Math.min(...gammas);
  const gammaMax = Math.max(...gammas);
  const lgMin = Math.log10(gammaMin);
  const lgMax = Math.log10(gammaMax);
  const innerW = WIDTH - MARGIN.left - MARGIN.right;
  const innerH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const xOf = (gamma: number) =>
    MARGIN.left + ((Math.log10(gamma) - lgMin) / (lgMax - lgMin)) * innerW;
  const yOf = (p: number) => MARGIN.top + (1 - p) * innerH;
  const xTicks: number[] = [];
  for (let d = Math.ceil(lgMin); d <= Math.floor(lgMax); d++) {
    xTicks.push(10 ** d);
  }
  const yTicks = [0, 0.2, 0.4, 0.6, 0.8, 1.0];
  return { xOf, yOf, xTicks, yTicks, gammaMin, gammaMax };
}

export function curvePoints(
  table: CurveTable,
  layout: Layout,
  column: ColumnName,
): Array<[number, number]> {
  return table.columns.gamma.map((g, i) => [
    layout.xOf(g),
    layout.yOf(table.columns[column][i]),
  ]);
}
