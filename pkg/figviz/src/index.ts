export { EXPECTED_HEADER, SchemaError, parseCurveCsv } from "./csv.js";
export type { ColumnName, CurveTable } from "./csv.js";
export { CURVES, WIDTH, HEIGHT, MARGIN, curvePoints, makeLayout } from "./chart.js";
export { renderSvg } from "./svg.js";
export { renderPng } from "./png.js";
export { run } from "./cli.js";
