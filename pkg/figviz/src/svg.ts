// Hand-assembled SVG so the output is byte-deterministic: fixed coordinate
// precision, fixed element order, no timestamps or generated ids.

import type { CurveTable } from "./csv.js";
import { CURVES, HEIGHT, MARGIN, WIDTH, curvePoints, makeLayout } from "./chart.js";

const fmt = (v: number) => v.toFixed(2);

export function renderSvg(table: CurveTable): string {
  const layout = makeLayout(table);
  const plotRight = WIDTH - MARGIN.right;
  const plotBottom = HEIGHT - MARGIN.bottom;
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);

  // gridlines and ticks
  for (const g of layout.xTicks) {
    const x = fmt(layout.xOf(g));
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${plotBottom}" stroke="#dddddd" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${x}" y="${plotBottom + 18}" font-family="sans-serif" font-size="12" text-anchor="middle">${g}</text>`,
    );
  }
  for (const p of layout.yTicks) {
    const y = fmt(layout.yOf(p));
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${plotRight}" y2="${y}" stroke="#dddddd" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${y}" font-family="sans-serif" font-size="12" text-anchor="end" dominant-baseline="middle">${p.toFixed(1)}</text>`,
    );
  }

  // axes
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotRight - MARGIN.left}" height="${plotBottom - MARGIN.top}" fill="none" stroke="black" stroke-width="1"/>`,
  );
  parts.push(
    `<text x="${fmt((MARGIN.left + plotRight) / 2)}" y="${HEIGHT - 14}" font-family="sans-serif" font-size="14" text-anchor="middle">average false alarm period</text>`,
  );
  parts.push(
    `<text x="18" y="${fmt((MARGIN.top + plotBottom) / 2)}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 18 ${fmt((MARGIN.top + plotBottom) / 2)})">detection probability</text>`,
  );

  // curves
  for (const curve of CURVES) {
    const points = curvePoints(table, layout, curve.column)
      .map(([x, y]) => `${fmt(x)},${fmt(y)}`)
      .join(" ");
    parts.push(
      `<polyline data-curve="${curve.column}" fill="none" stroke="${curve.color}" stroke-width="1.6" points="${points}"/>`,
    );
  }

  // legend
  const legendX = MARGIN.left + 16;
  let legendY = MARGIN.top + 16;
  for (const curve of CURVES) {
    parts.push(
      `<line x1="${legendX}" y1="${legendY}" x2="${legendX + 26}" y2="${legendY}" stroke="${curve.color}" stroke-width="2"/>`,
    );
    parts.push(
      `<text x="${legendX + 32}" y="${legendY + 4}" font-family="sans-serif" font-size="12">${curve.label}</text>`,
    );
    legendY += 18;
  }

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
