import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { CURVES, makeLayout } from "../src/chart.js";
import { parseCurveCsv } from "../src/csv.js";
import { run } from "../src/cli.js";
import { renderPng } from "../src/png.js";
import { renderSvg } from "../src/svg.js";

const FIXTURE = join(__dirname, "fixtures", "figure1.csv");
const table = parseCurveCsv(readFileSync(FIXTURE, "utf-8"));

function polylinePoints(svg: string, column: string): Array<[number, number]> {
  const match = svg.match(
    new RegExp(`<polyline data-curve="${column}"[^>]*points="([^"]+)"`),
  );
  expect(match).not.toBeNull();
  return match![1].split(" ").map((pair) => {
    const [x, y] = pair.split(",").map(Number);
    return [x, y];
  });
}

describe("renderSvg", () => {
  const svg = renderSvg(table);

  it("draws the four curves with the caption's colors", () => {
    expect((svg.match(/<polyline /g) ?? []).length).toBe(4);
    expect(svg).toMatch(/data-curve="beta1" fill="none" stroke="blue"/);
    expect(svg).toMatch(/data-curve="beta2_tilde" fill="none" stroke="black"/);
    expect(svg).toMatch(/data-curve="beta2" fill="none" stroke="red"/);
    expect(svg).toMatch(/data-curve="beta1_tilde" fill="none" stroke="green"/);
  });

  it("carries the caption's legend labels", () => {
    expect(svg).toContain(">no access, assumed no access</text>");
    expect(svg).toContain(">no access, assumed access</text>");
    expect(svg).toContain(">access, assumed access</text>");
    expect(svg).toContain(">access, assumed no access</text>");
  });

  it("orders blue above black above red above green at gamma=100", () => {
    const idx = table.columns.gamma.findIndex((g) => Math.abs(g - 100) < 1e-9);
    expect(idx).toBeGreaterThanOrEqual(0);
    // SVG y grows downward, so larger detection probability = smaller y
    const yAt = (column: string) => polylinePoints(svg, column)[idx][1];
    expect(yAt("beta1")).toBeLessThan(yAt("beta2_tilde"));
    expect(yAt("beta2_tilde")).toBeLessThan(yAt("beta2"));
    expect(yAt("beta2")).toBeLessThan(yAt("beta1_tilde"));
  });

  it("uses a log-scaled x axis with decade gridlines", () => {
    const layout = makeLayout(table);
    expect(layout.xTicks).toEqual([10, 100, 1000]);
    // equal pixel spacing between decades
    const span1 = layout.xOf(100) - layout.xOf(10);
    const span2 = layout.xOf(1000) - layout.xOf(100);
    expect(span1).toBeCloseTo(span2, 9);
    expect(svg).toContain("average false alarm period");
    expect(svg).toContain("detection probability");
  });

  it("is byte-deterministic", () => {
    expect(renderSvg(table)).toBe(svg);
  });

  it("covers every CSV row in each polyline", () => {
    for (const curve of CURVES) {
      expect(polylinePoints(svg, curve.column).length).toBe(table.rows);
    }
  });
});

describe("renderPng", () => {
  it("emits a valid, deterministic PNG", () => {
    const a = renderPng(table);
    const b = renderPng(table);
    expect(Array.from(a.subarray(0, 8))).toEqual([137, 80, 78, 71, 13, 10, 26, 10]);
    expect(a.equals(b)).toBe(true);
    expect(a.length).toBeGreaterThan(1000);
  });
});

describe("cli", () => {
  it("renders the fixture to SVG twice, byte-identically", () => {
    const dir = mkdtempSync(join(tmpdir(), "figviz-"));
    const outA = join(dir, "a.svg");
    const outB = join(dir, "b.svg");
    expect(run(["render", "--csv", FIXTURE, "--out", outA])).toBe(0);
    expect(run(["render", "--csv", FIXTURE, "--out", outB])).toBe(0);
    expect(readFileSync(outA)).toEqual(readFileSync(outB));
  });

  it("renders PNG when asked", () => {
    const dir = mkdtempSync(join(tmpdir(), "figviz-"));
    const out = join(dir, "fig.png");
    expect(run(["render", "--csv", FIXTURE, "--out", out, "--format", "png"])).toBe(0);
    expect(readFileSync(out).subarray(0, 4)).toEqual(Buffer.from([137, 80, 78, 71]));
  });

  it("fails with the missing column named", () => {
    const dir = mkdtempSync(join(tmpdir(), "figviz-"));
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "gamma,nu1,nu2,beta1,beta2,beta1_tilde\n1,1,1,1,1,1\n");
    expect(run(["render", "--csv", bad, "--out", join(dir, "x.svg")])).toBe(1);
  });

  it("rejects unknown formats and missing files", () => {
    const dir = mkdtempSync(join(tmpdir(), "figviz-"));
    expect(run(["render", "--csv", FIXTURE, "--out", join(dir, "x.gif"),
                "--format", "gif"])).toBe(2);
    expect(run(["render", "--csv", join(dir, "none.csv"),
                "--out", join(dir, "x.svg")])).toBe(3);
  });
});
