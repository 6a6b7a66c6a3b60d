// Strict reader for the detection-curves CSV emitted by `hmmcd figure1`.

export const EXPECTED_HEADER = [
  "gamma",
  "nu1",
  "nu2",
  "beta1",
  "beta2",
  "beta1_tilde",
  "beta2_tilde",
] as const;

export type ColumnName = (typeof EXPECTED_HEADER)[number];

export type CurveTable = {
  rows: number;
  columns: Record<ColumnName, number[]>;
};

export class SchemaError extends Error {}

export function parseCurveCsv(text: string): CurveTable {
  const lines = text
    .split(/\r?\n/)
    .map((line) => line.trim())
    .filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV");
  }
  const header = lines[0].split(",");
  const missing = EXPECTED_HEADER.filter((name) => !header.includes(name));
  if (missing.length > 0) {
    throw new SchemaError(`missing column(s): ${missing.join(", ")}`);
  }
  if (header.length !== EXPECTED_HEADER.length) {
    throw new SchemaError(
      `unexpected header: got ${header.length} columns, want ${EXPECTED_HEADER.length}`,
    );
  }
  const index = new Map(header.map((name, i) => [name, i]));
  const columns = Object.fromEntries(
    EXPECTED_HEADER.map((name) => [name, [] as number[]]),
  ) as Record<ColumnName, number[]>;
  for (const [lineNo, line] of lines.slice(1).entries()) {
    const fields = line.split(",");
    if (fields.length !== EXPECTED_HEADER.length) {
      throw new SchemaError(`row ${lineNo + 1}: ${fields.length} fields`);
    }
    for (const name of EXPECTED_HEADER) {
      const value = Number(fields[index.get(name)!]);
      if (!Number.isFinite(value)) {
        throw new SchemaError(`row ${lineNo + 1}: bad number in ${name}`);
      }
      columns[name].push(value);
    }
  }
  const rows = columns.gamma.length;
  if (rows < 2) {
    throw new SchemaError(`need at least 2 rows per curve, got ${rows}`);
  }
  if (columns.gamma.some((g) => g <= 0)) {
    throw new SchemaError("gamma values must be positive for the log axis");
  }
  return { rows, columns };
}
