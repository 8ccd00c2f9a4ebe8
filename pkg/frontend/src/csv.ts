import { readFileSync } from "node:fs";
import Papa from "papaparse";

export const CSV_SCHEMA = "collapse-lab-csv v1";

export class SchemaError extends Error {}

export interface DataTable {
  /** table role, e.g. "fig2_frozen" */
  name: string;
  columnNames: string[];
  columns: Map<string, number[]>;
  rows: number;
}

/**
 * Parse one collapse-lab CSV file. The first comment line carries the
 * schema version; unknown schemas are refused so stale renderers never
 * silently misread new columns.
 */
export function parseCsvText(text: string, source = "<memory>"): DataTable {
  const lines = text.split("\n");
  if (lines[0]?.trim() !== `# ${CSV_SCHEMA}`) {
    throw new SchemaError(
      `${source}: unknown CSV schema ${JSON.stringify(lines[0] ?? "")}; expected "# ${CSV_SCHEMA}"`,
    );
  }
  const tableLine = lines[1]?.trim() ?? "";
  const match = tableLine.match(/^# table: (.+)$/);
  if (!match) {
    throw new SchemaError(`${source}: missing "# table:" comment line`);
  }
  const name = match[1];

  const parsed = Papa.parse<Record<string, number>>(text, {
    delimiter: ",",
    comments: "#",
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new SchemaError(`${source}: CSV parse error: ${first.message} (row ${first.row})`);
  }
  const columnNames = parsed.meta.fields ?? [];
  const columns = new Map<string, number[]>();
  for (const field of columnNames) {
    const values = parsed.data.map((row) => {
      const v = row[field];
      if (typeof v !== "number" || Number.isNaN(v)) {
        throw new SchemaError(`${source}: non-numeric value in column ${field}`);
      }
      return v;
    });
    columns.set(field, values);
  }
  return { name, columnNames, columns, rows: parsed.data.length };
}

export function parseCsvFile(path: string): DataTable {
  return parseCsvText(readFileSync(path, "utf8"), path);
}

/** Fetch a column or fail naming it, per the figure contracts. */
export function requireColumn(table: DataTable, name: string): number[] {
  const col = table.columns.get(name);
  if (!col) {
    throw new SchemaError(
      `table ${table.name}: missing required column "${name}" ` +
        `(have: ${table.columnNames.join(", ")})`,
    );
  }
  return col;
}

/** Columns whose names match a prefix, in header order. */
export function columnsByPrefix(table: DataTable, prefix: string): Array<[string, number[]]> {
  return table.columnNames
    .filter((n) => n.startsWith(prefix))
    .map((n) => [n, table.columns.get(n)!] as [string, number[]]);
}
