/**
 * Minimal RFC-4180 CSV reader for the result files written by the
 * pmd-accel experiment runner (quoted fields may contain commas and
 * escaped double quotes, e.g. the polytope policy_json column).
 */

export interface Table {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): Table {
  const records: string[][] = [];
  let field = "";
  let record: string[] = [];
  let inQuotes = false;
  let i = 0;
  const pushField = () => {
    record.push(field);
    field = "";
  };
  const pushRecord = () => {
    pushField();
    records.push(record);
    record = [];
  };
  while (i < text.length) {
    const c = text[i];
    if (inQuotes) {
      if (c === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i += 2;
          continue;
        }
        inQuotes = false;
        i++;
        continue;
      }
      field += c;
      i++;
      continue;
    }
    if (c === '"') {
      inQuotes = true;
      i++;
    } else if (c === ",") {
      pushField();
      i++;
    } else if (c === "\n") {
      pushRecord();
      i++;
    } else if (c === "\r") {
      i++; // tolerate CRLF input even though the runner writes LF
    } else {
      field += c;
      i++;
    }
  }
  if (field.length > 0 || record.length > 0) pushRecord();
  if (records.length === 0) {
    throw new Error("empty CSV");
  }
  const [header, ...rows] = records;
  return { header, rows };
}

/** Column accessor that fails loudly when the schema does not match. */
export function columnIndex(table: Table, ...names: string[]): number[] {
  return names.map((name) => {
    const idx = table.header.indexOf(name);
    if (idx < 0) {
      throw new Error(
        `missing column '${name}' (header: ${table.header.join(",")})`
      );
    }
    return idx;
  });
}

export function mean(xs: number[]): number {
  return xs.reduce((a, b) => a + b, 0) / xs.length;
}

export function std(xs: number[]): number {
  const m = mean(xs);
  return Math.sqrt(mean(xs.map((x) => (x - m) * (x - m))));
}
