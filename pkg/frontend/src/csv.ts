import { readFileSync } from 'fs'

export interface Table {
  header: string[]
  rows: number[][]
}

/** Parse a plain numeric CSV (header line + numeric rows). */
export function readCsv(path: string): Table {
  const text = readFileSync(path, 'utf8')
  const lines = text.split(/\r?\n/).filter((line) => line.trim().length > 0)
  if (lines.length < 1) throw new Error(`empty CSV file: ${path}`)
  const header = lines[0].split(',').map((s) => s.trim())
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(',').map(Number)
    if (cells.length !== header.length || cells.some((v) => Number.isNaN(v))) {
      throw new Error(`malformed CSV row ${i + 2} in ${path}: ${line}`)
    }
    return cells
  })
  return { header, rows }
}

/** Column accessor that names the missing column in its error. */
export function column(table: Table, name: string, path = '<csv>'): number[] {
  const idx = table.header.indexOf(name)
  if (idx < 0) {
    throw new Error(
      `schema mismatch in ${path}: missing column '${name}' ` +
        `(found: ${table.header.join(', ')})`,
    )
  }
  return table.rows.map((row) => row[idx])
}
