import { column, readCsv, Table } from './csv'
import { FigureModel, PALETTE, Series, buildFigure } from './figure'

/** Gather the sigma/mean_b/mean_c/mean_a_i curves off a timeseries CSV. */
export function timeseriesFigure(path: string): FigureModel {
  const table: Table = readCsv(path)
  const t = column(table, 't_months', path)
  const single = t.length === 1
  const series: Series[] = []
  const wanted = ['sigma', 'mean_b', 'mean_c']
  for (const name of table.header) {
    if (name.startsWith('mean_a')) wanted.push(name)
  }
  // mean_a columns are appended in header order; sigma/mean_b/mean_c first
  for (const name of wanted) {
    series.push({
      label: name,
      x: t,
      y: column(table, name, path),
      color: PALETTE[series.length % PALETTE.length],
      markers: single,
    })
  }
  return buildFigure(series, {
    title: 'Regeneration time series',
    xLabel: 't (months)',
    yLabel: 'value',
  })
}
