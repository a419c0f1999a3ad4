import { join } from 'path'
import { existsSync, statSync } from 'fs'
import { column, readCsv } from './csv'
import { FigureModel, PALETTE, Series, buildFigure } from './figure'

export interface SliceProfiles {
  /** month label -> [slice centers (mm), relative bone density] */
  byMonth: Map<number, { centers: number[]; values: number[] }>
  source: string
}

/** Load the long-format slice CSV (`slices.csv` inside a run directory). */
export function loadSliceProfiles(dirOrFile: string): SliceProfiles {
  let path = dirOrFile
  if (existsSync(path) && statSync(path).isDirectory()) {
    path = join(path, 'slices.csv')
  }
  if (!existsSync(path)) throw new Error(`no slice profiles at ${path}`)
  const table = readCsv(path)
  const months = column(table, 't_months', path)
  const centers = column(table, 'slice_center_mm', path)
  const values = column(table, 'relative_bone_density', path)
  const byMonth = new Map<number, { centers: number[]; values: number[] }>()
  for (let i = 0; i < months.length; i++) {
    if (!byMonth.has(months[i])) byMonth.set(months[i], { centers: [], values: [] })
    const bucket = byMonth.get(months[i])!
    bucket.centers.push(centers[i])
    bucket.values.push(values[i])
  }
  return { byMonth, source: path }
}

export function sliceFigure(
  profiles: SliceProfiles,
  months: number[],
): FigureModel {
  if (months.length === 0) throw new Error('no months requested')
  const available = [...profiles.byMonth.keys()]
  const series: Series[] = months.map((month, i) => {
    const profile = profiles.byMonth.get(month)
    if (!profile) {
      throw new Error(
        `month ${month} not present in ${profiles.source}; ` +
          `available: ${available.join(', ')}`,
      )
    }
    return {
      label: `${month} months`,
      x: profile.centers,
      y: profile.values,
      color: PALETTE[i % PALETTE.length],
      markers: profile.centers.length === 1,
    }
  })
  return buildFigure(series, {
    title: 'Relative bone density by axial slice',
    xLabel: 'axial position (mm)',
    yLabel: 'relative bone density',
    yRange: [0, 1],
  })
}
