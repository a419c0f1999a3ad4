export type RGB = [number, number, number]

export interface Series {
  label: string
  x: number[]
  y: number[]
  color: RGB
  /** draw point markers (used for degenerate single-sample series) */
  markers: boolean
}

export interface FigureModel {
  width: number
  height: number
  margin: { left: number; right: number; top: number; bottom: number }
  title: string
  xLabel: string
  yLabel: string
  xRange: [number, number]
  yRange: [number, number]
  series: Series[]
}

export const PALETTE: RGB[] = [
  [31, 119, 180],
  [214, 39, 40],
  [44, 160, 44],
  [148, 103, 189],
  [255, 127, 14],
  [140, 86, 75],
]

function spread(values: number[]): [number, number] {
  let lo = Math.min(...values)
  let hi = Math.max(...values)
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) {
    throw new Error('cannot scale an axis over non-finite values')
  }
  if (lo === hi) {
    lo -= 0.5
    hi += 0.5
  }
  const pad = 0.05 * (hi - lo)
  return [lo - pad, hi + pad]
}

export function buildFigure(
  series: Series[],
  opts: {
    title: string
    xLabel: string
    yLabel: string
    yRange?: [number, number]
    width?: number
    height?: number
  },
): FigureModel {
  if (series.length === 0) throw new Error('no series to plot')
  const xs = series.flatMap((s) => s.x)
  const ys = series.flatMap((s) => s.y)
  return {
    width: opts.width ?? 800,
    height: opts.height ?? 500,
    margin: { left: 70, right: 20, top: 30, bottom: 50 },
    title: opts.title,
    xLabel: opts.xLabel,
    yLabel: opts.yLabel,
    xRange: spread(xs),
    yRange: opts.yRange ?? spread(ys),
    series,
  }
}

/** Data-space to pixel-space transform (y axis points up on the figure). */
export function dataToPixel(
  model: FigureModel,
  x: number,
  y: number,
): { px: number; py: number } {
  const { margin, width, height, xRange, yRange } = model
  const plotW = width - margin.left - margin.right
  const plotH = height - margin.top - margin.bottom
  const px = margin.left + ((x - xRange[0]) / (xRange[1] - xRange[0])) * plotW
  const py =
    margin.top + (1 - (y - yRange[0]) / (yRange[1] - yRange[0])) * plotH
  return { px: Math.round(px), py: Math.round(py) }
}

/** Round tick positions covering the range (about `count` of them). */
export function ticks(range: [number, number], count = 5): number[] {
  const span = range[1] - range[0]
  const step = Math.pow(10, Math.floor(Math.log10(span / count)))
  const candidates = [step, 2 * step, 2.5 * step, 5 * step, 10 * step]
  const chosen =
    candidates.find((c) => span / c <= count + 1) ?? candidates[4]
  const out: number[] = []
  let t = Math.ceil(range[0] / chosen) * chosen
  for (; t <= range[1] + 1e-12 * span; t += chosen) {
    out.push(Math.abs(t) < 1e-12 * span ? 0 : t)
  }
  return out
}

export function formatTick(value: number): string {
  if (value === 0) return '0'
  const magnitude = Math.abs(value)
  if (magnitude >= 1000 || magnitude < 0.001) return value.toExponential(1)
  return parseFloat(value.toPrecision(4)).toString()
}
