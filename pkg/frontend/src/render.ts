import { PNG } from 'pngjs'
import { writeFileSync } from 'fs'
import { FigureModel, RGB, dataToPixel, formatTick, ticks } from './figure'

// Compact 5x7 bitmap font; each glyph row is a 5-bit mask, MSB = left pixel.
const GLYPHS: Record<string, number[]> = {
  ' ': [0, 0, 0, 0, 0, 0, 0],
  '.': [0, 0, 0, 0, 0, 0x0c, 0x0c],
  ',': [0, 0, 0, 0, 0x0c, 0x04, 0x08],
  '-': [0, 0, 0, 0x1f, 0, 0, 0],
  '_': [0, 0, 0, 0, 0, 0, 0x1f],
  '(': [0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02],
  ')': [0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08],
  '/': [0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10],
  ':': [0, 0x0c, 0x0c, 0, 0x0c, 0x0c, 0],
  '=': [0, 0x1f, 0, 0x1f, 0, 0, 0],
  '+': [0, 0x04, 0x04, 0x1f, 0x04, 0x04, 0],
  '0': [0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e],
  '1': [0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e],
  '2': [0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f],
  '3': [0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e],
  '4': [0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02],
  '5': [0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e],
  '6': [0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e],
  '7': [0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
  '8': [0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e],
  '9': [0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c],
  A: [0x0e, 0x11, 0x11, 0x11, 0x1f, 0x11, 0x11],
  B: [0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e],
  C: [0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e],
  D: [0x1c, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1c],
  E: [0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f],
  F: [0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10],
  G: [0x0e, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0f],
  H: [0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11],
  I: [0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e],
  J: [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0c],
  K: [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11],
  L: [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f],
  M: [0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11],
  N: [0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11],
  O: [0x0e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e],
  P: [0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10],
  Q: [0x0e, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0d],
  R: [0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11],
  S: [0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e],
  T: [0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04],
  U: [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e],
  V: [0x11, 0x11, 0x11, 0x11, 0x11, 0x0a, 0x04],
  W: [0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0a],
  X: [0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11],
  Y: [0x11, 0x11, 0x11, 0x0a, 0x04, 0x04, 0x04],
  Z: [0x1f, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1f],
  a: [0, 0, 0x0e, 0x01, 0x0f, 0x11, 0x0f],
  b: [0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x1e],
  c: [0, 0, 0x0e, 0x10, 0x10, 0x11, 0x0e],
  d: [0x01, 0x01, 0x0d, 0x13, 0x11, 0x11, 0x0f],
  e: [0, 0, 0x0e, 0x11, 0x1f, 0x10, 0x0e],
  f: [0x06, 0x09, 0x08, 0x1c, 0x08, 0x08, 0x08],
  g: [0, 0, 0x0f, 0x11, 0x0f, 0x01, 0x0e],
  h: [0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11],
  i: [0x04, 0, 0x0c, 0x04, 0x04, 0x04, 0x0e],
  j: [0x02, 0, 0x06, 0x02, 0x02, 0x12, 0x0c],
  k: [0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12],
  l: [0x0c, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e],
  m: [0, 0, 0x1a, 0x15, 0x15, 0x11, 0x11],
  n: [0, 0, 0x16, 0x19, 0x11, 0x11, 0x11],
  o: [0, 0, 0x0e, 0x11, 0x11, 0x11, 0x0e],
  p: [0, 0, 0x1e, 0x11, 0x1e, 0x10, 0x10],
  q: [0, 0, 0x0d, 0x13, 0x0f, 0x01, 0x01],
  r: [0, 0, 0x16, 0x19, 0x10, 0x10, 0x10],
  s: [0, 0, 0x0e, 0x10, 0x0e, 0x01, 0x1e],
  t: [0x08, 0x08, 0x1c, 0x08, 0x08, 0x09, 0x06],
  u: [0, 0, 0x11, 0x11, 0x11, 0x13, 0x0d],
  v: [0, 0, 0x11, 0x11, 0x11, 0x0a, 0x04],
  w: [0, 0, 0x11, 0x11, 0x15, 0x15, 0x0a],
  x: [0, 0, 0x11, 0x0a, 0x04, 0x0a, 0x11],
  y: [0, 0, 0x11, 0x11, 0x0f, 0x01, 0x0e],
  z: [0, 0, 0x1f, 0x02, 0x04, 0x08, 0x1f],
}

const GLYPH_W = 6 // 5 pixels + 1 spacing
const GLYPH_H = 7

export class Raster {
  readonly png: PNG

  constructor(
    readonly width: number,
    readonly height: number,
  ) {
    this.png = new PNG({ width, height })
    this.png.data.fill(255) // white background, opaque alpha
  }

  set(x: number, y: number, [r, g, b]: RGB): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return
    const idx = 4 * (y * this.width + x)
    this.png.data[idx] = r
    this.png.data[idx + 1] = g
    this.png.data[idx + 2] = b
    this.png.data[idx + 3] = 255
  }

  get(x: number, y: number): RGB {
    const idx = 4 * (y * this.width + x)
    return [this.png.data[idx], this.png.data[idx + 1], this.png.data[idx + 2]]
  }

  fillRect(x0: number, y0: number, w: number, h: number, color: RGB): void {
    for (let y = y0; y < y0 + h; y++)
      for (let x = x0; x < x0 + w; x++) this.set(x, y, color)
  }

  line(x0: number, y0: number, x1: number, y1: number, color: RGB, thick = 1): void {
    // Bresenham with optional thickening perpendicular to the dominant axis
    let dx = Math.abs(x1 - x0)
    let dy = -Math.abs(y1 - y0)
    const sx = x0 < x1 ? 1 : -1
    const sy = y0 < y1 ? 1 : -1
    let err = dx + dy
    const steep = Math.abs(y1 - y0) > Math.abs(x1 - x0)
    for (;;) {
      for (let k = -(thick >> 1); k <= thick >> 1; k++) {
        if (steep) this.set(x0 + k, y0, color)
        else this.set(x0, y0 + k, color)
      }
      if (x0 === x1 && y0 === y1) break
      const e2 = 2 * err
      if (e2 >= dy) {
        err += dy
        x0 += sx
      }
      if (e2 <= dx) {
        err += dx
        y0 += sy
      }
    }
  }

  marker(x: number, y: number, color: RGB, radius = 3): void {
    for (let j = -radius; j <= radius; j++)
      for (let i = -radius; i <= radius; i++)
        if (i * i + j * j <= radius * radius) this.set(x + i, y + j, color)
  }

  text(x: number, y: number, s: string, color: RGB): void {
    let cx = x
    for (const ch of s) {
      const glyph = GLYPHS[ch] ?? GLYPHS['.']
      for (let row = 0; row < GLYPH_H; row++) {
        for (let col = 0; col < 5; col++) {
          if (glyph[row] & (1 << (4 - col))) this.set(cx + col, y + row, color)
        }
      }
      cx += GLYPH_W
    }
  }

  textWidth(s: string): number {
    return s.length * GLYPH_W
  }

  writeTo(path: string): void {
    writeFileSync(path, PNG.sync.write(this.png))
  }
}

const BLACK: RGB = [0, 0, 0]
const GRID: RGB = [225, 225, 225]

export function renderFigure(model: FigureModel): Raster {
  const raster = new Raster(model.width, model.height)
  const { margin, width, height } = model
  const x0 = margin.left
  const x1 = width - margin.right
  const y0 = margin.top
  const y1 = height - margin.bottom

  for (const t of ticks(model.xRange)) {
    const { px } = dataToPixel(model, t, model.yRange[0])
    raster.line(px, y0, px, y1, GRID)
    const label = formatTick(t)
    raster.text(px - raster.textWidth(label) / 2, y1 + 6, label, BLACK)
    raster.line(px, y1, px, y1 + 3, BLACK)
  }
  for (const t of ticks(model.yRange)) {
    const { py } = dataToPixel(model, model.xRange[0], t)
    raster.line(x0, py, x1, py, GRID)
    const label = formatTick(t)
    raster.text(x0 - raster.textWidth(label) - 8, py - 3, label, BLACK)
    raster.line(x0 - 3, py, x0, py, BLACK)
  }

  // axes frame
  raster.line(x0, y0, x0, y1, BLACK)
  raster.line(x0, y1, x1, y1, BLACK)
  raster.line(x1, y0, x1, y1, BLACK)
  raster.line(x0, y0, x1, y0, BLACK)

  for (const series of model.series) {
    const pts = series.x.map((x, i) => dataToPixel(model, x, series.y[i]))
    for (let i = 1; i < pts.length; i++) {
      raster.line(pts[i - 1].px, pts[i - 1].py, pts[i].px, pts[i].py,
        series.color, 2)
    }
    if (series.markers || pts.length === 1) {
      for (const p of pts) raster.marker(p.px, p.py, series.color)
    }
  }

  // legend, top-right inside the frame
  const legendW =
    Math.max(...model.series.map((s) => raster.textWidth(s.label))) + 26
  const legendX = x1 - legendW - 8
  let legendY = y0 + 8
  raster.fillRect(legendX - 4, legendY - 4, legendW + 8,
    model.series.length * 13 + 8, [250, 250, 250])
  for (const series of model.series) {
    raster.fillRect(legendX, legendY + 1, 14, 5, series.color)
    raster.text(legendX + 20, legendY - 1, series.label, BLACK)
    legendY += 13
  }

  raster.text((x0 + x1) / 2 - raster.textWidth(model.title) / 2, 8,
    model.title, BLACK)
  raster.text((x0 + x1) / 2 - raster.textWidth(model.xLabel) / 2,
    height - 14, model.xLabel, BLACK)
  // y label along the left edge, horizontal (no rotation in the tiny font)
  raster.text(6, y0 - 16, model.yLabel, BLACK)
  return raster
}
