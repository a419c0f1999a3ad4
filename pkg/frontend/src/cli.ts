#!/usr/bin/env node
import { renderFigure } from './render'
import { loadSliceProfiles, sliceFigure } from './slices'
import { timeseriesFigure } from './timeseries'

const USAGE = `usage:
  ossify-plots plot-slices <run-dir-or-csv> --months 3,12 --out fig.png
  ossify-plots plot-timeseries <timeseries.csv> --out fig.png`

function parseFlags(args: string[]): { positional: string[]; flags: Map<string, string> } {
  const positional: string[] = []
  const flags = new Map<string, string>()
  for (let i = 0; i < args.length; i++) {
    if (args[i].startsWith('--')) {
      const value = args[i + 1]
      if (value === undefined) throw new Error(`flag ${args[i]} needs a value`)
      flags.set(args[i].slice(2), value)
      i++
    } else {
      positional.push(args[i])
    }
  }
  return { positional, flags }
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv
  if (!command || command === '--help' || command === '-h') {
    console.error(USAGE)
    return 2
  }
  try {
    const { positional, flags } = parseFlags(rest)
    const out = flags.get('out')
    if (positional.length !== 1 || !out) {
      console.error(USAGE)
      return 2
    }
    if (command === 'plot-slices') {
      const monthsFlag = flags.get('months') ?? '3,12'
      const months = monthsFlag.split(',').map((m) => {
        const value = Number(m)
        if (Number.isNaN(value)) throw new Error(`bad month value '${m}'`)
        return value
      })
      const figure = sliceFigure(loadSliceProfiles(positional[0]), months)
      renderFigure(figure).writeTo(out)
      console.log(`wrote ${out} (${figure.series.length} curves)`)
      return 0
    }
    if (command === 'plot-timeseries') {
      const figure = timeseriesFigure(positional[0])
      renderFigure(figure).writeTo(out)
      console.log(`wrote ${out} (${figure.series.length} curves)`)
      return 0
    }
    console.error(`unknown command '${command}'\n${USAGE}`)
    return 2
  } catch (err) {
    console.error(`error: ${(err as Error).message}`)
    return 1
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)))
}
