import { DataTable, columnsByPrefix, requireColumn } from "./csv.js";
import { plottedArraysSha256 } from "./hash.js";
import { PanelSpec, Series, renderFigure } from "./svg.js";
import { STYLE } from "./style.js";

export interface RenderResult {
  svg: string;
  /** digest of every plotted (name, values) pair, in plot order */
  plottedSha256: string;
  panelCount: number;
}

function collect(series: Series[][]): Array<[string, number[]]> {
  const flat: Array<[string, number[]]> = [];
  for (const panel of series) {
    for (const s of panel) {
      flat.push([s.label, s.y]);
    }
  }
  return flat;
}

/**
 * Four panels: sample trajectories and ensemble averages, for the
 * correlated (frozen) and white-noise regimes.
 */
export function renderFig1(trajectories: DataTable, averages: DataTable): RenderResult {
  const t = requireColumn(trajectories, "tJ");
  const tAvg = requireColumn(averages, "tJ");

  const frozenSamples = columnsByPrefix(trajectories, "alpha2_frozen_");
  const whiteSamples = columnsByPrefix(trajectories, "alpha2_white_");
  const mk = (cols: Array<[string, number[]]>, dashed: boolean): Series[] =>
    cols.map(([name, y], i) => ({
      label: name.replace("alpha2_frozen_", "").replace("alpha2_white_", "run "),
      x: t,
      y,
      color: STYLE.colors[i % STYLE.colors.length],
      dashed,
    }));

  const avgFrozen: Series[] = [
    { label: "mean_alpha2_frozen", x: tAvg, y: requireColumn(averages, "mean_alpha2_frozen"), color: STYLE.colors[0] },
    { label: "coh_abs_frozen", x: tAvg, y: requireColumn(averages, "coh_abs_frozen"), color: STYLE.colors[1] },
  ];
  const avgWhite: Series[] = [
    { label: "mean_alpha2_white", x: tAvg, y: requireColumn(averages, "mean_alpha2_white"), color: STYLE.colors[0], dashed: true },
    { label: "coh_abs_white", x: tAvg, y: requireColumn(averages, "coh_abs_white"), color: STYLE.colors[1], dashed: true },
  ];

  const panels: PanelSpec[] = [
    { title: "(a) sample runs, correlated noise", xLabel: "tJ", yLabel: "|α|²",
      series: mk(frozenSamples, false), yDomain: [0, 1] },
    { title: "(b) ensemble averages, correlated", xLabel: "tJ", yLabel: "weight / overlap",
      series: avgFrozen, yDomain: [0, 1] },
    { title: "(c) sample runs, white noise", xLabel: "tJ", yLabel: "|α|²",
      series: mk(whiteSamples, true), yDomain: [0, 1] },
    { title: "(d) ensemble averages, white", xLabel: "tJ", yLabel: "weight / overlap",
      series: avgWhite, yDomain: [0, 1] },
  ];
  const plotted = collect(panels.map((p) => p.series));
  const plottedSha256 = plottedArraysSha256(plotted);
  return {
    svg: renderFigure(panels, 2, { figure: "fig1", plottedSha256 }),
    plottedSha256,
    panelCount: panels.length,
  };
}

/**
 * Three panels of entropy evolution; solid lines are the correlated
 * (frozen) regime, dashed the white-noise regime.
 */
export function renderFig2(frozen: DataTable, white: DataTable): RenderResult {
  const tF = requireColumn(frozen, "tJ");
  const tW = requireColumn(white, "tJ");
  const pair = (column: string, colorIdx: number): Series[] => [
    { label: `${column} (correlated)`, x: tF, y: requireColumn(frozen, column),
      color: STYLE.colors[colorIdx] },
    { label: `${column} (white)`, x: tW, y: requireColumn(white, column),
      color: STYLE.colors[colorIdx], dashed: true },
  ];

  const panels: PanelSpec[] = [
    { title: "(a) entropy and entanglement", xLabel: "tJ", yLabel: "entropy [nats]",
      series: [...pair("s_td_nats", 0), ...pair("s_ent_avg_nats", 1)] },
    { title: "(b) sum", xLabel: "tJ", yLabel: "entropy [nats]",
      series: pair("s_sum_nats", 2) },
    { title: "(c) locally obtainable entropy", xLabel: "tJ", yLabel: "entropy [nats]",
      series: pair("s_td_int_nats", 3) },
  ];
  const plotted = collect(panels.map((p) => p.series));
  const plottedSha256 = plottedArraysSha256(plotted);
  return {
    svg: renderFigure(panels, 3, { figure: "fig2", plottedSha256 }),
    plottedSha256,
    panelCount: panels.length,
  };
}

/**
 * Dephasing comparison: local observables coincide while the
 * entanglement column separates the two models.
 */
export function renderDephasing(reference: DataTable, white: DataTable): RenderResult {
  const tR = requireColumn(reference, "tJ");
  const tW = requireColumn(white, "tJ");
  const pair = (column: string, colorIdx: number): Series[] => [
    { label: `${column} (dephasing)`, x: tR, y: requireColumn(reference, column),
      color: STYLE.colors[colorIdx] },
    { label: `${column} (reduction)`, x: tW, y: requireColumn(white, column),
      color: STYLE.colors[colorIdx], dashed: true },
  ];

  const panels: PanelSpec[] = [
    { title: "(a) populations", xLabel: "tJ", yLabel: "E[|α|²]",
      series: pair("mean_alpha2", 0), yDomain: [0, 1] },
    { title: "(b) locally obtainable entropy", xLabel: "tJ", yLabel: "entropy [nats]",
      series: pair("s_td_int_nats", 3) },
    { title: "(c) average entanglement", xLabel: "tJ", yLabel: "entropy [nats]",
      series: pair("s_ent_avg_nats", 1) },
  ];
  const plotted = collect(panels.map((p) => p.series));
  const plottedSha256 = plottedArraysSha256(plotted);
  return {
    svg: renderFigure(panels, 3, { figure: "dephasing", plottedSha256 }),
    plottedSha256,
    panelCount: panels.length,
  };
}
