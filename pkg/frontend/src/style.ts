/** House style for all figures; the one place look-and-feel lives. */
export const STYLE = {
  panelWidth: 320,
  panelHeight: 240,
  margin: { top: 34, right: 14, bottom: 44, left: 56 },
  gap: 18,
  background: "#ffffff",
  axisColor: "#333333",
  gridColor: "#e4e4e4",
  fontFamily: "Helvetica, Arial, sans-serif",
  fontSize: 11,
  titleSize: 12,
  tickCount: 5,
  lineWidth: 1.4,
  dash: "6 3",
  // categorical palette (solid = correlated/reference, dashed = white noise)
  colors: ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"],
} as const;
