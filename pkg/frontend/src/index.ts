export { CSV_SCHEMA, SchemaError, parseCsvFile, parseCsvText, requireColumn, columnsByPrefix } from "./csv.js";
export type { DataTable } from "./csv.js";
export { renderFig1, renderFig2, renderDephasing } from "./figures.js";
export type { RenderResult } from "./figures.js";
export { plottedArraysSha256 } from "./hash.js";
export { renderFromDir, runCli } from "./cli.js";
export { STYLE } from "./style.js";
