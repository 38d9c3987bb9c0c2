export * from "./csv.js";
export * from "./analysis.js";
export * from "./marching.js";
export * from "./figures.js";
export { run } from "./cli.js";
