/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_series_free: (a: number, b: number) => void;
export const __wbg_surface_free: (a: number, b: number) => void;
export const deltaSurface: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const exampleSeries: (a: number, b: number, c: number, d: number) => [number, number, number];
export const psiSeries: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const series_count: (a: number) => number;
export const series_label: (a: number, b: number) => [number, number];
export const series_marker: (a: number) => number;
export const series_x: (a: number) => [number, number];
export const series_y: (a: number, b: number) => [number, number];
export const surface_delta: (a: number) => number;
export const surface_hi: (a: number) => number;
export const surface_lo: (a: number) => number;
export const surface_m: (a: number) => number;
export const surface_values: (a: number) => [number, number];
export const surface_vertices: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
