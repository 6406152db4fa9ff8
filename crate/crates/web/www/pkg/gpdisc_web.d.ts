/* tslint:disable */
/* eslint-disable */

/**
 * Named curves over a common abscissa, plus one marked abscissa.
 */
export class Series {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    count(): number;
    label(i: number): string;
    marker(): number;
    x(): Float64Array;
    y(i: number): Float64Array;
}

/**
 * Row-major `m × m` values over a square, with the simplex that defines it.
 */
export class Surface {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    delta(): number;
    hi(): number;
    lo(): number;
    m(): number;
    values(): Float64Array;
    /**
     * Flattened `(x1, x2)` pairs of the simplex vertices.
     */
    vertices(): Float64Array;
}

export function deltaSurface(family0: string, theta0: number, family1: string, theta1: number, p: number, m: number): Surface;

export function exampleSeries(example: number, a0: number, a1: number, points: number): Series;

export function psiSeries(family0: string, theta0: number, family1: string, theta1: number, t_max: number, points: number): Series;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_series_free: (a: number, b: number) => void;
    readonly __wbg_surface_free: (a: number, b: number) => void;
    readonly deltaSurface: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
    readonly exampleSeries: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly psiSeries: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
    readonly series_count: (a: number) => number;
    readonly series_label: (a: number, b: number) => [number, number];
    readonly series_marker: (a: number) => number;
    readonly series_x: (a: number) => [number, number];
    readonly series_y: (a: number, b: number) => [number, number];
    readonly surface_delta: (a: number) => number;
    readonly surface_hi: (a: number) => number;
    readonly surface_lo: (a: number) => number;
    readonly surface_m: (a: number) => number;
    readonly surface_values: (a: number) => [number, number];
    readonly surface_vertices: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
