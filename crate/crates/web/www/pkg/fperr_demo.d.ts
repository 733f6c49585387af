/* tslint:disable */
/* eslint-disable */

/**
 * Condition number of `site` at `n` evenly spaced points of `[lo, hi]`;
 * `NaN` where the site does not run or cannot be conditioned.
 */
export function condition_curve(id: string, site: number, lo: number, hi: number, n: number): Float64Array;

/**
 * The corpus with each function's sites, as JSON.
 */
export function functions(): string;

/**
 * Newton iterates for the first danger spec of `site`, started at `x0`.
 */
export function newton_path(id: string, site: number, x0: Float64Array): string;

/**
 * binary64 result against the high-precision oracle.
 */
export function validate(id: string, inputs: Float64Array): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly condition_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly functions: () => [number, number, number, number];
    readonly newton_path: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly validate: (a: number, b: number, c: number, d: number) => [number, number, number, number];
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
