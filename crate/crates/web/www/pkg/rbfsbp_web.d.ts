/* tslint:disable */
/* eslint-disable */

/**
 * Operator on `[x_left, x_right]` with `centers` equidistant centers.
 */
export function build_operator(kernel_name: string, shape: number, centers: number, poly_degree: number, x_left: number, x_right: number, grid: string): string;

/**
 * Best weights for plain collocation on `n` points of `[0, 1]`.
 */
export function collocation_check(kernel_name: string, shape: number, family: string, n: number, poly_degree: number): string;

/**
 * `u_t + u_x = 0` on the periodic interval `[-1, 1]` from `exp(-20 x^2)`.
 * `method` is `"rbfsbp"` (`blocks` copies of one operator) or
 * `"collocation"` (one block with `centers` nodes; `blocks` is ignored).
 */
export function simulate_pulse(kernel_name: string, shape: number, method: string, centers: number, blocks: number, poly_degree: number, t_end: number, frames: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly build_operator: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number];
    readonly collocation_check: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly simulate_pulse: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
