/* tslint:disable */
/* eslint-disable */

export function finslerNorm(example: string, u1: number, u2: number, v1: number, v2: number): number;

export function indicatrixOutline(example: string, u1: number, u2: number, n: number): Float64Array;

export function loopDeviation(example: string, scale: number, cx: number, cy: number, r: number): number;

export function renderFigure(config: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly finslerNorm: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly indicatrixOutline: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly loopDeviation: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly renderFigure: (a: number, b: number) => [number, number, number, number];
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
