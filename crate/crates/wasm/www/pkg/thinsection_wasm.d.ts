/* tslint:disable */
/* eslint-disable */

export class Classification {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Tinted overlay as RGBA, same size as the input.
     */
    readonly overlay: Uint8Array;
    /**
     * JSON with cell labels, percentages and the rock decision.
     */
    readonly summary: string;
    readonly trace: string;
}

export function classify(rgba: Uint8Array, width: number, height: number, grid: number, t_nonzero: number, t_variance: number, canny_high: number, variance_mode: string): Classification;

/**
 * Canny edges as an opaque black/white RGBA image.
 */
export function edge_map(rgba: Uint8Array, width: number, height: number, canny_high: number): Uint8Array;

/**
 * A seeded 512x384 synthetic section of `rock`, or the 8x8 diorite sample
 * when `rock` is `"diorite-example"`.
 */
export function synth_sample(rock: string, seed: number): Uint8Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_classification_free: (a: number, b: number) => void;
    readonly classification_overlay: (a: number) => [number, number];
    readonly classification_summary: (a: number) => [number, number];
    readonly classification_trace: (a: number) => [number, number];
    readonly classify: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number];
    readonly edge_map: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly synth_sample: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
