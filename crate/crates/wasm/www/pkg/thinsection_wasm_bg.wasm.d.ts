/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_classification_free: (a: number, b: number) => void;
export const classification_overlay: (a: number) => [number, number];
export const classification_summary: (a: number) => [number, number];
export const classification_trace: (a: number) => [number, number];
export const classify: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number];
export const edge_map: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const synth_sample: (a: number, b: number, c: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
