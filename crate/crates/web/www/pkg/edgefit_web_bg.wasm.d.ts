/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_fitter_free: (a: number, b: number) => void;
export const __wbg_scene_free: (a: number, b: number) => void;
export const __wbg_sweep_free: (a: number, b: number) => void;
export const fitter_advance: (a: number, b: number) => [number, number, number];
export const fitter_chamfer: (a: number) => number;
export const fitter_new: (a: number, b: number, c: bigint, d: number) => [number, number, number];
export const fitter_points: (a: number) => [number, number];
export const fitter_render: (a: number, b: number, c: number) => [number, number, number, number];
export const fitter_render_target: (a: number, b: number, c: number) => [number, number, number, number];
export const fitter_steps: (a: number) => number;
export const scene_is_empty: (a: number) => number;
export const scene_len: (a: number) => number;
export const scene_new: (a: number, b: number, c: number, d: bigint) => [number, number, number];
export const scene_render: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const sweep_components: (a: number) => [number, number];
export const sweep_sigma: (a: number, b: number, c: number, d: number) => [number, number, number];
export const sweep_strip: (a: number) => [number, number];
export const sweep_width: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
