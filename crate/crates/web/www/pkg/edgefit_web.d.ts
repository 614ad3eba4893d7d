/* tslint:disable */
/* eslint-disable */

/**
 * Step-by-step fit of a jittered cube to the clean one.
 */
export class Fitter {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Runs `n` optimizer steps and returns the last total loss.
     */
    advance(n: number): number;
    /**
     * Chamfer distance at the start of the most recent step.
     */
    chamfer(): number;
    /**
     * `use_visual` selects the scheduled edge/corner weights; otherwise the
     * fit uses Chamfer distance alone.
     */
    constructor(points: number, jitter: number, seed: bigint, use_visual: boolean);
    /**
     * Flat `x y z` coordinates of the current cloud.
     */
    points(): Float64Array;
    /**
     * Current cloud's splat, edge and corner maps from one view.
     */
    render(azimuth: number, elevation: number): Float64Array;
    /**
     * Target cloud's maps from the same view, for side-by-side display.
     */
    render_target(azimuth: number, elevation: number): Float64Array;
    steps(): number;
}

/**
 * A fixed cloud that can be viewed from any angle.
 */
export class Scene {
    free(): void;
    [Symbol.dispose](): void;
    is_empty(): boolean;
    len(): number;
    /**
     * `shape` is one of `cube`, `solid`, `ring`, `square`.
     */
    constructor(shape: string, points: number, seed: bigint);
    /**
     * Three 64×64 images back to back: splat, edge map, corner map.
     */
    render(azimuth: number, elevation: number, sigma2: number): Float64Array;
}

/**
 * Result of [`sweep_sigma`]: one splat per variance, side by side.
 */
export class Sweep {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Connected components above half the maximum, per variance.
     */
    components(): Uint32Array;
    /**
     * Row-major strip of height 64.
     */
    strip(): Float64Array;
    width(): number;
}

/**
 * Renders a ring of `points` points of `radius` at each splat variance.
 */
export function sweep_sigma(values: Float64Array, points: number, radius: number): Sweep;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_fitter_free: (a: number, b: number) => void;
    readonly __wbg_scene_free: (a: number, b: number) => void;
    readonly __wbg_sweep_free: (a: number, b: number) => void;
    readonly fitter_advance: (a: number, b: number) => [number, number, number];
    readonly fitter_chamfer: (a: number) => number;
    readonly fitter_new: (a: number, b: number, c: bigint, d: number) => [number, number, number];
    readonly fitter_points: (a: number) => [number, number];
    readonly fitter_render: (a: number, b: number, c: number) => [number, number, number, number];
    readonly fitter_render_target: (a: number, b: number, c: number) => [number, number, number, number];
    readonly fitter_steps: (a: number) => number;
    readonly scene_is_empty: (a: number) => number;
    readonly scene_len: (a: number) => number;
    readonly scene_new: (a: number, b: number, c: number, d: bigint) => [number, number, number];
    readonly scene_render: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly sweep_components: (a: number) => [number, number];
    readonly sweep_sigma: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly sweep_strip: (a: number) => [number, number];
    readonly sweep_width: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
