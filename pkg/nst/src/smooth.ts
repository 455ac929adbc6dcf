/**
 * First-order Savitzky-Golay smoothing along z, matching the primary
 * toolkit's contract: odd window, boundaries use the largest odd symmetric
 * window that fits. For a degree-1 least-squares fit on a symmetric window,
 * the fitted center value is exactly the window mean, so the filter reduces
 * to shrinking-window moving averages.
 */

import { Vvol } from "./vvol";

export function roundHalfUp(x: number): number {
  return Math.floor(x + 0.5);
}

export function sgSmoothZ(stack: Float64Array, dims: [number, number, number], window = 5): Float64Array {
  const [nx, ny, nz] = dims;
  if (window % 2 === 0 || window < 1) {
    throw new Error(`window must be odd and positive, got ${window}`);
  }
  if (window > nz) {
    throw new Error(`window ${window} exceeds z extent ${nz}`);
  }
  const half = Math.floor(window / 2);
  const out = new Float64Array(stack.length);
  const planeSize = nx * ny;
  for (let z = 0; z < nz; z++) {
    const h = Math.min(half, z, nz - 1 - z);
    const m = 2 * h + 1;
    for (let i = 0; i < planeSize; i++) {
      let acc = 0;
      for (let dz = -h; dz <= h; dz++) {
        acc += stack[(z + dz) * planeSize + i];
      }
      out[z * planeSize + i] = acc / m;
    }
  }
  return out;
}

export function quantizeToVolume(stack: Float64Array, dims: [number, number, number], dtype: number): Vvol {
  const data = new Uint8Array(stack.length);
  for (let i = 0; i < stack.length; i++) {
    data[i] = Math.min(255, Math.max(0, roundHalfUp(stack[i])));
  }
  return { dims, dtype, data };
}
