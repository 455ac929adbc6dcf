/**
 * VVOL container I/O, byte-compatible with the primary toolkit:
 * magic "VVOL", version 1, dtype byte (0 intensity / 1 label), two reserved
 * zero bytes, three u32 LE dims (nx, ny, nz), then nx*ny*nz payload bytes in
 * x-fastest order (linear index x + nx*(y + ny*z)).
 */

import * as fs from "fs";

export const DTYPE_INTENSITY = 0;
export const DTYPE_LABEL = 1;

const MAGIC = Buffer.from("VVOL");
const HEADER_SIZE = 20;

export interface Vvol {
  dims: [number, number, number];
  dtype: number;
  data: Uint8Array; // x-fastest
}

export class VvolFormatError extends Error {}

export function readVvol(path: string): Vvol {
  const raw = fs.readFileSync(path);
  if (raw.length < HEADER_SIZE) {
    throw new VvolFormatError(`${path}: truncated header (${raw.length} bytes)`);
  }
  if (!raw.subarray(0, 4).equals(MAGIC)) {
    throw new VvolFormatError(`${path}: bad magic`);
  }
  if (raw[4] !== 1) {
    throw new VvolFormatError(`${path}: unsupported version ${raw[4]}`);
  }
  const dtype = raw[5];
  if (dtype !== DTYPE_INTENSITY && dtype !== DTYPE_LABEL) {
    throw new VvolFormatError(`${path}: unknown dtype byte ${dtype}`);
  }
  const nx = raw.readUInt32LE(8);
  const ny = raw.readUInt32LE(12);
  const nz = raw.readUInt32LE(16);
  if (nx === 0 || ny === 0 || nz === 0) {
    throw new VvolFormatError(`${path}: zero dimension in dims (${nx}, ${ny}, ${nz})`);
  }
  const n = nx * ny * nz;
  if (raw.length - HEADER_SIZE < n) {
    throw new VvolFormatError(
      `${path}: payload holds ${raw.length - HEADER_SIZE} bytes, dims require ${n}`
    );
  }
  const data = new Uint8Array(raw.subarray(HEADER_SIZE, HEADER_SIZE + n));
  return { dims: [nx, ny, nz], dtype, data };
}

export function writeVvol(path: string, v: Vvol): void {
  const [nx, ny, nz] = v.dims;
  if (v.data.length !== nx * ny * nz) {
    throw new VvolFormatError(`payload length ${v.data.length} != ${nx * ny * nz}`);
  }
  const header = Buffer.alloc(HEADER_SIZE);
  MAGIC.copy(header, 0);
  header[4] = 1;
  header[5] = v.dtype;
  header.writeUInt32LE(nx, 8);
  header.writeUInt32LE(ny, 12);
  header.writeUInt32LE(nz, 16);
  fs.writeFileSync(path, Buffer.concat([header, Buffer.from(v.data)]));
}

/** Axial slice z = k as a row-major [ny][nx] image (values 0..255). */
export function axialSlice(v: Vvol, k: number): Float32Array {
  const [nx, ny] = v.dims;
  const out = new Float32Array(nx * ny);
  const base = nx * ny * k;
  for (let y = 0; y < ny; y++) {
    for (let x = 0; x < nx; x++) {
      out[y * nx + x] = v.data[base + y * nx + x];
    }
  }
  return out;
}

/** Write a row-major [ny][nx] image back as axial slice z = k (no quantization). */
export function setAxialSlice(stack: Float64Array, v: Vvol, k: number, img: Float32Array): void {
  const [nx, ny] = v.dims;
  const base = nx * ny * k;
  for (let i = 0; i < nx * ny; i++) {
    stack[base + i] = img[i];
  }
}
