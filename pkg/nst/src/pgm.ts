/** Binary PGM (P5, maxval 255) reading for style image sets. */

import * as fs from "fs";

export interface GrayImage {
  width: number;
  height: number;
  data: Uint8Array; // row-major
}

export function readPgm(path: string): GrayImage {
  const raw = fs.readFileSync(path);
  if (raw[0] !== 0x50 || raw[1] !== 0x35) {
    throw new Error(`${path}: not a binary PGM (P5)`);
  }
  const fields: number[] = [];
  let pos = 2;
  while (fields.length < 3) {
    while (pos < raw.length && isSpace(raw[pos])) pos++;
    if (raw[pos] === 0x23) {
      // comment line
      while (pos < raw.length && raw[pos] !== 0x0a) pos++;
      continue;
    }
    let start = pos;
    while (pos < raw.length && !isSpace(raw[pos])) pos++;
    fields.push(parseInt(raw.subarray(start, pos).toString(), 10));
  }
  pos++; // single whitespace after maxval
  const [width, height, maxval] = fields;
  if (maxval !== 255) {
    throw new Error(`${path}: only maxval 255 supported, got ${maxval}`);
  }
  const n = width * height;
  if (raw.length - pos < n) {
    throw new Error(`${path}: truncated PGM payload`);
  }
  return { width, height, data: new Uint8Array(raw.subarray(pos, pos + n)) };
}

export function writePgm(path: string, img: GrayImage): void {
  const header = Buffer.from(`P5\n${img.width} ${img.height}\n255\n`);
  fs.writeFileSync(path, Buffer.concat([header, Buffer.from(img.data)]));
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d;
}
