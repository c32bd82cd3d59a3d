/**
 * Reader/writer for the core's raw volume format: one JSON header line
 * (`dims`, `spacing`, `dtype`, `channels`) followed by a little-endian
 * payload in the shared flat layout (x fastest, channel slowest).
 */

import * as fs from "node:fs";
import * as os from "node:os";

import { Dtype, NdArray, TypedData, elementCount, makeArray } from "./ndarray";

const BYTES: Record<Dtype, number> = { uint8: 1, float32: 4, float64: 8 };

function assertLittleEndian(): void {
  if (os.endianness() !== "LE") {
    throw new Error("rawvol payloads are little-endian; big-endian hosts are unsupported");
  }
}

export interface RawHeader {
  dims: [number, number, number];
  spacing: [number, number, number];
  dtype: Dtype;
  channels: number;
}

export function writeRawVol(
  path: string,
  arr: NdArray,
  spacing: [number, number, number],
  dimsChannels: { dims: [number, number, number]; channels: number },
): void {
  assertLittleEndian();
  const header: RawHeader = {
    dims: dimsChannels.dims,
    spacing,
    dtype: arr.dtype,
    channels: dimsChannels.channels,
  };
  const head = Buffer.from(JSON.stringify(header) + "\n", "utf-8");
  const body = Buffer.from(arr.data.buffer, arr.data.byteOffset, arr.data.byteLength);
  fs.writeFileSync(path, Buffer.concat([head, body]));
}

export function readRawVol(path: string): { array: NdArray; header: RawHeader } {
  assertLittleEndian();
  const blob = fs.readFileSync(path);
  const nl = blob.indexOf(0x0a);
  if (nl < 0) {
    throw new Error(`${path}: missing raw-format header line`);
  }
  const header = JSON.parse(blob.subarray(0, nl).toString("utf-8")) as RawHeader;
  const { dims, channels, dtype } = header;
  const shape = channels === 0 ? [...dims] : [...dims, channels];
  const count = elementCount(shape);
  const need = nl + 1 + count * BYTES[dtype];
  if (blob.length < need) {
    throw new Error(`${path}: truncated payload, need ${need} bytes, have ${blob.length}`);
  }
  // copy out of the file buffer so the typed array owns aligned memory
  const bytes = Buffer.alloc(count * BYTES[dtype]);
  blob.copy(bytes, 0, nl + 1, need);
  let data: TypedData;
  if (dtype === "uint8") {
    data = new Uint8Array(bytes.buffer, 0, count);
  } else if (dtype === "float32") {
    data = new Float32Array(bytes.buffer, 0, count);
  } else {
    data = new Float64Array(bytes.buffer, 0, count);
  }
  return { array: makeArray(dtype, shape, data), header };
}
