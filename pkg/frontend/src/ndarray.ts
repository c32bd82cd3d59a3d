/**
 * Dense array handles exchanged with the core.
 *
 * The flat buffer uses the core's layout: voxel (x, y, z) of a volume with
 * dims [H, W, D] sits at linear index x + H*(y + W*z); 4D arrays append the
 * channel as the slowest axis, i.e. index + H*W*D*k.
 */

export type Dtype = "uint8" | "float32" | "float64";

export type TypedData = Uint8Array | Float32Array | Float64Array;

export interface NdArray {
  dtype: Dtype;
  /** up to 4 dims */
  shape: number[];
  /** contiguous buffer in the flat layout above */
  data: TypedData;
}

const CTORS: Record<Dtype, new (n: number) => TypedData> = {
  uint8: Uint8Array,
  float32: Float32Array,
  float64: Float64Array,
};

export function dtypeOf(data: TypedData): Dtype {
  if (data instanceof Uint8Array) return "uint8";
  if (data instanceof Float32Array) return "float32";
  return "float64";
}

export function makeArray(dtype: Dtype, shape: number[], data?: TypedData): NdArray {
  const n = shape.reduce((a, b) => a * b, 1);
  const buf = data ?? new CTORS[dtype](n);
  return { dtype, shape: [...shape], data: buf };
}

export function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

/**
 * Validate an array handle at the boundary. Throws TypeError/RangeError with
 * a message naming the offending property or dimension; nothing is cast
 * silently.
 */
export function validateHandle(
  name: string,
  arr: NdArray,
  opts: { dtypes: Dtype[]; rank?: number; maxRank?: number },
): void {
  const actual = dtypeOf(arr.data);
  if (actual !== arr.dtype) {
    throw new TypeError(
      `${name}: declared dtype ${arr.dtype} does not match buffer ${actual}`,
    );
  }
  if (!opts.dtypes.includes(arr.dtype)) {
    throw new TypeError(
      `${name}: dtype must be one of [${opts.dtypes.join(", ")}], got ${arr.dtype}`,
    );
  }
  const rank = arr.shape.length;
  if (opts.rank !== undefined && rank !== opts.rank) {
    throw new RangeError(`${name}: expected ${opts.rank} dims, got ${rank}`);
  }
  const maxRank = opts.maxRank ?? 4;
  if (rank < 1 || rank > maxRank) {
    throw new RangeError(`${name}: rank must be 1..${maxRank}, got ${rank}`);
  }
  arr.shape.forEach((extent, axis) => {
    if (!Number.isInteger(extent) || extent < 1) {
      throw new RangeError(`${name}: shape[${axis}] must be a positive integer, got ${extent}`);
    }
  });
  const expected = elementCount(arr.shape);
  if (arr.data.length !== expected) {
    throw new RangeError(
      `${name}: buffer holds ${arr.data.length} elements, shape [${arr.shape.join(
        ", ",
      )}] needs ${expected}`,
    );
  }
}

export function assertSameShape(aName: string, a: NdArray, bName: string, b: NdArray): void {
  if (a.shape.length !== b.shape.length) {
    throw new RangeError(
      `${aName} has ${a.shape.length} dims but ${bName} has ${b.shape.length}`,
    );
  }
  a.shape.forEach((extent, axis) => {
    if (b.shape[axis] !== extent) {
      throw new RangeError(
        `shape[${axis}] differs: ${aName} has ${extent}, ${bName} has ${b.shape[axis]}`,
      );
    }
  });
}

/** Pad a 1..4-dim shape to the file representation: [H, W, D] + channels. */
export function toDimsChannels(shape: number[]): { dims: [number, number, number]; channels: number } {
  if (shape.length === 4) {
    return { dims: [shape[0], shape[1], shape[2]], channels: shape[3] };
  }
  const dims: [number, number, number] = [1, 1, 1];
  shape.forEach((extent, axis) => {
    dims[axis] = extent;
  });
  return { dims, channels: 1 };
}
