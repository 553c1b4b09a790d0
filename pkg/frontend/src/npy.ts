/**
 * Strict NPY v1.0 codec matching the Python side byte for byte.
 *
 * Only little-endian C-order arrays of dtype float32 (`<f4`), int32
 * (`<i4`) or uint8 (`|u1`) are accepted; anything else throws an
 * {@link NpyParseError} carrying the byte offset of the problem.
 */

const MAGIC = Buffer.from("\x93NUMPY", "latin1");

export type Dtype = "float32" | "int32" | "uint8";
export type TypedData = Float32Array | Int32Array | Uint8Array;

export interface NdArray {
  dtype: Dtype;
  shape: number[];
  data: TypedData;
}

const DESCRS: Record<Dtype, string> = {
  float32: "<f4",
  int32: "<i4",
  uint8: "|u1",
};

const DTYPES: Record<string, Dtype> = {
  "<f4": "float32",
  "<i4": "int32",
  "|u1": "uint8",
};

export class NpyParseError extends Error {
  readonly offset: number;

  constructor(message: string, offset: number) {
    super(`${message} (at byte offset ${offset})`);
    this.offset = offset;
  }
}

export function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export function makeArray(dtype: Dtype, shape: number[]): NdArray {
  const n = elementCount(shape);
  const data =
    dtype === "float32"
      ? new Float32Array(n)
      : dtype === "int32"
        ? new Int32Array(n)
        : new Uint8Array(n);
  return { dtype, shape: [...shape], data };
}

/** Python repr of a shape tuple: `(2, 3)`, `(5,)`, `()`. */
function shapeRepr(shape: number[]): string {
  if (shape.length === 1) return `(${shape[0]},)`;
  return `(${shape.join(", ")})`;
}

export function encodeNpy(arr: NdArray): Buffer {
  const n = elementCount(arr.shape);
  if (arr.data.length !== n) {
    throw new Error(
      `data has ${arr.data.length} elements, shape implies ${n}`,
    );
  }
  let text =
    `{'descr': '${DESCRS[arr.dtype]}', 'fortran_order': False, ` +
    `'shape': ${shapeRepr(arr.shape)}}`;
  // pad with spaces so magic+version+len+header is a multiple of 64
  const base = MAGIC.length + 2 + 2;
  const pad = 64 - ((base + text.length + 1) % 64);
  text = text + " ".repeat(pad) + "\n";
  const head = Buffer.alloc(4);
  head[0] = 1;
  head[1] = 0;
  head.writeUInt16LE(text.length, 2);
  const payload = Buffer.from(
    arr.data.buffer,
    arr.data.byteOffset,
    arr.data.byteLength,
  );
  return Buffer.concat([MAGIC, head, Buffer.from(text, "latin1"), payload]);
}

/** Parse the header dict without eval; the writer grammar is tiny. */
function parseHeader(text: string): {
  descr: string;
  fortran: boolean;
  shape: number[];
} {
  const m = text.match(
    /^\{'descr': '([^']*)', 'fortran_order': (True|False)\s*,\s*'shape': \(([^)]*)\)\}\s*$/,
  );
  if (!m) throw new NpyParseError("unparseable header dict", 10);
  const inner = m[3].trim();
  const shape =
    inner === ""
      ? []
      : inner
          .replace(/,\s*$/, "")
          .split(",")
          .map((s) => {
            const v = Number(s.trim());
            if (!Number.isInteger(v) || v < 0) {
              throw new NpyParseError("bad shape in header", 10);
            }
            return v;
          });
  return { descr: m[1], fortran: m[2] === "True", shape };
}

export function decodeNpy(raw: Buffer): NdArray {
  if (raw.length < 10 || !raw.subarray(0, 6).equals(MAGIC)) {
    throw new NpyParseError("missing NPY magic bytes", 0);
  }
  const major = raw[6];
  const minor = raw[7];
  if (major !== 1 || minor !== 0) {
    throw new NpyParseError(`unsupported NPY version ${major}.${minor}`, 6);
  }
  const hlen = raw.readUInt16LE(8);
  if (raw.length < 10 + hlen) {
    throw new NpyParseError("truncated header", 10);
  }
  const header = parseHeader(raw.subarray(10, 10 + hlen).toString("latin1"));
  const dtype = DTYPES[header.descr];
  if (dtype === undefined) {
    throw new NpyParseError(`unsupported dtype descr '${header.descr}'`, 10);
  }
  if (header.fortran) {
    throw new NpyParseError("Fortran-order arrays are not supported", 10);
  }
  const count = elementCount(header.shape);
  const itemsize = dtype === "uint8" ? 1 : 4;
  const start = 10 + hlen;
  const expected = count * itemsize;
  if (raw.length - start !== expected) {
    throw new NpyParseError(
      `payload has ${raw.length - start} bytes, expected ${expected}`,
      start,
    );
  }
  // copy into an aligned buffer; Buffer slices may start at odd offsets
  const bytes = new Uint8Array(expected);
  bytes.set(raw.subarray(start));
  const data =
    dtype === "float32"
      ? new Float32Array(bytes.buffer)
      : dtype === "int32"
        ? new Int32Array(bytes.buffer)
        : bytes;
  return { dtype, shape: header.shape, data };
}
