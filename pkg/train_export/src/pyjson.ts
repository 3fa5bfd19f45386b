/**
 * Canonical JSON writer matching the engine's on-disk format byte for byte:
 * UTF-8, 2-space indent, insertion-ordered keys, and floats rendered the way
 * CPython's repr renders them (shortest round-trip digits, fixed notation for
 * decimal exponents in [-3, 16], otherwise scientific with a two-digit,
 * always-signed exponent and no trailing ".0" on single-digit mantissas).
 */

/** Shortest-round-trip float in CPython repr form. */
export function pyFloat(x: number): string {
  if (!Number.isFinite(x)) {
    throw new Error(`cannot serialize non-finite float ${x}`);
  }
  if (x === 0) {
    return Object.is(x, -0) ? "-0.0" : "0.0";
  }
  const sign = x < 0 ? "-" : "";
  const s = Math.abs(x).toString(); // shortest digits, JS notation
  const m = /^(\d+)(?:\.(\d+))?(?:e([+-]\d+))?$/.exec(s);
  if (!m) {
    throw new Error(`unexpected number format: ${s}`);
  }
  const intPart = m[1];
  const fracPart = m[2] ?? "";
  const exp = m[3] ? parseInt(m[3], 10) : 0;

  // Normalize to value = 0.digits * 10^decpt with no leading/trailing zeros.
  let digits = (intPart + fracPart).replace(/^0+/, "");
  let decpt: number;
  if (intPart !== "0") {
    decpt = intPart.length + exp;
  } else {
    const fracZeros = fracPart.length - fracPart.replace(/^0+/, "").length;
    decpt = -fracZeros + exp;
  }
  digits = digits.replace(/0+$/, "");
  if (digits === "") {
    return sign + "0.0";
  }

  if (decpt > 16 || decpt <= -4) {
    const mantissa =
      digits.length > 1 ? `${digits[0]}.${digits.slice(1)}` : digits;
    const e = decpt - 1;
    const eSign = e < 0 ? "-" : "+";
    const eAbs = Math.abs(e).toString().padStart(2, "0");
    return `${sign}${mantissa}e${eSign}${eAbs}`;
  }
  if (decpt <= 0) {
    return `${sign}0.${"0".repeat(-decpt)}${digits}`;
  }
  if (decpt >= digits.length) {
    return `${sign}${digits}${"0".repeat(decpt - digits.length)}.0`;
  }
  return `${sign}${digits.slice(0, decpt)}.${digits.slice(decpt)}`;
}

/** A JSON value with explicit float/int distinction for serialization. */
export type CanonValue =
  | { float: number }
  | { int: number }
  | string
  | CanonValue[]
  | { [key: string]: CanonValue };

function isFloat(v: CanonValue): v is { float: number } {
  return typeof v === "object" && v !== null && !Array.isArray(v) && "float" in v
    && Object.keys(v).length === 1 && typeof (v as any).float === "number";
}

function isInt(v: CanonValue): v is { int: number } {
  return typeof v === "object" && v !== null && !Array.isArray(v) && "int" in v
    && Object.keys(v).length === 1 && typeof (v as any).int === "number";
}

function encodeString(s: string): string {
  // python json.dumps(ensure_ascii=False) escaping: quote, backslash, controls
  let out = '"';
  for (const ch of s) {
    const code = ch.codePointAt(0)!;
    if (ch === '"') out += '\\"';
    else if (ch === "\\") out += "\\\\";
    else if (ch === "\n") out += "\\n";
    else if (ch === "\t") out += "\\t";
    else if (ch === "\r") out += "\\r";
    else if (ch === "\b") out += "\\b";
    else if (ch === "\f") out += "\\f";
    else if (code < 0x20) out += "\\u" + code.toString(16).padStart(4, "0");
    else out += ch;
  }
  return out + '"';
}

function serialize(value: CanonValue, indent: number): string {
  const pad = " ".repeat(indent);
  const inner = " ".repeat(indent + 2);
  if (typeof value === "string") {
    return encodeString(value);
  }
  if (isFloat(value)) {
    return pyFloat(value.float);
  }
  if (isInt(value)) {
    if (!Number.isInteger(value.int)) {
      throw new Error(`not an integer: ${value.int}`);
    }
    return value.int.toString();
  }
  if (Array.isArray(value)) {
    if (value.length === 0) return "[]";
    const items = value.map((v) => inner + serialize(v, indent + 2));
    return "[\n" + items.join(",\n") + "\n" + pad + "]";
  }
  const keys = Object.keys(value);
  if (keys.length === 0) return "{}";
  const items = keys.map(
    (k) => inner + encodeString(k) + ": " + serialize((value as any)[k], indent + 2)
  );
  return "{\n" + items.join(",\n") + "\n" + pad + "}";
}

/** Serialize with a trailing newline, exactly like the engine's writer. */
export function canonicalDumps(value: CanonValue): string {
  return serialize(value, 0) + "\n";
}

export const floats = (xs: number[]): CanonValue[] => xs.map((x) => ({ float: x }));
export const floats2 = (xs: number[][]): CanonValue[] => xs.map(floats);
export const floats3 = (xs: number[][][]): CanonValue[] => xs.map(floats2);
