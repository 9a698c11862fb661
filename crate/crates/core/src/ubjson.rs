//! UBJSON (draft 12 markers, no optimized containers).

use num_bigint::BigInt;

use crate::codec::{
    check_depth, finite, short_render, ByteCursor, Codec, CodecError, ErrorKind, FormatId,
    FormatOptions, Result,
};
use crate::value::{decimal_to_f64_exact, widen_f32, JsonValue, Map};

pub struct Ubjson;

impl Codec for Ubjson {
    fn format(&self) -> FormatId {
        FormatId::Ubjson
    }

    fn encode(&self, doc: &JsonValue, _: &FormatOptions) -> Result<Vec<u8>> {
        Ok(ubj_encode(doc))
    }

    fn decode_from(&self, cur: &mut ByteCursor<'_>, _: &FormatOptions) -> Result<JsonValue> {
        read_value(cur, 0)
    }
}

pub mod marker {
    pub const NULL: u8 = b'Z';
    pub const NOOP: u8 = b'N';
    pub const TRUE: u8 = b'T';
    pub const FALSE: u8 = b'F';
    pub const INT8: u8 = b'i';
    pub const UINT8: u8 = b'U';
    pub const INT16: u8 = b'I';
    pub const INT32: u8 = b'l';
    pub const INT64: u8 = b'L';
    pub const FLOAT32: u8 = b'd';
    pub const FLOAT64: u8 = b'D';
    pub const HIGH_PRECISION: u8 = b'H';
    pub const CHAR: u8 = b'C';
    pub const STRING: u8 = b'S';
    pub const ARRAY_START: u8 = b'[';
    pub const ARRAY_END: u8 = b']';
    pub const OBJECT_START: u8 = b'{';
    pub const OBJECT_END: u8 = b'}';
    pub const TYPE: u8 = b'$';
    pub const COUNT: u8 = b'#';
}

use marker::*;

pub fn ubj_encode(doc: &JsonValue) -> Vec<u8> {
    let mut out = Vec::new();
    write_value(&mut out, doc);
    out
}

pub fn ubj_decode(bytes: &[u8]) -> Result<JsonValue> {
    crate::codec::decode(FormatId::Ubjson, bytes, &FormatOptions::default())
}

fn write_value(out: &mut Vec<u8>, v: &JsonValue) {
    match v {
        JsonValue::Null => out.push(NULL),
        JsonValue::Bool(true) => out.push(TRUE),
        JsonValue::Bool(false) => out.push(FALSE),
        JsonValue::Int(n) => write_int(out, *n),
        JsonValue::Float(x) if *x == 0.0 => {
            out.push(FLOAT32);
            out.extend_from_slice(&(*x as f32).to_be_bytes());
        }
        JsonValue::Float(x) => {
            out.push(FLOAT64);
            out.extend_from_slice(&x.to_be_bytes());
        }
        JsonValue::Str(s) if s.len() == 1 => out.extend_from_slice(&[CHAR, s.as_bytes()[0]]),
        JsonValue::Str(s) => {
            out.push(STRING);
            write_str_body(out, s);
        }
        JsonValue::Arr(items) => {
            out.push(ARRAY_START);
            items.iter().for_each(|item| write_value(out, item));
            out.push(ARRAY_END);
        }
        JsonValue::Obj(map) => {
            out.push(OBJECT_START);
            for (k, v) in map {
                write_str_body(out, k);
                write_value(out, v);
            }
            out.push(OBJECT_END);
        }
    }
}

fn write_str_body(out: &mut Vec<u8>, s: &str) {
    write_int(out, s.len() as i64);
    out.extend_from_slice(s.as_bytes());
}

/// Unsigned byte for 0..=255, then the narrowest signed width.
fn write_int(out: &mut Vec<u8>, n: i64) {
    if (0..=255).contains(&n) {
        out.extend_from_slice(&[UINT8, n as u8]);
    } else if n >= i64::from(i8::MIN) && n < 0 {
        out.extend_from_slice(&[INT8, n as i8 as u8]);
    } else if let Ok(v) = i16::try_from(n) {
        out.push(INT16);
        out.extend_from_slice(&v.to_be_bytes());
    } else if let Ok(v) = i32::try_from(n) {
        out.push(INT32);
        out.extend_from_slice(&v.to_be_bytes());
    } else {
        out.push(INT64);
        out.extend_from_slice(&n.to_be_bytes());
    }
}

fn skip_noops(cur: &mut ByteCursor<'_>) -> Result<u8> {
    loop {
        let m = cur.peek_u8()?;
        if m != NOOP {
            return Ok(m);
        }
        let start = cur.position();
        cur.read_u8()?;
        cur.annotate(start, "no-op", || None);
    }
}

fn read_value(cur: &mut ByteCursor<'_>, depth: usize) -> Result<JsonValue> {
    check_depth(cur, depth)?;
    skip_noops(cur)?;
    let start = cur.position();
    let m = cur.read_u8()?;
    let (label, v) = match m {
        NULL => ("null", JsonValue::Null),
        TRUE => ("true", JsonValue::Bool(true)),
        FALSE => ("false", JsonValue::Bool(false)),
        INT8 | UINT8 | INT16 | INT32 | INT64 => ("int", JsonValue::Int(read_int_payload(cur, m)?)),
        FLOAT32 => {
            let x = cur.read_f32_be()?;
            ("float32", finite(cur, start, widen_f32(x))?)
        }
        FLOAT64 => {
            let x = cur.read_f64_be()?;
            ("float64", finite(cur, start, x)?)
        }
        HIGH_PRECISION => {
            let text = read_str_body(cur)?;
            ("high-precision", parse_high_precision(text).map_err(|k| cur.error_at(k, start))?)
        }
        CHAR => {
            let b = cur.read_u8()?;
            if !b.is_ascii() {
                return Err(cur.error_at(ErrorKind::InvalidUtf8, start + 1));
            }
            ("char", JsonValue::Str(char::from(b).to_string()))
        }
        STRING => ("string", JsonValue::Str(read_str_body(cur)?.to_owned())),
        ARRAY_START => {
            reject_optimized(cur)?;
            cur.annotate(start, "array start", || None);
            let mut items = Vec::new();
            loop {
                if skip_noops(cur)? == ARRAY_END {
                    let end = cur.position();
                    cur.read_u8()?;
                    cur.annotate(end, "array end", || None);
                    return Ok(JsonValue::Arr(items));
                }
                items.push(read_value(cur, depth + 1)?);
            }
        }
        OBJECT_START => {
            reject_optimized(cur)?;
            cur.annotate(start, "object start", || None);
            let mut map = Map::new();
            loop {
                if skip_noops(cur)? == OBJECT_END {
                    let end = cur.position();
                    cur.read_u8()?;
                    cur.annotate(end, "object end", || None);
                    return Ok(JsonValue::Obj(map));
                }
                let key_start = cur.position();
                let key = read_str_body(cur)?.to_owned();
                cur.annotate(key_start, "key", || Some(format!("{key:?}")));
                let value = read_value(cur, depth + 1)?;
                map.insert(key, value)
                    .map_err(|e| CodecError::new(ErrorKind::DuplicateKey(e.0), key_start))?;
            }
        }
        _ => return Err(cur.error_at(ErrorKind::BadTag(m), start)),
    };
    cur.annotate(start, label, || short_render(&v));
    Ok(v)
}

fn reject_optimized(cur: &ByteCursor<'_>) -> Result<()> {
    match cur.peek_u8() {
        Ok(TYPE | COUNT) => Err(cur.error(ErrorKind::Unsupported("optimized container".into()))),
        _ => Ok(()),
    }
}

fn read_int_payload(cur: &mut ByteCursor<'_>, m: u8) -> Result<i64> {
    Ok(match m {
        INT8 => cur.read_i8_be()?.into(),
        UINT8 => cur.read_u8()?.into(),
        INT16 => cur.read_i16_be()?.into(),
        INT32 => cur.read_i32_be()?.into(),
        _ => cur.read_i64_be()?,
    })
}

/// Length (an integer element) followed by UTF-8 bytes.
fn read_str_body<'a>(cur: &mut ByteCursor<'a>) -> Result<&'a str> {
    let start = cur.position();
    let m = cur.read_u8()?;
    if !matches!(m, INT8 | UINT8 | INT16 | INT32 | INT64) {
        return Err(cur.error_at(ErrorKind::BadTag(m), start).with_detail("expected a length"));
    }
    let n = read_int_payload(cur, m)?;
    let n = usize::try_from(n).map_err(|_| {
        cur.error_at(ErrorKind::LengthMismatch, start).with_detail(format!("negative length {n}"))
    })?;
    cur.take_utf8(n)
}

/// Integer grammar gives Int (or Float if out of range but exact); anything
/// with a fraction or exponent gives Float, and only when binary64 holds
/// the decimal exactly.
pub fn parse_high_precision(text: &str) -> std::result::Result<JsonValue, ErrorKind> {
    let bad = || ErrorKind::Unsupported(format!("high-precision number {text:?}"));
    let (mantissa, exp10) = parse_decimal(text).ok_or_else(bad)?;
    let integral = !text.contains(['.', 'e', 'E']);
    if integral {
        if let Ok(n) = text.parse::<i64>() {
            return Ok(JsonValue::Int(n));
        }
    }
    decimal_to_f64_exact(&mantissa, exp10)
        .map(JsonValue::Float)
        .ok_or(ErrorKind::Overflow)
}

const MAX_EXP10: i64 = 1200;

/// JSON number grammar into digits and a power of ten.
fn parse_decimal(text: &str) -> Option<(BigInt, i64)> {
    let (num, exp) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i64>().ok()?),
        None => (text, 0),
    };
    let (neg, num) = match num.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, num),
    };
    let (int_part, frac_part) = match num.split_once('.') {
        Some((i, f)) if !f.is_empty() => (i, f),
        Some(_) => return None,
        None => (num, ""),
    };
    let leading_zero_ok = int_part == "0" || !int_part.starts_with('0');
    if int_part.is_empty()
        || !leading_zero_ok
        || !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit())
        || exp.abs() > MAX_EXP10
    {
        return None;
    }
    let digits = format!("{}{int_part}{frac_part}", if neg { "-" } else { "" });
    Some((digits.parse().ok()?, exp - frac_part.len() as i64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enc(v: impl Into<JsonValue>) -> Vec<u8> {
        ubj_encode(&v.into())
    }

    #[test]
    fn encode_examples() {
        assert_eq!(enc(true), [0x54]);
        assert_eq!(enc(false), [0x46]);
        assert_eq!(ubj_encode(&JsonValue::Arr(vec![true.into()])), [0x5b, 0x54, 0x5d]);
        assert_eq!(enc(200i64), [0x55, 0xc8]);
        assert_eq!(enc(5i64), [0x55, 0x05]);
        assert_eq!(enc(-5i64), [0x69, 0xfb]);
        assert_eq!(enc(-25200i64), [0x49, 0x9d, 0x90]);
        assert_eq!(enc(256i64), [0x49, 0x01, 0x00]);
        assert_eq!(enc(40000i64), [0x6c, 0, 0, 0x9c, 0x40]);
        assert_eq!(enc(i64::MAX)[0], b'L');
        assert_eq!(enc("a"), [0x43, 0x61]);
        assert_eq!(enc(""), [0x53, 0x55, 0x00]);
        assert_eq!(enc("ox03"), [0x53, 0x55, 0x04, b'o', b'x', b'0', b'3']);
        assert_eq!(enc(JsonValue::Float(0.0)), [0x64, 0, 0, 0, 0]);
    }

    #[test]
    fn object_keys_have_no_string_marker() {
        let v = crate::value::parse_json(r#"{"a":null}"#).unwrap();
        assert_eq!(ubj_encode(&v), [b'{', b'U', 1, b'a', b'Z', b'}']);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(ubj_decode(&[0x5a]).unwrap(), JsonValue::Null);
        assert_eq!(ubj_decode(&[0x43, 0x61]).unwrap(), JsonValue::from("a"));
        assert_eq!(ubj_decode(&[0x54]).unwrap(), JsonValue::Bool(true));
        assert_eq!(ubj_decode(&[0x69, 0x05]).unwrap(), JsonValue::Int(5));
        assert_eq!(ubj_decode(b"[NTN]").unwrap(), JsonValue::Arr(vec![true.into()]));
        assert_eq!(ubj_decode(b"N{N}").unwrap().to_json_string(), "{}");
    }

    #[test]
    fn decode_errors() {
        assert_eq!(ubj_decode(b"x").unwrap_err().kind, ErrorKind::BadTag(b'x'));
        assert!(matches!(ubj_decode(b"[#U\x01T").unwrap_err().kind, ErrorKind::Unsupported(_)));
        assert_eq!(ubj_decode(b"[T").unwrap_err().kind, ErrorKind::Truncated);
        assert_eq!(ubj_decode(b"Si\xffab").unwrap_err().kind, ErrorKind::LengthMismatch);
        assert_eq!(ubj_decode(b"C\x80").unwrap_err().kind, ErrorKind::InvalidUtf8);
    }

    #[test]
    fn high_precision() {
        let hp = |s: &str| {
            let mut b = vec![b'H', b'U', s.len() as u8];
            b.extend_from_slice(s.as_bytes());
            ubj_decode(&b)
        };
        assert_eq!(hp("12").unwrap(), JsonValue::Int(12));
        assert_eq!(hp("-9223372036854775808").unwrap(), JsonValue::Int(i64::MIN));
        // 2^63 is a power of two, so binary64 holds it exactly
        assert_eq!(hp("9223372036854775808").unwrap(), JsonValue::Float(9223372036854775808.0));
        assert_eq!(hp("9223372036854775809").unwrap_err().kind, ErrorKind::Overflow);
        assert_eq!(hp("0.5").unwrap(), JsonValue::Float(0.5));
        assert_eq!(hp("1.5e3").unwrap(), JsonValue::Float(1500.0));
        assert_eq!(hp("0.1").unwrap_err().kind, ErrorKind::Overflow);
        assert_eq!(hp("1e400").unwrap_err().kind, ErrorKind::Overflow);
        assert!(matches!(hp("01").unwrap_err().kind, ErrorKind::Unsupported(_)));
        assert!(matches!(hp("abc").unwrap_err().kind, ErrorKind::Unsupported(_)));
    }
}
