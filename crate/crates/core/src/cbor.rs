//! CBOR. Output always uses definite lengths; indefinite lengths, float16
//! and semantic tags are accepted on input.

use crate::codec::{
    check_depth, finite, short_render, ByteCursor, Codec, CodecError, ErrorKind, FormatId,
    FormatOptions, Result,
};
use crate::value::{widen_f32, JsonValue, Map};

pub struct Cbor;

impl Codec for Cbor {
    fn format(&self) -> FormatId {
        FormatId::Cbor
    }

    fn encode(&self, doc: &JsonValue, _: &FormatOptions) -> Result<Vec<u8>> {
        Ok(cbor_encode(doc))
    }

    fn decode_from(&self, cur: &mut ByteCursor<'_>, _: &FormatOptions) -> Result<JsonValue> {
        Decoder::default().value(cur, 0)
    }
}

pub const MAJOR_UNSIGNED: u8 = 0;
pub const MAJOR_NEGATIVE: u8 = 1;
pub const MAJOR_BYTES: u8 = 2;
pub const MAJOR_TEXT: u8 = 3;
pub const MAJOR_ARRAY: u8 = 4;
pub const MAJOR_MAP: u8 = 5;
pub const MAJOR_TAG: u8 = 6;
pub const MAJOR_SIMPLE: u8 = 7;

const BREAK: u8 = 0xff;

/// Initial byte plus the minimal-width big-endian argument.
pub fn cbor_header_encode(major: u8, argument: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(9);
    write_header(&mut out, major, argument);
    out
}

fn write_header(out: &mut Vec<u8>, major: u8, arg: u64) {
    debug_assert!(major <= 7);
    let m = major << 5;
    if arg < 24 {
        out.push(m | arg as u8);
    } else if arg <= 0xff {
        out.extend_from_slice(&[m | 24, arg as u8]);
    } else if arg <= 0xffff {
        out.push(m | 25);
        out.extend_from_slice(&(arg as u16).to_be_bytes());
    } else if arg <= 0xffff_ffff {
        out.push(m | 26);
        out.extend_from_slice(&(arg as u32).to_be_bytes());
    } else {
        out.push(m | 27);
        out.extend_from_slice(&arg.to_be_bytes());
    }
}

pub fn cbor_encode(doc: &JsonValue) -> Vec<u8> {
    let mut out = Vec::new();
    write_value(&mut out, doc);
    out
}

fn write_value(out: &mut Vec<u8>, v: &JsonValue) {
    match v {
        JsonValue::Null => out.push(0xf6),
        JsonValue::Bool(false) => out.push(0xf4),
        JsonValue::Bool(true) => out.push(0xf5),
        JsonValue::Int(n) if *n >= 0 => write_header(out, MAJOR_UNSIGNED, *n as u64),
        // -1 - n without overflow at i64::MIN
        JsonValue::Int(n) => write_header(out, MAJOR_NEGATIVE, !(*n as u64)),
        JsonValue::Float(x) => {
            out.push(0xfb);
            out.extend_from_slice(&x.to_be_bytes());
        }
        JsonValue::Str(s) => write_text(out, s),
        JsonValue::Arr(items) => {
            write_header(out, MAJOR_ARRAY, items.len() as u64);
            items.iter().for_each(|item| write_value(out, item));
        }
        JsonValue::Obj(map) => {
            write_header(out, MAJOR_MAP, map.len() as u64);
            for (k, v) in map {
                write_text(out, k);
                write_value(out, v);
            }
        }
    }
}

fn write_text(out: &mut Vec<u8>, s: &str) {
    write_header(out, MAJOR_TEXT, s.len() as u64);
    out.extend_from_slice(s.as_bytes());
}

pub fn cbor_decode(bytes: &[u8]) -> Result<JsonValue> {
    cbor_decode_with_tags(bytes).map(|(v, _)| v)
}

/// Decodes one item and also returns the semantic tag numbers that were
/// skipped along the way. A non-empty list means information was dropped.
pub fn cbor_decode_with_tags(bytes: &[u8]) -> Result<(JsonValue, Vec<u64>)> {
    let mut cur = ByteCursor::new(bytes);
    let mut dec = Decoder::default();
    let v = dec.value(&mut cur, 0)?;
    cur.expect_end()?;
    Ok((v, dec.skipped_tags))
}

/// IEEE binary16 to binary64; exact.
pub fn f16_to_f64(h: u16) -> f64 {
    let sign = if h & 0x8000 != 0 { -1.0 } else { 1.0 };
    let exp = i32::from((h >> 10) & 0x1f);
    let frac = f64::from(h & 0x3ff);
    sign * match exp {
        0 => frac * 2f64.powi(-24),
        31 if frac == 0.0 => f64::INFINITY,
        31 => f64::NAN,
        _ => (1.0 + frac / 1024.0) * 2f64.powi(exp - 15),
    }
}

struct Header {
    major: u8,
    /// None for indefinite length.
    arg: Option<u64>,
    info: u8,
}

#[derive(Default)]
struct Decoder {
    skipped_tags: Vec<u64>,
}

impl Decoder {
    fn header(&mut self, cur: &mut ByteCursor<'_>) -> Result<Header> {
        let start = cur.position();
        let initial = cur.read_u8()?;
        let major = initial >> 5;
        let info = initial & 0x1f;
        let arg = match info {
            0..=23 => Some(u64::from(info)),
            24 => Some(u64::from(cur.read_u8()?)),
            25 => Some(u64::from(cur.read_u16_be()?)),
            26 => Some(u64::from(cur.read_u32_be()?)),
            27 => Some(cur.read_u64_be()?),
            31 if matches!(major, MAJOR_BYTES..=MAJOR_MAP) || major == MAJOR_SIMPLE => None,
            _ => return Err(cur.error_at(ErrorKind::BadTag(initial), start)),
        };
        Ok(Header { major, arg, info })
    }

    fn value(&mut self, cur: &mut ByteCursor<'_>, depth: usize) -> Result<JsonValue> {
        check_depth(cur, depth)?;
        let start = cur.position();
        let h = self.header(cur)?;
        let scalar = match (h.major, h.arg) {
            (MAJOR_UNSIGNED, Some(u)) => JsonValue::Int(
                i64::try_from(u).map_err(|_| cur.error_at(ErrorKind::Overflow, start))?,
            ),
            (MAJOR_NEGATIVE, Some(u)) => {
                let n = i64::try_from(u).map_err(|_| cur.error_at(ErrorKind::Overflow, start))?;
                JsonValue::Int(-1 - n)
            }
            (MAJOR_BYTES, _) => {
                return Err(cur.error_at(ErrorKind::Unsupported("byte string".into()), start))
            }
            (MAJOR_TEXT, len) => JsonValue::Str(self.text(cur, start, len)?),
            (MAJOR_ARRAY, len) => {
                cur.annotate(start, "array header", || Some(count_text(len, "items")));
                let mut items = Vec::new();
                match len {
                    Some(n) => {
                        for _ in 0..n {
                            items.push(self.value(cur, depth + 1)?);
                        }
                    }
                    None => {
                        while !self.at_break(cur)? {
                            items.push(self.value(cur, depth + 1)?);
                        }
                    }
                }
                return Ok(JsonValue::Arr(items));
            }
            (MAJOR_MAP, len) => {
                cur.annotate(start, "map header", || Some(count_text(len, "entries")));
                let mut map = Map::new();
                let mut remaining = len;
                loop {
                    match remaining.as_mut() {
                        Some(0) => break,
                        Some(n) => *n -= 1,
                        None if self.at_break(cur)? => break,
                        None => {}
                    }
                    let key_start = cur.position();
                    let kh = self.header(cur)?;
                    if kh.major != MAJOR_TEXT {
                        return Err(cur
                            .error_at(ErrorKind::Unsupported("non-text map key".into()), key_start));
                    }
                    let key = self.text(cur, key_start, kh.arg)?;
                    cur.annotate(key_start, "key", || Some(format!("{key:?}")));
                    let value = self.value(cur, depth + 1)?;
                    map.insert(key, value).map_err(|e| {
                        CodecError::new(ErrorKind::DuplicateKey(e.0), key_start)
                    })?;
                }
                return Ok(JsonValue::Obj(map));
            }
            (MAJOR_TAG, Some(tag)) => {
                if matches!(tag, 2..=5) {
                    return Err(cur
                        .error_at(ErrorKind::Unsupported("bignum or decimal".into()), start)
                        .with_detail(format!("tag {tag}")));
                }
                cur.annotate(start, "tag (skipped)", || Some(tag.to_string()));
                self.skipped_tags.push(tag);
                return self.value(cur, depth + 1);
            }
            (MAJOR_SIMPLE, _) => self.simple(cur, start, &h)?,
            _ => unreachable!("header() rejects other combinations"),
        };
        let label = match (h.major, h.info) {
            (MAJOR_UNSIGNED, _) => "unsigned int",
            (MAJOR_NEGATIVE, _) => "negative int",
            (MAJOR_TEXT, 31) => "text chunks",
            (MAJOR_TEXT, _) => "text",
            (_, 25) => "float16",
            (_, 26) => "float32",
            (_, 27) => "float64",
            _ => "simple",
        };
        if !(h.major == MAJOR_TEXT && h.info == 31) {
            cur.annotate(start, label, || short_render(&scalar));
        }
        Ok(scalar)
    }

    fn simple(&mut self, cur: &ByteCursor<'_>, start: usize, h: &Header) -> Result<JsonValue> {
        let initial = cur.buffer()[start];
        let raw = match h.arg {
            Some(a) => a,
            None => return Err(cur.error_at(ErrorKind::BadTag(BREAK), start)),
        };
        match h.info {
            20 => Ok(JsonValue::Bool(false)),
            21 => Ok(JsonValue::Bool(true)),
            22 => Ok(JsonValue::Null),
            23 => Err(cur.error_at(ErrorKind::Unsupported("undefined".into()), start)),
            25 => finite(cur, start, f16_to_f64(raw as u16)),
            26 => finite(cur, start, widen_f32(f32::from_bits(raw as u32))),
            27 => finite(cur, start, f64::from_bits(raw)),
            _ => Err(cur.error_at(ErrorKind::BadTag(initial), start)),
        }
    }

    fn text(&mut self, cur: &mut ByteCursor<'_>, start: usize, len: Option<u64>) -> Result<String> {
        match len {
            Some(n) => {
                let n = usize::try_from(n).map_err(|_| cur.error(ErrorKind::Truncated))?;
                Ok(cur.take_utf8(n)?.to_owned())
            }
            None => {
                cur.annotate(start, "text header", || Some("indefinite".into()));
                let mut s = String::new();
                while !self.at_break(cur)? {
                    let chunk_start = cur.position();
                    let ch = self.header(cur)?;
                    match (ch.major, ch.arg) {
                        (MAJOR_TEXT, Some(n)) => {
                            let n = usize::try_from(n).map_err(|_| cur.error(ErrorKind::Truncated))?;
                            let part = cur.take_utf8(n)?;
                            cur.annotate(chunk_start, "text chunk", || Some(format!("{part:?}")));
                            s.push_str(part);
                        }
                        _ => {
                            return Err(cur.error_at(
                                ErrorKind::BadTag(cur.buffer()[chunk_start]),
                                chunk_start,
                            ))
                        }
                    }
                }
                Ok(s)
            }
        }
    }

    /// Consumes a stop code if one is next.
    fn at_break(&mut self, cur: &mut ByteCursor<'_>) -> Result<bool> {
        if cur.peek_u8()? == BREAK {
            let start = cur.position();
            cur.read_u8()?;
            cur.annotate(start, "break", || None);
            Ok(true)
        } else {
            Ok(false)
        }
    }
}

fn count_text(len: Option<u64>, what: &str) -> String {
    match len {
        Some(n) => format!("{n} {what}"),
        None => "indefinite".into(),
    }
}
