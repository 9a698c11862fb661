//! MessagePack.

use crate::codec::{
    check_depth, finite, short_render, ByteCursor, Codec, CodecError, ErrorKind, FormatId,
    FormatOptions, Result,
};
use crate::value::{widen_f32, JsonValue, Map};

pub struct MessagePack;

impl Codec for MessagePack {
    fn format(&self) -> FormatId {
        FormatId::MessagePack
    }

    fn encode(&self, doc: &JsonValue, _: &FormatOptions) -> Result<Vec<u8>> {
        Ok(mp_encode(doc))
    }

    fn decode_from(&self, cur: &mut ByteCursor<'_>, _: &FormatOptions) -> Result<JsonValue> {
        read_value(cur, 0)
    }
}

pub fn mp_encode(doc: &JsonValue) -> Vec<u8> {
    let mut out = Vec::new();
    write_value(&mut out, doc);
    out
}

pub fn mp_decode(bytes: &[u8]) -> Result<JsonValue> {
    crate::codec::decode(FormatId::MessagePack, bytes, &FormatOptions::default())
}

fn write_value(out: &mut Vec<u8>, v: &JsonValue) {
    match v {
        JsonValue::Null => out.push(0xc0),
        JsonValue::Bool(false) => out.push(0xc2),
        JsonValue::Bool(true) => out.push(0xc3),
        JsonValue::Int(n) => write_int(out, *n),
        JsonValue::Float(x) => {
            out.push(0xcb);
            out.extend_from_slice(&x.to_be_bytes());
        }
        JsonValue::Str(s) => {
            write_len(out, s.len(), 0xa0, 31, [0xd9, 0xda, 0xdb]);
            out.extend_from_slice(s.as_bytes());
        }
        JsonValue::Arr(items) => {
            write_len(out, items.len(), 0x90, 15, [0, 0xdc, 0xdd]);
            for item in items {
                write_value(out, item);
            }
        }
        JsonValue::Obj(map) => {
            write_len(out, map.len(), 0x80, 15, [0, 0xde, 0xdf]);
            for (k, v) in map {
                write_len(out, k.len(), 0xa0, 31, [0xd9, 0xda, 0xdb]);
                out.extend_from_slice(k.as_bytes());
                write_value(out, v);
            }
        }
    }
}

/// `wide` holds the 8/16/32-bit length tags; a zero tag means that width
/// does not exist for the type.
fn write_len(out: &mut Vec<u8>, len: usize, fix: u8, fix_max: usize, wide: [u8; 3]) {
    if len <= fix_max {
        out.push(fix | len as u8);
    } else if len <= 0xff && wide[0] != 0 {
        out.extend_from_slice(&[wide[0], len as u8]);
    } else if len <= 0xffff {
        out.push(wide[1]);
        out.extend_from_slice(&(len as u16).to_be_bytes());
    } else {
        out.push(wide[2]);
        out.extend_from_slice(&(len as u32).to_be_bytes());
    }
}

fn write_int(out: &mut Vec<u8>, n: i64) {
    if (0..=0x7f).contains(&n) {
        out.push(n as u8);
    } else if (-32..0).contains(&n) {
        out.push(n as i8 as u8);
    } else if n > 0 {
        if n <= 0xff {
            out.extend_from_slice(&[0xcc, n as u8]);
        } else if n <= 0xffff {
            out.push(0xcd);
            out.extend_from_slice(&(n as u16).to_be_bytes());
        } else if n <= 0xffff_ffff {
            out.push(0xce);
            out.extend_from_slice(&(n as u32).to_be_bytes());
        } else {
            out.push(0xcf);
            out.extend_from_slice(&(n as u64).to_be_bytes());
        }
    } else if n >= i64::from(i8::MIN) {
        out.extend_from_slice(&[0xd0, n as i8 as u8]);
    } else if n >= i64::from(i16::MIN) {
        out.push(0xd1);
        out.extend_from_slice(&(n as i16).to_be_bytes());
    } else if n >= i64::from(i32::MIN) {
        out.push(0xd2);
        out.extend_from_slice(&(n as i32).to_be_bytes());
    } else {
        out.push(0xd3);
        out.extend_from_slice(&n.to_be_bytes());
    }
}

fn read_value(cur: &mut ByteCursor<'_>, depth: usize) -> Result<JsonValue> {
    check_depth(cur, depth)?;
    let start = cur.position();
    let tag = cur.read_u8()?;
    let scalar = match tag {
        0x00..=0x7f => JsonValue::Int(tag.into()),
        0xe0..=0xff => JsonValue::Int((tag as i8).into()),
        0xc0 => JsonValue::Null,
        0xc2 => JsonValue::Bool(false),
        0xc3 => JsonValue::Bool(true),
        0xcc => JsonValue::Int(cur.read_u8()?.into()),
        0xcd => JsonValue::Int(cur.read_u16_be()?.into()),
        0xce => JsonValue::Int(cur.read_u32_be()?.into()),
        0xcf => {
            let u = cur.read_u64_be()?;
            JsonValue::Int(i64::try_from(u).map_err(|_| {
                cur.error_at(ErrorKind::Overflow, start)
                    .with_detail(format!("uint64 {u}"))
            })?)
        }
        0xd0 => JsonValue::Int(cur.read_i8_be()?.into()),
        0xd1 => JsonValue::Int(cur.read_i16_be()?.into()),
        0xd2 => JsonValue::Int(cur.read_i32_be()?.into()),
        0xd3 => JsonValue::Int(cur.read_i64_be()?),
        0xca => {
            let x = cur.read_f32_be()?;
            finite(cur, start, widen_f32(x))?
        }
        0xcb => {
            let x = cur.read_f64_be()?;
            finite(cur, start, x)?
        }
        0xa0..=0xbf | 0xd9 | 0xda | 0xdb => JsonValue::Str(read_str(cur, tag)?.to_owned()),
        0x90..=0x9f | 0xdc | 0xdd => {
            let n = match tag {
                0xdc => cur.read_u16_be()? as usize,
                0xdd => cur.read_u32_be()? as usize,
                _ => (tag & 0x0f) as usize,
            };
            cur.annotate(start, "array header", || Some(format!("{n} items")));
            let mut items = Vec::with_capacity(n.min(cur.remaining()));
            for _ in 0..n {
                items.push(read_value(cur, depth + 1)?);
            }
            return Ok(JsonValue::Arr(items));
        }
        0x80..=0x8f | 0xde | 0xdf => {
            let n = match tag {
                0xde => cur.read_u16_be()? as usize,
                0xdf => cur.read_u32_be()? as usize,
                _ => (tag & 0x0f) as usize,
            };
            cur.annotate(start, "map header", || Some(format!("{n} entries")));
            let mut map = Map::with_capacity(n.min(cur.remaining()));
            for _ in 0..n {
                let key_start = cur.position();
                let key_tag = cur.read_u8()?;
                if !matches!(key_tag, 0xa0..=0xbf | 0xd9 | 0xda | 0xdb) {
                    return Err(cur
                        .error_at(ErrorKind::BadTag(key_tag), key_start)
                        .with_detail("map keys must be strings"));
                }
                let key = read_str(cur, key_tag)?.to_owned();
                cur.annotate(key_start, "key", || Some(format!("{key:?}")));
                let value = read_value(cur, depth + 1)?;
                map.insert(key, value).map_err(|e| {
                    CodecError::new(ErrorKind::DuplicateKey(e.0), key_start)
                })?;
            }
            return Ok(JsonValue::Obj(map));
        }
        0xc4..=0xc6 => {
            return Err(cur.error_at(ErrorKind::Unsupported("bin type".into()), start))
        }
        0xc7..=0xc9 | 0xd4..=0xd8 => {
            return Err(cur.error_at(ErrorKind::Unsupported("extension type".into()), start))
        }
        0xc1 => return Err(cur.error_at(ErrorKind::BadTag(tag), start)),
    };
    cur.annotate(start, label(tag), || short_render(&scalar));
    Ok(scalar)
}

fn read_str<'a>(cur: &mut ByteCursor<'a>, tag: u8) -> Result<&'a str> {
    let n = match tag {
        0xd9 => cur.read_u8()? as usize,
        0xda => cur.read_u16_be()? as usize,
        0xdb => cur.read_u32_be()? as usize,
        _ => (tag & 0x1f) as usize,
    };
    cur.take_utf8(n)
}

fn label(tag: u8) -> &'static str {
    match tag {
        0x00..=0x7f => "positive fixint",
        0xe0..=0xff => "negative fixint",
        0xc0 => "nil",
        0xc2 | 0xc3 => "bool",
        0xcc => "uint8",
        0xcd => "uint16",
        0xce => "uint32",
        0xcf => "uint64",
        0xd0 => "int8",
        0xd1 => "int16",
        0xd2 => "int32",
        0xd3 => "int64",
        0xca => "float32",
        0xcb => "float64",
        0xa0..=0xbf => "fixstr",
        0xd9 => "str8",
        0xda => "str16",
        0xdb => "str32",
        _ => "value",
    }
}
