//! BSON documents.

use crate::codec::{
    check_depth, finite, short_render, ByteCursor, Codec, CodecError, ErrorKind, FormatId,
    FormatOptions, Result,
};
use crate::value::{JsonValue, Map};

pub struct Bson;

impl Codec for Bson {
    fn format(&self) -> FormatId {
        FormatId::Bson
    }

    fn encode(&self, doc: &JsonValue, _: &FormatOptions) -> Result<Vec<u8>> {
        bson_encode(doc)
    }

    fn decode_from(&self, cur: &mut ByteCursor<'_>, _: &FormatOptions) -> Result<JsonValue> {
        read_document(cur, false, 0)
    }
}

pub mod tag {
    pub const DOUBLE: u8 = 0x01;
    pub const STRING: u8 = 0x02;
    pub const DOCUMENT: u8 = 0x03;
    pub const ARRAY: u8 = 0x04;
    pub const BOOLEAN: u8 = 0x08;
    pub const NULL: u8 = 0x0a;
    pub const INT32: u8 = 0x10;
    pub const INT64: u8 = 0x12;
}

pub fn bson_encode(doc: &JsonValue) -> Result<Vec<u8>> {
    let map = doc
        .as_object()
        .ok_or_else(|| CodecError::new(ErrorKind::TopLevelShape, 0).with_detail(format!(
            "root is {}, BSON needs an object",
            doc.kind()
        )))?;
    let mut out = Vec::new();
    write_document(&mut out, map.iter())?;
    Ok(out)
}

pub fn bson_decode(bytes: &[u8]) -> Result<JsonValue> {
    crate::codec::decode(FormatId::Bson, bytes, &FormatOptions::default())
}

fn write_document<'a, K>(out: &mut Vec<u8>, entries: impl Iterator<Item = (K, &'a JsonValue)>) -> Result<()>
where
    K: AsRef<str>,
{
    let start = out.len();
    out.extend_from_slice(&[0; 4]);
    for (key, value) in entries {
        let key = key.as_ref();
        let tag_pos = out.len();
        out.push(0);
        if key.as_bytes().contains(&0) {
            return Err(CodecError::new(ErrorKind::KeyContainsNul, tag_pos + 1)
                .with_detail(format!("{key:?}")));
        }
        out.extend_from_slice(key.as_bytes());
        out.push(0);
        out[tag_pos] = write_payload(out, value)?;
    }
    out.push(0);
    let len = i32::try_from(out.len() - start)
        .map_err(|_| CodecError::new(ErrorKind::Overflow, start).with_detail("document over 2 GiB"))?;
    out[start..start + 4].copy_from_slice(&len.to_le_bytes());
    Ok(())
}

/// Writes the element payload and returns its type tag.
fn write_payload(out: &mut Vec<u8>, v: &JsonValue) -> Result<u8> {
    Ok(match v {
        JsonValue::Null => tag::NULL,
        JsonValue::Bool(b) => {
            out.push(u8::from(*b));
            tag::BOOLEAN
        }
        JsonValue::Int(n) => match i32::try_from(*n) {
            Ok(small) => {
                out.extend_from_slice(&small.to_le_bytes());
                tag::INT32
            }
            Err(_) => {
                out.extend_from_slice(&n.to_le_bytes());
                tag::INT64
            }
        },
        JsonValue::Float(x) => {
            out.extend_from_slice(&x.to_le_bytes());
            tag::DOUBLE
        }
        JsonValue::Str(s) => {
            let len = i32::try_from(s.len() + 1).map_err(|_| {
                CodecError::new(ErrorKind::Overflow, out.len()).with_detail("string over 2 GiB")
            })?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(s.as_bytes());
            out.push(0);
            tag::STRING
        }
        JsonValue::Arr(items) => {
            write_document(out, items.iter().enumerate().map(|(i, v)| (i.to_string(), v)))?;
            tag::ARRAY
        }
        JsonValue::Obj(map) => {
            write_document(out, map.iter())?;
            tag::DOCUMENT
        }
    })
}

fn unsupported_name(t: u8) -> Option<&'static str> {
    Some(match t {
        0x05 => "binary data",
        0x06 => "undefined",
        0x07 => "ObjectId",
        0x09 => "UTC datetime",
        0x0b => "regular expression",
        0x0c => "DBPointer",
        0x0d => "JavaScript code",
        0x0e => "symbol",
        0x0f => "JavaScript code with scope",
        0x11 => "timestamp",
        0x13 => "decimal128",
        0x7f => "max key",
        0xff => "min key",
        _ => return None,
    })
}

fn read_document(cur: &mut ByteCursor<'_>, as_array: bool, depth: usize) -> Result<JsonValue> {
    check_depth(cur, depth)?;
    let start = cur.position();
    let declared = cur.read_i32_le()?;
    if declared < 5 {
        return Err(cur
            .error_at(ErrorKind::LengthMismatch, start)
            .with_detail(format!("declared length {declared}")));
    }
    let end = start + declared as usize;
    // keep going when the frame overruns the input, so the inspector sees
    // every element before the cut
    let available = cur.buffer().len() - start;
    let overrun = || {
        CodecError::new(ErrorKind::Truncated, start)
            .with_detail(format!("declared length {declared}, {available} bytes available"))
    };
    cur.annotate(start, if as_array { "array length" } else { "document length" }, || {
        Some(declared.to_string())
    });

    let mut map = Map::new();
    let mut items = Vec::new();
    loop {
        let elem_start = cur.position();
        if elem_start >= end {
            return Err(cur
                .error_at(ErrorKind::LengthMismatch, start)
                .with_detail("frame ends before its terminator"));
        }
        let t = cur.read_u8()?;
        if t == 0 {
            if end > cur.buffer().len() {
                return Err(overrun());
            }
            if cur.position() != end {
                return Err(cur
                    .error_at(ErrorKind::LengthMismatch, elem_start)
                    .with_detail(format!("terminator at {elem_start}, frame ends at {end}")));
            }
            cur.annotate(elem_start, "terminator", || None);
            break;
        }
        let key = read_cstring(cur)?;
        cur.annotate(elem_start, "element tag and name", || Some(format!("0x{t:02x} {key:?}")));
        let value_start = cur.position();
        let value = match t {
            tag::DOCUMENT => read_document(cur, false, depth + 1)?,
            tag::ARRAY => read_document(cur, true, depth + 1)?,
            _ => {
                let v = read_scalar(cur, t, elem_start)?;
                cur.annotate(value_start, scalar_label(t), || short_render(&v));
                v
            }
        };
        if cur.position() > end {
            return Err(cur
                .error_at(ErrorKind::LengthMismatch, elem_start)
                .with_detail("element runs past the frame"));
        }
        if as_array {
            if key != items.len().to_string() {
                return Err(cur.error_at(ErrorKind::BadArrayKey(key.into()), elem_start + 1));
            }
            items.push(value);
        } else {
            map.insert(key.to_owned(), value)
                .map_err(|e| CodecError::new(ErrorKind::DuplicateKey(e.0), elem_start + 1))?;
        }
    }
    Ok(if as_array { JsonValue::Arr(items) } else { JsonValue::Obj(map) })
}

fn scalar_label(t: u8) -> &'static str {
    match t {
        tag::DOUBLE => "double",
        tag::STRING => "string",
        tag::BOOLEAN => "boolean",
        tag::INT32 => "int32",
        tag::INT64 => "int64",
        _ => "value",
    }
}

fn read_scalar(cur: &mut ByteCursor<'_>, t: u8, elem_start: usize) -> Result<JsonValue> {
    let start = cur.position();
    Ok(match t {
        tag::NULL => JsonValue::Null,
        tag::BOOLEAN => match cur.read_u8()? {
            0 => JsonValue::Bool(false),
            1 => JsonValue::Bool(true),
            b => return Err(cur.error_at(ErrorKind::BadTag(b), start).with_detail("boolean byte")),
        },
        tag::INT32 => JsonValue::Int(cur.read_i32_le()?.into()),
        tag::INT64 => JsonValue::Int(cur.read_i64_le()?),
        tag::DOUBLE => {
            let x = cur.read_f64_le()?;
            finite(cur, start, x)?
        }
        tag::STRING => {
            let len = cur.read_i32_le()?;
            if len < 1 {
                return Err(cur
                    .error_at(ErrorKind::LengthMismatch, start)
                    .with_detail(format!("string length {len}")));
            }
            let s = cur.take_utf8(len as usize - 1)?.to_owned();
            let nul_at = cur.position();
            if cur.read_u8()? != 0 {
                return Err(cur
                    .error_at(ErrorKind::LengthMismatch, nul_at)
                    .with_detail("string is not NUL-terminated"));
            }
            JsonValue::Str(s)
        }
        _ => {
            return Err(match unsupported_name(t) {
                Some(name) => cur.error_at(ErrorKind::Unsupported(name.into()), elem_start),
                None => cur.error_at(ErrorKind::BadTag(t), elem_start),
            })
        }
    })
}

fn read_cstring<'a>(cur: &mut ByteCursor<'a>) -> Result<&'a str> {
    let start = cur.position();
    let rest = &cur.buffer()[start..];
    let len = rest
        .iter()
        .position(|&b| b == 0)
        .ok_or_else(|| cur.error_at(ErrorKind::Truncated, cur.buffer().len()))?;
    let s = cur.take_utf8(len)?;
    cur.read_u8()?;
    Ok(s)
}

/// Checks every frame in an encoded document: the int32 prefix equals the
/// frame's byte length and the last byte is 0x00. Returns the number of
/// frames seen.
pub fn verify_framing(bytes: &[u8]) -> std::result::Result<usize, String> {
    fn frame(bytes: &[u8], at: usize, count: &mut usize) -> std::result::Result<usize, String> {
        let header: [u8; 4] = bytes
            .get(at..at + 4)
            .ok_or(format!("no length at {at}"))?
            .try_into()
            .unwrap();
        let len = i32::from_le_bytes(header);
        let end = at + usize::try_from(len).map_err(|_| format!("negative length at {at}"))?;
        if end > bytes.len() || len < 5 {
            return Err(format!("bad length {len} at {at}"));
        }
        if bytes[end - 1] != 0 {
            return Err(format!("frame at {at} does not end with 0x00"));
        }
        *count += 1;
        let mut pos = at + 4;
        while bytes[pos] != 0 {
            let t = bytes[pos];
            pos += 1;
            pos += bytes[pos..].iter().position(|&b| b == 0).ok_or("unterminated key")? + 1;
            pos += match t {
                tag::DOCUMENT | tag::ARRAY => frame(bytes, pos, count)? - pos,
                tag::STRING => {
                    let raw = bytes.get(pos..pos + 4).ok_or("string length past end")?;
                    4 + u32::from_le_bytes(raw.try_into().unwrap()) as usize
                }
                tag::DOUBLE | tag::INT64 => 8,
                tag::INT32 => 4,
                tag::BOOLEAN => 1,
                tag::NULL => 0,
                other => return Err(format!("unexpected tag 0x{other:02x}")),
            };
            if pos >= end {
                return Err(format!("element overruns frame at {at}"));
            }
        }
        if pos + 1 != end {
            return Err(format!("prefix {len} at {at} but frame is {} bytes", pos + 1 - at));
        }
        Ok(end)
    }
    let mut count = 0;
    let end = frame(bytes, 0, &mut count)?;
    if end != bytes.len() {
        return Err("trailing bytes".into());
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::parse_json;

    #[test]
    fn encode_examples() {
        assert_eq!(bson_encode(&parse_json("{}").unwrap()).unwrap(), [5, 0, 0, 0, 0]);
        assert_eq!(
            bson_encode(&parse_json(r#"{"a":true}"#).unwrap()).unwrap(),
            [0x09, 0, 0, 0, 0x08, 0x61, 0x00, 0x01, 0x00]
        );
        assert_eq!(bson_encode(&true.into()).unwrap_err().kind, ErrorKind::TopLevelShape);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(bson_decode(&[5, 0, 0, 0, 0]).unwrap().to_json_string(), "{}");
        assert_eq!(
            bson_decode(&[0x09, 0, 0, 0, 0x08, 0x61, 0x00, 0x01, 0x00]).unwrap().to_json_string(),
            r#"{"a":true}"#
        );
        let e = bson_decode(&[0x10, 0, 0, 0, 0]).unwrap_err();
        assert_eq!((e.kind, e.offset), (ErrorKind::Truncated, 0));
        let e = bson_decode(&[0x10, 0, 0, 0, 0x08, 0x61]).unwrap_err();
        assert_eq!((e.kind, e.offset), (ErrorKind::Truncated, 6));
    }

    #[test]
    fn integer_widths() {
        let v = parse_json(r#"{"a":2147483647,"b":2147483648,"c":-2147483649}"#).unwrap();
        let b = bson_encode(&v).unwrap();
        assert_eq!(b[4], tag::INT32);
        assert_eq!(b[4 + 3 + 4], tag::INT64);
        assert_eq!(bson_decode(&b).unwrap(), v);
    }

    #[test]
    fn arrays_use_zero_based_keys() {
        let v = parse_json(r#"{"x":[true,null]}"#).unwrap();
        let b = bson_encode(&v).unwrap();
        let inner = &b[7..];
        assert_eq!(inner[0], 0x0c);
        assert_eq!(&inner[4..7], [tag::BOOLEAN, b'0', 0]);
        assert_eq!(&inner[8..11], [tag::NULL, b'1', 0]);
        assert_eq!(bson_decode(&b).unwrap(), v);
        assert_eq!(verify_framing(&b), Ok(2));
    }

    #[test]
    fn bad_array_key() {
        // {"x": [ "1": true ]}
        let b = [0x11, 0, 0, 0, 0x04, b'x', 0, 0x09, 0, 0, 0, 0x08, b'1', 0, 0x01, 0, 0];
        assert!(matches!(bson_decode(&b).unwrap_err().kind, ErrorKind::BadArrayKey(_)));
    }

    #[test]
    fn length_mismatch() {
        let mut b = bson_encode(&parse_json(r#"{"a":true}"#).unwrap()).unwrap();
        b.insert(8, 0);
        b[0] = 10;
        assert_eq!(bson_decode(&b).unwrap_err().kind, ErrorKind::LengthMismatch);
        assert_eq!(bson_decode(&[4, 0, 0, 0]).unwrap_err().kind, ErrorKind::LengthMismatch);
        // declared 6 but terminator at index 4
        assert_eq!(bson_decode(&[6, 0, 0, 0, 0, 0]).unwrap_err().kind, ErrorKind::LengthMismatch);
    }

    #[test]
    fn key_with_nul_rejected() {
        let mut m = Map::new();
        m.insert("a\0b".into(), JsonValue::Null).unwrap();
        assert_eq!(bson_encode(&JsonValue::Obj(m)).unwrap_err().kind, ErrorKind::KeyContainsNul);
    }

    #[test]
    fn mongodb_tags_unsupported() {
        let b = [0x10, 0, 0, 0, 0x07, b'i', 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 0];
        assert!(matches!(bson_decode(&b).unwrap_err().kind, ErrorKind::Unsupported(_)));
        let b = [0x08, 0, 0, 0, 0x20, b'i', 0, 0];
        assert_eq!(bson_decode(&b).unwrap_err().kind, ErrorKind::BadTag(0x20));
    }

    #[test]
    fn strings_may_hold_nul() {
        let v = parse_json(r#"{"s":"a\u0000b"}"#).unwrap();
        assert_eq!(bson_decode(&bson_encode(&v).unwrap()).unwrap(), v);
    }
}
