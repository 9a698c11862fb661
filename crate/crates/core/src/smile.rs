//! Smile.
//!
//! Reals are written as 7-bit groups of the IEEE bit pattern, least
//! significant group first. Back-references to shared names and values are
//! understood on input but only written when `back_references` is set.

use std::collections::HashMap;

use num_bigint::BigInt;

use crate::codec::{
    check_depth, finite, short_render, ByteCursor, Codec, CodecError, ErrorKind, FormatId,
    FormatOptions, Result,
};
use crate::intcodec::{unzigzag64, zigzag64};
use crate::value::{decimal_to_f64_exact, fits_f32, widen_f32, JsonValue, Map};

pub const MAGIC: [u8; 3] = [0x3a, 0x29, 0x0a];

pub const FLAG_SHARED_NAMES: u8 = 0x01;
pub const FLAG_SHARED_VALUES: u8 = 0x02;
pub const FLAG_RAW_BINARY: u8 = 0x04;

/// Shared-string tables stop growing at this many entries.
pub const MAX_SHARED: usize = 1024;

const START_ARRAY: u8 = 0xf8;
const END_ARRAY: u8 = 0xf9;
const START_OBJECT: u8 = 0xfa;
const END_OBJECT: u8 = 0xfb;
const END_STRING: u8 = 0xfc;
const END_OF_CONTENT: u8 = 0xff;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmileOptions {
    pub shared_names: bool,
    pub shared_values: bool,
    pub raw_binary: bool,
    /// Emit back-references for repeated names/values whose sharing flag is on.
    pub back_references: bool,
    /// Append the optional 0xff end-of-content byte.
    pub end_marker: bool,
}

impl Default for SmileOptions {
    fn default() -> Self {
        SmileOptions {
            shared_names: true,
            shared_values: true,
            raw_binary: false,
            back_references: false,
            end_marker: false,
        }
    }
}

impl SmileOptions {
    pub fn header_byte(&self) -> u8 {
        let mut b = 0;
        if self.shared_names {
            b |= FLAG_SHARED_NAMES;
        }
        if self.shared_values {
            b |= FLAG_SHARED_VALUES;
        }
        if self.raw_binary {
            b |= FLAG_RAW_BINARY;
        }
        b
    }
}

pub struct Smile;

impl Codec for Smile {
    fn format(&self) -> FormatId {
        FormatId::Smile
    }

    fn encode(&self, doc: &JsonValue, options: &FormatOptions) -> Result<Vec<u8>> {
        Ok(smile_encode(doc, &options.smile))
    }

    fn decode_from(&self, cur: &mut ByteCursor<'_>, _: &FormatOptions) -> Result<JsonValue> {
        read_document(cur)
    }
}

/// String token classes for values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmileStringClass {
    Empty,
    TinyAscii,
    SmallAscii,
    TinyUnicode,
    SmallUnicode,
    LongAscii,
    LongUnicode,
}

impl SmileStringClass {
    /// The smallest class able to hold `s`.
    pub fn of(s: &str) -> Self {
        let n = s.len();
        match (s.is_ascii(), n) {
            (_, 0) => SmileStringClass::Empty,
            (true, 1..=32) => SmileStringClass::TinyAscii,
            (true, 33..=64) => SmileStringClass::SmallAscii,
            (true, _) => SmileStringClass::LongAscii,
            (false, 2..=33) => SmileStringClass::TinyUnicode,
            (false, 34..=65) => SmileStringClass::SmallUnicode,
            (false, _) => SmileStringClass::LongUnicode,
        }
    }

    /// Class of a value token byte, if it starts a literal string.
    pub fn of_token(b: u8) -> Option<Self> {
        Some(match b {
            0x20 => SmileStringClass::Empty,
            0x40..=0x5f => SmileStringClass::TinyAscii,
            0x60..=0x7f => SmileStringClass::SmallAscii,
            0x80..=0x9f => SmileStringClass::TinyUnicode,
            0xa0..=0xbf => SmileStringClass::SmallUnicode,
            0xe0 => SmileStringClass::LongAscii,
            0xe4 => SmileStringClass::LongUnicode,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SmileStringClass::Empty => "empty string",
            SmileStringClass::TinyAscii => "tiny ASCII",
            SmileStringClass::SmallAscii => "small ASCII",
            SmileStringClass::TinyUnicode => "tiny Unicode",
            SmileStringClass::SmallUnicode => "small Unicode",
            SmileStringClass::LongAscii => "long ASCII",
            SmileStringClass::LongUnicode => "long Unicode",
        }
    }
}

/// binary32 bit pattern as five 7-bit groups, low group first. The shift is
/// arithmetic, so the top group of a negative value carries sign bits.
pub fn float7_encode_f32(x: f32) -> [u8; 5] {
    let bits = x.to_bits() as i32;
    std::array::from_fn(|i| ((bits >> (7 * i)) & 0x7f) as u8)
}

/// binary64 bit pattern as ten 7-bit groups, low group first.
pub fn float7_encode_f64(x: f64) -> [u8; 10] {
    let bits = x.to_bits();
    std::array::from_fn(|i| ((bits >> (7 * i)) & 0x7f) as u8)
}

fn float7_decode(groups: &[u8]) -> u64 {
    groups
        .iter()
        .enumerate()
        .fold(0u64, |acc, (i, &g)| acc | (u64::from(g & 0x7f).checked_shl(7 * i as u32).unwrap_or(0)))
}

/// Smile's own variable-length unsigned integer: big-endian 7-bit groups,
/// with the last byte flagged by 0x80 and holding only 6 bits.
pub fn write_vint(out: &mut Vec<u8>, n: u64) {
    let last = 0x80 | (n & 0x3f) as u8;
    let mut rest = n >> 6;
    let mut groups = Vec::new();
    while rest != 0 {
        groups.push((rest & 0x7f) as u8);
        rest >>= 7;
    }
    out.extend(groups.iter().rev());
    out.push(last);
}

fn read_vint(cur: &mut ByteCursor<'_>, max_bits: u32) -> Result<u64> {
    let start = cur.position();
    let mut value: u64 = 0;
    loop {
        let b = cur.read_u8()?;
        let (shift, payload) = if b & 0x80 != 0 { (6, b & 0x3f) } else { (7, b) };
        if value >> (max_bits - shift) != 0 {
            return Err(cur.error_at(ErrorKind::Overflow, start));
        }
        value = (value << shift) | u64::from(payload);
        if b & 0x80 != 0 {
            return Ok(value);
        }
    }
}

/// 7-bit "safe" binary: the bit stream is cut into 7-bit groups, most
/// significant first, with the last group right-aligned.
pub fn write_7bit_binary(out: &mut Vec<u8>, data: &[u8]) {
    let mut acc: u32 = 0;
    let mut bits = 0;
    for &byte in data {
        acc = (acc << 8) | u32::from(byte);
        bits += 8;
        while bits >= 7 {
            bits -= 7;
            out.push(((acc >> bits) & 0x7f) as u8);
        }
    }
    if bits > 0 {
        out.push((acc & ((1 << bits) - 1)) as u8);
    }
}

fn read_7bit_binary(cur: &mut ByteCursor<'_>, len: usize) -> Result<Vec<u8>> {
    let encoded_len = len / 7 * 8 + if len.is_multiple_of(7) { 0 } else { len % 7 + 1 };
    let start = cur.position();
    let groups = cur.take(encoded_len)?;
    if let Some(i) = groups.iter().position(|&g| g & 0x80 != 0) {
        return Err(cur.error_at(ErrorKind::BadTag(groups[i]), start + i));
    }
    let mut out = Vec::with_capacity(len);
    let mut acc: u32 = 0;
    let mut bits = 0;
    let full = len / 7 * 8;
    for &g in &groups[..full] {
        acc = (acc << 7) | u32::from(g);
        bits += 7;
        if bits >= 8 {
            bits -= 8;
            out.push((acc >> bits) as u8);
        }
    }
    let tail = len % 7;
    if tail > 0 {
        let t = &groups[full..];
        let mut acc: u64 = 0;
        for &g in &t[..tail] {
            acc = (acc << 7) | u64::from(g);
        }
        acc = (acc << tail) | u64::from(t[tail]);
        for i in (0..tail).rev() {
            out.push((acc >> (8 * i)) as u8);
        }
    }
    Ok(out)
}

struct SharedTable {
    entries: Vec<String>,
    index: HashMap<String, usize>,
}

impl SharedTable {
    fn new() -> Self {
        SharedTable {
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn add(&mut self, s: &str) {
        if self.entries.len() < MAX_SHARED {
            self.index.insert(s.to_owned(), self.entries.len());
            self.entries.push(s.to_owned());
        }
    }

    /// An index is usable for a back-reference unless its low byte would
    /// put 0xfe or 0xff on the wire.
    fn lookup(&self, s: &str) -> Option<usize> {
        self.index.get(s).copied().filter(|ix| *ix & 0xff < 0xfe)
    }
}

pub fn smile_encode(doc: &JsonValue, options: &SmileOptions) -> Vec<u8> {
    let mut enc = Encoder {
        out: Vec::new(),
        names: (options.shared_names).then(SharedTable::new),
        values: (options.shared_values).then(SharedTable::new),
        back_refs: options.back_references,
    };
    enc.out.extend_from_slice(&MAGIC);
    enc.out.push(options.header_byte());
    enc.value(doc);
    if options.end_marker {
        enc.out.push(END_OF_CONTENT);
    }
    enc.out
}

pub fn smile_decode(bytes: &[u8]) -> Result<JsonValue> {
    crate::codec::decode(FormatId::Smile, bytes, &FormatOptions::default())
}

struct Encoder {
    out: Vec<u8>,
    names: Option<SharedTable>,
    values: Option<SharedTable>,
    back_refs: bool,
}

impl Encoder {
    fn value(&mut self, v: &JsonValue) {
        match v {
            JsonValue::Null => self.out.push(0x21),
            JsonValue::Bool(false) => self.out.push(0x22),
            JsonValue::Bool(true) => self.out.push(0x23),
            JsonValue::Int(n) => self.int(*n),
            JsonValue::Float(x) => {
                if fits_f32(*x) {
                    self.out.push(0x28);
                    self.out.extend_from_slice(&float7_encode_f32(*x as f32));
                } else {
                    self.out.push(0x29);
                    self.out.extend_from_slice(&float7_encode_f64(*x));
                }
            }
            JsonValue::Str(s) => self.string_value(s),
            JsonValue::Arr(items) => {
                self.out.push(START_ARRAY);
                items.iter().for_each(|item| self.value(item));
                self.out.push(END_ARRAY);
            }
            JsonValue::Obj(map) => {
                self.out.push(START_OBJECT);
                for (k, v) in map {
                    self.name(k);
                    self.value(v);
                }
                self.out.push(END_OBJECT);
            }
        }
    }

    fn int(&mut self, n: i64) {
        if (-16..=15).contains(&n) {
            self.out.push(0xc0 | zigzag64(n) as u8);
        } else if i32::try_from(n).is_ok() {
            self.out.push(0x24);
            write_vint(&mut self.out, zigzag64(n));
        } else {
            self.out.push(0x25);
            write_vint(&mut self.out, zigzag64(n));
        }
    }

    fn string_value(&mut self, s: &str) {
        let class = SmileStringClass::of(s);
        // only the length-prefixed classes enter the table, on both sides
        let shareable = matches!(
            class,
            SmileStringClass::TinyAscii
                | SmileStringClass::SmallAscii
                | SmileStringClass::TinyUnicode
                | SmileStringClass::SmallUnicode
        );
        if let (true, true, Some(table)) = (shareable, self.back_refs, self.values.as_ref()) {
            if let Some(ix) = table.lookup(s) {
                if ix < 31 {
                    self.out.push(0x01 + ix as u8);
                } else {
                    self.out.extend_from_slice(&[0xec | (ix >> 8) as u8, ix as u8]);
                }
                return;
            }
        }
        let n = s.len();
        match class {
            SmileStringClass::Empty => self.out.push(0x20),
            SmileStringClass::TinyAscii => self.out.push(0x40 + (n - 1) as u8),
            SmileStringClass::SmallAscii => self.out.push(0x60 + (n - 33) as u8),
            SmileStringClass::TinyUnicode => self.out.push(0x80 + (n - 2) as u8),
            SmileStringClass::SmallUnicode => self.out.push(0xa0 + (n - 34) as u8),
            SmileStringClass::LongAscii => self.out.push(0xe0),
            SmileStringClass::LongUnicode => self.out.push(0xe4),
        }
        self.out.extend_from_slice(s.as_bytes());
        if matches!(class, SmileStringClass::LongAscii | SmileStringClass::LongUnicode) {
            self.out.push(END_STRING);
        }
        if shareable {
            if let Some(table) = self.values.as_mut() {
                table.add(s);
            }
        }
    }

    fn name(&mut self, k: &str) {
        if k.is_empty() {
            self.out.push(0x20);
            return;
        }
        if let (true, Some(table)) = (self.back_refs, self.names.as_ref()) {
            if let Some(ix) = table.lookup(k) {
                if ix < 64 {
                    self.out.push(0x40 + ix as u8);
                } else {
                    self.out.extend_from_slice(&[0x30 | (ix >> 8) as u8, ix as u8]);
                }
                return;
            }
        }
        let n = k.len();
        if k.is_ascii() && n <= 64 {
            self.out.push(0x80 + (n - 1) as u8);
            self.out.extend_from_slice(k.as_bytes());
        } else if !k.is_ascii() && n <= 57 {
            self.out.push(0xc0 + (n - 2) as u8);
            self.out.extend_from_slice(k.as_bytes());
        } else {
            self.out.push(0x34);
            self.out.extend_from_slice(k.as_bytes());
            self.out.push(END_STRING);
        }
        if let Some(table) = self.names.as_mut() {
            table.add(k);
        }
    }
}

fn read_document(cur: &mut ByteCursor<'_>) -> Result<JsonValue> {
    let head = &cur.buffer()[..cur.remaining().min(3)];
    if head != &MAGIC[..head.len()] {
        let first = cur.buffer()[0];
        return Err(cur.error_at(ErrorKind::BadTag(first), 0).with_detail("missing Smile header"));
    }
    cur.take(3)?;
    let flags = cur.read_u8()?;
    if flags >> 4 != 0 {
        return Err(cur
            .error_at(ErrorKind::Unsupported(format!("Smile version {}", flags >> 4)), 3));
    }
    cur.annotate(0, "header", || Some(format!("flags 0x{flags:02x}")));
    let mut dec = Decoder {
        names: (flags & FLAG_SHARED_NAMES != 0).then(Vec::new),
        values: (flags & FLAG_SHARED_VALUES != 0).then(Vec::new),
    };
    let v = dec.value(cur, 0)?;
    if cur.peek_u8().ok() == Some(END_OF_CONTENT) {
        let at = cur.position();
        cur.read_u8()?;
        cur.annotate(at, "end marker", || None);
    }
    Ok(v)
}

struct Decoder {
    names: Option<Vec<String>>,
    values: Option<Vec<String>>,
}

fn add_shared(table: &mut Option<Vec<String>>, s: &str) {
    if let Some(t) = table.as_mut() {
        if t.len() < MAX_SHARED {
            t.push(s.to_owned());
        }
    }
}

fn shared_ref(
    cur: &ByteCursor<'_>,
    table: &Option<Vec<String>>,
    ix: usize,
    start: usize,
    what: &str,
) -> Result<String> {
    let table = table.as_ref().ok_or_else(|| {
        cur.error_at(ErrorKind::BadTag(cur.buffer()[start]), start)
            .with_detail(format!("shared {what} reference but sharing is off"))
    })?;
    table.get(ix).cloned().ok_or_else(|| {
        cur.error_at(ErrorKind::BadTag(cur.buffer()[start]), start)
            .with_detail(format!("shared {what} #{ix} not defined"))
    })
}

fn read_until_end_string<'a>(cur: &mut ByteCursor<'a>) -> Result<&'a str> {
    let start = cur.position();
    let len = cur.buffer()[start..]
        .iter()
        .position(|&b| b == END_STRING)
        .ok_or_else(|| cur.error_at(ErrorKind::Truncated, cur.buffer().len()))?;
    let s = cur.take_utf8(len)?;
    cur.read_u8()?;
    Ok(s)
}

impl Decoder {
    fn value(&mut self, cur: &mut ByteCursor<'_>, depth: usize) -> Result<JsonValue> {
        check_depth(cur, depth)?;
        let start = cur.position();
        let b = cur.read_u8()?;
        let (label, v): (&str, JsonValue) = match b {
            0x01..=0x1f => {
                let s = shared_ref(cur, &self.values, usize::from(b - 1), start, "value")?;
                ("shared value", JsonValue::Str(s))
            }
            0xec..=0xef => {
                let ix = (usize::from(b & 0x03) << 8) | usize::from(cur.read_u8()?);
                let s = shared_ref(cur, &self.values, ix, start, "value")?;
                ("shared value", JsonValue::Str(s))
            }
            0x20 => ("empty string", JsonValue::Str(String::new())),
            0x21 => ("null", JsonValue::Null),
            0x22 => ("false", JsonValue::Bool(false)),
            0x23 => ("true", JsonValue::Bool(true)),
            0xc0..=0xdf => ("small int", JsonValue::Int(unzigzag64(u64::from(b & 0x1f)))),
            0x24 => {
                let z = read_vint(cur, 32)?;
                ("int32", JsonValue::Int(unzigzag64(z)))
            }
            0x25 => {
                let z = read_vint(cur, 64)?;
                ("int64", JsonValue::Int(unzigzag64(z)))
            }
            0x26 => {
                let len = self.length(cur)?;
                let raw = read_7bit_binary(cur, len)?;
                let n = BigInt::from_signed_bytes_be(&raw);
                let n = i64::try_from(&n).map_err(|_| cur.error_at(ErrorKind::Overflow, start))?;
                ("big integer", JsonValue::Int(n))
            }
            0x28 => {
                let groups = self.float_groups(cur, 5)?;
                let x = f32::from_bits(float7_decode(groups) as u32);
                ("float32", finite(cur, start, widen_f32(x))?)
            }
            0x29 => {
                let groups = self.float_groups(cur, 10)?;
                ("float64", finite(cur, start, f64::from_bits(float7_decode(groups)))?)
            }
            0x2a => {
                let scale = unzigzag64(read_vint(cur, 32)?);
                let len = self.length(cur)?;
                let raw = read_7bit_binary(cur, len)?;
                let unscaled = BigInt::from_signed_bytes_be(&raw);
                let x = decimal_to_f64_exact(&unscaled, -scale)
                    .ok_or_else(|| cur.error_at(ErrorKind::Overflow, start))?;
                ("big decimal", JsonValue::Float(x))
            }
            0x40..=0xbf => {
                let n = match b {
                    0x40..=0x5f => usize::from(b & 0x1f) + 1,
                    0x60..=0x7f => usize::from(b & 0x1f) + 33,
                    0x80..=0x9f => usize::from(b & 0x1f) + 2,
                    _ => usize::from(b & 0x1f) + 34,
                };
                let s = cur.take_utf8(n)?;
                add_shared(&mut self.values, s);
                (SmileStringClass::of_token(b).unwrap().name(), JsonValue::Str(s.to_owned()))
            }
            0xe0 | 0xe4 => {
                let s = read_until_end_string(cur)?;
                (SmileStringClass::of_token(b).unwrap().name(), JsonValue::Str(s.to_owned()))
            }
            0xe8 => return Err(cur.error_at(ErrorKind::Unsupported("7-bit binary".into()), start)),
            0xfd => return Err(cur.error_at(ErrorKind::Unsupported("raw binary".into()), start)),
            START_ARRAY => {
                cur.annotate(start, "array start", || None);
                let mut items = Vec::new();
                loop {
                    if cur.peek_u8()? == END_ARRAY {
                        let end = cur.position();
                        cur.read_u8()?;
                        cur.annotate(end, "array end", || None);
                        return Ok(JsonValue::Arr(items));
                    }
                    items.push(self.value(cur, depth + 1)?);
                }
            }
            START_OBJECT => {
                cur.annotate(start, "object start", || None);
                let mut map = Map::new();
                loop {
                    let key_start = cur.position();
                    if cur.peek_u8()? == END_OBJECT {
                        cur.read_u8()?;
                        cur.annotate(key_start, "object end", || None);
                        return Ok(JsonValue::Obj(map));
                    }
                    let (label, key) = self.name(cur)?;
                    cur.annotate(key_start, label, || Some(format!("{key:?}")));
                    let value = self.value(cur, depth + 1)?;
                    map.insert(key, value)
                        .map_err(|e| CodecError::new(ErrorKind::DuplicateKey(e.0), key_start))?;
                }
            }
            _ => return Err(cur.error_at(ErrorKind::BadTag(b), start)),
        };
        cur.annotate(start, label, || short_render(&v));
        Ok(v)
    }

    fn name(&mut self, cur: &mut ByteCursor<'_>) -> Result<(&'static str, String)> {
        let start = cur.position();
        let b = cur.read_u8()?;
        let (label, key) = match b {
            0x20 => return Ok(("empty name", String::new())),
            0x30..=0x33 => {
                let ix = (usize::from(b & 0x03) << 8) | usize::from(cur.read_u8()?);
                return Ok(("shared name", shared_ref(cur, &self.names, ix, start, "name")?));
            }
            0x40..=0x7f => {
                let ix = usize::from(b & 0x3f);
                return Ok(("shared name", shared_ref(cur, &self.names, ix, start, "name")?));
            }
            0x34 => ("long name", read_until_end_string(cur)?.to_owned()),
            0x80..=0xbf => ("short ASCII name", cur.take_utf8(usize::from(b & 0x3f) + 1)?.to_owned()),
            0xc0..=0xf7 => ("short Unicode name", cur.take_utf8(usize::from(b & 0x3f) + 2)?.to_owned()),
            _ => return Err(cur.error_at(ErrorKind::BadTag(b), start).with_detail("expected a name")),
        };
        add_shared(&mut self.names, &key);
        Ok((label, key))
    }

    fn length(&mut self, cur: &mut ByteCursor<'_>) -> Result<usize> {
        let start = cur.position();
        let n = read_vint(cur, 32)?;
        let n = usize::try_from(n).map_err(|_| cur.error_at(ErrorKind::Overflow, start))?;
        if n > cur.remaining() {
            return Err(cur.error_at(ErrorKind::Truncated, start));
        }
        Ok(n)
    }

    fn float_groups<'a>(&mut self, cur: &mut ByteCursor<'a>, n: usize) -> Result<&'a [u8]> {
        let start = cur.position();
        let groups = cur.take(n)?;
        match groups.iter().position(|g| g & 0x80 != 0) {
            Some(i) => Err(cur.error_at(ErrorKind::BadTag(groups[i]), start + i)),
            None => Ok(groups),
        }
    }
}
