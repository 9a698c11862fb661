//! Shared codec plumbing: the error taxonomy, the byte cursor decoders read
//! through, annotated spans for the inspector, and the format registry.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::avro::AvroSchema;
use crate::smile::SmileOptions;
use crate::value::JsonValue;

/// Containers nested deeper than this are rejected on decode.
pub const MAX_DEPTH: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ErrorKind {
    Truncated,
    BadTag(u8),
    Overflow,
    Unsupported(String),
    TopLevelShape,
    SchemaRequired,
    InvalidUtf8,
    TrailingBytes,
    LengthMismatch,
    KeyContainsNul,
    DuplicateKey(String),
    BadArrayKey(String),
    SchemaMismatch(String),
    Resolution(String),
    Range,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorKind::Truncated => f.write_str("truncated input"),
            ErrorKind::BadTag(b) => write!(f, "unexpected byte 0x{b:02x}"),
            ErrorKind::Overflow => f.write_str("value overflows the document model"),
            ErrorKind::Unsupported(what) => write!(f, "unsupported {what}"),
            ErrorKind::TopLevelShape => f.write_str("document root has the wrong shape"),
            ErrorKind::SchemaRequired => f.write_str("a schema is required"),
            ErrorKind::InvalidUtf8 => f.write_str("invalid UTF-8"),
            ErrorKind::TrailingBytes => f.write_str("trailing bytes after document"),
            ErrorKind::LengthMismatch => f.write_str("length prefix disagrees with content"),
            ErrorKind::KeyContainsNul => f.write_str("key contains a NUL byte"),
            ErrorKind::DuplicateKey(k) => write!(f, "duplicate key {k:?}"),
            ErrorKind::BadArrayKey(k) => write!(f, "unexpected array index key {k:?}"),
            ErrorKind::SchemaMismatch(path) => write!(f, "value does not match schema at {path}"),
            ErrorKind::Resolution(path) => write!(f, "schemas do not resolve at {path}"),
            ErrorKind::Range => f.write_str("integer out of range"),
        }
    }
}

/// A codec failure, with the byte offset it was detected at.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at offset {offset}{}", if detail.is_empty() { String::new() } else { format!(": {detail}") })]
pub struct CodecError {
    pub kind: ErrorKind,
    pub offset: usize,
    pub detail: String,
}

impl CodecError {
    pub fn new(kind: ErrorKind, offset: usize) -> Self {
        CodecError {
            kind,
            offset,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

pub type Result<T, E = CodecError> = std::result::Result<T, E>;

/// A labeled byte range produced while decoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSpan {
    pub offset: usize,
    pub length: usize,
    pub label: String,
    pub decoded: Option<String>,
}

/// Sequential reader over a byte buffer. Every multi-byte read names its
/// byte order. When tracing is on, decoders record a span for each token.
#[derive(Debug)]
pub struct ByteCursor<'a> {
    buf: &'a [u8],
    pos: usize,
    spans: Option<Vec<AnnotatedSpan>>,
}

macro_rules! read_fixed {
    ($name:ident, $ty:ty, $from:ident) => {
        pub fn $name(&mut self) -> Result<$ty> {
            let bytes = self.take(std::mem::size_of::<$ty>())?;
            Ok(<$ty>::$from(bytes.try_into().expect("length checked by take")))
        }
    };
}

impl<'a> ByteCursor<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        ByteCursor {
            buf,
            pos: 0,
            spans: None,
        }
    }

    pub fn tracing(buf: &'a [u8]) -> Self {
        ByteCursor {
            buf,
            pos: 0,
            spans: Some(Vec::new()),
        }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn buffer(&self) -> &'a [u8] {
        self.buf
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn is_at_end(&self) -> bool {
        self.pos == self.buf.len()
    }

    pub fn is_tracing(&self) -> bool {
        self.spans.is_some()
    }

    pub fn error(&self, kind: ErrorKind) -> CodecError {
        CodecError::new(kind, self.pos)
    }

    pub fn error_at(&self, kind: ErrorKind, offset: usize) -> CodecError {
        CodecError::new(kind, offset.min(self.buf.len()))
    }

    pub fn peek_u8(&self) -> Result<u8> {
        self.buf
            .get(self.pos)
            .copied()
            .ok_or_else(|| self.error(ErrorKind::Truncated))
    }

    pub fn read_u8(&mut self) -> Result<u8> {
        let b = self.peek_u8()?;
        self.pos += 1;
        Ok(b)
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(self
                .error(ErrorKind::Truncated)
                .with_detail(format!("need {n} bytes, have {}", self.remaining())));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn take_utf8(&mut self, n: usize) -> Result<&'a str> {
        let start = self.pos;
        let bytes = self.take(n)?;
        std::str::from_utf8(bytes).map_err(|e| {
            CodecError::new(ErrorKind::InvalidUtf8, start + e.valid_up_to())
        })
    }

    read_fixed!(read_u16_be, u16, from_be_bytes);
    read_fixed!(read_u32_be, u32, from_be_bytes);
    read_fixed!(read_u64_be, u64, from_be_bytes);
    read_fixed!(read_i8_be, i8, from_be_bytes);
    read_fixed!(read_i16_be, i16, from_be_bytes);
    read_fixed!(read_i32_be, i32, from_be_bytes);
    read_fixed!(read_i64_be, i64, from_be_bytes);
    read_fixed!(read_f32_be, f32, from_be_bytes);
    read_fixed!(read_f64_be, f64, from_be_bytes);
    read_fixed!(read_i32_le, i32, from_le_bytes);
    read_fixed!(read_i64_le, i64, from_le_bytes);
    read_fixed!(read_f32_le, f32, from_le_bytes);
    read_fixed!(read_f64_le, f64, from_le_bytes);

    /// Records a span from `start` up to the current position. The rendering
    /// closure only runs while tracing.
    pub fn annotate<F>(&mut self, start: usize, label: &str, decoded: F)
    where
        F: FnOnce() -> Option<String>,
    {
        if let Some(spans) = self.spans.as_mut() {
            if self.pos > start {
                spans.push(AnnotatedSpan {
                    offset: start,
                    length: self.pos - start,
                    label: label.to_owned(),
                    decoded: decoded(),
                });
            }
        }
    }

    pub fn expect_end(&self) -> Result<()> {
        if self.is_at_end() {
            Ok(())
        } else {
            Err(self
                .error(ErrorKind::TrailingBytes)
                .with_detail(format!("{} bytes left", self.remaining())))
        }
    }

    pub fn into_spans(self) -> Vec<AnnotatedSpan> {
        self.spans.unwrap_or_default()
    }
}

pub(crate) fn check_depth(cur: &ByteCursor, depth: usize) -> Result<()> {
    if depth > MAX_DEPTH {
        Err(cur
            .error(ErrorKind::Unsupported("nesting depth".into()))
            .with_detail(format!("more than {MAX_DEPTH} levels")))
    } else {
        Ok(())
    }
}

/// Rejects binary32/binary64 payloads the document model cannot hold.
pub(crate) fn finite(cur: &ByteCursor, start: usize, x: f64) -> Result<JsonValue> {
    if x.is_finite() {
        Ok(JsonValue::Float(x))
    } else {
        Err(cur
            .error_at(ErrorKind::Unsupported("non-finite real".into()), start)
            .with_detail(format!("{x}")))
    }
}

pub(crate) fn short_render(value: &JsonValue) -> Option<String> {
    let text = value.to_json_string();
    Some(if text.chars().count() > 40 {
        let cut: String = text.chars().take(37).collect();
        format!("{cut}...")
    } else {
        text
    })
}

/// The registered binary formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FormatId {
    MessagePack,
    Cbor,
    Ubjson,
    Bson,
    Smile,
    AvroBinary,
}

impl FormatId {
    pub const ALL: [FormatId; 6] = [
        FormatId::MessagePack,
        FormatId::Cbor,
        FormatId::Ubjson,
        FormatId::Bson,
        FormatId::Smile,
        FormatId::AvroBinary,
    ];

    /// Display name, as used in the size table.
    pub fn name(self) -> &'static str {
        match self {
            FormatId::MessagePack => "MessagePack",
            FormatId::Cbor => "CBOR",
            FormatId::Ubjson => "UBJSON",
            FormatId::Bson => "BSON",
            FormatId::Smile => "Smile",
            FormatId::AvroBinary => "Avro",
        }
    }

    /// Short identifier used on the command line.
    pub fn slug(self) -> &'static str {
        match self {
            FormatId::MessagePack => "msgpack",
            FormatId::Cbor => "cbor",
            FormatId::Ubjson => "ubjson",
            FormatId::Bson => "bson",
            FormatId::Smile => "smile",
            FormatId::AvroBinary => "avro",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            FormatId::MessagePack => "mp",
            FormatId::Cbor => "cbor",
            FormatId::Ubjson => "ubj",
            FormatId::Bson => "bson",
            FormatId::Smile => "smile",
            FormatId::AvroBinary => "avro",
        }
    }

    pub fn from_extension(ext: &str) -> Option<FormatId> {
        let ext = ext.to_ascii_lowercase();
        FormatId::ALL
            .into_iter()
            .find(|f| f.extension() == ext)
            .or(match ext.as_str() {
                "msgpack" => Some(FormatId::MessagePack),
                "ubjson" => Some(FormatId::Ubjson),
                "sml" => Some(FormatId::Smile),
                _ => None,
            })
    }

    pub fn requires_schema(self) -> bool {
        self == FormatId::AvroBinary
    }

    pub fn codec(self) -> &'static dyn Codec {
        match self {
            FormatId::MessagePack => &crate::msgpack::MessagePack,
            FormatId::Cbor => &crate::cbor::Cbor,
            FormatId::Ubjson => &crate::ubjson::Ubjson,
            FormatId::Bson => &crate::bson::Bson,
            FormatId::Smile => &crate::smile::Smile,
            FormatId::AvroBinary => &crate::avro::Avro,
        }
    }
}

impl fmt::Display for FormatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown format {0:?}")]
pub struct UnknownFormat(pub String);

impl FromStr for FormatId {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        FormatId::ALL
            .into_iter()
            .find(|f| f.slug() == lower || f.name().to_ascii_lowercase() == lower)
            .or_else(|| FormatId::from_extension(&lower))
            .ok_or_else(|| UnknownFormat(s.to_owned()))
    }
}

/// Per-format knobs. Only the fields relevant to the chosen format are read.
#[derive(Debug, Clone, Default)]
pub struct FormatOptions {
    pub smile: SmileOptions,
    /// Writer schema for Avro encode and decode.
    pub avro_schema: Option<AvroSchema>,
    /// Optional reader schema for Avro decode.
    pub avro_reader: Option<AvroSchema>,
}

impl FormatOptions {
    pub fn with_avro_schema(schema: AvroSchema) -> Self {
        FormatOptions {
            avro_schema: Some(schema),
            ..Default::default()
        }
    }
}

/// One binary format.
pub trait Codec: Sync {
    fn format(&self) -> FormatId;

    fn encode(&self, doc: &JsonValue, options: &FormatOptions) -> Result<Vec<u8>>;

    /// Decodes one document from the cursor. Callers check for trailing bytes.
    fn decode_from(&self, cur: &mut ByteCursor<'_>, options: &FormatOptions) -> Result<JsonValue>;
}

pub fn encode(format: FormatId, doc: &JsonValue, options: &FormatOptions) -> Result<Vec<u8>> {
    format.codec().encode(doc, options)
}

/// Decodes exactly one document; bytes after it are an error.
pub fn decode(format: FormatId, bytes: &[u8], options: &FormatOptions) -> Result<JsonValue> {
    let mut cur = ByteCursor::new(bytes);
    let value = format.codec().decode_from(&mut cur, options)?;
    cur.expect_end()?;
    Ok(value)
}

/// Like [`decode`], but also returns the spans recorded up to the point of
/// success or failure.
pub fn decode_traced(
    format: FormatId,
    bytes: &[u8],
    options: &FormatOptions,
) -> (Result<JsonValue>, Vec<AnnotatedSpan>) {
    let mut cur = ByteCursor::tracing(bytes);
    let result = format
        .codec()
        .decode_from(&mut cur, options)
        .and_then(|v| cur.expect_end().map(|_| v));
    (result, cur.into_spans())
}
