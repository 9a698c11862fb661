//! Avro binary encoding driven by a JSON schema.

pub mod binary;
pub mod compat;
pub mod schema;

pub use binary::{avro_encode, default_value};
pub use compat::{avro_check_compat, reader_problems, CompatLevel, CompatibilityVerdict};
pub use schema::{avro_parse_schema, AvroSchema, Field, Name, Schema, SchemaError};

use crate::codec::{ByteCursor, Codec, CodecError, ErrorKind, FormatId, FormatOptions, Result};
use crate::value::JsonValue;

/// Decodes bytes written with `writer`. With a `reader`, the result takes
/// the reader's shape.
pub fn avro_decode(bytes: &[u8], writer: &AvroSchema, reader: Option<&AvroSchema>) -> Result<JsonValue> {
    let mut cur = ByteCursor::new(bytes);
    let v = binary::read_value(&mut cur, writer, reader)?;
    cur.expect_end()?;
    Ok(v)
}

pub struct Avro;

impl Codec for Avro {
    fn format(&self) -> FormatId {
        FormatId::AvroBinary
    }

    fn encode(&self, doc: &JsonValue, options: &FormatOptions) -> Result<Vec<u8>> {
        let schema = options
            .avro_schema
            .as_ref()
            .ok_or_else(|| CodecError::new(ErrorKind::SchemaRequired, 0))?;
        avro_encode(doc, schema)
    }

    fn decode_from(&self, cur: &mut ByteCursor<'_>, options: &FormatOptions) -> Result<JsonValue> {
        let schema = options
            .avro_schema
            .as_ref()
            .ok_or_else(|| CodecError::new(ErrorKind::SchemaRequired, 0))?;
        binary::read_value(cur, schema, options.avro_reader.as_ref())
    }
}
