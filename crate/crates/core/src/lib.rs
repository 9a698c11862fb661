//! JSON-compatible binary serialization: one value model, shared integer
//! encodings, and codecs for MessagePack, CBOR, UBJSON, BSON, Smile and Avro.
//!
//! ```
//! use binjson::{decode, encode, FormatId, FormatOptions, JsonValue};
//!
//! let doc = binjson::parse_json(r#"{"a":[1,2.5,null]}"#).unwrap();
//! let opts = FormatOptions::default();
//! let bytes = encode(FormatId::Cbor, &doc, &opts).unwrap();
//! let back: JsonValue = decode(FormatId::Cbor, &bytes, &opts).unwrap();
//! assert!(binjson::canon_eq(&doc, &back));
//! ```

pub mod avro;
pub mod bson;
pub mod cbor;
pub mod codec;
pub mod inspect;
pub mod intcodec;
pub mod msgpack;
pub mod smile;
pub mod ubjson;
pub mod value;

pub use avro::{avro_check_compat, avro_decode, avro_encode, avro_parse_schema, AvroSchema, CompatLevel, CompatibilityVerdict, SchemaError};
pub use codec::{decode, decode_traced, encode, AnnotatedSpan, ByteCursor, Codec, CodecError, ErrorKind, FormatId, FormatOptions, UnknownFormat};
pub use intcodec::{leb128_decode_signed_twos, leb128_decode_unsigned, leb128_encode_signed_twos, leb128_encode_unsigned, zigzag_decode, zigzag_encode, IntCodecError, Width};
pub use smile::SmileOptions;
pub use value::{canon_eq, canonical_doc, parse_json, JsonError, JsonValue, Map};
