//! The JSON document model shared by every codec.
//!
//! Objects keep their entries in insertion order because several binary
//! formats serialize entries in exactly that order, and the golden fixtures
//! depend on it. Integers and reals are distinct variants: `1` and `1.0` are
//! different documents.

use std::fmt;

use serde::de::{self, DeserializeSeed, MapAccess, SeqAccess, Visitor};
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserializer, Serialize, Serializer};
use num_bigint::BigInt;
use thiserror::Error;

/// A JSON value.
#[derive(Debug, Clone)]
pub enum JsonValue {
    Null,
    Bool(bool),
    Int(i64),
    /// Always finite.
    Float(f64),
    Str(String),
    Arr(Vec<JsonValue>),
    Obj(Map),
}

/// An insertion-ordered JSON object with unique keys.
#[derive(Debug, Clone, Default)]
pub struct Map {
    entries: Vec<(String, JsonValue)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("duplicate object key {0:?}")]
pub struct DuplicateKey(pub String);

impl Map {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Map {
            entries: Vec::with_capacity(n),
        }
    }

    pub fn from_entries<I>(entries: I) -> Result<Self, DuplicateKey>
    where
        I: IntoIterator<Item = (String, JsonValue)>,
    {
        let mut map = Map::new();
        for (k, v) in entries {
            map.insert(k, v)?;
        }
        Ok(map)
    }

    /// Appends an entry, rejecting keys already present.
    pub fn insert(&mut self, key: String, value: JsonValue) -> Result<(), DuplicateKey> {
        if self.contains_key(&key) {
            return Err(DuplicateKey(key));
        }
        self.entries.push((key, value));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&JsonValue> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.entries.iter().any(|(k, _)| k == key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&str, &JsonValue)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn into_entries(self) -> Vec<(String, JsonValue)> {
        self.entries
    }
}

impl<'a> IntoIterator for &'a Map {
    type Item = (&'a str, &'a JsonValue);
    type IntoIter = std::iter::Map<
        std::slice::Iter<'a, (String, JsonValue)>,
        fn(&'a (String, JsonValue)) -> (&'a str, &'a JsonValue),
    >;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }
}

impl JsonValue {
    pub fn kind(&self) -> &'static str {
        match self {
            JsonValue::Null => "null",
            JsonValue::Bool(_) => "boolean",
            JsonValue::Int(_) => "integer",
            JsonValue::Float(_) => "real",
            JsonValue::Str(_) => "string",
            JsonValue::Arr(_) => "array",
            JsonValue::Obj(_) => "object",
        }
    }

    pub fn as_object(&self) -> Option<&Map> {
        match self {
            JsonValue::Obj(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            JsonValue::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Compact JSON text.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("JsonValue always serializes")
    }

    pub fn to_json_string_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("JsonValue always serializes")
    }
}

/// Structural equality: kinds must match (`Int(1)` is not `Float(1.0)`),
/// object entries must appear in the same order, and reals compare by bit
/// pattern so `-0.0` and `0.0` differ.
pub fn canon_eq(a: &JsonValue, b: &JsonValue) -> bool {
    use JsonValue::*;
    match (a, b) {
        (Null, Null) => true,
        (Bool(x), Bool(y)) => x == y,
        (Int(x), Int(y)) => x == y,
        (Float(x), Float(y)) => x.to_bits() == y.to_bits(),
        (Str(x), Str(y)) => x == y,
        (Arr(x), Arr(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| canon_eq(p, q)),
        (Obj(x), Obj(y)) => {
            x.len() == y.len()
                && x.iter()
                    .zip(y.iter())
                    .all(|((ka, va), (kb, vb))| ka == kb && canon_eq(va, vb))
        }
        _ => false,
    }
}

impl PartialEq for JsonValue {
    fn eq(&self, other: &Self) -> bool {
        canon_eq(self, other)
    }
}

impl PartialEq for Map {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self
                .iter()
                .zip(other.iter())
                .all(|((ka, va), (kb, vb))| ka == kb && canon_eq(va, vb))
    }
}

impl From<bool> for JsonValue {
    fn from(b: bool) -> Self {
        JsonValue::Bool(b)
    }
}

impl From<i64> for JsonValue {
    fn from(n: i64) -> Self {
        JsonValue::Int(n)
    }
}

impl From<&str> for JsonValue {
    fn from(s: &str) -> Self {
        JsonValue::Str(s.to_owned())
    }
}

impl From<String> for JsonValue {
    fn from(s: String) -> Self {
        JsonValue::Str(s)
    }
}

impl From<Vec<JsonValue>> for JsonValue {
    fn from(items: Vec<JsonValue>) -> Self {
        JsonValue::Arr(items)
    }
}

impl From<Map> for JsonValue {
    fn from(m: Map) -> Self {
        JsonValue::Obj(m)
    }
}

impl fmt::Display for JsonValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json_string())
    }
}

/// Widens a binary32 value to the binary64 nearest its shortest round-trip
/// decimal form, so a float32 payload written from `-90.0715` reads back as
/// `-90.0715` rather than `-90.07150268554688`.
pub fn widen_f32(x: f32) -> f64 {
    if !x.is_finite() {
        return x as f64;
    }
    format!("{x}")
        .parse::<f64>()
        .expect("f32 display output is a valid f64 literal")
}

/// True when `x` survives a trip through binary32 under [`widen_f32`].
pub fn fits_f32(x: f64) -> bool {
    let narrowed = x as f32;
    narrowed.is_finite() && widen_f32(narrowed).to_bits() == x.to_bits()
}

/// `mantissa * 10^exp10` as binary64, if binary64 holds it exactly.
pub fn decimal_to_f64_exact(mantissa: &BigInt, exp10: i64) -> Option<f64> {
    if exp10.abs() > 2000 {
        return None;
    }
    let x: f64 = format!("{mantissa}e{exp10}").parse().ok()?;
    (x.is_finite() && decimal_equals_f64(mantissa, exp10, x)).then_some(x)
}

fn decimal_equals_f64(mantissa: &BigInt, exp10: i64, x: f64) -> bool {
    if x == 0.0 {
        return mantissa.sign() == num_bigint::Sign::NoSign;
    }
    let bits = x.to_bits();
    let neg = bits >> 63 == 1;
    let e = ((bits >> 52) & 0x7ff) as i64;
    let f = bits & ((1 << 52) - 1);
    let (m2, e2) = if e == 0 { (f, -1074) } else { (f | (1 << 52), e - 1075) };
    let mut lhs = mantissa.clone();
    let mut rhs = BigInt::from(m2);
    if neg {
        rhs = -rhs;
    }
    // lhs * 10^exp10 == rhs * 2^e2, with every exponent moved to be non-negative
    if exp10 >= 0 {
        lhs *= BigInt::from(10).pow(exp10 as u32);
    } else {
        rhs *= BigInt::from(10).pow((-exp10) as u32);
    }
    if e2 >= 0 {
        rhs <<= e2 as usize;
    } else {
        lhs <<= (-e2) as usize;
    }
    lhs == rhs
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JsonError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate object key {0:?}")]
    DuplicateKey(String),
    #[error("integer {0} is outside the signed 64-bit range")]
    Range(String),
}

const DUPLICATE_TAG: &str = "\u{1}duplicate:";
const RANGE_TAG: &str = "\u{1}range:";

/// Parses UTF-8 JSON text into a [`JsonValue`].
pub fn parse_json(text: &str) -> Result<JsonValue, JsonError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = ValueSeed.deserialize(&mut de).map_err(convert_error)?;
    de.end().map_err(convert_error)?;
    Ok(value)
}

fn convert_error(err: serde_json::Error) -> JsonError {
    let message = err.to_string();
    if let Some(rest) = message.strip_prefix(DUPLICATE_TAG) {
        return JsonError::DuplicateKey(strip_position(rest).to_owned());
    }
    if let Some(rest) = message.strip_prefix(RANGE_TAG) {
        return JsonError::Range(strip_position(rest).to_owned());
    }
    JsonError::Syntax {
        line: err.line(),
        column: err.column(),
        message: strip_position(&message).to_owned(),
    }
}

// serde_json appends " at line L column C" to custom messages.
fn strip_position(message: &str) -> &str {
    match message.rfind(" at line ") {
        Some(i) => &message[..i],
        None => message,
    }
}

struct ValueSeed;

impl<'de> DeserializeSeed<'de> for ValueSeed {
    type Value = JsonValue;

    fn deserialize<D: Deserializer<'de>>(self, deserializer: D) -> Result<JsonValue, D::Error> {
        deserializer.deserialize_any(ValueVisitor)
    }
}

struct ValueVisitor;

impl<'de> Visitor<'de> for ValueVisitor {
    type Value = JsonValue;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a JSON value")
    }

    fn visit_unit<E>(self) -> Result<JsonValue, E> {
        Ok(JsonValue::Null)
    }

    fn visit_bool<E>(self, b: bool) -> Result<JsonValue, E> {
        Ok(JsonValue::Bool(b))
    }

    fn visit_i64<E>(self, n: i64) -> Result<JsonValue, E> {
        Ok(JsonValue::Int(n))
    }

    fn visit_u64<E: de::Error>(self, n: u64) -> Result<JsonValue, E> {
        i64::try_from(n)
            .map(JsonValue::Int)
            .map_err(|_| E::custom(format!("{RANGE_TAG}{n}")))
    }

    fn visit_f64<E: de::Error>(self, x: f64) -> Result<JsonValue, E> {
        if x.is_finite() {
            Ok(JsonValue::Float(x))
        } else {
            Err(E::custom("number out of range"))
        }
    }

    fn visit_str<E>(self, s: &str) -> Result<JsonValue, E> {
        Ok(JsonValue::Str(s.to_owned()))
    }

    fn visit_string<E>(self, s: String) -> Result<JsonValue, E> {
        Ok(JsonValue::Str(s))
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<JsonValue, A::Error> {
        let mut items = Vec::with_capacity(seq.size_hint().unwrap_or(0));
        while let Some(item) = seq.next_element_seed(ValueSeed)? {
            items.push(item);
        }
        Ok(JsonValue::Arr(items))
    }

    fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<JsonValue, A::Error> {
        let mut map = Map::new();
        while let Some(key) = access.next_key::<String>()? {
            let value = access.next_value_seed(ValueSeed)?;
            map.insert(key, value)
                .map_err(|DuplicateKey(k)| de::Error::custom(format!("{DUPLICATE_TAG}{k}")))?;
        }
        Ok(JsonValue::Obj(map))
    }
}

impl Serialize for JsonValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            JsonValue::Null => s.serialize_unit(),
            JsonValue::Bool(b) => s.serialize_bool(*b),
            JsonValue::Int(n) => s.serialize_i64(*n),
            JsonValue::Float(x) => s.serialize_f64(*x),
            JsonValue::Str(v) => s.serialize_str(v),
            JsonValue::Arr(items) => {
                let mut seq = s.serialize_seq(Some(items.len()))?;
                for item in items {
                    seq.serialize_element(item)?;
                }
                seq.end()
            }
            JsonValue::Obj(map) => {
                let mut out = s.serialize_map(Some(map.len()))?;
                for (k, v) in map {
                    out.serialize_entry(k, v)?;
                }
                out.end()
            }
        }
    }
}

/// The reproducibility test document, as vendored JSON text.
pub const CANONICAL_DOC_JSON: &str = include_str!("../fixtures/test.json");

/// Parsed form of [`CANONICAL_DOC_JSON`].
pub fn canonical_doc() -> JsonValue {
    parse_json(CANONICAL_DOC_JSON).expect("vendored test document is valid JSON")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(entries: Vec<(&str, JsonValue)>) -> JsonValue {
        JsonValue::Obj(Map::from_entries(entries.into_iter().map(|(k, v)| (k.to_owned(), v))).unwrap())
    }

    #[test]
    fn parses_null() {
        assert_eq!(parse_json("null").unwrap(), JsonValue::Null);
    }

    #[test]
    fn parses_nested_numbers_with_kinds() {
        let v = parse_json(r#"{"a":[1,-2.5]}"#).unwrap();
        let expected = obj(vec![(
            "a",
            JsonValue::Arr(vec![JsonValue::Int(1), JsonValue::Float(-2.5)]),
        )]);
        assert!(canon_eq(&v, &expected));
    }

    #[test]
    fn exponent_or_fraction_means_float() {
        assert_eq!(parse_json("1e2").unwrap(), JsonValue::Float(100.0));
        assert_eq!(parse_json("1.0").unwrap(), JsonValue::Float(1.0));
        assert_eq!(parse_json("100").unwrap(), JsonValue::Int(100));
    }

    #[test]
    fn integer_limits() {
        assert_eq!(
            parse_json("-9223372036854775808").unwrap(),
            JsonValue::Int(i64::MIN)
        );
        assert_eq!(
            parse_json("9223372036854775807").unwrap(),
            JsonValue::Int(i64::MAX)
        );
        assert_eq!(
            parse_json("9223372036854775808"),
            Err(JsonError::Range("9223372036854775808".into()))
        );
        // beyond the unsigned range the literal is no longer an integer token for the parser
        assert!(matches!(
            parse_json("123456789012345678901234567890").unwrap(),
            JsonValue::Float(_)
        ));
    }

    #[test]
    fn rejects_duplicates() {
        assert_eq!(
            parse_json(r#"{"a":1,"b":{"c":1,"c":2}}"#),
            Err(JsonError::DuplicateKey("c".into()))
        );
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_json("[1, 2") {
            Err(JsonError::Syntax { line, column, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(column, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_json("[1,]"), Err(JsonError::Syntax { .. })));
        assert!(matches!(parse_json("{} x"), Err(JsonError::Syntax { .. })));
        assert!(matches!(parse_json("1e400"), Err(JsonError::Syntax { .. })));
    }

    #[test]
    fn key_order_is_preserved() {
        let v = parse_json(r#"{"z":1,"a":2,"m":3}"#).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["z", "a", "m"]);
    }

    #[test]
    fn canon_eq_rules() {
        assert!(canon_eq(&JsonValue::Null, &JsonValue::Null));
        assert!(!canon_eq(&JsonValue::Int(1), &JsonValue::Float(1.0)));
        let ab = obj(vec![("a", JsonValue::Int(1)), ("b", JsonValue::Int(2))]);
        let ba = obj(vec![("b", JsonValue::Int(2)), ("a", JsonValue::Int(1))]);
        assert!(!canon_eq(&ab, &ba));
        assert!(!canon_eq(&JsonValue::Float(0.0), &JsonValue::Float(-0.0)));
    }

    #[test]
    fn canonical_doc_has_the_advertised_shapes() {
        let doc = canonical_doc();
        let root = doc.as_object().unwrap();
        assert_eq!(root.keys().collect::<Vec<_>>(), ["tags", "tz", "days", "coord", "data"]);
        assert_eq!(root.get("tags"), Some(&JsonValue::Arr(vec![])));
        assert_eq!(root.get("tz"), Some(&JsonValue::Int(-25200)));
        let text = doc.to_json_string();
        assert!(text.contains("{}"));
        assert!(text.contains(r#""info":"""#));
        assert!(text.contains(r#""name":null"#));
        assert!(text.contains("-90.0715"));
        assert!(text.contains("true") && text.contains("false"));
    }

    #[test]
    fn serializes_back_to_equal_json() {
        let doc = canonical_doc();
        let again = parse_json(&doc.to_json_string_pretty()).unwrap();
        assert!(canon_eq(&doc, &again));
        assert_eq!(JsonValue::Float(1.0).to_json_string(), "1.0");
    }

    #[test]
    fn f32_widening_uses_shortest_decimal() {
        assert_eq!(widen_f32(-90.0715f32), -90.0715);
        assert_eq!(widen_f32(29.951f32), 29.951);
        assert!(fits_f32(-90.0715));
        assert!(fits_f32(0.1));
        assert!(!fits_f32(std::f64::consts::PI));
        assert!(!fits_f32(1e300));
        assert_eq!(widen_f32(-0.0).to_bits(), (-0.0f64).to_bits());
    }
}
