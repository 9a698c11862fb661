mod common;

use binjson::bson::verify_framing;
use binjson::cbor::cbor_header_encode;
use binjson::smile::{smile_decode, smile_encode, SmileStringClass};
use binjson::{canon_eq, decode, decode_traced, encode, FormatId, FormatOptions, JsonValue, SmileOptions};
use common::{arb_json, arb_object, corpus, depth, object_root};
use proptest::prelude::*;

const SCHEMA_LESS: [FormatId; 5] =
    [FormatId::MessagePack, FormatId::Cbor, FormatId::Ubjson, FormatId::Bson, FormatId::Smile];

fn admissible(f: FormatId, doc: &JsonValue) -> JsonValue {
    if f == FormatId::Bson {
        object_root(doc)
    } else {
        doc.clone()
    }
}

fn round_trip(f: FormatId, doc: &JsonValue, opts: &FormatOptions) -> Result<(), String> {
    let bytes = encode(f, doc, opts).map_err(|e| format!("{f} encode: {e}"))?;
    let back = decode(f, &bytes, opts).map_err(|e| format!("{f} decode: {e}"))?;
    if canon_eq(&back, doc) {
        Ok(())
    } else {
        Err(format!("{f}: {doc} came back as {back}"))
    }
}

fn smile_flag_sets() -> Vec<SmileOptions> {
    let mut out = Vec::new();
    for names in [false, true] {
        for values in [false, true] {
            for back_references in [false, true] {
                out.push(SmileOptions { shared_names: names, shared_values: values, back_references, ..Default::default() });
            }
        }
    }
    out
}

#[test]
fn corpus_shape() {
    let docs = corpus(7, 2000);
    assert!(docs.iter().all(|d| depth(d) <= common::MAX_DEPTH));
    assert!(docs.iter().any(|d| depth(d) >= 5));
    let ints: Vec<i64> = docs.iter().flat_map(ints_of).collect();
    assert!(ints.contains(&i64::MIN) && ints.contains(&i64::MAX));
}

fn ints_of(v: &JsonValue) -> Vec<i64> {
    match v {
        JsonValue::Int(n) => vec![*n],
        JsonValue::Arr(items) => items.iter().flat_map(ints_of).collect(),
        JsonValue::Obj(m) => m.iter().flat_map(|(_, v)| ints_of(v)).collect(),
        _ => vec![],
    }
}

#[test]
fn corpus_round_trips_through_every_schema_less_format() {
    let opts = FormatOptions::default();
    for doc in corpus(1, 2000) {
        for f in SCHEMA_LESS {
            round_trip(f, &admissible(f, &doc), &opts).unwrap();
        }
    }
}

#[test]
fn smile_round_trips_under_every_flag_combination() {
    let docs = corpus(2, 500);
    for smile in smile_flag_sets() {
        let opts = FormatOptions { smile, ..Default::default() };
        for doc in &docs {
            round_trip(FormatId::Smile, doc, &opts).unwrap();
        }
    }
}

#[test]
fn conversion_chains_preserve_documents() {
    let opts = FormatOptions::default();
    for doc in corpus(3, 300) {
        let doc = object_root(&doc);
        for a in SCHEMA_LESS {
            for b in SCHEMA_LESS {
                let first = decode(a, &encode(a, &doc, &opts).unwrap(), &opts).unwrap();
                let second = decode(b, &encode(b, &first, &opts).unwrap(), &opts).unwrap();
                let third = decode(a, &encode(a, &second, &opts).unwrap(), &opts).unwrap();
                assert!(canon_eq(&third, &doc), "{a} -> {b} -> {a}");
            }
        }
    }
}

#[test]
fn bson_frames_are_consistent() {
    for doc in corpus(4, 2000) {
        let bytes = encode(FormatId::Bson, &object_root(&doc), &FormatOptions::default()).unwrap();
        verify_framing(&bytes).unwrap();
    }
}

#[test]
fn smile_streams_never_contain_ff() {
    for doc in corpus(5, 2000) {
        for smile in smile_flag_sets() {
            let bytes = smile_encode(&doc, &smile);
            assert!(!bytes.contains(&0xff), "{doc}");
        }
    }
}

#[test]
fn smile_string_classes_are_minimal() {
    let mut seen = std::collections::HashSet::new();
    for doc in corpus(6, 1000) {
        let bytes = smile_encode(&doc, &SmileOptions::default());
        let (res, spans) = decode_traced(FormatId::Smile, &bytes, &FormatOptions::default());
        res.unwrap();
        for s in &spans {
            let Some(class) = SmileStringClass::of_token(bytes[s.offset]) else { continue };
            if s.label != class.name() {
                continue;
            }
            let body = match class {
                SmileStringClass::Empty => &[][..],
                SmileStringClass::LongAscii | SmileStringClass::LongUnicode => &bytes[s.offset + 1..s.offset + s.length - 1],
                _ => &bytes[s.offset + 1..s.offset + s.length],
            };
            let text = std::str::from_utf8(body).unwrap();
            assert_eq!(SmileStringClass::of(text), class, "{text:?}");
            seen.insert(class.name());
        }
    }
    assert!(seen.len() >= 5, "{seen:?}");
}

#[test]
fn ubjson_markers_are_printable() {
    for doc in corpus(8, 1000) {
        let bytes = encode(FormatId::Ubjson, &doc, &FormatOptions::default()).unwrap();
        let (res, spans) = decode_traced(FormatId::Ubjson, &bytes, &FormatOptions::default());
        res.unwrap();
        for s in spans {
            let m = bytes[s.offset];
            assert!(m.is_ascii_graphic(), "0x{m:02x} at {} ({})", s.offset, s.label);
        }
    }
}

fn cbor_argument(bytes: &[u8]) -> (u8, u64) {
    let major = bytes[0] >> 5;
    let arg = match bytes[0] & 0x1f {
        n @ 0..=23 => u64::from(n),
        24 => u64::from(bytes[1]),
        25 => u64::from(u16::from_be_bytes([bytes[1], bytes[2]])),
        26 => u64::from(u32::from_be_bytes(bytes[1..5].try_into().unwrap())),
        27 => u64::from_be_bytes(bytes[1..9].try_into().unwrap()),
        other => panic!("additional info {other}"),
    };
    (major, arg)
}

/// Smallest MessagePack integer encoding, by the format's width table.
fn mp_int_len(n: i64) -> usize {
    match n {
        -32..=127 => 1,
        0..=0xff | -128..=-33 => 2,
        0..=0xffff | -32768..=-129 => 3,
        0..=0xffff_ffff | -2147483648..=-32769 => 5,
        _ => 9,
    }
}

fn cbor_int_len(n: i64) -> usize {
    let u = if n < 0 { (-1 - i128::from(n)) as u64 } else { n as u64 };
    match u {
        0..=23 => 1,
        24..=0xff => 2,
        0x100..=0xffff => 3,
        0x1_0000..=0xffff_ffff => 5,
        _ => 9,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn schema_less_round_trip(doc in arb_json()) {
        let opts = FormatOptions::default();
        for f in SCHEMA_LESS {
            prop_assert_eq!(round_trip(f, &admissible(f, &doc), &opts), Ok(()));
        }
    }

    #[test]
    fn bson_round_trip_object_roots(doc in arb_object()) {
        prop_assert_eq!(round_trip(FormatId::Bson, &doc, &FormatOptions::default()), Ok(()));
        let bytes = encode(FormatId::Bson, &doc, &FormatOptions::default()).unwrap();
        prop_assert!(verify_framing(&bytes).is_ok());
    }

    #[test]
    fn smile_round_trip_with_back_references(doc in arb_json()) {
        let smile = SmileOptions { back_references: true, ..Default::default() };
        let bytes = smile_encode(&doc, &smile);
        prop_assert!(!bytes.contains(&0xff));
        prop_assert!(canon_eq(&smile_decode(&bytes).unwrap(), &doc));
    }

    #[test]
    fn cbor_negative_argument_law(n in i64::MIN..0) {
        let bytes = encode(FormatId::Cbor, &JsonValue::Int(n), &FormatOptions::default()).unwrap();
        let (major, u) = cbor_argument(&bytes);
        prop_assert_eq!(major, 1);
        prop_assert_eq!(i128::from(n), -1 - i128::from(u));
    }

    #[test]
    fn integer_headers_are_minimal(n in any::<i64>()) {
        let opts = FormatOptions::default();
        prop_assert_eq!(encode(FormatId::MessagePack, &JsonValue::Int(n), &opts).unwrap().len(), mp_int_len(n));
        prop_assert_eq!(encode(FormatId::Cbor, &JsonValue::Int(n), &opts).unwrap().len(), cbor_int_len(n));
    }

    #[test]
    fn reencoding_never_grows(n in any::<i64>()) {
        let opts = FormatOptions::default();
        // widest forms: MessagePack int64, CBOR 8-byte argument
        let mut wide_mp = vec![0xd3];
        wide_mp.extend_from_slice(&n.to_be_bytes());
        let v = decode(FormatId::MessagePack, &wide_mp, &opts).unwrap();
        prop_assert_eq!(&v, &JsonValue::Int(n));
        prop_assert!(encode(FormatId::MessagePack, &v, &opts).unwrap().len() <= wide_mp.len());

        let (major, arg) = if n < 0 { (1, (-1 - i128::from(n)) as u64) } else { (0, n as u64) };
        let mut wide_cbor = vec![(major << 5) | 27];
        wide_cbor.extend_from_slice(&arg.to_be_bytes());
        let v = decode(FormatId::Cbor, &wide_cbor, &opts).unwrap();
        prop_assert_eq!(&v, &JsonValue::Int(n));
        let again = encode(FormatId::Cbor, &v, &opts).unwrap();
        prop_assert!(again.len() <= wide_cbor.len());
        prop_assert_eq!(&again[..], &cbor_header_encode(major, arg)[..]);
    }
}
