mod common;

use binjson::{canon_eq, canonical_doc, decode, encode, parse_json, FormatId, FormatOptions, JsonValue};
use common::{fixture, fixture_schema};

fn options() -> FormatOptions {
    FormatOptions::with_avro_schema(fixture_schema())
}

fn fixture_name(f: FormatId) -> String {
    format!("test.{}", f.extension())
}

#[test]
fn sizes_match_captions() {
    let doc = canonical_doc();
    let sizes: Vec<(FormatId, usize)> =
        FormatId::ALL.into_iter().map(|f| (f, encode(f, &doc, &options()).unwrap().len())).collect();
    assert_eq!(
        sizes,
        [
            (FormatId::MessagePack, 118),
            (FormatId::Cbor, 118),
            (FormatId::Ubjson, 151),
            (FormatId::Bson, 223),
            (FormatId::Smile, 127),
            (FormatId::AvroBinary, 56),
        ]
    );
}

#[test]
fn encodings_are_byte_identical_to_fixtures() {
    let doc = canonical_doc();
    for f in FormatId::ALL {
        let ours = encode(f, &doc, &options()).unwrap();
        assert_eq!(ours, fixture(&fixture_name(f)), "{f}");
    }
}

#[test]
fn schema_less_fixtures_decode_to_the_document() {
    let doc = canonical_doc();
    for f in FormatId::ALL.into_iter().filter(|f| !f.requires_schema()) {
        let back = decode(f, &fixture(&fixture_name(f)), &options()).unwrap();
        assert!(canon_eq(&back, &doc), "{f}: {back}");
    }
}

// Absent optional fields and explicit nulls share one encoding, so the Avro
// fixture decodes with every optional field present.
#[test]
fn avro_fixture_decodes_with_nulls_filled_in() {
    let back = decode(FormatId::AvroBinary, &fixture("test.avro"), &options()).unwrap();
    let expected = parse_json(
        r#"{"tags":[],"tz":-25200,"days":[1,1,2,1],"coord":[-90.0715,29.951],"data":[
            {"name":"ox03","staff":true,"extra":null},
            {"name":null,"staff":false,"extra":{"info":""}},
            {"name":"ox03","staff":true,"extra":null},
            {"name":null,"staff":null,"extra":null}]}"#,
    )
    .unwrap();
    assert!(canon_eq(&back, &expected), "{back}");
    assert!(!canon_eq(&back, &canonical_doc()));
}

#[test]
fn fixture_floats_survive_every_format() {
    for f in FormatId::ALL {
        let back = decode(f, &fixture(&fixture_name(f)), &options()).unwrap();
        let coord = back.as_object().unwrap().get("coord").unwrap();
        assert_eq!(
            coord,
            &JsonValue::Arr(vec![JsonValue::Float(-90.0715), JsonValue::Float(29.951)]),
            "{f}"
        );
    }
}

#[test]
fn smile_fixture_header_pins_the_flags() {
    let bytes = fixture("test.smile");
    assert_eq!(&bytes[..4], [0x3a, 0x29, 0x0a, 0x03]);
    assert!(!bytes.contains(&0xff));
}
