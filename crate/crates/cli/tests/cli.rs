use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use binjson::{canon_eq, canonical_doc, parse_json};
use tempfile::TempDir;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_binjson")).args(args).env("NO_COLOR", "1").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, contents: &[u8]) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

#[test]
fn json_to_msgpack_is_118_bytes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("doc.mp");
    let json = fixtures().join("test.json");
    let o = run(&["convert", path_str(&json), "--to", "msgpack", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = std::fs::read(&out).unwrap();
    assert_eq!(bytes.len(), 118);
    assert_eq!(bytes, std::fs::read(fixtures().join("test.mp")).unwrap());
}

#[test]
fn output_format_follows_the_out_extension() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("doc.smile");
    let o = run(&["convert", path_str(&fixtures().join("test.json")), "--out", path_str(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(fixtures().join("test.smile")).unwrap());
}

#[test]
fn binary_back_to_json() {
    let dir = TempDir::new().unwrap();
    let mp = write(&dir, "x.bin", &std::fs::read(fixtures().join("test.mp")).unwrap());
    let o = run(&["convert", path_str(&mp), "--from", "msgpack", "--to", "json"]);
    assert_eq!(code(&o), 0);
    let back = parse_json(&stdout(&o)).unwrap();
    assert!(canon_eq(&back, &canonical_doc()));
}

#[test]
fn avro_without_schema_is_a_usage_error() {
    let o = run(&["convert", path_str(&fixtures().join("test.json")), "--to", "avro"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--schema"));
}

#[test]
fn avro_with_schema() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("doc.avro");
    let schema = fixtures().join("schema.avsc");
    let o = run(&[
        "convert",
        path_str(&fixtures().join("test.json")),
        "--schema",
        path_str(&schema),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&out).unwrap().len(), 56);
}

#[test]
fn chains_through_every_pair() {
    let docs = [
        canonical_doc().to_json_string(),
        r#"{"a":[1,-1,255,-129,65536,-9223372036854775808,9223372036854775807]}"#.to_owned(),
        r#"{"s":"héllo wörld ✓ 𝄞","f":[0.1,-0.0,1e300,5e-324],"n":null,"b":[true,false]}"#.to_owned(),
        r#"{"deep":[[[[{"x":[[]]}]]]],"empty":{}}"#.to_owned(),
    ];
    let formats = ["msgpack", "cbor", "ubjson", "bson", "smile"];
    let dir = TempDir::new().unwrap();
    for (i, text) in docs.iter().enumerate() {
        let doc = parse_json(text).unwrap();
        let start = write(&dir, &format!("d{i}.json"), text.as_bytes());
        for a in formats {
            for b in formats {
                let pa = dir.path().join(format!("d{i}.a"));
                let pb = dir.path().join(format!("d{i}.b"));
                let pa2 = dir.path().join(format!("d{i}.a2"));
                let steps: [(&Path, &str, &str, &Path); 3] =
                    [(&start, "json", a, &pa), (&pa, a, b, &pb), (&pb, b, a, &pa2)];
                for (src, from, to, dst) in steps {
                    let o = run(&["convert", path_str(src), "--from", from, "--to", to, "--out", path_str(dst)]);
                    assert_eq!(code(&o), 0, "{from} -> {to}: {}", String::from_utf8_lossy(&o.stderr));
                }
                let o = run(&["convert", path_str(&pa2), "--from", a, "--to", "json"]);
                assert!(canon_eq(&parse_json(&stdout(&o)).unwrap(), &doc), "{a} -> {b} -> {a}");
            }
        }
    }
}

#[test]
fn inspect_single_byte() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "t.mp", &[0xc3]);
    let o = run(&["inspect", path_str(&p), "--format", "msgpack"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("bool true"), "{text}");
    assert!(!text.contains('\x1b'));
}

#[test]
fn inspect_truncated_bson() {
    let dir = TempDir::new().unwrap();
    let bytes = std::fs::read(fixtures().join("test.bson")).unwrap();
    let p = write(&dir, "cut.bson", &bytes[..60]);
    let o = run(&["inspect", path_str(&p)]);
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    assert!(text.contains("document length"), "{text}");
    assert!(text.contains("error: truncated input"), "{text}");
}

#[test]
fn inspect_avro_needs_schema() {
    let avro = fixtures().join("test.avro");
    assert_eq!(code(&run(&["inspect", path_str(&avro)])), 2);
    let schema = fixtures().join("schema.avsc");
    let o = run(&["inspect", path_str(&avro), "--schema", path_str(&schema)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("union index"));
}

#[test]
fn compare_tables() {
    let json = fixtures().join("test.json");
    let o = run(&["compare", path_str(&json)]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "format\tbytes\nBSON\t223\nCBOR\t118\nMessagePack\t118\nSmile\t127\nUBJSON\t151\n");
    let schema = fixtures().join("schema.avsc");
    let o = run(&["compare", path_str(&json), "--schema", path_str(&schema)]);
    assert!(stdout(&o).starts_with("format\tbytes\nAvro\t56\n"));
}

#[test]
fn compare_empty_object() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "e.json", b"{}");
    let o = run(&["compare", path_str(&p)]);
    assert_eq!(code(&o), 0);
    let rows: Vec<(String, usize)> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| {
            let (name, n) = l.split_once('\t').unwrap();
            (name.to_owned(), n.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|(_, n)| *n >= 1));
    assert!(rows.contains(&("BSON".to_owned(), 5)));
}

fn compat(dir: &TempDir, old: &str, new: &str, extra: &[&str]) -> Output {
    let o = write(dir, "old.avsc", old.as_bytes());
    let n = write(dir, "new.avsc", new.as_bytes());
    let mut args = vec!["check-compat", path_str(&o), path_str(&n)];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn check_compat_exit_codes() {
    let dir = TempDir::new().unwrap();
    let e2 = r#"{"type":"enum","name":"E","symbols":["A","B"]}"#;
    let e3 = r#"{"type":"enum","name":"E","symbols":["A","B","C"]}"#;
    let o = compat(&dir, e2, e2, &[]);
    assert_eq!((code(&o), stdout(&o).lines().next().unwrap()), (0, "Full"));
    let o = compat(&dir, e2, e3, &[]);
    assert_eq!((code(&o), stdout(&o).lines().next().unwrap()), (3, "Backward"));
    let o = compat(&dir, e3, e2, &[]);
    assert_eq!((code(&o), stdout(&o).lines().next().unwrap()), (4, "Forward"));
    let o = compat(&dir, r#""string""#, r#""bytes""#, &[]);
    assert_eq!((code(&o), stdout(&o).lines().next().unwrap()), (5, "Incompatible"));
    assert!(stdout(&o).contains("backward: $"));
    let o = compat(&dir, r#"{"type":"nope"}"#, e2, &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn check_compat_transitive() {
    let dir = TempDir::new().unwrap();
    let v1 = write(&dir, "v1.avsc", br#""int""#);
    let o = compat(&dir, r#""long""#, r#""double""#, &["--transitive", path_str(&v1)]);
    let text = stdout(&o);
    assert_eq!(code(&o), 3, "{text}");
    assert!(text.contains("v1.avsc: Backward"));
    assert!(text.ends_with("overall: Backward\n"));
}

#[test]
fn usage_errors() {
    assert_eq!(code(&run(&[])), 2);
    let json = fixtures().join("test.json");
    assert_eq!(code(&run(&["convert", path_str(&json), "--to", "yaml"])), 2);
    assert_eq!(code(&run(&["convert", "/nonexistent.json", "--to", "cbor"])), 2);
    assert_eq!(code(&run(&["convert", path_str(&json)])), 2);
}

#[test]
fn bad_input_is_a_codec_error() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "bad.cbor", &[0x82, 0x01]);
    let o = run(&["convert", path_str(&p), "--to", "json"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("offset 2"));
    let p = write(&dir, "bad.json", b"{\"a\":}");
    assert_eq!(code(&run(&["convert", path_str(&p), "--to", "cbor"])), 1);
}
