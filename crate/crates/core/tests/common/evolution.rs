//! Schema pairs for the Avro column of the structural and type-conversion
//! evolution tables, with the verdict each one should get.

use binjson::CompatLevel::{self, Backward, Forward, Full, Incompatible};

pub struct Row {
    pub transformation: &'static str,
    pub old: String,
    pub new: String,
    pub expected: CompatLevel,
}

fn record(fields: &str) -> String {
    format!(r#"{{"type":"record","name":"Doc","fields":[{fields}]}}"#)
}

fn field(ty: &str) -> String {
    record(&format!(r#"{{"name":"id","type":"long"}},{{"name":"x","type":{ty}}}"#))
}

const ID: &str = r#"{"name":"id","type":"long"}"#;
const OPT_NOTE: &str = r#"{"name":"note","type":["null","string"],"default":null}"#;
const REQ_NOTE: &str = r#"{"name":"note","type":"string"}"#;
const ITEM: &str = r#"{"type":"record","name":"Item","fields":[{"name":"v","type":"int"}]}"#;
const ENUM_AB: &str = r#"{"type":"enum","name":"Colour","symbols":["RED","GREEN"]}"#;
const ENUM_ABC: &str = r#"{"type":"enum","name":"Colour","symbols":["RED","GREEN","BLUE"]}"#;

fn row(transformation: &'static str, old: String, new: String, expected: CompatLevel) -> Row {
    Row { transformation, old, new, expected }
}

pub fn rows() -> Vec<Row> {
    vec![
        row("add an optional field to the end", record(ID), record(&format!("{ID},{OPT_NOTE}")), Full),
        row("remove an optional field from the end", record(&format!("{ID},{OPT_NOTE}")), record(ID), Full),
        row("add a required field", record(ID), record(&format!("{ID},{REQ_NOTE}")), Forward),
        row("remove a required field", record(&format!("{ID},{REQ_NOTE}")), record(ID), Backward),
        row("optional to required", record(&format!("{ID},{OPT_NOTE}")), record(&format!("{ID},{REQ_NOTE}")), Forward),
        row("required to optional", record(&format!("{ID},{REQ_NOTE}")), record(&format!("{ID},{OPT_NOTE}")), Backward),
        row(
            "list of scalars to list of structures with scalar",
            field(r#"{"type":"array","items":"int"}"#),
            field(&format!(r#"{{"type":"array","items":{ITEM}}}"#)),
            Incompatible,
        ),
        row("scalar to list of scalars", field(r#""int""#), field(r#"{"type":"array","items":"int"}"#), Incompatible),
        row(
            "composite to list of composites",
            field(ITEM),
            field(&format!(r#"{{"type":"array","items":{ITEM}}}"#)),
            Incompatible,
        ),
        row("add choice to existing union", field(r#"["null","int"]"#), field(r#"["null","int","string"]"#), Backward),
        row("remove choice from existing union", field(r#"["null","int","string"]"#), field(r#"["null","int"]"#), Forward),
        row("scalar to enumeration", field(r#""string""#), field(ENUM_AB), Incompatible),
        row("enumeration to scalar", field(ENUM_AB), field(r#""string""#), Incompatible),
        row("add enumeration constant", field(ENUM_AB), field(ENUM_ABC), Backward),
        row("remove enumeration constant", field(ENUM_ABC), field(ENUM_AB), Forward),
        row("increase integer width", field(r#""int""#), field(r#""long""#), Backward),
        row("decrease integer width", field(r#""long""#), field(r#""int""#), Forward),
        row("increase float precision", field(r#""float""#), field(r#""double""#), Backward),
        row("decrease float precision", field(r#""double""#), field(r#""float""#), Forward),
        row("signed integer to float", field(r#""int""#), field(r#""float""#), Backward),
        row("float to signed integer", field(r#""float""#), field(r#""int""#), Forward),
        row("string to byte-array", field(r#""string""#), field(r#""bytes""#), Incompatible),
        row("byte-array to string", field(r#""bytes""#), field(r#""string""#), Incompatible),
        row("boolean to integer", field(r#""boolean""#), field(r#""int""#), Incompatible),
        row("integer to boolean", field(r#""int""#), field(r#""boolean""#), Incompatible),
    ]
}

/// Changing a default alters neither direction; it is reported as a note.
pub fn default_change() -> (String, String) {
    (
        record(&format!(r#"{ID},{{"name":"n","type":"int","default":1}}"#)),
        record(&format!(r#"{ID},{{"name":"n","type":"int","default":2}}"#)),
    )
}
