//! Browser bindings: size table, annotated hexdump, schema compatibility.

use binjson::inspect::{inspect, render_hexdump, render_size_table, size_rows};
use binjson::{avro_check_compat, encode, parse_json, AvroSchema, FormatId, FormatOptions};
use wasm_bindgen::prelude::*;

fn options(schema: &str) -> Result<FormatOptions, String> {
    let mut opts = FormatOptions::default();
    if !schema.trim().is_empty() {
        opts.avro_schema = Some(AvroSchema::parse_str(schema).map_err(|e| format!("schema: {e}"))?);
    }
    Ok(opts)
}

/// Tab-separated size table for a JSON document. An empty schema leaves
/// out the Avro row.
pub fn sizes(json: &str, schema: &str) -> Result<String, String> {
    let doc = parse_json(json).map_err(|e| e.to_string())?;
    Ok(render_size_table(&size_rows(&doc, &options(schema)?)))
}

/// Encodes `json` in `format` and annotates the bytes.
pub fn hexdump(json: &str, format: &str, schema: &str) -> Result<String, String> {
    let doc = parse_json(json).map_err(|e| e.to_string())?;
    let format: FormatId = format.parse().map_err(|e: binjson::UnknownFormat| e.to_string())?;
    let opts = options(schema)?;
    let bytes = encode(format, &doc, &opts).map_err(|e| e.to_string())?;
    let result = inspect(format, &bytes, &opts);
    Ok(format!("{} bytes\n{}", bytes.len(), render_hexdump(&bytes, &result, false)))
}

/// Verdict on the first line, then reasons and notes.
pub fn compat(old: &str, new: &str) -> Result<String, String> {
    let old = AvroSchema::parse_str(old).map_err(|e| format!("old schema: {e}"))?;
    let new = AvroSchema::parse_str(new).map_err(|e| format!("new schema: {e}"))?;
    let v = avro_check_compat(&old, &new);
    let mut out = v.level.to_string();
    for line in v.reasons.iter().chain(v.notes.iter().map(|n| n as &String)) {
        out.push_str("\n  ");
        out.push_str(line);
    }
    Ok(out)
}

#[wasm_bindgen(js_name = sizeTable)]
pub fn size_table_js(json: &str, schema: &str) -> Result<String, JsError> {
    sizes(json, schema).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = annotatedHex)]
pub fn annotated_hex_js(json: &str, format: &str, schema: &str) -> Result<String, JsError> {
    hexdump(json, format, schema).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = checkCompat)]
pub fn check_compat_js(old: &str, new: &str) -> Result<String, JsError> {
    compat(old, new).map_err(|e| JsError::new(&e))
}
