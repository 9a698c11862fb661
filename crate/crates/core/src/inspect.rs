//! Annotated hexdumps and the per-format size table.

use std::fmt::Write as _;

use crate::codec::{decode_traced, encode, AnnotatedSpan, CodecError, FormatId, FormatOptions};
use crate::value::JsonValue;

const ROW: usize = 16;

/// Result of decoding a buffer with tracing on.
#[derive(Debug, Clone)]
pub struct Inspection {
    pub len: usize,
    pub spans: Vec<AnnotatedSpan>,
    pub value: Option<JsonValue>,
    pub error: Option<CodecError>,
}

pub fn inspect(format: FormatId, bytes: &[u8], options: &FormatOptions) -> Inspection {
    let (result, spans) = decode_traced(format, bytes, options);
    let (value, error) = match result {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e)),
    };
    Inspection { len: bytes.len(), spans, value, error }
}

/// Checks that spans are ordered, non-overlapping and cover `0..len`.
pub fn check_coverage(spans: &[AnnotatedSpan], len: usize) -> Result<(), String> {
    let mut at = 0;
    for s in spans {
        if s.length == 0 {
            return Err(format!("empty span {:?} at {}", s.label, s.offset));
        }
        if s.offset != at {
            return Err(if s.offset < at {
                format!("span {:?} at {} overlaps the previous one ending at {at}", s.label, s.offset)
            } else {
                format!("bytes {at}..{} are not covered", s.offset)
            });
        }
        at += s.length;
    }
    if at != len {
        return Err(format!("bytes {at}..{len} are not covered"));
    }
    Ok(())
}

/// Spans plus filler for any bytes the decoder never reached.
pub fn spans_with_gaps(spans: &[AnnotatedSpan], len: usize) -> Vec<AnnotatedSpan> {
    let mut out = Vec::with_capacity(spans.len() + 1);
    let mut at = 0;
    for s in spans {
        if s.offset > at {
            out.push(gap(at, s.offset - at));
        }
        out.push(s.clone());
        at = at.max(s.offset + s.length);
    }
    if at < len {
        out.push(gap(at, len - at));
    }
    out
}

fn gap(offset: usize, length: usize) -> AnnotatedSpan {
    AnnotatedSpan { offset, length, label: "not decoded".into(), decoded: None }
}

struct Style {
    on: bool,
}

impl Style {
    fn paint(&self, code: &str, text: &str) -> String {
        if self.on {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_owned()
        }
    }
}

/// Renders one hex row per 16 bytes, each followed by the spans that start
/// in it. A trailing line reports the decode error, if any.
pub fn render_hexdump(bytes: &[u8], inspection: &Inspection, color: bool) -> String {
    let style = Style { on: color };
    let spans = spans_with_gaps(&inspection.spans, bytes.len());
    let mut next = spans.iter().peekable();
    let mut out = String::new();
    for (row, chunk) in bytes.chunks(ROW).enumerate() {
        let base = row * ROW;
        let hex: Vec<String> = chunk.iter().map(|b| format!("{b:02x}")).collect();
        let ascii: String = chunk
            .iter()
            .map(|&b| if b.is_ascii_graphic() || b == b' ' { char::from(b) } else { '.' })
            .collect();
        let _ = writeln!(out, "{base:08x}  {:<47}  |{ascii}|", hex.join(" "));
        while let Some(s) = next.next_if(|s| s.offset < base + ROW) {
            let label = style.paint("36", &s.label);
            let _ = write!(out, "          +{:<6} {:>4}B  {label}", s.offset, s.length);
            if let Some(d) = &s.decoded {
                let _ = write!(out, " {d}");
            }
            out.push('\n');
        }
    }
    if let Some(e) = &inspection.error {
        let _ = writeln!(out, "{}", style.paint("31", &format!("error: {e}")));
    }
    out
}

/// Encoded size in every format. The Avro row appears only when `options`
/// carries a schema.
pub fn size_rows(doc: &JsonValue, options: &FormatOptions) -> Vec<(FormatId, Result<usize, CodecError>)> {
    let mut formats: Vec<FormatId> = FormatId::ALL
        .into_iter()
        .filter(|f| !f.requires_schema() || options.avro_schema.is_some())
        .collect();
    formats.sort_by_key(|f| f.name().to_ascii_lowercase());
    formats.into_iter().map(|f| (f, encode(f, doc, options).map(|b| b.len()))).collect()
}

/// Tab-separated `format<TAB>bytes`, one row per format, sorted by name.
pub fn render_size_table(rows: &[(FormatId, Result<usize, CodecError>)]) -> String {
    let mut out = String::from("format\tbytes\n");
    for (f, r) in rows {
        match r {
            Ok(n) => {
                let _ = writeln!(out, "{}\t{n}", f.name());
            }
            Err(e) => {
                let _ = writeln!(out, "{}\terror: {e}", f.name());
            }
        }
    }
    out
}
