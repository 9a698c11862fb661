//! Schema compatibility: can data written with one schema be read with
//! another, in each direction.

use std::collections::HashSet;
use std::fmt;

use super::binary::{promotes, reader_field, same_primitive, shallow_match};
use super::schema::{AvroSchema, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompatLevel {
    Full,
    Backward,
    Forward,
    Incompatible,
}

impl CompatLevel {
    pub fn from_directions(backward: bool, forward: bool) -> Self {
        match (backward, forward) {
            (true, true) => CompatLevel::Full,
            (true, false) => CompatLevel::Backward,
            (false, true) => CompatLevel::Forward,
            (false, false) => CompatLevel::Incompatible,
        }
    }

    pub fn is_backward(self) -> bool {
        matches!(self, CompatLevel::Full | CompatLevel::Backward)
    }

    pub fn is_forward(self) -> bool {
        matches!(self, CompatLevel::Full | CompatLevel::Forward)
    }
}

impl fmt::Display for CompatLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompatLevel::Full => "Full",
            CompatLevel::Backward => "Backward",
            CompatLevel::Forward => "Forward",
            CompatLevel::Incompatible => "Incompatible",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatibilityVerdict {
    pub level: CompatLevel,
    /// Why a direction fails, one line per path.
    pub reasons: Vec<String>,
    /// Differences that do not affect either direction.
    pub notes: Vec<String>,
}

/// Backward: `new` reads data written with `old`. Forward: `old` reads data
/// written with `new`.
pub fn avro_check_compat(old: &AvroSchema, new: &AvroSchema) -> CompatibilityVerdict {
    let backward = reader_problems(new, old);
    let forward = reader_problems(old, new);
    let level = CompatLevel::from_directions(backward.is_empty(), forward.is_empty());
    let reasons = backward
        .into_iter()
        .map(|r| format!("backward: {r}"))
        .chain(forward.into_iter().map(|r| format!("forward: {r}")))
        .collect();
    let mut notes = Vec::new();
    default_changes(old, &old.root, new, &new.root, "$", &mut HashSet::new(), &mut notes);
    CompatibilityVerdict { level, reasons, notes }
}

/// Every reason `reader` cannot read data written with `writer`; empty when
/// it can.
pub fn reader_problems(reader: &AvroSchema, writer: &AvroSchema) -> Vec<String> {
    let mut ctx = Ctx { reader, writer, visiting: HashSet::new(), out: Vec::new() };
    ctx.check(&reader.root, &writer.root, "$");
    ctx.out
}

struct Ctx<'a> {
    reader: &'a AvroSchema,
    writer: &'a AvroSchema,
    visiting: HashSet<(String, String)>,
    out: Vec<String>,
}

impl Ctx<'_> {
    fn check(&mut self, rs: &Schema, ws: &Schema, path: &str) {
        // a named pair already under examination is assumed fine
        if let (Schema::Ref(r), Schema::Ref(w)) = (rs, ws) {
            if !self.visiting.insert((r.clone(), w.clone())) {
                return;
            }
        }
        let r = self.reader.resolve(rs);
        let w = self.writer.resolve(ws);
        if let (Some(rn), Some(wn)) = (r.name(), w.name()) {
            self.visiting.insert((rn.fullname(), wn.fullname()));
        }
        match (r, w) {
            (_, Schema::Union(wb)) => {
                for (i, b) in wb.iter().enumerate() {
                    self.check(rs, b, &format!("{path}<{i}>"));
                }
            }
            (Schema::Union(rb), _) => {
                let ok = rb.iter().any(|b| {
                    shallow_match(w, self.reader.resolve(b)) && self.sub_ok(b, ws, path)
                });
                if !ok {
                    self.out.push(format!("{path}: no reader union branch accepts writer {}", w.kind()));
                }
            }
            (a, b) if same_primitive(a, b) || promotes(b, a) => {}
            (Schema::Record(rr), Schema::Record(wr)) => {
                if rr.name.name != wr.name.name {
                    self.out.push(format!("{path}: record {} cannot read record {}", rr.name, wr.name));
                    return;
                }
                for (i, rf) in rr.fields.iter().enumerate() {
                    let fpath = format!("{path}.{}", rf.name);
                    let wf = wr.fields.iter().find(|wf| reader_field(rr, &wf.name) == Some(i));
                    match (wf, &rf.default) {
                        (Some(wf), _) => self.check(&rf.schema, &wf.schema, &fpath),
                        (None, Some(_)) => {}
                        (None, None) => self.out.push(format!("{fpath}: missing from writer and has no default")),
                    }
                }
            }
            (Schema::Enum(re), Schema::Enum(we)) => {
                if re.name.name != we.name.name {
                    self.out.push(format!("{path}: enum {} cannot read enum {}", re.name, we.name));
                } else if re.default.is_none() {
                    for sym in we.symbols.iter().filter(|s| !re.symbols.contains(s)) {
                        self.out.push(format!("{path}: reader enum lacks symbol {sym:?}"));
                    }
                }
            }
            (Schema::Fixed(rf), Schema::Fixed(wf)) => {
                if rf.name.name != wf.name.name || rf.size != wf.size {
                    self.out.push(format!("{path}: fixed {}[{}] cannot read fixed {}[{}]", rf.name, rf.size, wf.name, wf.size));
                }
            }
            (Schema::Array(ri), Schema::Array(wi)) => self.check(ri, wi, &format!("{path}[]")),
            (Schema::Map(rv), Schema::Map(wv)) => self.check(rv, wv, &format!("{path}{{}}")),
            (r, w) => self.out.push(format!("{path}: {} data cannot be read as {}", w.kind(), r.kind())),
        }
    }

    /// Checks a candidate branch without keeping its reasons.
    fn sub_ok(&mut self, rs: &Schema, ws: &Schema, path: &str) -> bool {
        let before = self.out.len();
        self.check(rs, ws, path);
        let ok = self.out.len() == before;
        self.out.truncate(before);
        ok
    }
}

fn default_changes(
    old: &AvroSchema,
    os: &Schema,
    new: &AvroSchema,
    ns: &Schema,
    path: &str,
    seen: &mut HashSet<String>,
    notes: &mut Vec<String>,
) {
    match (old.resolve(os), new.resolve(ns)) {
        (Schema::Record(a), Schema::Record(b)) => {
            if !seen.insert(a.name.fullname()) {
                return;
            }
            for fb in &b.fields {
                if let Some(fa) = a.fields.iter().find(|f| f.name == fb.name) {
                    let fpath = format!("{path}.{}", fb.name);
                    if fa.default != fb.default {
                        let show = |d: &Option<crate::value::JsonValue>| {
                            d.as_ref().map_or("none".to_owned(), |v| v.to_json_string())
                        };
                        notes.push(format!("{fpath}: default changed from {} to {}", show(&fa.default), show(&fb.default)));
                    }
                    default_changes(old, &fa.schema, new, &fb.schema, &fpath, seen, notes);
                }
            }
        }
        (Schema::Array(a), Schema::Array(b)) => default_changes(old, a, new, b, &format!("{path}[]"), seen, notes),
        (Schema::Map(a), Schema::Map(b)) => default_changes(old, a, new, b, &format!("{path}{{}}"), seen, notes),
        (Schema::Union(a), Schema::Union(b)) => {
            for (x, y) in a.iter().zip(b) {
                default_changes(old, x, new, y, path, seen, notes);
            }
        }
        (Schema::Enum(a), Schema::Enum(b)) if a.default != b.default => {
            notes.push(format!("{path}: enum default changed"));
        }
        _ => {}
    }
}
