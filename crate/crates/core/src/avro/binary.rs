//! Avro binary encoding (no container framing) and reader/writer resolution.

use crate::codec::{check_depth, finite, short_render, ByteCursor, CodecError, ErrorKind, Result};
use crate::intcodec::{unzigzag64, write_leb128, zigzag64, MAX_VARINT_LEN};
use crate::value::{widen_f32, JsonValue, Map};

use super::schema::{AvroSchema, EnumSchema, Field, RecordSchema, Schema};

/// Zero-size items cannot bound a block count by the remaining input.
const MAX_BLOCK_ITEMS: u64 = 1 << 24;

pub fn avro_encode(value: &JsonValue, schema: &AvroSchema) -> Result<Vec<u8>> {
    let mut enc = Encoder { schema, out: Vec::new() };
    enc.value(&schema.root, value, "$")?;
    Ok(enc.out)
}

fn mismatch(path: &str, offset: usize, detail: impl Into<String>) -> CodecError {
    CodecError::new(ErrorKind::SchemaMismatch(path.to_owned()), offset).with_detail(detail)
}

fn latin1(s: &str) -> Option<Vec<u8>> {
    s.chars().map(|c| u8::try_from(c as u32).ok()).collect()
}

fn from_latin1(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| char::from(b)).collect()
}

struct Encoder<'a> {
    schema: &'a AvroSchema,
    out: Vec<u8>,
}

impl Encoder<'_> {
    fn long(&mut self, n: i64) {
        write_leb128(&mut self.out, zigzag64(n));
    }

    fn bytes(&mut self, b: &[u8]) {
        self.long(b.len() as i64);
        self.out.extend_from_slice(b);
    }

    fn value(&mut self, s: &Schema, v: &JsonValue, path: &str) -> Result<()> {
        let at = self.out.len();
        match (self.schema.resolve(s), v) {
            (Schema::Null, JsonValue::Null) => {}
            (Schema::Boolean, JsonValue::Bool(b)) => self.out.push(u8::from(*b)),
            (Schema::Int, JsonValue::Int(n)) => {
                if i32::try_from(*n).is_err() {
                    return Err(CodecError::new(ErrorKind::Range, at)
                        .with_detail(format!("{n} does not fit an Avro int at {path}")));
                }
                self.long(*n);
            }
            (Schema::Long, JsonValue::Int(n)) => self.long(*n),
            (Schema::Float, JsonValue::Float(x)) => self.out.extend_from_slice(&(*x as f32).to_le_bytes()),
            (Schema::Float, JsonValue::Int(n)) => self.out.extend_from_slice(&(*n as f32).to_le_bytes()),
            (Schema::Double, JsonValue::Float(x)) => self.out.extend_from_slice(&x.to_le_bytes()),
            (Schema::Double, JsonValue::Int(n)) => self.out.extend_from_slice(&(*n as f64).to_le_bytes()),
            (Schema::String, JsonValue::Str(s)) => self.bytes(s.as_bytes()),
            (Schema::Bytes, JsonValue::Str(s)) => {
                let raw = latin1(s).ok_or_else(|| mismatch(path, at, "bytes need code points below 256"))?;
                self.bytes(&raw);
            }
            (Schema::Fixed(f), JsonValue::Str(s)) => {
                let raw = latin1(s).ok_or_else(|| mismatch(path, at, "fixed needs code points below 256"))?;
                if raw.len() != f.size {
                    return Err(mismatch(path, at, format!("fixed {} needs {} bytes", f.name, f.size)));
                }
                self.out.extend_from_slice(&raw);
            }
            (Schema::Enum(e), JsonValue::Str(sym)) => {
                let ix = e
                    .symbols
                    .iter()
                    .position(|x| x == sym)
                    .ok_or_else(|| mismatch(path, at, format!("{sym:?} is not a symbol of {}", e.name)))?;
                self.long(ix as i64);
            }
            (Schema::Array(items), JsonValue::Arr(xs)) => {
                if !xs.is_empty() {
                    self.long(xs.len() as i64);
                    for (i, x) in xs.iter().enumerate() {
                        self.value(items, x, &format!("{path}[{i}]"))?;
                    }
                }
                self.out.push(0);
            }
            (Schema::Map(values), JsonValue::Obj(m)) => {
                if !m.is_empty() {
                    self.long(m.len() as i64);
                    for (k, x) in m {
                        self.bytes(k.as_bytes());
                        self.value(values, x, &format!("{path}.{k}"))?;
                    }
                }
                self.out.push(0);
            }
            (Schema::Record(r), JsonValue::Obj(m)) => self.record(r, m, path)?,
            (Schema::Union(branches), v) => self.union(branches, v, path)?,
            (s, v) => {
                return Err(mismatch(path, at, format!("{} does not match {}", v.kind(), s.kind())));
            }
        }
        Ok(())
    }

    fn record(&mut self, r: &RecordSchema, m: &Map, path: &str) -> Result<()> {
        if let Some(extra) = m.keys().find(|k| !r.fields.iter().any(|f| f.name == *k)) {
            return Err(mismatch(
                &format!("{path}.{extra}"),
                self.out.len(),
                format!("{} has no field {extra:?}", r.name),
            ));
        }
        for f in &r.fields {
            let fpath = format!("{path}.{}", f.name);
            match (m.get(&f.name), &f.default) {
                (Some(x), _) => self.value(&f.schema, x, &fpath)?,
                (None, Some(d)) => self.default(&f.schema, d, &fpath)?,
                (None, None) => {
                    return Err(mismatch(&fpath, self.out.len(), "required field is missing"));
                }
            }
        }
        Ok(())
    }

    /// Defaults of union fields always use the first branch.
    fn default(&mut self, s: &Schema, d: &JsonValue, path: &str) -> Result<()> {
        match self.schema.resolve(s) {
            Schema::Union(branches) => {
                self.long(0);
                self.default(&branches[0], d, path)
            }
            other => self.value(other, d, path),
        }
    }

    fn union(&mut self, branches: &[Schema], v: &JsonValue, path: &str) -> Result<()> {
        let mut candidates: Vec<(u8, usize)> = branches
            .iter()
            .enumerate()
            .filter_map(|(i, b)| branch_rank(v, self.schema.resolve(b)).map(|rank| (rank, i)))
            .collect();
        candidates.sort_unstable();
        let start = self.out.len();
        let mut last_err = None;
        for (_, i) in candidates {
            self.long(i as i64);
            match self.value(&branches[i], v, path) {
                Ok(()) => return Ok(()),
                Err(e) => {
                    self.out.truncate(start);
                    last_err = Some(e);
                }
            }
        }
        Err(last_err.unwrap_or_else(|| {
            mismatch(path, start, format!("no union branch accepts {}", v.kind()))
        }))
    }
}

/// Lower is preferred; None means the branch cannot hold the value.
fn branch_rank(v: &JsonValue, s: &Schema) -> Option<u8> {
    Some(match (v, s) {
        (JsonValue::Null, Schema::Null) => 0,
        (JsonValue::Bool(_), Schema::Boolean) => 0,
        (JsonValue::Int(n), Schema::Int) if i32::try_from(*n).is_ok() => 0,
        (JsonValue::Int(_), Schema::Long) => 1,
        (JsonValue::Int(_), Schema::Double) => 2,
        (JsonValue::Int(_), Schema::Float) => 3,
        (JsonValue::Float(_), Schema::Double) => 0,
        (JsonValue::Float(_), Schema::Float) => 1,
        (JsonValue::Str(_), Schema::String) => 0,
        (JsonValue::Str(_), Schema::Enum(_)) => 1,
        (JsonValue::Str(_), Schema::Bytes) => 2,
        (JsonValue::Str(_), Schema::Fixed(_)) => 3,
        (JsonValue::Arr(_), Schema::Array(_)) => 0,
        (JsonValue::Obj(_), Schema::Record(_)) => 0,
        (JsonValue::Obj(_), Schema::Map(_)) => 1,
        _ => return None,
    })
}

/// The value a reader sees for a field filled from its default.
pub fn default_value(schema: &AvroSchema, s: &Schema, d: &JsonValue) -> JsonValue {
    match (schema.resolve(s), d) {
        (Schema::Union(branches), _) => default_value(schema, &branches[0], d),
        (Schema::Float | Schema::Double, JsonValue::Int(n)) => JsonValue::Float(*n as f64),
        (Schema::Float, JsonValue::Float(x)) => JsonValue::Float(widen_f32(*x as f32)),
        (Schema::Array(items), JsonValue::Arr(xs)) => {
            JsonValue::Arr(xs.iter().map(|x| default_value(schema, items, x)).collect())
        }
        (Schema::Map(values), JsonValue::Obj(m)) => {
            let mut out = Map::with_capacity(m.len());
            for (k, x) in m {
                out.insert(k.to_owned(), default_value(schema, values, x)).expect("source keys are unique");
            }
            JsonValue::Obj(out)
        }
        (Schema::Record(r), JsonValue::Obj(m)) => {
            let mut out = Map::with_capacity(r.fields.len());
            for f in &r.fields {
                let v = match (m.get(&f.name), &f.default) {
                    (Some(x), _) | (None, Some(x)) => default_value(schema, &f.schema, x),
                    (None, None) => JsonValue::Null,
                };
                out.insert(f.name.clone(), v).expect("field names are unique");
            }
            JsonValue::Obj(out)
        }
        _ => d.clone(),
    }
}

/// Decodes one value written with `writer`, optionally resolving it into
/// the shape of `reader`.
pub(crate) fn read_value(
    cur: &mut ByteCursor<'_>,
    writer: &AvroSchema,
    reader: Option<&AvroSchema>,
) -> Result<JsonValue> {
    let dec = Decoder { writer, reader: reader.unwrap_or(writer) };
    match reader {
        None => dec.plain(cur, &writer.root, "$", 0),
        Some(r) => dec.resolved(cur, &writer.root, &r.root, "$", 0),
    }
}

struct Decoder<'a> {
    writer: &'a AvroSchema,
    reader: &'a AvroSchema,
}

fn resolution(path: &str, offset: usize, detail: impl Into<String>) -> CodecError {
    CodecError::new(ErrorKind::Resolution(path.to_owned()), offset).with_detail(detail)
}

fn read_long(cur: &mut ByteCursor<'_>) -> Result<i64> {
    let start = cur.position();
    let window = &cur.buffer()[start..];
    let window = &window[..window.len().min(MAX_VARINT_LEN)];
    let (u, used) = crate::intcodec::leb128_decode_unsigned(window).map_err(|e| match e {
        crate::intcodec::IntCodecError::Truncated(_) => cur.error_at(ErrorKind::Truncated, cur.buffer().len()),
        _ => cur.error_at(ErrorKind::Overflow, start),
    })?;
    cur.take(used)?;
    Ok(unzigzag64(u))
}

fn read_int(cur: &mut ByteCursor<'_>) -> Result<i64> {
    let start = cur.position();
    let n = read_long(cur)?;
    if i32::try_from(n).is_err() {
        return Err(cur.error_at(ErrorKind::Range, start).with_detail(format!("{n} is not an Avro int")));
    }
    Ok(n)
}

fn read_len(cur: &mut ByteCursor<'_>) -> Result<usize> {
    let start = cur.position();
    let n = read_long(cur)?;
    let n = usize::try_from(n)
        .map_err(|_| cur.error_at(ErrorKind::LengthMismatch, start).with_detail(format!("length {n}")))?;
    if n > cur.remaining() {
        return Err(cur.error_at(ErrorKind::Truncated, start).with_detail(format!("length {n}")));
    }
    Ok(n)
}

fn labeled<T>(cur: &mut ByteCursor<'_>, start: usize, label: &str, v: T, render: impl FnOnce(&T) -> Option<String>) -> T {
    cur.annotate(start, label, || render(&v));
    v
}

impl Decoder<'_> {
    fn plain(&self, cur: &mut ByteCursor<'_>, s: &Schema, path: &str, depth: usize) -> Result<JsonValue> {
        check_depth(cur, depth)?;
        let start = cur.position();
        let scalar = match self.writer.resolve(s) {
            Schema::Null => JsonValue::Null,
            Schema::Boolean => match cur.read_u8()? {
                0 => JsonValue::Bool(false),
                1 => JsonValue::Bool(true),
                b => return Err(cur.error_at(ErrorKind::BadTag(b), start).with_detail("boolean byte")),
            },
            Schema::Int => JsonValue::Int(read_int(cur)?),
            Schema::Long => JsonValue::Int(read_long(cur)?),
            Schema::Float => {
                let x = cur.read_f32_le()?;
                finite(cur, start, widen_f32(x))?
            }
            Schema::Double => {
                let x = cur.read_f64_le()?;
                finite(cur, start, x)?
            }
            Schema::String => {
                let n = read_len(cur)?;
                JsonValue::Str(cur.take_utf8(n)?.to_owned())
            }
            Schema::Bytes => {
                let n = read_len(cur)?;
                JsonValue::Str(from_latin1(cur.take(n)?))
            }
            Schema::Fixed(f) => JsonValue::Str(from_latin1(cur.take(f.size)?)),
            Schema::Enum(e) => {
                let ix = read_int(cur)?;
                let sym = usize::try_from(ix).ok().and_then(|i| e.symbols.get(i)).ok_or_else(|| {
                    cur.error_at(ErrorKind::SchemaMismatch(path.to_owned()), start)
                        .with_detail(format!("enum index {ix} out of range"))
                })?;
                JsonValue::Str(sym.clone())
            }
            Schema::Union(branches) => {
                let (_, branch) = self.branch(cur, branches, path)?;
                return self.plain(cur, branch, path, depth + 1);
            }
            Schema::Array(items) => {
                let mut out = Vec::new();
                self.blocks(cur, items, path, |cur, i| {
                    out.push(self.plain(cur, items, &format!("{path}[{i}]"), depth + 1)?);
                    Ok(())
                })?;
                return Ok(JsonValue::Arr(out));
            }
            Schema::Map(values) => {
                let mut out = Map::new();
                self.blocks(cur, values, path, |cur, _| {
                    let key_start = cur.position();
                    let n = read_len(cur)?;
                    let key = cur.take_utf8(n)?.to_owned();
                    cur.annotate(key_start, "map key", || Some(format!("{key:?}")));
                    let v = self.plain(cur, values, &format!("{path}.{key}"), depth + 1)?;
                    out.insert(key, v)
                        .map_err(|e| CodecError::new(ErrorKind::DuplicateKey(e.0), key_start))
                })?;
                return Ok(JsonValue::Obj(out));
            }
            Schema::Record(r) => {
                let mut out = Map::with_capacity(r.fields.len());
                for f in &r.fields {
                    let v = self.plain(cur, &f.schema, &format!("{path}.{}", f.name), depth + 1)?;
                    out.insert(f.name.clone(), v).expect("field names are unique");
                }
                return Ok(JsonValue::Obj(out));
            }
            Schema::Ref(_) => unreachable!("resolve() follows references"),
        };
        let label = self.writer.resolve(s).kind();
        Ok(labeled(cur, start, label, scalar, short_render))
    }

    fn branch<'s>(&self, cur: &mut ByteCursor<'_>, branches: &'s [Schema], path: &str) -> Result<(usize, &'s Schema)> {
        let start = cur.position();
        let ix = read_int(cur)?;
        let found = usize::try_from(ix).ok().and_then(|i| branches.get(i).map(|b| (i, b)));
        let (i, b) = found.ok_or_else(|| {
            cur.error_at(ErrorKind::SchemaMismatch(path.to_owned()), start)
                .with_detail(format!("union index {ix} out of range"))
        })?;
        cur.annotate(start, "union index", || Some(format!("{i} ({})", b.kind())));
        Ok((i, b))
    }

    /// Walks the block structure of an array or map, calling `item` once per
    /// element with its running index.
    fn blocks<F>(&self, cur: &mut ByteCursor<'_>, item_schema: &Schema, path: &str, mut item: F) -> Result<()>
    where
        F: FnMut(&mut ByteCursor<'_>, usize) -> Result<()>,
    {
        let zero_size = self.min_size(item_schema) == 0;
        let mut index = 0;
        loop {
            let start = cur.position();
            let count = read_long(cur)?;
            if count == 0 {
                cur.annotate(start, "block end", || None);
                return Ok(());
            }
            if count < 0 {
                // negative count: a byte size follows and is not needed here
                read_long(cur)?;
            }
            let n = count.unsigned_abs();
            let limit = if zero_size { MAX_BLOCK_ITEMS } else { cur.remaining() as u64 };
            if n > limit {
                return Err(cur
                    .error_at(ErrorKind::Truncated, start)
                    .with_detail(format!("block of {n} items at {path}")));
            }
            cur.annotate(start, "block count", || Some(n.to_string()));
            for _ in 0..n {
                item(cur, index)?;
                index += 1;
            }
        }
    }

    /// A lower bound on the encoded size, used only to sanity-check counts.
    fn min_size(&self, s: &Schema) -> usize {
        match s {
            Schema::Null => 0,
            Schema::Fixed(f) => f.size.min(1),
            Schema::Record(r) => usize::from(r.fields.iter().any(|f| self.min_size(&f.schema) > 0)),
            // references are not followed, so recursive types terminate
            _ => 1,
        }
    }

    fn resolved(&self, cur: &mut ByteCursor<'_>, ws: &Schema, rs: &Schema, path: &str, depth: usize) -> Result<JsonValue> {
        check_depth(cur, depth)?;
        let w = self.writer.resolve(ws);
        let r = self.reader.resolve(rs);
        if let Schema::Union(wb) = w {
            let (_, branch) = self.branch(cur, wb, path)?;
            return self.resolved(cur, branch, rs, path, depth + 1);
        }
        if let Schema::Union(rb) = r {
            let target = rb
                .iter()
                .find(|b| shallow_match(w, self.reader.resolve(b)))
                .ok_or_else(|| resolution(path, cur.position(), format!("no reader branch accepts {}", w.kind())))?;
            return self.resolved(cur, ws, target, path, depth + 1);
        }
        let start = cur.position();
        let promoted = match (w, r) {
            (Schema::Int, Schema::Long) => Some(JsonValue::Int(read_int(cur)?)),
            (Schema::Int, Schema::Float) => Some(JsonValue::Float(widen_f32(read_int(cur)? as f32))),
            (Schema::Int, Schema::Double) => Some(JsonValue::Float(read_int(cur)? as f64)),
            (Schema::Long, Schema::Float) => Some(JsonValue::Float(widen_f32(read_long(cur)? as f32))),
            (Schema::Long, Schema::Double) => Some(JsonValue::Float(read_long(cur)? as f64)),
            (Schema::Float, Schema::Double) => {
                let x = cur.read_f32_le()?;
                Some(finite(cur, start, widen_f32(x))?)
            }
            _ => None,
        };
        if let Some(v) = promoted {
            let label = format!("{} as {}", w.kind(), r.kind());
            return Ok(labeled(cur, start, &label, v, short_render));
        }
        match (w, r) {
            (Schema::Record(wr), Schema::Record(rr)) => {
                if wr.name.name != rr.name.name {
                    return Err(resolution(path, start, format!("record {} read as {}", wr.name, rr.name)));
                }
                self.record(cur, wr, rr, path, depth)
            }
            (Schema::Enum(we), Schema::Enum(re)) => {
                if we.name.name != re.name.name {
                    return Err(resolution(path, start, format!("enum {} read as {}", we.name, re.name)));
                }
                let ix = read_int(cur)?;
                let sym = usize::try_from(ix).ok().and_then(|i| we.symbols.get(i)).ok_or_else(|| {
                    cur.error_at(ErrorKind::SchemaMismatch(path.to_owned()), start)
                        .with_detail(format!("enum index {ix} out of range"))
                })?;
                let v = enum_symbol(re, sym).ok_or_else(|| {
                    resolution(path, start, format!("symbol {sym:?} unknown to reader {}", re.name))
                })?;
                Ok(labeled(cur, start, "enum", JsonValue::Str(v), short_render))
            }
            (Schema::Fixed(wf), Schema::Fixed(rf)) if wf.name.name == rf.name.name && wf.size == rf.size => {
                self.plain(cur, ws, path, depth)
            }
            (Schema::Array(wi), Schema::Array(ri)) => {
                let mut out = Vec::new();
                self.blocks(cur, wi, path, |cur, i| {
                    out.push(self.resolved(cur, wi, ri, &format!("{path}[{i}]"), depth + 1)?);
                    Ok(())
                })?;
                Ok(JsonValue::Arr(out))
            }
            (Schema::Map(wv), Schema::Map(rv)) => {
                let mut out = Map::new();
                self.blocks(cur, wv, path, |cur, _| {
                    let key_start = cur.position();
                    let n = read_len(cur)?;
                    let key = cur.take_utf8(n)?.to_owned();
                    cur.annotate(key_start, "map key", || Some(format!("{key:?}")));
                    let v = self.resolved(cur, wv, rv, &format!("{path}.{key}"), depth + 1)?;
                    out.insert(key, v)
                        .map_err(|e| CodecError::new(ErrorKind::DuplicateKey(e.0), key_start))
                })?;
                Ok(JsonValue::Obj(out))
            }
            (a, b) if same_primitive(a, b) => self.plain(cur, ws, path, depth),
            (a, b) => Err(resolution(path, start, format!("{} data read as {}", a.kind(), b.kind()))),
        }
    }

    fn record(&self, cur: &mut ByteCursor<'_>, wr: &RecordSchema, rr: &RecordSchema, path: &str, depth: usize) -> Result<JsonValue> {
        let mut got: Vec<Option<JsonValue>> = vec![None; rr.fields.len()];
        for wf in &wr.fields {
            let fpath = format!("{path}.{}", wf.name);
            match reader_field(rr, &wf.name) {
                Some(i) => got[i] = Some(self.resolved(cur, &wf.schema, &rr.fields[i].schema, &fpath, depth + 1)?),
                None => {
                    self.plain(cur, &wf.schema, &fpath, depth + 1)?;
                }
            }
        }
        let mut out = Map::with_capacity(rr.fields.len());
        for (rf, v) in rr.fields.iter().zip(got) {
            let v = match (v, &rf.default) {
                (Some(v), _) => v,
                (None, Some(d)) => default_value(self.reader, &rf.schema, d),
                (None, None) => {
                    return Err(resolution(
                        &format!("{path}.{}", rf.name),
                        cur.position(),
                        "reader field has no default and the writer lacks it",
                    ))
                }
            };
            out.insert(rf.name.clone(), v).expect("field names are unique");
        }
        Ok(JsonValue::Obj(out))
    }
}

pub(crate) fn reader_field(rr: &RecordSchema, writer_name: &str) -> Option<usize> {
    rr.fields
        .iter()
        .position(|f: &Field| f.name == writer_name)
        .or_else(|| rr.fields.iter().position(|f| f.aliases.iter().any(|a| a == writer_name)))
}

pub(crate) fn enum_symbol(re: &EnumSchema, sym: &str) -> Option<String> {
    if re.symbols.iter().any(|s| s == sym) {
        Some(sym.to_owned())
    } else {
        re.default.clone()
    }
}

pub(crate) fn same_primitive(a: &Schema, b: &Schema) -> bool {
    use Schema::*;
    matches!(
        (a, b),
        (Null, Null)
            | (Boolean, Boolean)
            | (Int, Int)
            | (Long, Long)
            | (Float, Float)
            | (Double, Double)
            | (Bytes, Bytes)
            | (String, String)
    )
}

/// Promotions a reader applies to writer data. Strings and bytes are not
/// interchangeable.
pub(crate) fn promotes(w: &Schema, r: &Schema) -> bool {
    use Schema::*;
    matches!(
        (w, r),
        (Int, Long) | (Int, Float) | (Int, Double) | (Long, Float) | (Long, Double) | (Float, Double)
    )
}

/// Branch selection for a reader union: kind, name, or promotion.
pub(crate) fn shallow_match(w: &Schema, r: &Schema) -> bool {
    same_primitive(w, r)
        || promotes(w, r)
        || match (w, r) {
            (Schema::Record(a), Schema::Record(b)) => a.name.name == b.name.name,
            (Schema::Enum(a), Schema::Enum(b)) => a.name.name == b.name.name,
            (Schema::Fixed(a), Schema::Fixed(b)) => a.name.name == b.name.name && a.size == b.size,
            (Schema::Array(_), Schema::Array(_)) | (Schema::Map(_), Schema::Map(_)) => true,
            _ => false,
        }
}
