//! Avro schemas parsed from their JSON form.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::value::{parse_json, JsonValue, Map};

/// A parse failure with the path of the offending schema node.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schema error at {path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Schema {
    Null,
    Boolean,
    Int,
    Long,
    Float,
    Double,
    Bytes,
    String,
    Record(RecordSchema),
    Enum(EnumSchema),
    Array(Box<Schema>),
    Map(Box<Schema>),
    Union(Vec<Schema>),
    Fixed(FixedSchema),
    /// Use of a named type defined elsewhere in the same schema; holds the
    /// full name.
    Ref(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordSchema {
    pub name: Name,
    pub fields: Vec<Field>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: String,
    pub schema: Schema,
    /// The `default` attribute exactly as written.
    pub default: Option<JsonValue>,
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumSchema {
    pub name: Name,
    pub symbols: Vec<String>,
    pub default: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedSchema {
    pub name: Name,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Name {
    pub name: String,
    pub namespace: Option<String>,
}

impl Name {
    pub fn fullname(&self) -> String {
        match &self.namespace {
            Some(ns) if !ns.is_empty() => format!("{ns}.{}", self.name),
            _ => self.name.clone(),
        }
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fullname())
    }
}

impl Schema {
    pub fn kind(&self) -> &'static str {
        match self {
            Schema::Null => "null",
            Schema::Boolean => "boolean",
            Schema::Int => "int",
            Schema::Long => "long",
            Schema::Float => "float",
            Schema::Double => "double",
            Schema::Bytes => "bytes",
            Schema::String => "string",
            Schema::Record(_) => "record",
            Schema::Enum(_) => "enum",
            Schema::Array(_) => "array",
            Schema::Map(_) => "map",
            Schema::Union(_) => "union",
            Schema::Fixed(_) => "fixed",
            Schema::Ref(_) => "reference",
        }
    }

    pub fn name(&self) -> Option<&Name> {
        match self {
            Schema::Record(r) => Some(&r.name),
            Schema::Enum(e) => Some(&e.name),
            Schema::Fixed(f) => Some(&f.name),
            _ => None,
        }
    }
}

/// A parsed schema plus the named types it defines, so references can be
/// followed.
#[derive(Debug, Clone, PartialEq)]
pub struct AvroSchema {
    pub root: Schema,
    named: HashMap<String, Schema>,
}

impl AvroSchema {
    pub fn parse_str(text: &str) -> Result<Self, SchemaError> {
        let doc = parse_json(text).map_err(|e| SchemaError {
            path: "$".into(),
            message: e.to_string(),
        })?;
        avro_parse_schema(&doc)
    }

    /// Follows a reference to its definition; other schemas come back as is.
    pub fn resolve<'a>(&'a self, s: &'a Schema) -> &'a Schema {
        match s {
            Schema::Ref(name) => self.named.get(name).expect("references are checked at parse time"),
            other => other,
        }
    }

    pub fn named_type(&self, fullname: &str) -> Option<&Schema> {
        self.named.get(fullname)
    }
}

pub fn avro_parse_schema(doc: &JsonValue) -> Result<AvroSchema, SchemaError> {
    let mut p = Parser {
        named: HashMap::new(),
    };
    let root = p.schema(doc, "$", None)?;
    Ok(AvroSchema {
        root,
        named: p.named,
    })
}

const PRIMITIVES: [&str; 8] = ["null", "boolean", "int", "long", "float", "double", "bytes", "string"];

fn primitive(name: &str) -> Option<Schema> {
    Some(match name {
        "null" => Schema::Null,
        "boolean" => Schema::Boolean,
        "int" => Schema::Int,
        "long" => Schema::Long,
        "float" => Schema::Float,
        "double" => Schema::Double,
        "bytes" => Schema::Bytes,
        "string" => Schema::String,
        _ => return None,
    })
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Parser {
    named: HashMap<String, Schema>,
}

fn err<T>(path: &str, message: impl Into<String>) -> Result<T, SchemaError> {
    Err(SchemaError {
        path: path.to_owned(),
        message: message.into(),
    })
}

impl Parser {
    fn schema(&mut self, doc: &JsonValue, path: &str, ns: Option<&str>) -> Result<Schema, SchemaError> {
        match doc {
            JsonValue::Str(name) => self.reference(name, path, ns),
            JsonValue::Arr(branches) => self.union(branches, path, ns),
            JsonValue::Obj(obj) => self.complex(obj, path, ns),
            other => err(path, format!("expected a schema, found {}", other.kind())),
        }
    }

    fn reference(&self, name: &str, path: &str, ns: Option<&str>) -> Result<Schema, SchemaError> {
        if let Some(p) = primitive(name) {
            return Ok(p);
        }
        let full = if name.contains('.') {
            name.to_owned()
        } else {
            Name { name: name.to_owned(), namespace: ns.map(str::to_owned) }.fullname()
        };
        for candidate in [full.as_str(), name] {
            if self.named.contains_key(candidate) {
                return Ok(Schema::Ref(candidate.to_owned()));
            }
        }
        err(path, format!("unknown type {name:?}"))
    }

    fn union(&mut self, branches: &[JsonValue], path: &str, ns: Option<&str>) -> Result<Schema, SchemaError> {
        let mut out = Vec::with_capacity(branches.len());
        let mut seen = HashSet::new();
        for (i, b) in branches.iter().enumerate() {
            let bpath = format!("{path}[{i}]");
            let s = self.schema(b, &bpath, ns)?;
            let key = match &s {
                Schema::Union(_) => return err(&bpath, "unions may not directly contain unions"),
                Schema::Ref(name) => name.clone(),
                Schema::Record(_) | Schema::Enum(_) | Schema::Fixed(_) => s.name().unwrap().fullname(),
                other => other.kind().to_owned(),
            };
            if !seen.insert(key.clone()) {
                return err(&bpath, format!("duplicate union branch {key}"));
            }
            out.push(s);
        }
        Ok(Schema::Union(out))
    }

    fn complex(&mut self, obj: &Map, path: &str, ns: Option<&str>) -> Result<Schema, SchemaError> {
        let ty = obj.get("type").ok_or_else(|| SchemaError {
            path: path.to_owned(),
            message: "missing \"type\"".into(),
        })?;
        let ty = match ty {
            JsonValue::Str(t) => t.as_str(),
            // {"type": {...}} or {"type": [...]} wraps another schema
            nested => return self.schema(nested, &format!("{path}.type"), ns),
        };
        match ty {
            "record" | "error" => self.record(obj, path, ns),
            "enum" => self.enumeration(obj, path, ns),
            "fixed" => {
                let name = self.name(obj, path, ns)?;
                let size = match obj.get("size") {
                    Some(JsonValue::Int(n)) if *n >= 0 => *n as usize,
                    _ => return err(&format!("{path}.size"), "expected a non-negative integer"),
                };
                let s = Schema::Fixed(FixedSchema { name: name.clone(), size });
                self.define(&name, s.clone(), path)?;
                Ok(s)
            }
            "array" => {
                let items = obj.get("items").ok_or_else(|| SchemaError {
                    path: path.to_owned(),
                    message: "array without \"items\"".into(),
                })?;
                Ok(Schema::Array(Box::new(self.schema(items, &format!("{path}.items"), ns)?)))
            }
            "map" => {
                let values = obj.get("values").ok_or_else(|| SchemaError {
                    path: path.to_owned(),
                    message: "map without \"values\"".into(),
                })?;
                Ok(Schema::Map(Box::new(self.schema(values, &format!("{path}.values"), ns)?)))
            }
            other => self.reference(other, &format!("{path}.type"), ns),
        }
    }

    fn name(&self, obj: &Map, path: &str, ns: Option<&str>) -> Result<Name, SchemaError> {
        let raw = match obj.get("name") {
            Some(JsonValue::Str(n)) => n.as_str(),
            _ => return err(&format!("{path}.name"), "named type needs a string \"name\""),
        };
        let explicit_ns = match obj.get("namespace") {
            Some(JsonValue::Str(s)) => Some(s.as_str()),
            Some(JsonValue::Null) | None => None,
            Some(_) => return err(&format!("{path}.namespace"), "expected a string"),
        };
        let (namespace, name) = match raw.rsplit_once('.') {
            Some((n, simple)) => (Some(n.to_owned()), simple.to_owned()),
            None => (explicit_ns.or(ns).map(str::to_owned), raw.to_owned()),
        };
        let parts_ok = valid_name(&name)
            && namespace.as_deref().is_none_or(|n| n.is_empty() || n.split('.').all(valid_name));
        if !parts_ok {
            return err(&format!("{path}.name"), format!("invalid name {raw:?}"));
        }
        if namespace.is_none() && PRIMITIVES.contains(&name.as_str()) {
            return err(&format!("{path}.name"), format!("{raw:?} is a primitive type name"));
        }
        Ok(Name { name, namespace })
    }

    fn define(&mut self, name: &Name, s: Schema, path: &str) -> Result<(), SchemaError> {
        let full = name.fullname();
        if self.named.contains_key(&full) {
            return err(path, format!("type {full} defined twice"));
        }
        self.named.insert(full, s);
        Ok(())
    }

    fn record(&mut self, obj: &Map, path: &str, ns: Option<&str>) -> Result<Schema, SchemaError> {
        let name = self.name(obj, path, ns)?;
        // register early so fields may refer to the record itself
        self.define(&name, Schema::Record(RecordSchema { name: name.clone(), fields: vec![] }), path)?;
        let fields_doc = match obj.get("fields") {
            Some(JsonValue::Arr(f)) => f,
            _ => return err(&format!("{path}.fields"), "record needs a \"fields\" array"),
        };
        let inner_ns = name.namespace.clone();
        let mut fields = Vec::with_capacity(fields_doc.len());
        let mut seen = HashSet::new();
        for (i, f) in fields_doc.iter().enumerate() {
            let fpath = format!("{path}.fields[{i}]");
            let f = f.as_object().ok_or_else(|| SchemaError {
                path: fpath.clone(),
                message: "field must be an object".into(),
            })?;
            let fname = match f.get("name") {
                Some(JsonValue::Str(n)) if valid_name(n) => n.clone(),
                _ => return err(&format!("{fpath}.name"), "field needs a valid \"name\""),
            };
            if !seen.insert(fname.clone()) {
                return err(&fpath, format!("duplicate field {fname:?}"));
            }
            let ftype = f.get("type").ok_or_else(|| SchemaError {
                path: fpath.clone(),
                message: "field needs a \"type\"".into(),
            })?;
            let schema = self.schema(ftype, &format!("{fpath}.type"), inner_ns.as_deref())?;
            let default = f.get("default").cloned();
            if let Some(d) = &default {
                self.check_default(&schema, d, &format!("{fpath}.default"))?;
            }
            let aliases = match f.get("aliases") {
                Some(JsonValue::Arr(a)) => a.iter().filter_map(|x| x.as_str().map(str::to_owned)).collect(),
                _ => vec![],
            };
            fields.push(Field { name: fname, schema, default, aliases });
        }
        let s = Schema::Record(RecordSchema { name: name.clone(), fields });
        self.named.insert(name.fullname(), s.clone());
        Ok(s)
    }

    fn enumeration(&mut self, obj: &Map, path: &str, ns: Option<&str>) -> Result<Schema, SchemaError> {
        let name = self.name(obj, path, ns)?;
        let symbols = match obj.get("symbols") {
            Some(JsonValue::Arr(s)) => s,
            _ => return err(&format!("{path}.symbols"), "enum needs a \"symbols\" array"),
        };
        let mut out = Vec::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            match s {
                JsonValue::Str(sym) if valid_name(sym) && !out.contains(sym) => out.push(sym.clone()),
                _ => return err(&format!("{path}.symbols[{i}]"), "symbols must be unique valid names"),
            }
        }
        let default = match obj.get("default") {
            Some(JsonValue::Str(d)) if out.contains(d) => Some(d.clone()),
            None => None,
            Some(_) => return err(&format!("{path}.default"), "enum default must be one of its symbols"),
        };
        let s = Schema::Enum(EnumSchema { name: name.clone(), symbols: out, default });
        self.define(&name, s.clone(), path)?;
        Ok(s)
    }

    /// Defaults must match the schema; for unions, the first branch.
    fn check_default(&self, schema: &Schema, d: &JsonValue, path: &str) -> Result<(), SchemaError> {
        let schema = match schema {
            Schema::Ref(n) => &self.named[n],
            s => s,
        };
        let ok = match (schema, d) {
            (Schema::Null, JsonValue::Null) => true,
            (Schema::Boolean, JsonValue::Bool(_)) => true,
            (Schema::Int, JsonValue::Int(n)) => i32::try_from(*n).is_ok(),
            (Schema::Long, JsonValue::Int(_)) => true,
            (Schema::Float | Schema::Double, JsonValue::Int(_) | JsonValue::Float(_)) => true,
            (Schema::String, JsonValue::Str(_)) => true,
            (Schema::Bytes, JsonValue::Str(s)) => s.chars().all(|c| (c as u32) < 256),
            (Schema::Fixed(f), JsonValue::Str(s)) => {
                s.chars().all(|c| (c as u32) < 256) && s.chars().count() == f.size
            }
            (Schema::Enum(e), JsonValue::Str(s)) => e.symbols.contains(s),
            (Schema::Array(items), JsonValue::Arr(xs)) => {
                for (i, x) in xs.iter().enumerate() {
                    self.check_default(items, x, &format!("{path}[{i}]"))?;
                }
                true
            }
            (Schema::Map(values), JsonValue::Obj(m)) => {
                for (k, x) in m {
                    self.check_default(values, x, &format!("{path}.{k}"))?;
                }
                true
            }
            (Schema::Record(r), JsonValue::Obj(m)) => {
                for f in &r.fields {
                    match (m.get(&f.name), &f.default) {
                        (Some(x), _) => self.check_default(&f.schema, x, &format!("{path}.{}", f.name))?,
                        (None, Some(_)) => {}
                        (None, None) => return err(path, format!("default lacks field {:?}", f.name)),
                    }
                }
                true
            }
            (Schema::Union(branches), _) => match branches.first() {
                Some(first) => return self.check_default(first, d, path),
                None => false,
            },
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            err(path, format!("default {} does not match {}", d.to_json_string(), schema.kind()))
        }
    }
}
