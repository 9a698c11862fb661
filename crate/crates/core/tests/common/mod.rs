//! Seeded document generators shared by the integration tests.
#![allow(dead_code)]

pub mod evolution;

use binjson::{JsonValue, Map};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_DEPTH: usize = 8;
pub const MAX_STRING_CHARS: usize = 64;

pub struct Corpus {
    rng: ChaCha8Rng,
}

impl Corpus {
    pub fn new(seed: u64) -> Self {
        Corpus { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn document(&mut self) -> JsonValue {
        if self.rng.gen_bool(0.6) {
            self.object(1)
        } else {
            self.value(1)
        }
    }

    /// A document whose root is always an object.
    pub fn object_document(&mut self) -> JsonValue {
        self.object(1)
    }

    pub fn value(&mut self, depth: usize) -> JsonValue {
        // containers thin out with depth so documents stay small
        let container = depth < MAX_DEPTH && self.rng.gen_ratio(3, 3 + depth as u32 * 2);
        if container {
            return if self.rng.gen_bool(0.5) { self.array(depth) } else { self.object(depth) };
        }
        match self.rng.gen_range(0..10) {
            0 => JsonValue::Null,
            1 => JsonValue::Bool(self.rng.gen()),
            2..=4 => JsonValue::Int(self.int()),
            5..=6 => JsonValue::Float(self.float()),
            _ => JsonValue::Str(self.string(false)),
        }
    }

    fn array(&mut self, depth: usize) -> JsonValue {
        let n = self.rng.gen_range(0..=5);
        JsonValue::Arr((0..n).map(|_| self.value(depth + 1)).collect())
    }

    fn object(&mut self, depth: usize) -> JsonValue {
        let n = self.rng.gen_range(0..=5);
        let mut map = Map::new();
        for _ in 0..n {
            let key = self.string(true);
            let v = self.value(depth + 1);
            let _ = map.insert(key, v);
        }
        JsonValue::Obj(map)
    }

    pub fn int(&mut self) -> i64 {
        const EDGES: [i64; 16] = [
            0, -1, 1, 23, 24, -24, -25, 127, 128, 255, 256, -128, -129, 65535, i32::MIN as i64, i32::MAX as i64 + 1,
        ];
        match self.rng.gen_range(0..6) {
            0 => EDGES[self.rng.gen_range(0..EDGES.len())],
            1 => *[i64::MIN, i64::MAX, i64::MIN + 1, i64::MAX - 1].get(self.rng.gen_range(0..4)).unwrap(),
            2 => self.rng.gen_range(-300..300),
            3 => {
                let bits = self.rng.gen_range(1..64);
                self.rng.gen::<i64>() >> bits
            }
            _ => self.rng.gen(),
        }
    }

    pub fn float(&mut self) -> f64 {
        match self.rng.gen_range(0..5) {
            0 => f64::from(self.rng.gen::<f32>() * 1000.0 - 500.0),
            1 => (self.rng.gen_range(-1_000_000i64..1_000_000) as f64) / 10_000.0,
            2 => *[0.0, -0.0, 0.5, -1.5, f64::MIN_POSITIVE, f64::MAX, f64::MIN, 5e-324].get(self.rng.gen_range(0..8)).unwrap(),
            _ => loop {
                let x = f64::from_bits(self.rng.gen());
                if x.is_finite() {
                    break x;
                }
            },
        }
    }

    pub fn string(&mut self, key: bool) -> String {
        let n = match self.rng.gen_range(0..4) {
            0 => self.rng.gen_range(0..=4),
            1 => self.rng.gen_range(28..=MAX_STRING_CHARS),
            _ => self.rng.gen_range(0..=MAX_STRING_CHARS),
        };
        let ascii = self.rng.gen_bool(0.7);
        (0..n)
            .map(|_| loop {
                let c = if ascii {
                    char::from(self.rng.gen_range(0u8..0x80))
                } else {
                    match self.rng.gen_range(0..4) {
                        0 => char::from(self.rng.gen_range(0u8..0x80)),
                        1 => char::from_u32(self.rng.gen_range(0x80..0x800)).unwrap(),
                        2 => char::from_u32(self.rng.gen_range(0x800..0xd800)).unwrap(),
                        _ => match char::from_u32(self.rng.gen_range(0x10000..0x110000)) {
                            Some(c) => c,
                            None => continue,
                        },
                    }
                };
                if !(key && c == '\0') {
                    break c;
                }
            })
            .collect()
    }
}

/// `n` documents from a fixed seed.
pub fn corpus(seed: u64, n: usize) -> Vec<JsonValue> {
    let mut g = Corpus::new(seed);
    (0..n).map(|_| g.document()).collect()
}

/// Wraps non-object roots so they can travel as BSON.
pub fn object_root(doc: &JsonValue) -> JsonValue {
    match doc {
        JsonValue::Obj(_) => doc.clone(),
        other => JsonValue::Obj(Map::from_entries([("root".to_owned(), other.clone())]).unwrap()),
    }
}

pub fn depth(v: &JsonValue) -> usize {
    match v {
        JsonValue::Arr(items) => 1 + items.iter().map(depth).max().unwrap_or(0),
        JsonValue::Obj(m) => 1 + m.iter().map(|(_, v)| depth(v)).max().unwrap_or(0),
        _ => 0,
    }
}

pub fn arb_key() -> impl Strategy<Value = String> {
    "[^\u{0}]{0,12}"
}

pub fn arb_scalar() -> impl Strategy<Value = JsonValue> {
    prop_oneof![
        Just(JsonValue::Null),
        any::<bool>().prop_map(JsonValue::Bool),
        any::<i64>().prop_map(JsonValue::Int),
        (-1000i64..1000).prop_map(JsonValue::Int),
        any::<f64>().prop_filter("finite", |x| x.is_finite()).prop_map(JsonValue::Float),
        any::<f32>().prop_filter("finite", |x| x.is_finite()).prop_map(|x| JsonValue::Float(binjson::value::widen_f32(x))),
        ".{0,64}".prop_map(JsonValue::Str),
    ]
}

pub fn arb_json() -> impl Strategy<Value = JsonValue> {
    arb_scalar().prop_recursive(MAX_DEPTH as u32, 64, 6, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..6).prop_map(JsonValue::Arr),
            prop::collection::vec((arb_key(), inner), 0..6).prop_map(|entries| {
                let mut m = Map::new();
                for (k, v) in entries {
                    let _ = m.insert(k, v);
                }
                JsonValue::Obj(m)
            }),
        ]
    })
}

pub fn arb_object() -> impl Strategy<Value = JsonValue> {
    arb_json().prop_map(|v| object_root(&v))
}

pub fn fixture(name: &str) -> Vec<u8> {
    std::fs::read(format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

pub fn fixture_schema() -> binjson::AvroSchema {
    binjson::AvroSchema::parse_str(std::str::from_utf8(&fixture("schema.avsc")).unwrap()).unwrap()
}
