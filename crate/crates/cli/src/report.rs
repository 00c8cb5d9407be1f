use serde_json::{Map, Value};

use schoolchoice::analysis::{preference_index, ViolationRecord};
use schoolchoice::{Instance, Matching};

/// A command's result: structured fields, plus an optional hand-made text
/// rendering for outputs that read better as a table or a digraph.
pub struct Report {
    pub fields: Map<String, Value>,
    pub text: Option<String>,
}

impl Report {
    pub fn new() -> Self {
        Report {
            fields: Map::new(),
            text: None,
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.fields.insert(key.to_string(), value.into());
        self
    }

    pub fn render_text(&self) -> String {
        if let Some(t) = &self.text {
            return t.clone();
        }
        let mut out = String::new();
        for (k, v) in &self.fields {
            write_field(&mut out, 0, k, v);
        }
        out
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&Value::Object(self.fields.clone())).expect("plain values");
        s.push('\n');
        s
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.iter().all(|x| x.is_number() || x.is_boolean() || x.as_str().is_some_and(|s| !s.contains(' '))) => {
            Some(a.iter().map(|x| scalar(x).expect("scalar")).collect::<Vec<_>>().join(" "))
        }
        _ => None,
    }
}

fn write_field(out: &mut String, depth: usize, key: &str, v: &Value) {
    let pad = "  ".repeat(depth);
    if let Some(s) = scalar(v) {
        out.push_str(&format!("{pad}{key}: {s}\n").replace(": \n", ":\n"));
        return;
    }
    out.push_str(&format!("{pad}{key}:\n"));
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                write_field(out, depth + 1, k, x);
            }
        }
        Value::Array(a) => {
            for (n, x) in a.iter().enumerate() {
                match x.as_str() {
                    Some(s) => out.push_str(&format!("{pad}  - {s}\n")),
                    None => write_field(out, depth + 1, &format!("#{}", n + 1), x),
                }
            }
        }
        _ => unreachable!("scalars handled above"),
    }
}

pub fn matching_value(instance: &Instance, m: &Matching) -> Value {
    Value::Object(
        instance
            .students()
            .map(|i| {
                let s = m.get(i).map_or(Value::Null, |s| instance.school_name(s).into());
                (instance.student_name(i).to_string(), s)
            })
            .collect(),
    )
}

/// A matching together with its preference index, for matching sets.
pub fn indexed_matching(instance: &Instance, m: &Matching) -> Value {
    let mut o = Map::new();
    o.insert("index".into(), preference_index(instance, m).into());
    o.insert("matching".into(), matching_value(instance, m));
    Value::Object(o)
}

pub fn violation_value(instance: &Instance, v: &ViolationRecord) -> Value {
    Value::String(format!(
        "{} outranks {} at {}",
        instance.student_name(v.victim),
        instance.student_name(v.violator),
        instance.school_name(v.school)
    ))
}
