//! Hand-rendered JSON with caller-fixed field order and 15-significant-digit
//! floats.
//!
//! `serde_json` prints floats in shortest-roundtrip form, which varies in
//! digit count from value to value; emitted artifacts instead need every
//! float in the same fixed-width scientific format so that reruns are
//! byte-comparable and diffs line up column by column. Objects preserve
//! insertion order, never sort.

use lab_core::format::sig15;
use num_complex::Complex64;

/// A JSON value with deterministic rendering.
pub enum JVal {
    Null,
    Bool(bool),
    Int(i64),
    UInt(u64),
    Num(f64),
    Str(String),
    Arr(Vec<JVal>),
    Obj(Vec<(&'static str, JVal)>),
}

impl JVal {
    pub fn str(s: impl Into<String>) -> JVal {
        JVal::Str(s.into())
    }

    /// Complex scalar as a two-element [re, im] array.
    pub fn complex(c: Complex64) -> JVal {
        JVal::Arr(vec![JVal::Num(c.re), JVal::Num(c.im)])
    }

    pub fn render_pretty(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0, true);
        out.push('\n');
        out
    }

    pub fn render_compact(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0, false);
        out
    }

    fn write(&self, out: &mut String, depth: usize, pretty: bool) {
        match self {
            JVal::Null => out.push_str("null"),
            JVal::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            JVal::Int(i) => out.push_str(&i.to_string()),
            JVal::UInt(u) => out.push_str(&u.to_string()),
            JVal::Num(x) => {
                // Non-finite values have no JSON number form; emit the same
                // token sig15 uses, quoted.
                if x.is_finite() {
                    out.push_str(&sig15(*x));
                } else {
                    out.push('"');
                    out.push_str(&sig15(*x));
                    out.push('"');
                }
            }
            JVal::Str(s) => escape_into(out, s),
            JVal::Arr(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    if pretty {
                        out.push('\n');
                        indent(out, depth + 1);
                    }
                    item.write(out, depth + 1, pretty);
                }
                if pretty {
                    out.push('\n');
                    indent(out, depth);
                }
                out.push(']');
            }
            JVal::Obj(fields) => {
                if fields.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (i, (key, value)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    if pretty {
                        out.push('\n');
                        indent(out, depth + 1);
                    }
                    escape_into(out, key);
                    out.push(':');
                    if pretty {
                        out.push(' ');
                    }
                    value.write(out, depth + 1, pretty);
                }
                if pretty {
                    out.push('\n');
                    indent(out, depth);
                }
                out.push('}');
            }
        }
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn escape_into(out: &mut String, s: &str) {
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                out.push_str(&format!("\\u{:04x}", c as u32));
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

/// One CSV line from already-formatted fields, quoting only when a field
/// contains a delimiter, quote, or newline.
pub fn csv_line(fields: &[String]) -> String {
    let mut out = String::new();
    for (i, field) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        if field.contains(',') || field.contains('"') || field.contains('\n') {
            out.push('"');
            out.push_str(&field.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(field);
        }
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_order_is_insertion_order() {
        let v = JVal::Obj(vec![
            ("zulu", JVal::Int(1)),
            ("alpha", JVal::Num(0.5)),
            ("list", JVal::Arr(vec![JVal::Bool(true), JVal::Null])),
        ]);
        assert_eq!(
            v.render_compact(),
            "{\"zulu\":1,\"alpha\":5.00000000000000e-1,\"list\":[true,null]}"
        );
    }

    #[test]
    fn strings_escape_controls_and_quotes() {
        let v = JVal::str("a\"b\\c\nd\u{1}");
        assert_eq!(v.render_compact(), "\"a\\\"b\\\\c\\nd\\u0001\"");
    }

    #[test]
    fn non_finite_floats_are_quoted_tokens() {
        let v = JVal::Arr(vec![JVal::Num(f64::NAN), JVal::Num(f64::INFINITY)]);
        assert_eq!(v.render_compact(), "[\"NaN\",\"inf\"]");
    }

    #[test]
    fn csv_quotes_only_when_needed() {
        let line = csv_line(&["plain".into(), "with,comma".into(), "q\"q".into()]);
        assert_eq!(line, "plain,\"with,comma\",\"q\"\"q\"\n");
    }

    #[test]
    fn pretty_rendering_indents_by_two() {
        let v = JVal::Obj(vec![("k", JVal::Arr(vec![JVal::Int(1)]))]);
        assert_eq!(v.render_pretty(), "{\n  \"k\": [\n    1\n  ]\n}\n");
    }
}
