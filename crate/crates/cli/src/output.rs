//! Deterministic text formats: JSON with 17-significant-digit floats,
//! RFC 4180 CSV, and a single-polyline SVG.

use std::fmt::Write as _;

use ghalab::classical::PhaseState2d;
use serde::Serialize;
use serde_json::Value;

/// `d.dddddddddddddddde±x`: 17 significant digits, round-trips every f64.
pub fn float(x: f64) -> String {
    if x == 0.0 {
        "0.0000000000000000e0".into()
    } else if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report types serialize");
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    out
}

fn indent(depth: usize, out: &mut String) {
    out.push('\n');
    out.extend(std::iter::repeat_n("  ", depth));
}

fn write_value(v: &Value, depth: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => out.push_str(&u.to_string()),
            (_, Some(i)) => out.push_str(&i.to_string()),
            _ => out.push_str(&float(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                indent(depth + 1, out);
                write_value(item, depth + 1, out);
            }
            indent(depth, out);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                indent(depth + 1, out);
                let _ = write!(out, "{}: ", Value::String(k.clone()));
                write_value(item, depth + 1, out);
            }
            indent(depth, out);
            out.push('}');
        }
    }
}

pub fn trajectory_csv(samples: &[PhaseState2d]) -> String {
    let mut s = String::from("t,x,y,Px,Py\r\n");
    for p in samples {
        let _ = write!(
            s,
            "{},{},{},{},{}\r\n",
            float(p.t),
            float(p.x),
            float(p.y),
            float(p.px),
            float(p.py)
        );
    }
    s
}

/// Standalone SVG 1.1 with the `(x, y)` path as one polyline inside `bounds`.
pub fn trajectory_svg(
    samples: &[PhaseState2d],
    bounds: ([f64; 2], [f64; 2]),
    title: &str,
) -> String {
    let (size, pad) = (480.0, 20.0);
    let ([x0, x1], [y0, y1]) = bounds;
    let sx = (size - 2.0 * pad) / (x1 - x0);
    let sy = (size - 2.0 * pad) / (y1 - y0);
    let mut points = String::new();
    for (i, p) in samples.iter().enumerate() {
        if i > 0 {
            points.push(' ');
        }
        let _ = write!(
            points,
            "{:.3},{:.3}",
            pad + (p.x - x0) * sx,
            size - pad - (p.y - y0) * sy
        );
    }
    let title = title.replace('&', "&amp;").replace('<', "&lt;");
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n\
         <title>{title}</title>\n\
         <rect x=\"{pad}\" y=\"{pad}\" width=\"{w}\" height=\"{w}\" fill=\"none\" stroke=\"#999\"/>\n\
         <polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1\" points=\"{points}\"/>\n\
         </svg>\n",
        w = size - 2.0 * pad
    )
}
