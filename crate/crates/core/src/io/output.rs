//! Result files: CSV tables and JSON summaries with numbers rounded to nine
//! significant digits.

use crate::cg::CgIterationLog;
use crate::model::{PriceVector, UcInstance};
use serde::Serialize;
use serde_json::Value;
use std::io::{self, Write};
use std::path::Path;

pub const SIGNIFICANT_DIGITS: usize = 9;
/// Magnitudes below this are written as zero.
pub const ZERO_BELOW: f64 = 1e-9;

/// `x` rounded to nine significant digits; non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    if x.abs() < ZERO_BELOW {
        return 0.0;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest text of the rounded value.
pub fn fmt_num(x: f64) -> String {
    let r = round_sig(x);
    if r.is_nan() {
        "nan".into()
    } else if r.is_infinite() {
        if r > 0.0 { "inf".into() } else { "-inf".into() }
    } else if r != 0.0 && (r.abs() < 1e-6 || r.abs() >= 1e15) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

/// Round every number in a JSON tree. Non-finite floats serialise as null.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) => match (n.is_f64(), n.as_f64()) {
            (true, Some(x)) => serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number),
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Pretty JSON of `value` with rounded numbers and a trailing newline.
pub fn summary_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let v = round_json(serde_json::to_value(value)?);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

/// `hour,constraint,dual` rows, hours counted from 1.
pub fn write_prices<W: Write>(out: W, prices: &PriceVector) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["hour", "constraint", "dual"])?;
    let horizon = prices.values.first().map_or(0, Vec::len);
    for t in 0..horizon {
        for (c, id) in prices.constraint_ids.iter().enumerate() {
            w.write_record([(t + 1).to_string(), id.clone(), fmt_num(prices.values[c][t])])?;
        }
    }
    w.flush()
}

/// `iteration,rmp_objective,columns_added,wall_ms` rows.
pub fn write_convergence<W: Write>(out: W, logs: &[CgIterationLog]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "rmp_objective", "columns_added", "wall_ms"])?;
    for l in logs {
        w.write_record([
            l.iteration.to_string(),
            fmt_num(l.rmp_objective),
            l.columns_added.to_string(),
            format!("{:.3}", l.wall_ms),
        ])?;
    }
    w.flush()
}

/// `unit,hour,on,power,reserve` rows.
pub fn write_schedules<W: Write>(out: W, instance: &UcInstance, schedules: &[crate::model::Schedule]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["unit", "hour", "on", "power", "reserve"])?;
    for s in schedules {
        for t in 0..instance.horizon {
            w.write_record([
                s.unit_id.clone(),
                (t + 1).to_string(),
                u8::from(s.on[t]).to_string(),
                fmt_num(s.power[t]),
                fmt_num(s.reserve[t]),
            ])?;
        }
    }
    w.flush()
}

/// Two-column numeric table with the given header.
pub fn write_pairs<W: Write>(out: W, header: [&str; 2], rows: &[(f64, f64)]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for (a, b) in rows {
        w.write_record([fmt_num(*a), fmt_num(*b)])?;
    }
    w.flush()
}

/// Create `path` (and its parent directories) and run `f` on it.
pub fn with_file<F>(path: &Path, f: F) -> io::Result<()>
where
    F: FnOnce(&mut std::fs::File) -> io::Result<()>,
{
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut file = std::fs::File::create(path)?;
    f(&mut file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(fmt_num(135.71428571428572), "135.714286");
        assert_eq!(fmt_num(750.0), "750");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(18734281.226635206), "18734281.2");
        assert_eq!(fmt_num(1.23456789012e-7), "1.23456789e-7");
        assert_eq!(fmt_num(1.1e-11), "0");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }

    #[test]
    fn json_rounding() {
        let v = serde_json::json!({"a": [1.0000000001, 2], "b": {"c": 3.14159265358979}});
        assert_eq!(round_json(v), serde_json::json!({"a": [1.0, 2], "b": {"c": 3.14159265}}));
    }

    #[test]
    fn price_table() {
        let p = PriceVector {
            constraint_ids: vec!["balance".into()],
            values: vec![vec![10.0, 276.0]],
        };
        let mut buf = Vec::new();
        write_prices(&mut buf, &p).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "hour,constraint,dual\n1,balance,10\n2,balance,276\n");
    }
}
