//! CSV signal files: header `t,x1,...,xn`, rows in increasing `t` ending at
//! `t = 0`, plus a JSON sidecar with the same basename declaring the bound,
//! padding and dimension.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{BoundedSignal, Padding};
use crate::{Error, Real, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalMeta {
    pub bound: f64,
    pub padding: Padding,
    pub dimension: usize,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn format_signal_csv<T: Real>(z: &BoundedSignal<T>) -> String {
    let mut out = String::from("t");
    for i in 1..=z.dim() {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for (i, v) in z.window().iter().enumerate() {
        out.push_str(&z.time_of(i).to_string());
        for x in v.iter() {
            out.push(',');
            out.push_str(&x.as_f64().to_string());
        }
        out.push('\n');
    }
    out
}

pub fn signal_meta<T: Real>(z: &BoundedSignal<T>) -> SignalMeta {
    SignalMeta { bound: z.bound().as_f64(), padding: z.padding(), dimension: z.dim() }
}

pub fn parse_signal_csv<T: Real>(text: &str, meta: &SignalMeta) -> Result<BoundedSignal<T>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::EmptyWindow)?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let expected: Vec<String> =
        std::iter::once("t".to_string()).chain((1..=meta.dimension).map(|i| format!("x{i}"))).collect();
    if cols != expected {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            msg: format!("expected header `{}`", expected.join(",")),
        });
    }
    let mut times = Vec::new();
    let mut window = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != meta.dimension + 1 {
            return Err(Error::Parse {
                line: lineno + 1,
                column: 1,
                msg: format!("expected {} fields, found {}", meta.dimension + 1, fields.len()),
            });
        }
        let t: i64 = fields[0].parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            column: 1,
            msg: format!("bad time index `{}`", fields[0]),
        })?;
        let mut v = Vec::with_capacity(meta.dimension);
        for (c, f) in fields[1..].iter().enumerate() {
            let x: f64 = f.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                column: c + 2,
                msg: format!("bad number `{f}`"),
            })?;
            v.push(T::lit(x));
        }
        times.push(t);
        window.push(DVector::from_vec(v));
    }
    if window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let n = times.len() as i64;
    for (i, &t) in times.iter().enumerate() {
        if t != i as i64 - (n - 1) {
            return Err(Error::Parse {
                line: i + 2,
                column: 1,
                msg: format!("time indices must increase by one and end at 0, found {t}"),
            });
        }
    }
    BoundedSignal::new(meta.dimension, window, T::lit(meta.bound), meta.padding)
}

pub fn read_signal_csv<T: Real>(path: &Path) -> Result<BoundedSignal<T>> {
    let meta_text = std::fs::read_to_string(sidecar_path(path))?;
    let meta: SignalMeta = serde_json::from_str(&meta_text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        msg: format!("signal sidecar: {e}"),
    })?;
    let text = std::fs::read_to_string(path)?;
    parse_signal_csv(&text, &meta)
}
