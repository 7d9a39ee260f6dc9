//! JSON and CSV writers. Every float is written with 17 significant digits.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use kernel_reduction::Complex64;
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::CliError;

/// Pretty JSON with floats in `{:.16e}` form; non-finite values become `null`.
struct ExactFloats<'a>(PrettyFormatter<'a>);

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", float(value))
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// 17 significant digits.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Io(format!("serializing report: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write(path, &to_json(value)?)
}

/// Dense matrix, row-major, each entry as an `re,im` pair.
pub fn matrix_csv(m: &DMatrix<Complex64>) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(',');
            }
            let z = m[(r, c)];
            let _ = write!(out, "{},{}", float(z.re), float(z.im));
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, m: &DMatrix<Complex64>) -> Result<(), CliError> {
    write(path, &matrix_csv(m))
}

/// `s,t,re,im` rows of a kernel sampled on the tensor grid `points²`.
pub fn kernel_csv(points: &[f64], values: &DMatrix<Complex64>) -> String {
    let mut out = String::from("s,t,re,im\n");
    for (i, &s) in points.iter().enumerate() {
        for (j, &t) in points.iter().enumerate() {
            let z = values[(i, j)];
            let _ = writeln!(out, "{},{},{},{}", float(s), float(t), float(z.re), float(z.im));
        }
    }
    out
}

pub fn write_kernel(path: &Path, points: &[f64], values: &DMatrix<Complex64>) -> Result<(), CliError> {
    write(path, &kernel_csv(points, values))
}
