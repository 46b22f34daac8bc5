//! Plain-text model checkpoints.
//!
//! ```text
//! twosided-checkpoint 1
//! D <d>
//! B <b>
//! K <k>
//! activation relu|linear
//! p_fixed 0|1
//! P
//! <D rows of K values>
//! Q
//! <B rows of K values>
//! q_mask none | q_mask
//! <B rows of K values>
//! ```
//!
//! Values are written in shortest round-trip exponent notation, so a
//! save/load cycle reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{Activation, TwoSidedModel};
use crate::scalar::Scalar;

const MAGIC: &str = "twosided-checkpoint 1";

fn write_matrix<T: Scalar>(out: &mut String, m: &Matrix<T>) {
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}

pub fn to_string<T: Scalar>(m: &TwoSidedModel<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "D {}", m.d());
    let _ = writeln!(out, "B {}", m.b());
    let _ = writeln!(out, "K {}", m.k());
    let _ = writeln!(out, "activation {}", m.activation());
    let _ = writeln!(out, "p_fixed {}", u8::from(m.p_fixed()));
    out.push_str("P\n");
    write_matrix(&mut out, m.p());
    out.push_str("Q\n");
    write_matrix(&mut out, m.q());
    match m.q_mask() {
        Some(mask) => {
            out.push_str("q_mask\n");
            write_matrix(&mut out, mask);
        }
        None => out.push_str("q_mask none\n"),
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l.trim()))
            .ok_or_else(|| Error::Checkpoint(format!("unexpected end of file, expected {what}")))
    }

    fn field(&mut self, key: &str) -> Result<&'a str> {
        let (n, line) = self.next_line(key)?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| Error::Checkpoint(format!("line {n}: expected `{key} <value>`")))
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        let v = self.field(key)?;
        v.parse()
            .map_err(|_| Error::Checkpoint(format!("`{key}` is not a count: {v}")))
    }

    fn matrix<T: Scalar>(&mut self, rows: usize, cols: usize, name: &str) -> Result<Matrix<T>> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (n, line) = self.next_line(name)?;
            let before = data.len();
            for tok in line.split_whitespace() {
                let v = tok
                    .parse::<T>()
                    .map_err(|_| Error::Checkpoint(format!("line {n}: bad number `{tok}`")))?;
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(Error::Checkpoint(format!(
                    "line {n}: {name} row has {} values, expected {cols}",
                    data.len() - before
                )));
            }
        }
        Matrix::new(rows, cols, data)
    }
}

pub fn from_str<T: Scalar>(text: &str) -> Result<TwoSidedModel<T>> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (_, magic) = lines.next_line("header")?;
    if magic != MAGIC {
        return Err(Error::Checkpoint(format!(
            "bad header `{magic}`, expected `{MAGIC}`"
        )));
    }
    let d = lines.count("D")?;
    let b = lines.count("B")?;
    let k = lines.count("K")?;
    let activation: Activation = lines
        .field("activation")?
        .parse()
        .map_err(|e: Error| Error::Checkpoint(e.to_string()))?;
    let p_fixed = match lines.field("p_fixed")? {
        "0" => false,
        "1" => true,
        other => return Err(Error::Checkpoint(format!("p_fixed must be 0 or 1, got {other}"))),
    };
    let expect = |lines: &mut Lines, tag: &str| -> Result<()> {
        let (n, l) = lines.next_line(tag)?;
        if l != tag {
            return Err(Error::Checkpoint(format!("line {n}: expected `{tag}`")));
        }
        Ok(())
    };
    expect(&mut lines, "P")?;
    let p = lines.matrix(d, k, "P")?;
    expect(&mut lines, "Q")?;
    let q = lines.matrix(b, k, "Q")?;
    let (n, tag) = lines.next_line("q_mask")?;
    let mask = match tag {
        "q_mask none" => None,
        "q_mask" => Some(lines.matrix(b, k, "q_mask")?),
        _ => return Err(Error::Checkpoint(format!("line {n}: expected q_mask section"))),
    };
    TwoSidedModel::from_parts(p, q, activation, p_fixed, mask)
        .map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn save<T: Scalar>(m: &TwoSidedModel<T>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_string(m))?;
    Ok(())
}

pub fn load<T: Scalar>(path: impl AsRef<Path>) -> Result<TwoSidedModel<T>> {
    from_str(&std::fs::read_to_string(path)?)
}
