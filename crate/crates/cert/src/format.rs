//! Line-oriented text form:
//!
//! ```text
//! ECPP-CERT 1
//! STEP
//! N=...
//! D=...
//! U=...
//! V=...
//! m=...
//! c=...
//! NP=...
//! a=...
//! b=...
//! x=...
//! y=...
//! LEAF
//! N=...
//! ```
//!
//! All values are decimal. Steps appear from the largest `N` down.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{CertStep, Certificate};

pub const HEADER: &str = "ECPP-CERT 1";

const STEP_FIELDS: [&str; 11] = ["N", "D", "U", "V", "m", "c", "NP", "a", "b", "x", "y"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

pub fn serialize(cert: &Certificate) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for s in &cert.steps {
        let values = [
            s.n.to_string(),
            s.d.to_string(),
            s.u.to_string(),
            s.v.to_string(),
            s.m.to_string(),
            s.c.to_string(),
            s.nprime.to_string(),
            s.a.to_string(),
            s.b.to_string(),
            s.x.to_string(),
            s.y.to_string(),
        ];
        out.push_str("STEP\n");
        for (k, v) in STEP_FIELDS.iter().zip(values) {
            let _ = writeln!(out, "{k}={v}");
        }
    }
    let _ = writeln!(out, "LEAF\nN={}", cert.leaf);
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<&'a str> {
        let (i, l) = self.inner.next()?;
        self.last = i + 1;
        Some(l.strip_suffix('\r').unwrap_or(l))
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.last,
            message: message.into(),
        }
    }

    fn field<T: FromStr>(&mut self, key: &str) -> Result<T, ParseError> {
        let line = self.next().ok_or_else(|| self.err(format!("expected {key}=, found end of input")))?;
        let value = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| self.err(format!("expected {key}=")))?;
        // only plain decimal, optionally signed: no whitespace, no '+'
        let digits = value.strip_prefix('-').unwrap_or(value);
        if digits.is_empty() || !digits.bytes().all(|c| c.is_ascii_digit()) {
            return Err(self.err(format!("{key} is not a decimal integer")));
        }
        value.parse().map_err(|_| self.err(format!("{key} out of range")))
    }
}

pub fn parse(text: &str) -> Result<Certificate, ParseError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    match lines.next() {
        Some(HEADER) => {}
        Some(_) => return Err(lines.err(format!("expected header {HEADER:?}"))),
        None => return Err(lines.err("empty certificate")),
    }
    let mut steps = Vec::new();
    loop {
        match lines.next() {
            Some("STEP") => {
                steps.push(CertStep {
                    n: lines.field("N")?,
                    d: lines.field("D")?,
                    u: lines.field("U")?,
                    v: lines.field("V")?,
                    m: lines.field("m")?,
                    c: lines.field("c")?,
                    nprime: lines.field("NP")?,
                    a: lines.field("a")?,
                    b: lines.field("b")?,
                    x: lines.field("x")?,
                    y: lines.field("y")?,
                });
            }
            Some("LEAF") => {
                let leaf = lines.field("N")?;
                if let Some(extra) = lines.next() {
                    if !extra.is_empty() || lines.next().is_some() {
                        return Err(lines.err("trailing content after LEAF"));
                    }
                }
                return Ok(Certificate { steps, leaf });
            }
            Some(_) => return Err(lines.err("expected STEP or LEAF")),
            None => return Err(lines.err("missing LEAF")),
        }
    }
}
