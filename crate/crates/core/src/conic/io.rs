//! Plain-text problem format for debugging dumps.
//!
//! ```text
//! qwsr-conic 1
//! var <lower|-inf> <upper|inf>          one line per scalar variable
//! block <dim>                           one line per PSD block
//! minimize | maximize                   followed by an expression
//! constraint eq|le|ge <rhs>             followed by an expression
//! cone <p>                              followed by u, v and p z expressions
//! ```
//!
//! An expression is a run of term lines closed by `end`:
//!
//! ```text
//! s <var> <coef>                        scalar term
//! c <value>                             constant
//! d <block> <p> <q> <re> <im>           dense coefficient entry
//! r <block> <scale> <re> <im> ...       rank-one term scale·c cᴴ
//! e <block> <p> <q> <re> <im>           Hermitian sparse entry (p ≤ q)
//! i <block> <alpha>                     multiple of the identity
//! end
//! ```
//!
//! Numbers use Rust's shortest round-trip formatting, so a dump reloads
//! bit-for-bit.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::problem::{
    BlockId, ConicProblem, HermCoeff, LinExpr, ObjectiveSense, RotatedCone, Sense, VarId,
};
use crate::error::{Error, Result};
use crate::scalar::{Cx, Scalar};

fn num<T: Scalar>(x: T) -> String {
    format!("{:?}", x.as_f64())
}

fn bound<T: Scalar>(x: Option<T>, inf: &str) -> String {
    x.map(num).unwrap_or_else(|| inf.to_string())
}

fn write_expr<T: Scalar>(out: &mut String, e: &LinExpr<T>, dims: &[usize]) {
    for &(v, c) in &e.scalars {
        let _ = writeln!(out, "s {} {}", v.0, num(c));
    }
    if e.constant != T::zero() {
        let _ = writeln!(out, "c {}", num(e.constant));
    }
    for (b, coef) in &e.blocks {
        let n = dims[b.0];
        if let Some(d) = &coef.dense {
            for p in 0..n {
                for q in 0..n {
                    let z = d[(p, q)];
                    if z.re != T::zero() || z.im != T::zero() {
                        let _ = writeln!(out, "d {} {p} {q} {} {}", b.0, num(z.re), num(z.im));
                    }
                }
            }
        }
        for (s, c) in &coef.rank_one {
            let _ = write!(out, "r {} {}", b.0, num(*s));
            for z in c.iter() {
                let _ = write!(out, " {} {}", num(z.re), num(z.im));
            }
            out.push('\n');
        }
        for &(p, q, v) in &coef.entries {
            let _ = writeln!(out, "e {} {p} {q} {} {}", b.0, num(v.re), num(v.im));
        }
        if coef.identity != T::zero() {
            let _ = writeln!(out, "i {} {}", b.0, num(coef.identity));
        }
    }
    out.push_str("end\n");
}

/// Serializes a problem to the text format.
pub fn dump_problem<T: Scalar>(p: &ConicProblem<T>) -> String {
    let mut out = String::from("qwsr-conic 1\n");
    for v in &p.vars {
        let _ = writeln!(out, "var {} {}", bound(v.lower, "-inf"), bound(v.upper, "inf"));
    }
    for &n in &p.block_dims {
        let _ = writeln!(out, "block {n}");
    }
    out.push_str(match p.sense {
        ObjectiveSense::Minimize => "minimize\n",
        ObjectiveSense::Maximize => "maximize\n",
    });
    write_expr(&mut out, &p.objective, &p.block_dims);
    for c in &p.constraints {
        let s = match c.sense {
            Sense::Eq => "eq",
            Sense::Le => "le",
            Sense::Ge => "ge",
        };
        let _ = writeln!(out, "constraint {s} {}", num(c.rhs));
        write_expr(&mut out, &c.expr, &p.block_dims);
    }
    for cone in &p.cones {
        let _ = writeln!(out, "cone {}", cone.z.len());
        write_expr(&mut out, &cone.u, &p.block_dims);
        write_expr(&mut out, &cone.v, &p.block_dims);
        for z in &cone.z {
            write_expr(&mut out, z, &p.block_dims);
        }
    }
    out
}

struct Parser<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

fn bad(line: usize, detail: impl std::fmt::Display) -> Error {
    Error::invalid(format!("line {}: {detail}", line + 1))
}

fn parse_f64(line: usize, tok: Option<&str>) -> Result<f64> {
    let tok = tok.ok_or_else(|| bad(line, "missing number"))?;
    tok.parse::<f64>()
        .map_err(|_| bad(line, format!("not a number: {tok}")))
}

fn parse_usize(line: usize, tok: Option<&str>) -> Result<usize> {
    let tok = tok.ok_or_else(|| bad(line, "missing index"))?;
    tok.parse::<usize>()
        .map_err(|_| bad(line, format!("not an index: {tok}")))
}

impl<'a> Parser<'a> {
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.lines.by_ref() {
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Some((i, t));
            }
        }
        None
    }

    fn expr<T: Scalar>(&mut self, dims: &[usize]) -> Result<LinExpr<T>> {
        let mut e = LinExpr::new();
        let mut coefs: Vec<(usize, HermCoeff<T>)> = Vec::new();
        fn coef_for<T: Scalar>(coefs: &mut Vec<(usize, HermCoeff<T>)>, b: usize) -> &mut HermCoeff<T> {
            let pos = match coefs.iter().position(|(k, _)| *k == b) {
                Some(p) => p,
                None => {
                    coefs.push((b, HermCoeff::zero()));
                    coefs.len() - 1
                }
            };
            &mut coefs[pos].1
        }
        loop {
            let (ln, line) = self
                .next_line()
                .ok_or_else(|| Error::invalid("unterminated expression"))?;
            let mut tok = line.split_whitespace();
            let kind = tok.next().unwrap_or("");
            let block = |tok: &mut std::str::SplitWhitespace| -> Result<usize> {
                let b = parse_usize(ln, tok.next())?;
                if b >= dims.len() {
                    return Err(bad(ln, format!("unknown block {b}")));
                }
                Ok(b)
            };
            match kind {
                "end" => break,
                "s" => {
                    let v = parse_usize(ln, tok.next())?;
                    let c = parse_f64(ln, tok.next())?;
                    e.scalars.push((VarId(v), T::lit(c)));
                }
                "c" => e.constant += T::lit(parse_f64(ln, tok.next())?),
                "d" => {
                    let b = block(&mut tok)?;
                    let p = parse_usize(ln, tok.next())?;
                    let q = parse_usize(ln, tok.next())?;
                    let z = Cx::new(
                        T::lit(parse_f64(ln, tok.next())?),
                        T::lit(parse_f64(ln, tok.next())?),
                    );
                    let n = dims[b];
                    if p >= n || q >= n {
                        return Err(bad(ln, "dense entry out of range"));
                    }
                    let c = coef_for(&mut coefs, b);
                    c.dense.get_or_insert_with(|| DMatrix::zeros(n, n))[(p, q)] += z;
                }
                "r" => {
                    let b = block(&mut tok)?;
                    let s = T::lit(parse_f64(ln, tok.next())?);
                    let vals: Vec<f64> = tok
                        .map(|t| parse_f64(ln, Some(t)))
                        .collect::<Result<_>>()?;
                    if vals.len() != 2 * dims[b] {
                        return Err(bad(ln, "rank-one vector has wrong length"));
                    }
                    let c = DVector::from_fn(dims[b], |i, _| {
                        Cx::new(T::lit(vals[2 * i]), T::lit(vals[2 * i + 1]))
                    });
                    coef_for(&mut coefs, b).push_rank_one(s, c);
                }
                "e" => {
                    let b = block(&mut tok)?;
                    let p = parse_usize(ln, tok.next())?;
                    let q = parse_usize(ln, tok.next())?;
                    let z = Cx::new(
                        T::lit(parse_f64(ln, tok.next())?),
                        T::lit(parse_f64(ln, tok.next())?),
                    );
                    coef_for(&mut coefs, b).push_entry(p, q, z);
                }
                "i" => {
                    let b = block(&mut tok)?;
                    coef_for(&mut coefs, b).identity += T::lit(parse_f64(ln, tok.next())?);
                }
                other => return Err(bad(ln, format!("unknown term kind {other:?}"))),
            }
        }
        e.blocks = coefs.into_iter().map(|(b, c)| (BlockId(b), c)).collect();
        Ok(e)
    }
}

/// Parses the text format.
pub fn parse_problem<T: Scalar>(text: &str) -> Result<ConicProblem<T>> {
    let mut parser = Parser {
        lines: text.lines().enumerate().peekable(),
    };
    match parser.next_line() {
        Some((_, "qwsr-conic 1")) => {}
        _ => return Err(Error::invalid("missing `qwsr-conic 1` header")),
    }
    let mut p = ConicProblem::new();
    while let Some((ln, line)) = parser.next_line() {
        let mut tok = line.split_whitespace();
        match tok.next().unwrap_or("") {
            "var" => {
                let lo = parse_f64(ln, tok.next())?;
                let hi = parse_f64(ln, tok.next())?;
                let wrap = |x: f64| x.is_finite().then(|| T::lit(x));
                p.add_var(wrap(lo), wrap(hi));
            }
            "block" => {
                p.add_block(parse_usize(ln, tok.next())?);
            }
            "minimize" => {
                let e = parser.expr(&p.block_dims)?;
                p.minimize(e);
            }
            "maximize" => {
                let e = parser.expr(&p.block_dims)?;
                p.maximize(e);
            }
            "constraint" => {
                let sense = match tok.next() {
                    Some("eq") => Sense::Eq,
                    Some("le") => Sense::Le,
                    Some("ge") => Sense::Ge,
                    other => return Err(bad(ln, format!("unknown sense {other:?}"))),
                };
                let rhs = T::lit(parse_f64(ln, tok.next())?);
                let e = parser.expr(&p.block_dims)?;
                p.constrain(e, sense, rhs);
            }
            "cone" => {
                let k = parse_usize(ln, tok.next())?;
                let u = parser.expr(&p.block_dims)?;
                let v = parser.expr(&p.block_dims)?;
                let z = (0..k)
                    .map(|_| parser.expr(&p.block_dims))
                    .collect::<Result<_>>()?;
                p.add_cone(RotatedCone { u, v, z });
            }
            other => return Err(bad(ln, format!("unknown directive {other:?}"))),
        }
    }
    p.validate()?;
    Ok(p)
}

pub fn write_problem<T: Scalar>(path: &Path, p: &ConicProblem<T>) -> Result<()> {
    std::fs::write(path, dump_problem(p)).map_err(|e| Error::io(path, e))
}

pub fn read_problem<T: Scalar>(path: &Path) -> Result<ConicProblem<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_problem(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}
