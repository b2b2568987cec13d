//! Plain-text sparse problem dumps for cross-checking with external solvers.
//!
//! The format is line oriented, whitespace separated, with `#` comments:
//!
//! ```text
//! frmpc-dump 1
//! dims <n> <m>
//! objective <constant>
//! c <j> <value>                  # objective gradient entries
//! col <j> <lower> <upper>
//! row <i> <lower> <upper>
//! a <i> <j> <value>              # constraint Jacobian entries
//! h <i> <j> <value>              # Lagrangian Hessian, lower triangle
//! x0 <j> <value>
//! ```
//!
//! Indices are 0-based. Infinite bounds are written as `inf` / `-inf`.
//! For linear programs `c`/`a` are the exact data; for nonlinear programs
//! they are evaluated at the dumped point and `h` uses unit objective
//! weight and zero multipliers.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use crate::ipm::NlpModel;
use crate::lp::LinearProgram;
use crate::INF;

fn fmt_bound(v: f64) -> String {
    if v >= 1e19 {
        "inf".into()
    } else if v <= -1e19 {
        "-inf".into()
    } else {
        format!("{v:e}")
    }
}

fn parse_bound(s: &str) -> Result<f64, String> {
    match s {
        "inf" => Ok(INF),
        "-inf" => Ok(-INF),
        _ => s.parse().map_err(|e| format!("bad number {s:?}: {e}")),
    }
}

/// Writes a model evaluated at `x`.
pub fn write_model<M: NlpModel + ?Sized, W: Write>(model: &M, x: &[f64], out: &mut W) -> io::Result<()> {
    let n = model.num_vars();
    let m = model.num_cons();
    let mut s = String::new();
    let _ = writeln!(s, "frmpc-dump 1");
    let _ = writeln!(s, "dims {n} {m}");
    let mut g = vec![0.0; n];
    model.objective_gradient(x, &mut g);
    let f = model.objective(x);
    let lin: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
    let _ = writeln!(s, "objective {:e}", f - lin);
    for (j, v) in g.iter().enumerate() {
        if *v != 0.0 {
            let _ = writeln!(s, "c {j} {v:e}");
        }
    }
    let mut xl = vec![0.0; n];
    let mut xu = vec![0.0; n];
    model.var_bounds(&mut xl, &mut xu);
    for j in 0..n {
        let _ = writeln!(s, "col {j} {} {}", fmt_bound(xl[j]), fmt_bound(xu[j]));
    }
    let mut gl = vec![0.0; m];
    let mut gu = vec![0.0; m];
    model.con_bounds(&mut gl, &mut gu);
    // rows are shifted so that `a x` reproduces the linearisation at x
    let mut gx = vec![0.0; m];
    model.constraints(x, &mut gx);
    let jac = model.jacobian_structure();
    let mut jv = vec![0.0; jac.len()];
    model.jacobian_values(x, &mut jv);
    let mut jx = vec![0.0; m];
    for (k, &(i, j)) in jac.iter().enumerate() {
        jx[i] += jv[k] * x[j];
    }
    for i in 0..m {
        let shift = gx[i] - jx[i];
        let lo = if gl[i] <= -1e19 { gl[i] } else { gl[i] - shift };
        let hi = if gu[i] >= 1e19 { gu[i] } else { gu[i] - shift };
        let _ = writeln!(s, "row {i} {} {}", fmt_bound(lo), fmt_bound(hi));
    }
    for (k, &(i, j)) in jac.iter().enumerate() {
        let _ = writeln!(s, "a {i} {j} {:e}", jv[k]);
    }
    let hs = model.hessian_structure();
    if !hs.is_empty() {
        let mut hv = vec![0.0; hs.len()];
        model.hessian_values(x, 1.0, &vec![0.0; m], &mut hv);
        for (k, &(i, j)) in hs.iter().enumerate() {
            if hv[k] != 0.0 {
                let _ = writeln!(s, "h {i} {j} {:e}", hv[k]);
            }
        }
    }
    for (j, v) in x.iter().enumerate() {
        let _ = writeln!(s, "x0 {j} {v:e}");
    }
    out.write_all(s.as_bytes())
}

/// Reads the linear part of a dump back as a [`LinearProgram`].
pub fn read_lp<R: BufRead>(input: R) -> Result<LinearProgram, String> {
    let mut lp: Option<LinearProgram> = None;
    for (ln, line) in input.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: &str| format!("line {}: {msg}", ln + 1);
        let idx = |k: usize| -> Result<usize, String> {
            tok.get(k)
                .ok_or_else(|| err("missing field"))?
                .parse::<usize>()
                .map_err(|e| err(&e.to_string()))
        };
        let num = |k: usize| -> Result<f64, String> { parse_bound(tok.get(k).ok_or_else(|| err("missing field"))?) };
        match tok[0] {
            "frmpc-dump" | "objective" | "h" | "x0" => {}
            "dims" => {
                let n = idx(1)?;
                let m = idx(2)?;
                let mut p = LinearProgram::new(n);
                p.row_lower = vec![-INF; m];
                p.row_upper = vec![INF; m];
                lp = Some(p);
            }
            kind => {
                let p = lp.as_mut().ok_or_else(|| err("entry before dims"))?;
                match kind {
                    "c" => {
                        let j = idx(1)?;
                        *p.c.get_mut(j).ok_or_else(|| err("index out of range"))? = num(2)?;
                    }
                    "col" => {
                        let j = idx(1)?;
                        if j >= p.c.len() {
                            return Err(err("index out of range"));
                        }
                        p.col_lower[j] = num(2)?;
                        p.col_upper[j] = num(3)?;
                    }
                    "row" => {
                        let i = idx(1)?;
                        if i >= p.row_lower.len() {
                            return Err(err("index out of range"));
                        }
                        p.row_lower[i] = num(2)?;
                        p.row_upper[i] = num(3)?;
                    }
                    "a" => {
                        let (i, j) = (idx(1)?, idx(2)?);
                        if i >= p.row_lower.len() || j >= p.c.len() {
                            return Err(err("index out of range"));
                        }
                        p.a.push((i, j, num(3)?));
                    }
                    other => return Err(err(&format!("unknown record {other:?}"))),
                }
            }
        }
    }
    lp.ok_or_else(|| "missing dims record".to_string())
}
