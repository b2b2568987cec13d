//! Left-looking sparse LU factorisation with threshold partial pivoting.
//!
//! Computes `P A Q = L U` where `Q` is a caller-supplied column order and
//! `P` is chosen during the factorisation. When the diagonal entry of the
//! permuted matrix is within `tol` of the largest candidate it is preferred,
//! which keeps the fill close to what a symmetric ordering predicts.

use crate::sparse::CscMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Singular {
    pub column: usize,
}

#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<f64>,
    pinv: Vec<usize>,
    q: Vec<usize>,
    /// Floating point operations spent in the numeric factorisation.
    pub flops: u64,
}

struct Workspace {
    x: Vec<f64>,
    xi: Vec<usize>,
    stack: Vec<(usize, usize)>,
    mark: Vec<usize>,
    stamp: usize,
}

const UNSET: usize = usize::MAX;

pub fn factor(a: &CscMatrix, q: &[usize], tol: f64) -> Result<LuFactors, Singular> {
    let n = a.ncols;
    assert_eq!(a.nrows, n, "LU needs a square matrix");
    assert_eq!(q.len(), n);
    let guess = 4 * a.nnz() + n;
    let mut f = LuFactors {
        n,
        lp: Vec::with_capacity(n + 1),
        li: Vec::with_capacity(guess),
        lx: Vec::with_capacity(guess),
        up: Vec::with_capacity(n + 1),
        ui: Vec::with_capacity(guess),
        ux: Vec::with_capacity(guess),
        pinv: vec![UNSET; n],
        q: q.to_vec(),
        flops: 0,
    };
    let mut ws = Workspace {
        x: vec![0.0; n],
        xi: vec![0; n],
        stack: Vec::with_capacity(n),
        mark: vec![0; n],
        stamp: 0,
    };
    let mut flops = 0u64;
    for k in 0..n {
        f.lp.push(f.li.len());
        f.up.push(f.ui.len());
        let col = q[k];
        let top = spsolve(&f, a, col, &mut ws, &mut flops);
        let mut ipiv = UNSET;
        let mut amax = -1.0f64;
        for p in top..n {
            let i = ws.xi[p];
            if f.pinv[i] == UNSET {
                let t = ws.x[i].abs();
                if t > amax {
                    amax = t;
                    ipiv = i;
                }
            } else {
                f.ui.push(f.pinv[i]);
                f.ux.push(ws.x[i]);
            }
        }
        if ipiv == UNSET || amax <= 0.0 || !amax.is_finite() {
            return Err(Singular { column: k });
        }
        if f.pinv[col] == UNSET && ws.x[col] != 0.0 && ws.x[col].abs() >= amax * tol {
            ipiv = col;
        }
        let pivot = ws.x[ipiv];
        f.ui.push(k);
        f.ux.push(pivot);
        f.pinv[ipiv] = k;
        f.li.push(ipiv);
        f.lx.push(1.0);
        for p in top..n {
            let i = ws.xi[p];
            if f.pinv[i] == UNSET {
                f.li.push(i);
                f.lx.push(ws.x[i] / pivot);
                flops += 1;
            }
            ws.x[i] = 0.0;
        }
    }
    f.lp.push(f.li.len());
    f.up.push(f.ui.len());
    f.flops = flops;
    for i in f.li.iter_mut() {
        *i = f.pinv[*i];
    }
    Ok(f)
}

/// Solves `L x = A(:, col)` over the columns of L computed so far. Returns
/// the start of the nonzero pattern stored in `ws.xi[top..n]`.
fn spsolve(
    f: &LuFactors,
    a: &CscMatrix,
    col: usize,
    ws: &mut Workspace,
    flops: &mut u64,
) -> usize {
    let n = f.n;
    let top = reach(f, a, col, ws);
    for p in top..n {
        ws.x[ws.xi[p]] = 0.0;
    }
    for p in a.colptr[col]..a.colptr[col + 1] {
        ws.x[a.rowind[p]] = a.values[p];
    }
    for px in top..n {
        let j = ws.xi[px];
        let jj = f.pinv[j];
        if jj == UNSET {
            continue;
        }
        let xj = ws.x[j];
        let end = if jj + 1 < f.lp.len() { f.lp[jj + 1] } else { f.li.len() };
        // unit diagonal stored first
        for p in f.lp[jj] + 1..end {
            ws.x[f.li[p]] -= f.lx[p] * xj;
        }
        *flops += 2 * (end - f.lp[jj] - 1) as u64;
    }
    top
}

fn reach(f: &LuFactors, a: &CscMatrix, col: usize, ws: &mut Workspace) -> usize {
    let n = f.n;
    ws.stamp += 1;
    let stamp = ws.stamp;
    let mut top = n;
    for p in a.colptr[col]..a.colptr[col + 1] {
        let start = a.rowind[p];
        if ws.mark[start] == stamp {
            continue;
        }
        // iterative depth-first search
        ws.stack.clear();
        ws.mark[start] = stamp;
        ws.stack.push((start, 0));
        while let Some(&mut (j, ref mut next)) = ws.stack.last_mut() {
            let jj = f.pinv[j];
            let (lo, hi) = if jj == UNSET {
                (0, 0)
            } else {
                let end = if jj + 1 < f.lp.len() { f.lp[jj + 1] } else { f.li.len() };
                (f.lp[jj], end)
            };
            let mut pushed = None;
            while lo + *next < hi {
                let i = f.li[lo + *next];
                *next += 1;
                if ws.mark[i] != stamp {
                    ws.mark[i] = stamp;
                    pushed = Some(i);
                    break;
                }
            }
            match pushed {
                Some(i) => ws.stack.push((i, 0)),
                None => {
                    ws.stack.pop();
                    top -= 1;
                    ws.xi[top] = j;
                }
            }
        }
    }
    top
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.li.len() + self.ui.len()
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.pinv[i]] = b[i];
        }
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for p in self.lp[j] + 1..self.lp[j + 1] {
                    x[self.li[p]] -= self.lx[p] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            let d = self.up[j + 1] - 1;
            x[j] /= self.ux[d];
            let xj = x[j];
            if xj != 0.0 {
                for p in self.up[j]..d {
                    x[self.ui[p]] -= self.ux[p] * xj;
                }
            }
        }
        for k in 0..n {
            b[self.q[k]] = x[k];
        }
    }
}
