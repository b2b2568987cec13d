//! Forward-mode second-order dual numbers.
//!
//! Physics kernels are written once against [`Real`] and evaluated either on
//! plain `f64` or on [`Dual`] to obtain exact gradients and Hessians with
//! respect to a handful of local variables.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value()`.
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self;

    fn exp(self) -> Self {
        let e = self.value().exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let x = self.value();
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }
    fn sqrt(self) -> Self {
        let s = self.value().sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }
    fn sinh(self) -> Self {
        let x = self.value();
        self.chain(x.sinh(), x.cosh(), x.sinh())
    }
    fn asinh(self) -> Self {
        let x = self.value();
        let q = (1.0 + x * x).sqrt();
        self.chain(x.asinh(), 1.0 / q, -x / (q * q * q))
    }
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn chain(self, f: f64, _df: f64, _d2f: f64) -> Self {
        f
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    #[inline]
    fn asinh(self) -> Self {
        f64::asinh(self)
    }
}

/// Value, gradient and (symmetric) Hessian with respect to `K` seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<const K: usize> {
    pub v: f64,
    pub g: [f64; K],
    pub h: [[f64; K]; K],
}

impl<const K: usize> Dual<K> {
    pub fn var(v: f64, k: usize) -> Self {
        let mut g = [0.0; K];
        g[k] = 1.0;
        Self { v, g, h: [[0.0; K]; K] }
    }

    /// Seeds all `K` variables at once.
    pub fn vars(vals: [f64; K]) -> [Self; K] {
        std::array::from_fn(|k| Self::var(vals[k], k))
    }
}

impl<const K: usize> Real for Dual<K> {
    fn cst(v: f64) -> Self {
        Self {
            v,
            g: [0.0; K],
            h: [[0.0; K]; K],
        }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = Self::cst(f);
        for i in 0..K {
            out.g[i] = df * self.g[i];
            for j in 0..K {
                out.h[i][j] = df * self.h[i][j] + d2f * self.g[i] * self.g[j];
            }
        }
        out
    }
}

impl<const K: usize> Add for Dual<K> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..K {
            self.g[i] += o.g[i];
            for j in 0..K {
                self.h[i][j] += o.h[i][j];
            }
        }
        self
    }
}

impl<const K: usize> Sub for Dual<K> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<const K: usize> Neg for Dual<K> {
    type Output = Self;
    fn neg(mut self) -> Self {
        self.v = -self.v;
        for i in 0..K {
            self.g[i] = -self.g[i];
            for j in 0..K {
                self.h[i][j] = -self.h[i][j];
            }
        }
        self
    }
}

impl<const K: usize> Mul for Dual<K> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::cst(self.v * o.v);
        for i in 0..K {
            out.g[i] = self.g[i] * o.v + self.v * o.g[i];
            for j in 0..K {
                out.h[i][j] =
                    self.h[i][j] * o.v + self.v * o.h[i][j] + self.g[i] * o.g[j] + self.g[j] * o.g[i];
            }
        }
        out
    }
}

impl<const K: usize> Div for Dual<K> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.value();
        let r = o.chain(1.0 / inv, -1.0 / (inv * inv), 2.0 / (inv * inv * inv));
        self * r
    }
}

impl<const K: usize> Add<f64> for Dual<K> {
    type Output = Self;
    fn add(mut self, o: f64) -> Self {
        self.v += o;
        self
    }
}

impl<const K: usize> Sub<f64> for Dual<K> {
    type Output = Self;
    fn sub(mut self, o: f64) -> Self {
        self.v -= o;
        self
    }
}

impl<const K: usize> Mul<f64> for Dual<K> {
    type Output = Self;
    fn mul(mut self, o: f64) -> Self {
        self.v *= o;
        for i in 0..K {
            self.g[i] *= o;
            for j in 0..K {
                self.h[i][j] *= o;
            }
        }
        self
    }
}

impl<const K: usize> Div<f64> for Dual<K> {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        self * (1.0 / o)
    }
}
