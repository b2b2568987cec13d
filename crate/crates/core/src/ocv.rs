//! Open-circuit potential curves as monotone piecewise-cubic tables.

use crate::ad::Real;
use crate::error::ParamError;

/// Shape-preserving cubic Hermite interpolant through `(theta, u)` pairs.
/// Derivatives at the knots follow the Fritsch–Butland harmonic mean rule,
/// so monotone data produce a monotone curve without overshoot.
#[derive(Debug, Clone, PartialEq)]
pub struct OcvCurve {
    theta: Vec<f64>,
    u: Vec<f64>,
    slope: Vec<f64>,
}

impl OcvCurve {
    pub fn new(theta: Vec<f64>, u: Vec<f64>) -> Result<Self, ParamError> {
        if theta.len() != u.len() || theta.len() < 2 {
            return Err(ParamError::Ocv("theta and u must have equal length ≥ 2".into()));
        }
        if theta.iter().chain(&u).any(|v| !v.is_finite()) {
            return Err(ParamError::Ocv("non-finite table entry".into()));
        }
        if theta.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ParamError::Ocv("theta must be strictly increasing".into()));
        }
        if theta[0] > 0.0 || *theta.last().unwrap() < 1.0 {
            return Err(ParamError::Ocv("table must cover theta in [0, 1]".into()));
        }
        let inc = u.windows(2).all(|w| w[1] >= w[0]);
        let dec = u.windows(2).all(|w| w[1] <= w[0]);
        if !inc && !dec {
            return Err(ParamError::Ocv("u must be monotone in theta".into()));
        }
        let slope = pchip_slopes(&theta, &u);
        Ok(Self { theta, u, slope })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    /// Value and first two derivatives. Outside the table the curve is
    /// continued linearly.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        let n = self.theta.len();
        if x <= self.theta[0] {
            let d = self.slope[0];
            return (self.u[0] + d * (x - self.theta[0]), d, 0.0);
        }
        if x >= self.theta[n - 1] {
            let d = self.slope[n - 1];
            return (self.u[n - 1] + d * (x - self.theta[n - 1]), d, 0.0);
        }
        let k = match self.theta.binary_search_by(|t| t.total_cmp(&x)) {
            Ok(k) => k.min(n - 2),
            Err(k) => k - 1,
        };
        let h = self.theta[k + 1] - self.theta[k];
        let t = (x - self.theta[k]) / h;
        let (y0, y1) = (self.u[k], self.u[k + 1]);
        let (m0, m1) = (self.slope[k] * h, self.slope[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let dv = (6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1;
        let d2v = (12.0 * t - 6.0) * y0 + (6.0 * t - 4.0) * m0 + (-12.0 * t + 6.0) * y1 + (6.0 * t - 2.0) * m1;
        (v, dv / h, d2v / (h * h))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval3(x).0
    }

    pub fn eval_real<T: Real>(&self, x: T) -> T {
        let (v, d, d2) = self.eval3(x.value());
        x.chain(v, d, d2)
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}
