//! FR signal and price series: CSV ingestion, validation, horizon windows
//! with wrap-around, and seeded synthetic data.
//!
//! File formats (UTF-8, header row required, 1-based hour and step indices):
//!
//! * `fr_signal.csv`: `hour,step,alpha`, one row per plant step, every hour
//!   carrying steps `1..=S`, `alpha` in `[-1, 1]`.
//! * `prices.csv`: `hour,fr_price,energy_price`, one row per hour, FR price
//!   in $/MW (nonnegative), energy price in $/MWh (any sign).

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::error::MarketError;

#[derive(Debug, Clone, PartialEq)]
pub struct MarketData {
    alpha: Vec<Vec<f64>>,
    fr_price: Vec<f64>,
    energy_price: Vec<f64>,
}

/// Borrowed view of `N` consecutive hours.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketWindow<'a> {
    pub alpha: Vec<&'a [f64]>,
    pub fr_price: Vec<f64>,
    pub energy_price: Vec<f64>,
}

impl MarketWindow<'_> {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn steps_per_hour(&self) -> usize {
        self.alpha.first().map_or(0, |a| a.len())
    }
}

impl MarketData {
    pub fn new(alpha: Vec<Vec<f64>>, fr_price: Vec<f64>, energy_price: Vec<f64>) -> Result<Self, MarketError> {
        if alpha.is_empty() {
            return Err(MarketError::Alignment("no hours of FR signal".into()));
        }
        if alpha.len() != fr_price.len() || fr_price.len() != energy_price.len() {
            return Err(MarketError::Alignment(format!(
                "{} hours of FR signal, {} FR prices, {} energy prices",
                alpha.len(),
                fr_price.len(),
                energy_price.len()
            )));
        }
        let s = alpha[0].len();
        if s == 0 {
            return Err(MarketError::Gap { hour: 1, step: 1 });
        }
        for (h, a) in alpha.iter().enumerate() {
            if a.len() != s {
                return Err(MarketError::Alignment(format!(
                    "hour {} has {} steps, expected {s}",
                    h + 1,
                    a.len()
                )));
            }
            if let Some((k, &v)) = a.iter().enumerate().find(|(_, v)| !(-1.0..=1.0).contains(*v)) {
                return Err(MarketError::Range {
                    hour: h + 1,
                    step: k + 1,
                    value: v,
                });
            }
        }
        for (h, &v) in fr_price.iter().enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(MarketError::NegativeFrPrice { hour: h + 1, value: v });
            }
        }
        if let Some(h) = energy_price.iter().position(|v| !v.is_finite()) {
            return Err(MarketError::Parse {
                line: h + 2,
                msg: "non-finite energy price".into(),
            });
        }
        Ok(Self {
            alpha,
            fr_price,
            energy_price,
        })
    }

    pub fn load(fr_path: impl AsRef<Path>, price_path: impl AsRef<Path>) -> Result<Self, MarketError> {
        let alpha = load_fr_signal(fr_path)?;
        let (f, e) = load_prices(price_path)?;
        Self::new(alpha, f, e)
    }

    /// Seeded synthetic market of `hours` hours at `steps_per_hour`.
    pub fn synthetic(seed: u64, hours: usize, steps_per_hour: usize) -> Self {
        let alpha = synth_fr(seed, hours, steps_per_hour);
        let (f, e) = synth_prices(seed, hours);
        Self::new(alpha, f, e).expect("synthetic data are valid by construction")
    }

    /// Number of loaded hours `Y`.
    pub fn hours(&self) -> usize {
        self.alpha.len()
    }

    pub fn steps_per_hour(&self) -> usize {
        self.alpha[0].len()
    }

    pub fn alpha(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    pub fn fr_price(&self) -> &[f64] {
        &self.fr_price
    }

    pub fn energy_price(&self) -> &[f64] {
        &self.energy_price
    }

    /// FR signal of zero-based hour `k`, wrapping past the end.
    pub fn alpha_at(&self, k: usize) -> &[f64] {
        &self.alpha[k % self.hours()]
    }

    pub fn fr_price_at(&self, k: usize) -> f64 {
        self.fr_price[k % self.hours()]
    }

    pub fn energy_price_at(&self, k: usize) -> f64 {
        self.energy_price[k % self.hours()]
    }

    /// Hours `t+1 ..= t+N` in 1-based terms, i.e. zero-based `t .. t+N`,
    /// replicated modulo the loaded length.
    pub fn window(&self, t: usize, n: usize) -> MarketWindow<'_> {
        assert!(n >= 1, "horizon must be at least one hour");
        MarketWindow {
            alpha: (t..t + n).map(|k| self.alpha_at(k)).collect(),
            fr_price: (t..t + n).map(|k| self.fr_price_at(k)).collect(),
            energy_price: (t..t + n).map(|k| self.energy_price_at(k)).collect(),
        }
    }

    /// Same hours with the FR signal block-averaged down to `steps` per
    /// hour; `steps` must divide the loaded resolution.
    pub fn resampled(&self, steps: usize) -> Result<Self, MarketError> {
        let s = self.steps_per_hour();
        if steps == 0 || s % steps != 0 {
            return Err(MarketError::Alignment(format!("{steps} does not divide {s} steps per hour")));
        }
        let b = s / steps;
        let alpha = self
            .alpha
            .iter()
            .map(|a| a.chunks(b).map(|c| c.iter().sum::<f64>() / b as f64).collect())
            .collect();
        Self::new(alpha, self.fr_price.clone(), self.energy_price.clone())
    }

    pub fn write_csv(&self, fr_path: impl AsRef<Path>, price_path: impl AsRef<Path>) -> Result<(), MarketError> {
        let io = |p: &Path| {
            let path = p.display().to_string();
            move |source| MarketError::Io { path, source }
        };
        let fr = fr_path.as_ref();
        let f = std::fs::File::create(fr).map_err(io(fr))?;
        write_fr_signal(&self.alpha, std::io::BufWriter::new(f)).map_err(io(fr))?;
        let pr = price_path.as_ref();
        let f = std::fs::File::create(pr).map_err(io(pr))?;
        write_prices(&self.fr_price, &self.energy_price, std::io::BufWriter::new(f)).map_err(io(pr))?;
        Ok(())
    }
}

#[derive(Deserialize)]
struct FrRow {
    hour: usize,
    step: usize,
    alpha: f64,
}

#[derive(Deserialize)]
struct PriceRow {
    hour: usize,
    fr_price: f64,
    energy_price: f64,
}

fn open(path: &Path) -> Result<std::fs::File, MarketError> {
    std::fs::File::open(path).map_err(|source| MarketError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn rows<T: for<'de> Deserialize<'de>>(r: impl Read) -> impl Iterator<Item = Result<(usize, T), MarketError>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r)
        .into_deserialize::<T>()
        .enumerate()
        .map(|(k, rec)| {
            rec.map(|v| (k + 2, v)).map_err(|e| MarketError::Parse {
                line: e.position().map_or(k + 2, |p| p.line() as usize),
                msg: e.to_string(),
            })
        })
}

pub fn load_fr_signal(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>, MarketError> {
    read_fr_signal(open(path.as_ref())?)
}

/// Parses `hour,step,alpha` rows (in any order) into per-hour arrays.
pub fn read_fr_signal(r: impl Read) -> Result<Vec<Vec<f64>>, MarketError> {
    let mut hours: BTreeMap<usize, BTreeMap<usize, f64>> = BTreeMap::new();
    for rec in rows::<FrRow>(r) {
        let (line, row) = rec?;
        if row.hour == 0 || row.step == 0 {
            return Err(MarketError::Parse {
                line,
                msg: "hour and step indices are 1-based".into(),
            });
        }
        if !(-1.0..=1.0).contains(&row.alpha) {
            return Err(MarketError::Range {
                hour: row.hour,
                step: row.step,
                value: row.alpha,
            });
        }
        if hours.entry(row.hour).or_default().insert(row.step, row.alpha).is_some() {
            return Err(MarketError::Alignment(format!(
                "duplicate sample for hour {}, step {}",
                row.hour, row.step
            )));
        }
    }
    let y = match hours.keys().next_back() {
        Some(&y) => y,
        None => return Err(MarketError::Alignment("empty FR signal".into())),
    };
    let s = hours.values().map(|h| h.keys().next_back().copied().unwrap_or(0)).max().unwrap_or(0);
    let mut out = Vec::with_capacity(y);
    for hour in 1..=y {
        let h = hours.get(&hour).ok_or(MarketError::Gap { hour, step: 1 })?;
        let mut a = Vec::with_capacity(s);
        for step in 1..=s {
            a.push(*h.get(&step).ok_or(MarketError::Gap { hour, step })?);
        }
        out.push(a);
    }
    Ok(out)
}

pub fn load_prices(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<f64>), MarketError> {
    read_prices(open(path.as_ref())?)
}

pub fn read_prices(r: impl Read) -> Result<(Vec<f64>, Vec<f64>), MarketError> {
    let mut by_hour: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for rec in rows::<PriceRow>(r) {
        let (line, row) = rec?;
        if row.hour == 0 {
            return Err(MarketError::Parse {
                line,
                msg: "hour indices are 1-based".into(),
            });
        }
        if row.fr_price < 0.0 {
            return Err(MarketError::NegativeFrPrice {
                hour: row.hour,
                value: row.fr_price,
            });
        }
        if by_hour.insert(row.hour, (row.fr_price, row.energy_price)).is_some() {
            return Err(MarketError::Alignment(format!("duplicate price row for hour {}", row.hour)));
        }
    }
    let n = by_hour.len();
    if n == 0 {
        return Err(MarketError::Alignment("empty price file".into()));
    }
    if let Some((k, _)) = by_hour.keys().enumerate().find(|(k, h)| **h != k + 1) {
        return Err(MarketError::Alignment(format!("price rows skip hour {}", k + 1)));
    }
    Ok(by_hour.into_values().unzip())
}

pub fn write_fr_signal(alpha: &[Vec<f64>], w: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["hour", "step", "alpha"])?;
    for (h, a) in alpha.iter().enumerate() {
        for (s, v) in a.iter().enumerate() {
            w.write_record([(h + 1).to_string(), (s + 1).to_string(), v.to_string()])?;
        }
    }
    w.flush()
}

pub fn write_prices(fr_price: &[f64], energy_price: &[f64], w: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["hour", "fr_price", "energy_price"])?;
    for (h, (f, e)) in fr_price.iter().zip(energy_price).enumerate() {
        w.write_record([(h + 1).to_string(), f.to_string(), e.to_string()])?;
    }
    w.flush()
}

// Signal generator constants. The smooth part is a damped oscillator driven
// by white noise whose position is the integrated signal, so the signal is
// energy-neutral over a few periods; jumps add abrupt, decaying excursions.
const OSC_PERIOD: f64 = 600.0;
const OSC_DAMPING: f64 = 0.3;
const OSC_STD: f64 = 0.45;
const JUMP_RATE: f64 = 1.0 / 900.0;
const JUMP_DECAY: f64 = 40.0;
const BASE_DT: f64 = 2.0;

/// Reproducible synthetic FR signal: `hours` arrays of `steps_per_hour`
/// values in `[-1, 1]`. Each value is the block average of an underlying
/// signal sampled at (about) two seconds.
pub fn synth_fr(seed: u64, hours: usize, steps_per_hour: usize) -> Vec<Vec<f64>> {
    assert!(steps_per_hour > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 3600.0 / steps_per_hour as f64;
    let sub = (step / BASE_DT).round().max(1.0) as usize;
    let dt = step / sub as f64;
    let w = 2.0 * std::f64::consts::PI / OSC_PERIOD;
    // noise intensity giving stationary velocity std OSC_STD
    let sigma = OSC_STD * (4.0 * OSC_DAMPING * w).sqrt();
    let mut y: f64 = rng.sample::<f64, _>(StandardNormal) * OSC_STD / w;
    let mut v: f64 = rng.sample::<f64, _>(StandardNormal) * OSC_STD;
    let mut jump = 0.0f64;
    let decay = (-dt / JUMP_DECAY).exp();
    let mut out = Vec::with_capacity(hours);
    for _ in 0..hours {
        let mut a = Vec::with_capacity(steps_per_hour);
        for _ in 0..steps_per_hour {
            let mut acc = 0.0;
            for _ in 0..sub {
                let xi: f64 = rng.sample(StandardNormal);
                // semi-implicit Euler keeps the oscillator stable for coarse dt
                v += (-w * w * y - 2.0 * OSC_DAMPING * w * v) * dt + sigma * dt.sqrt() * xi;
                y += v * dt;
                jump *= decay;
                if rng.random::<f64>() < JUMP_RATE * dt {
                    let mag = rng.random_range(0.5..1.0);
                    jump = if rng.random::<bool>() { mag } else { -mag };
                }
                acc += (v + jump).clamp(-1.0, 1.0);
            }
            a.push((acc / sub as f64).clamp(-1.0, 1.0));
        }
        out.push(a);
    }
    out
}

/// Synthetic hourly prices with a daily shape: FR capacity price in $/MW
/// (nonnegative, occasional spikes) and day-ahead energy price in $/MWh.
pub fn synth_prices(seed: u64, hours: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_9a1c_e000_0001);
    let tau = 2.0 * std::f64::consts::PI / 24.0;
    let mut fr = Vec::with_capacity(hours);
    let mut en = Vec::with_capacity(hours);
    for h in 0..hours {
        let hod = (h % 24) as f64;
        let zf: f64 = rng.sample(StandardNormal);
        let ze: f64 = rng.sample(StandardNormal);
        let spike = if rng.random::<f64>() < 0.03 { rng.random_range(2.0..4.0) } else { 1.0 };
        let f = (30.0 + 10.0 * (tau * (hod - 8.0)).sin() + 4.0 * zf).max(0.0) * spike;
        let e = 35.0 + 12.0 * (tau * (hod - 10.0)).sin() + 3.0 * ze;
        fr.push(f);
        en.push(e);
    }
    (fr, en)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_wraps() {
        let m = MarketData::new(
            vec![vec![0.0; 2], vec![0.5; 2], vec![-0.5; 2]],
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
        )
        .unwrap();
        let w = m.window(2, 2);
        assert_eq!(w.fr_price, vec![3.0, 1.0]);
        assert_eq!(w.alpha[1], &[0.0, 0.0]);
    }

    #[test]
    fn resample_averages_blocks() {
        let m = MarketData::new(vec![vec![1.0, 0.0, -1.0, -1.0]], vec![1.0], vec![1.0]).unwrap();
        assert_eq!(m.resampled(2).unwrap().alpha()[0], vec![0.5, -1.0]);
        assert!(m.resampled(3).is_err());
    }
}
