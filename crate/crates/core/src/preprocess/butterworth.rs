use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One second-order section; `a[0]` is always 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    /// Roots of `z² + a1·z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let (a1, a2) = (self.a[1], self.a[2]);
        let disc = Complex64::new(a1 * a1 - 4.0 * a2, 0.0).sqrt();
        [(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }

    fn response(&self, zinv: Complex64) -> Complex64 {
        let z2 = zinv * zinv;
        (self.b[0] + self.b[1] * zinv + self.b[2] * z2) / (self.a[0] + self.a[1] * zinv + self.a[2] * z2)
    }

    pub fn as_row(&self) -> [f64; 6] {
        [self.b[0], self.b[1], self.b[2], self.a[0], self.a[1], self.a[2]]
    }
}

/// Cascade of biquads plus the design it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
    pub order: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub sample_rate_hz: f64,
}

impl SosFilter {
    /// Complex response of the cascade at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let zinv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(zinv))
    }

    pub fn gain(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.sections.iter().flat_map(|s| s.poles()).collect()
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0)
    }

    /// Number of samples reflected onto each edge by [`super::filtfilt`].
    pub fn pad_len(&self) -> usize {
        3 * 2 * self.order
    }
}

/// Digital Butterworth bandpass of `order` (giving `2·order` poles), realised as
/// second-order sections.
pub fn design_butterworth_bandpass(order: usize, low_hz: f64, high_hz: f64, sample_rate_hz: f64) -> Result<SosFilter> {
    if order == 0 {
        return Err(Error::Design("order must be at least 1".into()));
    }
    if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
        return Err(Error::Design(format!("sample rate {sample_rate_hz} must be positive")));
    }
    if !(low_hz > 0.0) || !(high_hz > 0.0) {
        return Err(Error::Design(format!(
            "cutoffs must be positive, got {low_hz} and {high_hz}"
        )));
    }
    let nyquist = sample_rate_hz / 2.0;
    if high_hz >= nyquist || low_hz >= nyquist {
        return Err(Error::Design(format!(
            "cutoff {} Hz is at or above the Nyquist frequency {nyquist} Hz",
            high_hz.max(low_hz)
        )));
    }
    if low_hz >= high_hz {
        return Err(Error::Design(format!(
            "low cutoff {low_hz} must be below high cutoff {high_hz}"
        )));
    }

    // Prewarp with the bilinear transform at an internal rate of 2.
    let fs = 2.0;
    let warp = |f: f64| 2.0 * fs * (PI * (f / nyquist) / fs).tan();
    let (w1, w2) = (warp(low_hz), warp(high_hz));

    let (z, p, k) = analog_prototype(order);
    let (z, p, k) = lowpass_to_bandpass(&z, &p, k, (w1 * w2).sqrt(), w2 - w1);
    let (z, p, k) = bilinear(&z, &p, k, fs);
    let sections = zpk_to_sos(z, p, k)?;

    Ok(SosFilter {
        sections,
        order,
        low_hz,
        high_hz,
        sample_rate_hz,
    })
}

type Zpk = (Vec<Complex64>, Vec<Complex64>, f64);

fn analog_prototype(order: usize) -> Zpk {
    let n = order as i64;
    let poles = (0..n)
        .map(|i| {
            let m = -n + 1 + 2 * i;
            -Complex64::new(0.0, PI * m as f64 / (2.0 * n as f64)).exp()
        })
        .collect();
    (Vec::new(), poles, 1.0)
}

fn lowpass_to_bandpass(z: &[Complex64], p: &[Complex64], k: f64, wo: f64, bw: f64) -> Zpk {
    let degree = p.len() - z.len();
    let shift = |roots: &[Complex64]| -> Vec<Complex64> {
        let scaled: Vec<Complex64> = roots.iter().map(|r| r * bw / 2.0).collect();
        let root = |r: &Complex64| (r * r - wo * wo).sqrt();
        let plus = scaled.iter().map(|r| r + root(r));
        let minus = scaled.iter().map(|r| r - root(r));
        plus.chain(minus).collect()
    };
    let mut zb = shift(z);
    zb.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), degree));
    (zb, shift(p), k * bw.powi(degree as i32))
}

fn bilinear(z: &[Complex64], p: &[Complex64], k: f64, fs: f64) -> Zpk {
    let fs2 = 2.0 * fs;
    let degree = p.len() - z.len();
    let map = |r: &Complex64| (fs2 + r) / (fs2 - r);
    let mut zd: Vec<Complex64> = z.iter().map(map).collect();
    zd.extend(std::iter::repeat_n(Complex64::new(-1.0, 0.0), degree));
    let pd = p.iter().map(map).collect();
    let num: Complex64 = z.iter().map(|r| fs2 - r).product();
    let den: Complex64 = p.iter().map(|r| fs2 - r).product();
    (zd, pd, k * (num / den).re)
}

/// Splits roots into one representative of each conjugate pair (positive
/// imaginary part) followed by the real roots, each group sorted by real part.
fn split_conjugates(roots: &[Complex64]) -> Result<Vec<Complex64>> {
    let tol = 100.0 * f64::EPSILON;
    let mut sorted = roots.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.abs().total_cmp(&b.im.abs())));
    let is_real = |r: &Complex64| r.im.abs() <= tol * r.norm();
    let reals: Vec<Complex64> = sorted
        .iter()
        .filter(|r| is_real(r))
        .map(|r| Complex64::new(r.re, 0.0))
        .collect();
    let upper: Vec<Complex64> = sorted.iter().filter(|r| !is_real(r) && r.im > 0.0).copied().collect();
    let mut lower: Vec<Complex64> = sorted.iter().filter(|r| !is_real(r) && r.im < 0.0).copied().collect();
    if upper.len() != lower.len() {
        return Err(Error::Design("complex roots do not form conjugate pairs".into()));
    }
    let mut pairs = Vec::with_capacity(upper.len());
    for u in upper {
        let (j, _) = lower
            .iter()
            .enumerate()
            .map(|(j, l)| (j, (u - l.conj()).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        let l = lower.remove(j);
        if (u - l.conj()).norm() > tol * u.norm().max(1.0) * 1e6 {
            return Err(Error::Design("complex roots do not form conjugate pairs".into()));
        }
        pairs.push((u + l.conj()) / 2.0);
    }
    pairs.extend(reals);
    Ok(pairs)
}

#[derive(Clone, Copy, PartialEq)]
enum Want {
    Any,
    Real,
    Complex,
}

fn nearest(from: &[Complex64], to: Complex64, want: Want) -> Option<usize> {
    let mut order: Vec<usize> = (0..from.len()).collect();
    order.sort_by(|&a, &b| (from[a] - to).norm().total_cmp(&(from[b] - to).norm()));
    order.into_iter().find(|&i| match want {
        Want::Any => true,
        Want::Real => from[i].im == 0.0,
        Want::Complex => from[i].im != 0.0,
    })
}

/// Real polynomial with the given roots, right-aligned into three slots.
fn section_poly(roots: &[Complex64]) -> [f64; 3] {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, v) in c.iter().enumerate() {
            next[i] += v;
            next[i + 1] -= v * r;
        }
        c = next;
    }
    let mut out = [0.0; 3];
    for (slot, v) in out[3 - c.len()..].iter_mut().zip(&c) {
        *slot = v.re;
    }
    out
}

/// Pairs poles with nearest zeros, working from the poles closest to the unit
/// circle, and places them into sections in reverse order so the last section
/// carries those poles. The gain goes into the first section.
fn zpk_to_sos(mut z: Vec<Complex64>, mut p: Vec<Complex64>, k: f64) -> Result<Vec<Biquad>> {
    let n = z.len().max(p.len());
    z.resize(n, Complex64::new(0.0, 0.0));
    p.resize(n, Complex64::new(0.0, 0.0));
    let n_sections = n.div_ceil(2);
    if n % 2 == 1 {
        z.push(Complex64::new(0.0, 0.0));
        p.push(Complex64::new(0.0, 0.0));
    }
    let mut z = split_conjugates(&z)?;
    let mut p = split_conjugates(&p)?;

    let mut sections = vec![
        Biquad {
            b: [0.0; 3],
            a: [0.0; 3]
        };
        n_sections
    ];
    for si in (0..n_sections).rev() {
        let p1_idx = (0..p.len())
            .min_by(|&a, &b| (1.0 - p[a].norm()).abs().total_cmp(&(1.0 - p[b].norm()).abs()))
            .ok_or_else(|| Error::Design("ran out of poles".into()))?;
        let p1 = p.remove(p1_idx);
        let p1_real = p1.im == 0.0;
        let n_real_p = p.iter().filter(|r| r.im == 0.0).count();

        let zero = Complex64::new(0.0, 0.0);
        let n_real_z = z.iter().filter(|r| r.im == 0.0).count();
        let (zs, ps): (Vec<Complex64>, Vec<Complex64>) = if p1_real && n_real_p == 0 {
            // Lone real pole: first-order section with the nearest real zero.
            let zi = nearest(&z, p1, Want::Real).ok_or_else(|| Error::Design("no real zero left".into()))?;
            let z1 = z.remove(zi);
            (vec![z1, zero], vec![p1, zero])
        } else if p.len() + 1 == z.len() && !p1_real && n_real_p == 1 && n_real_z == 1 {
            // Keep the last real pole and zero together by using a complex zero here.
            let zi = nearest(&z, p1, Want::Complex).ok_or_else(|| Error::Design("no complex zero left".into()))?;
            let z1 = z.remove(zi);
            (vec![z1, z1.conj()], vec![p1, p1.conj()])
        } else {
            let p2 = if p1_real {
                let real: Vec<usize> = (0..p.len()).filter(|&i| p[i].im == 0.0).collect();
                let best = real
                    .into_iter()
                    .min_by(|&a, &b| (p[a] - p1).norm().total_cmp(&(p[b] - p1).norm()))
                    .expect("a real pole remains");
                p.remove(best)
            } else {
                p1.conj()
            };
            let zs = match nearest(&z, p1, Want::Any) {
                None => Vec::new(),
                Some(zi) => {
                    let z1 = z.remove(zi);
                    if z1.im != 0.0 {
                        vec![z1, z1.conj()]
                    } else if z.is_empty() {
                        vec![z1]
                    } else {
                        let zj =
                            nearest(&z, p1, Want::Real).ok_or_else(|| Error::Design("no real zero to pair".into()))?;
                        vec![z1, z.remove(zj)]
                    }
                }
            };
            (zs, vec![p1, p2])
        };
        sections[si] = Biquad {
            b: section_poly(&zs),
            a: section_poly(&ps),
        };
    }
    if !p.is_empty() || !z.is_empty() {
        return Err(Error::Design("roots left over after pairing".into()));
    }
    for v in sections[0].b.iter_mut() {
        *v *= k;
    }
    Ok(sections)
}
