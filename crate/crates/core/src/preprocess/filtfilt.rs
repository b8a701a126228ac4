use super::butterworth::SosFilter;
use crate::error::{Error, Result};

/// Steady-state section states for a unit step input, one `[z0, z1]` per section.
pub fn sosfilt_zi(f: &SosFilter) -> Vec<[f64; 2]> {
    let mut scale = 1.0;
    f.sections
        .iter()
        .map(|s| {
            let (b, a) = (s.b, s.a);
            let r0 = b[1] - a[1] * b[0];
            let r1 = b[2] - a[2] * b[0];
            let z0 = (r0 + r1) / (1.0 + a[1] + a[2]);
            let z1 = r1 - a[2] * z0;
            let zi = [scale * z0, scale * z1];
            scale *= (b[0] + b[1] + b[2]) / (a[0] + a[1] + a[2]);
            zi
        })
        .collect()
}

/// Single forward pass (transposed direct form II), updating `state` in place.
pub fn sosfilt(f: &SosFilter, x: &[f64], state: &mut [[f64; 2]]) -> Vec<f64> {
    assert_eq!(state.len(), f.sections.len(), "one state per section");
    let mut y = x.to_vec();
    for (s, z) in f.sections.iter().zip(state.iter_mut()) {
        let (b, a) = (s.b, s.a);
        for v in y.iter_mut() {
            let xin = *v;
            let out = b[0] * xin + z[0];
            z[0] = b[1] * xin - a[1] * out + z[1];
            z[1] = b[2] * xin - a[2] * out;
            *v = out;
        }
    }
    y
}

fn run_from_steady_state(f: &SosFilter, zi: &[[f64; 2]], x: &[f64]) -> Vec<f64> {
    let x0 = x[0];
    let mut state: Vec<[f64; 2]> = zi.iter().map(|z| [z[0] * x0, z[1] * x0]).collect();
    sosfilt(f, x, &mut state)
}

/// Zero-phase forward-backward filtering with odd reflection at both edges.
///
/// Each edge is extended by `f.pad_len()` samples as `2·x[edge] − x[mirror]`,
/// both passes start from the step steady state scaled by their first sample,
/// and the padding is stripped from the result.
pub fn filtfilt(f: &SosFilter, x: &[f64]) -> Result<Vec<f64>> {
    let pad = f.pad_len();
    if x.len() <= pad {
        return Err(Error::Length { len: x.len(), min: pad });
    }
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    let zi = sosfilt_zi(f);
    let mut y = run_from_steady_state(f, &zi, &ext);
    y.reverse();
    let mut y = run_from_steady_state(f, &zi, &y);
    y.reverse();
    Ok(y[pad..pad + n].to_vec())
}
