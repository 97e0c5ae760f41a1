//! Oracles shared by the integration tests. Nothing here calls into the
//! estimator code paths it is used to check.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use truncq::{KernelSpec, ObservedSample, Record, SmootherSpec};

/// Composite Simpson rule with `panels` (rounded up to even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Plain Nadaraya-Watson smoothed ECDF `sum K_i H_i / sum K_i`, summed in
/// record order, with `0/0 = 0`.
pub fn nadaraya_watson_cdf(
    sample: &ObservedSample,
    kernel: KernelSpec,
    smoother: SmootherSpec,
    h: f64,
    x: f64,
    y: f64,
) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for r in sample.records() {
        let k = kernel.eval((x - r.x) / h);
        num += k * smoother.cdf((y - r.y) / h);
        den += k;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// A random sample in which every `t_i` lies below every `y_j`.
pub fn untruncated_sample(rng: &mut ChaCha8Rng, n: usize) -> ObservedSample {
    let floor = rng.random_range(0.5..2.0);
    let records = (0..n)
        .map(|_| {
            let x = rng.random_range(-2.0..2.0);
            let y = floor + rng.random_range(0.0..3.0);
            let t = floor - rng.random_range(1e-6..2.0);
            Record::new(x, y, t)
        })
        .collect();
    ObservedSample::new(records).unwrap()
}

/// A random truncated sample: `(y, t)` pairs drawn independently and kept
/// when `y >= t`.
pub fn truncated_sample(rng: &mut ChaCha8Rng, n: usize) -> ObservedSample {
    let mut records = Vec::with_capacity(n);
    while records.len() < n {
        let x: f64 = rng.random_range(-2.0..2.0);
        let y = 2.0 + x.sin() + rng.random_range(-1.0..1.0);
        let t = rng.random_range(0.0..4.0);
        if y >= t {
            records.push(Record::new(x, y, t));
        }
    }
    ObservedSample::new(records).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
