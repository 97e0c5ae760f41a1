//! Lynden-Bell product-limit estimation under random left truncation.
//!
//! With `C_n(y) = n^-1 #{i : t_i <= y <= y_i}`:
//!
//! ```text
//! F_n(y) = 1 - prod_{i : y_i <= y} (n C_n(y_i) - 1) / (n C_n(y_i))
//! G_n(y) =     prod_{i : t_i >  y} (n C_n(t_i) - 1) / (n C_n(t_i))
//! mu_n   = G_n(y) (1 - F_n(y-)) / C_n(y)      for any y with C_n(y) > 0
//! ```
//!
//! Tied values are handled literally: every record contributes its own
//! factor, with the risk set counted by the `<=`/`>=` indicators. The
//! factors then depend only on the multiset of values, not on the order of
//! the records.

use serde::{Deserialize, Serialize};

use crate::{ObservedSample, StepCurve};

/// Sorted copies of the `t` and `y` columns for `O(log n)` risk-set counts.
#[derive(Debug, Clone)]
pub struct RiskSet {
    ts: Vec<f64>,
    ys: Vec<f64>,
}

impl RiskSet {
    pub fn new(sample: &ObservedSample) -> Self {
        let mut ts: Vec<f64> = sample.ts().collect();
        let mut ys: Vec<f64> = sample.ys().collect();
        ts.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        RiskSet { ts, ys }
    }

    pub fn n(&self) -> usize {
        self.ts.len()
    }

    /// `n C_n(y) = #{i : t_i <= y <= y_i}`.
    pub fn count(&self, y: f64) -> usize {
        let t_le = self.ts.partition_point(|&t| t <= y);
        let y_lt = self.ys.partition_point(|&v| v < y);
        t_le - y_lt
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.count(y) as f64 / self.n() as f64
    }

    /// `C_n` as an explicit step curve with jumps at every observed `t_i`
    /// and `y_i`.
    pub fn curve(&self) -> StepCurve {
        let n = self.n() as f64;
        let mut points: Vec<f64> = self.ts.iter().chain(&self.ys).copied().collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        let mut values = Vec::with_capacity(points.len());
        let mut left = Vec::with_capacity(points.len());
        let mut prev_open = 0.0;
        for &p in &points {
            left.push(prev_open);
            values.push(self.count(p) as f64 / n);
            // on (p, next) neither a t nor a y is crossed
            let t_le = self.ts.partition_point(|&t| t <= p);
            let y_le = self.ys.partition_point(|&v| v <= p);
            prev_open = (t_le - y_le) as f64 / n;
        }
        StepCurve::new(points, values, left, 0.0, prev_open).expect("risk-set curve is well formed by construction")
    }
}

/// Distinct sorted values with their multiplicities.
fn distinct_counts(sorted: &[f64]) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &v in sorted {
        match out.last_mut() {
            Some((last, d)) if *last == v => *d += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

fn factor(count: usize, multiplicity: usize) -> f64 {
    debug_assert!(count >= 1);
    let c = count as f64;
    let f = (c - 1.0) / c;
    (0..multiplicity).fold(1.0, |acc, _| acc * f)
}

/// `C_n` of the sample.
pub fn risk_set(sample: &ObservedSample) -> StepCurve {
    RiskSet::new(sample).curve()
}

/// The Lynden-Bell estimator `F_n` of the lifetime distribution.
pub fn lynden_bell_f(sample: &ObservedSample) -> StepCurve {
    lynden_bell_f_with(&RiskSet::new(sample))
}

/// The Lynden-Bell estimator `G_n` of the truncation distribution.
pub fn lynden_bell_g(sample: &ObservedSample) -> StepCurve {
    lynden_bell_g_with(&RiskSet::new(sample))
}

fn lynden_bell_f_with(risk: &RiskSet) -> StepCurve {
    let groups = distinct_counts(&risk.ys);
    let mut survival = 1.0;
    let mut points = Vec::with_capacity(groups.len());
    let mut values = Vec::with_capacity(groups.len());
    for (v, d) in groups {
        survival *= factor(risk.count(v), d);
        points.push(v);
        values.push(1.0 - survival);
    }
    StepCurve::right_continuous(points, values, 0.0).expect("F_n is well formed")
}

fn lynden_bell_g_with(risk: &RiskSet) -> StepCurve {
    let groups = distinct_counts(&risk.ts);
    let mut values = vec![0.0; groups.len()];
    let mut prod = 1.0;
    // G_n on [t_k, t_{k+1}) runs over the strictly larger truncation values
    for (k, &(v, d)) in groups.iter().enumerate().rev() {
        values[k] = prod;
        prod *= factor(risk.count(v), d);
    }
    let points = groups.iter().map(|&(v, _)| v).collect();
    StepCurve::right_continuous(points, values, prod).expect("G_n is well formed")
}

/// Product-limit curves and the truncation probability estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationEstimates {
    pub c_curve: StepCurve,
    pub f_curve: StepCurve,
    pub g_curve: StepCurve,
    /// `mu_n` evaluated at [`TruncationEstimates::mu_eval_point`].
    pub mu_hat: f64,
    /// The observed `y` with maximal `C_n` (smallest such on ties).
    pub mu_eval_point: f64,
    /// `max - min` of the `mu_n` formula over every observed `y_i`.
    pub mu_invariance_spread: f64,
}

impl TruncationEstimates {
    /// The `mu_n` formula at an arbitrary `y`, `None` where `C_n(y) = 0`.
    pub fn mu_at(&self, y: f64) -> Option<f64> {
        mu_formula(&self.c_curve, &self.f_curve, &self.g_curve, y)
    }
}

fn mu_formula(c: &StepCurve, f: &StepCurve, g: &StepCurve, y: f64) -> Option<f64> {
    let cy = c.eval(y);
    (cy > 0.0).then(|| g.eval(y) * (1.0 - f.left_limit(y)) / cy)
}

/// Computes `C_n`, `F_n`, `G_n` and `mu_n`.
pub fn truncation_probability(sample: &ObservedSample) -> TruncationEstimates {
    let risk = RiskSet::new(sample);
    let c_curve = risk.curve();
    let f_curve = lynden_bell_f_with(&risk);
    let g_curve = lynden_bell_g_with(&risk);

    let mut best: Option<(usize, f64, f64)> = None;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(y, _) in &distinct_counts(&risk.ys) {
        let count = risk.count(y);
        let mu = mu_formula(&c_curve, &f_curve, &g_curve, y).expect("every observed y_i lies in its own risk set");
        lo = lo.min(mu);
        hi = hi.max(mu);
        // ys ascend, so a strict comparison keeps the smallest maximiser
        if best.is_none_or(|(c, _, _)| count > c) {
            best = Some((count, y, mu));
        }
    }
    let (_, mu_eval_point, mu_hat) = best.expect("sample is nonempty");
    TruncationEstimates {
        c_curve,
        f_curve,
        g_curve,
        mu_hat,
        mu_eval_point,
        mu_invariance_spread: hi - lo,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Record;
    use proptest::prelude::*;

    fn hand_sample() -> ObservedSample {
        ObservedSample::from_columns(&[0.0, 0.0, 0.0], &[0.5, 0.25, 0.4], &[0.1, 0.2, 0.3]).unwrap()
    }

    // Direct enumeration oracles.
    fn brute_c(s: &ObservedSample, y: f64) -> f64 {
        s.records().iter().filter(|r| r.t <= y && y <= r.y).count() as f64 / s.len() as f64
    }

    fn brute_f(s: &ObservedSample, y: f64) -> f64 {
        let n = s.len() as f64;
        1.0 - s
            .records()
            .iter()
            .filter(|r| r.y <= y)
            .map(|r| {
                let c = n * brute_c(s, r.y);
                (c - 1.0) / c
            })
            .product::<f64>()
    }

    fn brute_g(s: &ObservedSample, y: f64) -> f64 {
        let n = s.len() as f64;
        s.records()
            .iter()
            .filter(|r| r.t > y)
            .map(|r| {
                let c = n * brute_c(s, r.t);
                (c - 1.0) / c
            })
            .product::<f64>()
    }

    #[test]
    fn risk_set_hand_values() {
        let s = hand_sample();
        let c = risk_set(&s);
        assert!((c.eval(0.3) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.eval(0.05), 0.0);
        assert!((c.eval(0.25) - 2.0 / 3.0).abs() < 1e-15);
        for y in [0.0, 0.1, 0.15, 0.2, 0.22, 0.25, 0.26, 0.3, 0.4, 0.45, 0.5, 0.6] {
            assert_eq!(c.eval(y), brute_c(&s, y), "y = {y}");
        }
    }

    #[test]
    fn product_limit_hand_values() {
        let s = hand_sample();
        let f = lynden_bell_f(&s);
        assert!((f.eval(0.3) - 0.5).abs() < 1e-15);
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.left_limit(0.25), 0.0);
        let g = lynden_bell_g(&s);
        assert!((g.eval(0.15) - 0.25).abs() < 1e-15);
        assert_eq!(g.eval(0.35), 1.0);
        assert_eq!(g.eval(0.05), 0.0);
    }

    #[test]
    fn mu_hand_values_and_invariance() {
        let est = truncation_probability(&hand_sample());
        assert!((est.mu_at(0.3).unwrap() - 0.75).abs() < 1e-15);
        assert!((est.mu_at(0.25).unwrap() - 0.75).abs() < 1e-15);
        assert!((est.mu_hat - 0.75).abs() < 1e-15);
        assert!(est.mu_invariance_spread < 1e-15);
        // C_3 is 2/3 at both 0.25 and 0.4; the smaller wins
        assert_eq!(est.mu_eval_point, 0.25);
        assert_eq!(est.mu_at(0.05), None);
    }

    #[test]
    fn single_record() {
        let s = ObservedSample::new(vec![Record::new(0.0, 2.0, 1.0)]).unwrap();
        let est = truncation_probability(&s);
        assert_eq!(est.mu_hat, 1.0);
        assert_eq!(est.g_curve.eval(2.0), 1.0);
        assert_eq!(est.f_curve.eval(2.0), 1.0);
    }

    #[test]
    fn no_truncation_reduces_to_ecdf() {
        let ys = [3.0, 1.0, 4.0, 1.5, 9.0, 2.6];
        let s = ObservedSample::from_columns(&[0.0; 6], &ys, &[0.5, 0.0, 0.2, 0.9, 0.1, 0.3]).unwrap();
        let est = truncation_probability(&s);
        for &y in &ys {
            let ecdf = ys.iter().filter(|&&v| v <= y).count() as f64 / 6.0;
            assert!((est.f_curve.eval(y) - ecdf).abs() < 1e-15);
            assert_eq!(est.g_curve.eval(y), 1.0);
        }
        assert!((est.mu_hat - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ties_use_the_multiset() {
        // two tied lifetimes: each contributes its own factor
        let s = ObservedSample::from_columns(&[0.0; 3], &[1.0, 1.0, 2.0], &[0.0, 0.0, 0.0]).unwrap();
        let f = lynden_bell_f(&s);
        assert!((f.eval(1.0) - brute_f(&s, 1.0)).abs() < 1e-15);
        let shuffled = ObservedSample::from_columns(&[0.0; 3], &[2.0, 1.0, 1.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(lynden_bell_f(&shuffled), f);
    }

    fn arb_sample() -> impl Strategy<Value = ObservedSample> {
        prop::collection::vec((0.0f64..10.0, 0.0f64..10.0, -1.0f64..1.0), 1..40).prop_map(|v| {
            let records = v
                .into_iter()
                .map(|(a, b, x)| Record::new(x, a.max(b), a.min(b)))
                .collect();
            ObservedSample::new(records).unwrap()
        })
    }

    proptest! {
        #[test]
        fn curves_match_brute_force(s in arb_sample(), q in 0.0f64..10.0) {
            let est = truncation_probability(&s);
            prop_assert!(est.f_curve.is_nondecreasing() && est.f_curve.in_unit_interval());
            prop_assert!(est.g_curve.is_nondecreasing() && est.g_curve.in_unit_interval());
            prop_assert!(est.c_curve.in_unit_interval());
            let mut probes: Vec<f64> = s.ys().chain(s.ts()).collect();
            probes.push(q);
            for y in probes {
                prop_assert_eq!(est.c_curve.eval(y), brute_c(&s, y));
                prop_assert!((est.f_curve.eval(y) - brute_f(&s, y)).abs() < 1e-12);
                prop_assert!((est.g_curve.eval(y) - brute_g(&s, y)).abs() < 1e-12);
            }
        }

        #[test]
        fn mu_is_invariant_on_tie_free_samples(s in arb_sample()) {
            let est = truncation_probability(&s);
            prop_assert!(est.mu_invariance_spread <= 1e-9, "spread {}", est.mu_invariance_spread);
            prop_assert!(est.mu_hat >= 0.0 && est.mu_hat <= 1.0 + 1e-12);
        }
    }
}
