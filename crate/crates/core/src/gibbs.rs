//! Gibbs distributions over weight vectors, seeded sampling, and a
//! total-variation noise layer.
//!
//! The exact law for a weight vector `u` is `exp(-u) / ||exp(-u)||_1`,
//! computed with max-subtraction so arbitrarily large weights stay finite.
//! The noise modes perturb the explicit probability vector by at most
//! `delta` in total variation before any sample is drawn, which is the
//! contract downstream solvers consume.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How to perturb the exact Gibbs law before sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// No perturbation.
    Exact,
    /// Mix with the uniform distribution: `(1-delta) p + delta u`.
    UniformMix,
    /// Move `min(delta, p_max)` mass from the largest entry to the smallest
    /// entry (ties broken by lowest index).
    ArgmaxShift,
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "exact" => Ok(NoiseMode::Exact),
            "uniform_mix" => Ok(NoiseMode::UniformMix),
            "argmax_shift" => Ok(NoiseMode::ArgmaxShift),
            other => Err(Error::InputDomain(format!(
                "unknown noise mode {other:?}; expected exact, uniform-mix, or argmax-shift"
            ))),
        }
    }
}

impl std::fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NoiseMode::Exact => f.write_str("exact"),
            NoiseMode::UniformMix => f.write_str("uniform_mix"),
            NoiseMode::ArgmaxShift => f.write_str("argmax_shift"),
        }
    }
}

/// Noise mode plus its total-variation budget, as recorded in artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseDescriptor {
    pub mode: NoiseMode,
    pub delta: f64,
}

impl NoiseDescriptor {
    pub fn exact() -> Self {
        NoiseDescriptor { mode: NoiseMode::Exact, delta: 0.0 }
    }
}

/// A weight vector together with the sampling noise to apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsSpec {
    pub weights: Vec<f64>,
    pub noise_mode: NoiseMode,
    pub delta: f64,
}

impl GibbsSpec {
    pub fn new(weights: Vec<f64>, noise_mode: NoiseMode, delta: f64) -> Result<Self> {
        check_weights(&weights)?;
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InputDomain(format!(
                "delta must lie in [0, 1), got {delta}"
            )));
        }
        Ok(GibbsSpec { weights, noise_mode, delta })
    }

    /// The explicit law a sample is drawn from (exact Gibbs, then noise).
    pub fn law(&self) -> Result<Vec<f64>> {
        let mut p = gibbs_distribution(&self.weights)?;
        perturb_in_place(&mut p, self.noise_mode, self.delta);
        Ok(p)
    }
}

fn check_weights(u: &[f64]) -> Result<()> {
    if u.is_empty() {
        return Err(Error::InputDomain("weight vector is empty".into()));
    }
    if let Some(bad) = u.iter().find(|w| !w.is_finite()) {
        return Err(Error::InputDomain(format!("non-finite weight {bad}")));
    }
    Ok(())
}

/// `p_i = exp(-u_i) / sum_j exp(-u_j)`, renormalized to sum exactly 1.
pub fn gibbs_distribution(u: &[f64]) -> Result<Vec<f64>> {
    check_weights(u)?;
    // exponent of entry i is -(u_i - u_min) <= 0, so every exp is in (0, 1]
    let u_min = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut p: Vec<f64> = u.iter().map(|&w| (-(w - u_min)).exp()).collect();
    let sum: f64 = p.iter().sum();
    for q in &mut p {
        *q /= sum;
    }
    Ok(p)
}

/// Apply `mode` to an explicit probability vector. The perturbed vector is
/// within `delta` of the input in total variation.
pub fn perturb_in_place(p: &mut [f64], mode: NoiseMode, delta: f64) {
    match mode {
        NoiseMode::Exact => {}
        NoiseMode::UniformMix => {
            let n = p.len() as f64;
            for q in p.iter_mut() {
                *q = (1.0 - delta) * *q + delta / n;
            }
        }
        NoiseMode::ArgmaxShift => {
            if p.len() < 2 || delta == 0.0 {
                return;
            }
            let mut hi = 0usize;
            let mut lo = 0usize;
            for (i, &q) in p.iter().enumerate() {
                if q > p[hi] {
                    hi = i;
                }
                if q < p[lo] {
                    lo = i;
                }
            }
            if hi == lo {
                return; // all entries equal
            }
            let mass = delta.min(p[hi]);
            p[hi] -= mass;
            p[lo] += mass;
        }
    }
}

/// Inverse-CDF draw from an explicit probability vector.
pub fn sample_index<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let x: f64 = rng.gen::<f64>();
    let mut acc = 0.0;
    for (i, &q) in p.iter().enumerate() {
        acc += q;
        if x < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Draw one action index from the (possibly noisy) Gibbs law of `spec`.
pub fn sample_gibbs<R: Rng + ?Sized>(spec: &GibbsSpec, rng: &mut R) -> Result<usize> {
    let p = spec.law()?;
    Ok(sample_index(&p, rng))
}

/// Total variation distance `0.5 * sum_i |p_i - q_i|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InputDomain(format!(
            "length mismatch: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::stream_rng;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn uniform_on_equal_weights() {
        let p = gibbs_distribution(&[0.0; 4]).unwrap();
        for q in p {
            assert_close(q, 0.25, 1e-15);
        }
    }

    #[test]
    fn closed_form_two_actions() {
        // e^0 / (e^0 + e^{-ln 2}) = 2/3
        let p = gibbs_distribution(&[0.0, 2.0_f64.ln()]).unwrap();
        assert_close(p[0], 2.0 / 3.0, 1e-12);
        assert_close(p[1], 1.0 / 3.0, 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(gibbs_distribution(&[0.0, f64::NAN]).is_err());
        assert!(gibbs_distribution(&[f64::INFINITY]).is_err());
        assert!(gibbs_distribution(&[]).is_err());
    }

    #[test]
    fn huge_weight_gets_no_mass() {
        let spec = GibbsSpec::new(vec![0.0, 1e9], NoiseMode::Exact, 0.0).unwrap();
        let mut rng = stream_rng(1, 0);
        for _ in 0..100 {
            assert_eq!(sample_gibbs(&spec, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn empirical_frequencies_near_uniform() {
        let spec = GibbsSpec::new(vec![0.0; 4], NoiseMode::Exact, 0.0).unwrap();
        let mut rng = stream_rng(2, 0);
        let mut counts = [0u32; 4];
        let draws = 100_000;
        for _ in 0..draws {
            counts[sample_gibbs(&spec, &mut rng).unwrap()] += 1;
        }
        for c in counts {
            assert_close(c as f64 / draws as f64, 0.25, 0.02);
        }
    }

    #[test]
    fn argmax_shift_zero_delta_is_exact() {
        let u = vec![0.3, 1.1, 0.0];
        let exact = GibbsSpec::new(u.clone(), NoiseMode::Exact, 0.0).unwrap();
        let shifted = GibbsSpec::new(u, NoiseMode::ArgmaxShift, 0.0).unwrap();
        let mut r1 = stream_rng(3, 0);
        let mut r2 = stream_rng(3, 0);
        for _ in 0..50 {
            assert_eq!(
                sample_gibbs(&exact, &mut r1).unwrap(),
                sample_gibbs(&shifted, &mut r2).unwrap()
            );
        }
    }

    #[test]
    fn argmax_shift_moves_mass_to_smallest() {
        let mut p = vec![0.5, 0.3, 0.2];
        perturb_in_place(&mut p, NoiseMode::ArgmaxShift, 0.1);
        assert_close(p[0], 0.4, 1e-15);
        assert_close(p[2], 0.3, 1e-15);
    }

    #[test]
    fn tv_examples() {
        assert_close(tv_distance(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0, 0.0);
        assert_close(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0, 0.0);
        assert_close(tv_distance(&[0.6, 0.4], &[0.5, 0.5]).unwrap(), 0.1, 1e-15);
        assert!(tv_distance(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn chi_square_fit_against_exact_law() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let mut rng = stream_rng(11, 0);
        for case in 0..4u64 {
            let n = [3usize, 7, 12, 16][case as usize];
            let mut gen = stream_rng(100 + case, 0);
            let u: Vec<f64> = (0..n).map(|_| gen.gen_range(0.0..2.0)).collect();
            let p = gibbs_distribution(&u).unwrap();
            let spec = GibbsSpec::new(u, NoiseMode::Exact, 0.0).unwrap();
            let draws = 100_000u32;
            let mut counts = vec![0u32; n];
            for _ in 0..draws {
                counts[sample_gibbs(&spec, &mut rng).unwrap()] += 1;
            }
            let stat: f64 = counts
                .iter()
                .zip(&p)
                .map(|(&c, &q)| {
                    let expect = q * draws as f64;
                    (c as f64 - expect).powi(2) / expect
                })
                .sum();
            let crit = ChiSquared::new((n - 1) as f64)
                .unwrap()
                .inverse_cdf(1.0 - 1e-4);
            assert!(stat <= crit, "n={n}: chi2 {stat} > critical {crit}");
        }
    }

    proptest! {
        #[test]
        fn law_is_on_simplex(u in prop::collection::vec(-50.0..50.0f64, 1..20)) {
            let p = gibbs_distribution(&u).unwrap();
            prop_assert!(p.iter().all(|&q| q >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn shift_invariance(
            u in prop::collection::vec(-10.0..10.0f64, 1..12),
            c in -1e6..1e6f64,
        ) {
            let p = gibbs_distribution(&u).unwrap();
            let shifted: Vec<f64> = u.iter().map(|w| w + c).collect();
            let q = gibbs_distribution(&shifted).unwrap();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn lower_weight_gets_more_mass(
            u in prop::collection::vec(-5.0..5.0f64, 2..10),
        ) {
            let p = gibbs_distribution(&u).unwrap();
            for i in 0..u.len() {
                for j in 0..u.len() {
                    if u[i] < u[j] - 1e-9 {
                        prop_assert!(p[i] > p[j]);
                    }
                }
            }
        }

        #[test]
        fn noise_respects_tv_budget(
            u in prop::collection::vec(-5.0..5.0f64, 2..10),
            delta in 0.0..0.99f64,
            adversarial in proptest::bool::ANY,
        ) {
            let mode = if adversarial { NoiseMode::ArgmaxShift } else { NoiseMode::UniformMix };
            let exact = gibbs_distribution(&u).unwrap();
            let noisy = GibbsSpec::new(u, mode, delta).unwrap().law().unwrap();
            prop_assert!(noisy.iter().all(|&q| q >= -1e-15));
            prop_assert!((noisy.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(tv_distance(&noisy, &exact).unwrap() <= delta + 1e-12);
        }
    }
}
