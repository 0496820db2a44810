//! Sample-based MWU solver for coarse correlated equilibria.
//!
//! Each round, every player samples an action from the (optionally noisy)
//! Gibbs law over its accumulated realized losses, then pays `n` queries to
//! extend the accumulator with the freshly realized profile. With exact
//! sampling this is the classical `O(m n T)`-query algorithm; the noise
//! modes stress the total-variation robustness of the guarantee.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dist::JointDistribution;
use crate::error::{Error, Result};
use crate::game::{NormalFormGame, QueryCounter};
use crate::gibbs::{gibbs_distribution, perturb_in_place, sample_index, NoiseDescriptor, NoiseMode};
use crate::seeds::stream_rng;

/// Derived run parameters:
/// `T = ceil(max(64 B^2 ln n, 512 B^2 ln(4/alpha)) / eps^2)`,
/// `eta = sqrt(ln n / T) / B`, `delta = eps / (16 B (n-1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CceParams {
    pub rounds: u64,
    pub eta: f64,
    pub delta: f64,
}

pub fn cce_params(eps: f64, loss_bound: f64, actions: usize, alpha: f64) -> Result<CceParams> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InputDomain(format!("eps must be > 0, got {eps}")));
    }
    if !(loss_bound.is_finite() && loss_bound > 0.0) {
        return Err(Error::InputDomain(format!(
            "loss bound must be > 0, got {loss_bound}"
        )));
    }
    if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
        return Err(Error::InputDomain(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    if actions < 2 {
        return Err(Error::InputDomain(
            "cce_params needs n >= 2; a single action is a trivial point mass".into(),
        ));
    }
    let b2 = loss_bound * loss_bound;
    let n = actions as f64;
    let t = (64.0 * b2 * n.ln() / (eps * eps))
        .max(512.0 * b2 * (4.0 / alpha).ln() / (eps * eps))
        .ceil();
    if !t.is_finite() || t > i64::MAX as f64 {
        return Err(Error::PaperScaleInfeasible(format!(
            "T = {t} is not representable; supply a rounds override (T)"
        )));
    }
    let rounds = t as u64;
    Ok(CceParams {
        rounds,
        eta: (n.ln() / rounds as f64).sqrt() / loss_bound,
        delta: eps / (16.0 * loss_bound * (n as f64 - 1.0)),
    })
}

/// Result of a CCE run: empirical marginals (exact multiples of `1/T`), the
/// sampled profile per round, and exact query accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CceResult {
    pub params: CceParams,
    pub noise: NoiseDescriptor,
    pub seed: u64,
    /// Marginal numerators: `marginal_counts[i][a]` over denominator
    /// `rounds`.
    pub marginal_counts: Vec<Vec<u64>>,
    /// Flattened `rounds x players` matrix of sampled actions.
    pub joint_samples: Vec<u32>,
    pub players: usize,
    pub actions: usize,
    pub rounds: u64,
    /// Per-player accumulated realized loss vectors after the last round.
    pub final_cumulative_loss: Vec<Vec<f64>>,
    pub query_count: u64,
    /// False when the round count was overridden.
    pub paper_scale: bool,
}

impl CceResult {
    /// Empirical marginals `x_i`; entries are integer multiples of
    /// `1/rounds`.
    pub fn marginals(&self) -> Vec<Vec<f64>> {
        self.marginal_counts
            .iter()
            .map(|counts| {
                counts
                    .iter()
                    .map(|&c| c as f64 / self.rounds as f64)
                    .collect()
            })
            .collect()
    }

    pub fn sampled_profile(&self, t: usize) -> &[u32] {
        &self.joint_samples[t * self.players..(t + 1) * self.players]
    }

    /// Product of the empirical marginals (kept symbolic).
    pub fn product_distribution(&self) -> Result<JointDistribution> {
        JointDistribution::product(self.marginals())
    }

    /// Uniform distribution over the sampled profiles, with multiplicities.
    pub fn empirical_distribution(&self) -> Result<JointDistribution> {
        let mut support = std::collections::BTreeMap::new();
        let weight = 1.0 / self.rounds as f64;
        for t in 0..self.rounds as usize {
            *support
                .entry(self.sampled_profile(t).to_vec())
                .or_insert(0.0) += weight;
        }
        JointDistribution::sparse(self.players, self.actions, support)
    }

    pub fn to_json(&self) -> Result<Value> {
        let mut v = serde_json::to_value(self)?;
        v["format"] = Value::from("nfg-cce-result-v1");
        Ok(v)
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        if value.get("format") != Some(&Value::from("nfg-cce-result-v1")) {
            return Err(Error::Format("not an nfg-cce-result-v1 file".into()));
        }
        let result: CceResult = serde_json::from_value(value.clone())
            .map_err(|e| Error::Format(format!("malformed cce result: {e}")))?;
        if result.joint_samples.len() != result.rounds as usize * result.players {
            return Err(Error::Format("joint sample matrix has wrong shape".into()));
        }
        Ok(result)
    }
}

/// Both deviation targets built from one result.
#[derive(Debug, Clone)]
pub struct CceDistributions {
    pub product: JointDistribution,
    pub empirical: JointDistribution,
}

pub fn cce_distributions(result: &CceResult) -> Result<CceDistributions> {
    Ok(CceDistributions {
        product: result.product_distribution()?,
        empirical: result.empirical_distribution()?,
    })
}

/// Run the sampler for `T` rounds (derived unless overridden). Exactly
/// `m * n * T` queries are spent: `n` per player per round to extend the
/// cumulative loss vectors with the realized opponent profile.
pub fn solve_cce(
    game: &NormalFormGame,
    eps: f64,
    alpha: f64,
    rounds_override: Option<u64>,
    noise_mode: NoiseMode,
    noise_delta: Option<f64>,
    seed: u64,
) -> Result<CceResult> {
    let m = game.players();
    let n = game.actions();

    if n == 1 {
        // every marginal is a point mass; nothing to sample or query
        return Ok(CceResult {
            params: CceParams { rounds: 1, eta: 0.0, delta: 0.0 },
            noise: NoiseDescriptor { mode: noise_mode, delta: 0.0 },
            seed,
            marginal_counts: vec![vec![1]; m],
            joint_samples: vec![0; m],
            players: m,
            actions: n,
            rounds: 1,
            final_cumulative_loss: vec![vec![0.0]; m],
            query_count: 0,
            paper_scale: rounds_override.is_none(),
        });
    }

    let derived = cce_params(eps, game.loss_bound(), n, alpha)?;
    let rounds = match rounds_override {
        Some(t) if t >= 1 => t,
        Some(t) => {
            return Err(Error::InputDomain(format!("rounds override {t} must be >= 1")));
        }
        None => derived.rounds,
    };
    let eta = ((n as f64).ln() / rounds as f64).sqrt() / game.loss_bound();
    let params = CceParams { rounds, eta, delta: derived.delta };
    let delta = match noise_mode {
        NoiseMode::Exact => 0.0,
        _ => {
            let d = noise_delta.unwrap_or(params.delta);
            if !(0.0..1.0).contains(&d) {
                return Err(Error::InputDomain(format!(
                    "noise delta must be in [0, 1), got {d}"
                )));
            }
            d
        }
    };

    let counter = QueryCounter::new();
    let mut cumulative = vec![vec![0.0; n]; m];
    let mut marginal_counts = vec![vec![0u64; n]; m];
    let mut joint_samples = Vec::with_capacity(rounds as usize * m);
    let mut rngs: Vec<_> = (0..m).map(|i| stream_rng(seed, i as u64 + 1)).collect();
    let mut profile = vec![0u32; m];
    let mut weights = vec![0.0; n];

    for _t in 0..rounds {
        for i in 0..m {
            for (w, l) in weights.iter_mut().zip(&cumulative[i]) {
                *w = eta * l;
            }
            let mut law = gibbs_distribution(&weights)?;
            perturb_in_place(&mut law, noise_mode, delta);
            profile[i] = sample_index(&law, &mut rngs[i]) as u32;
        }
        joint_samples.extend_from_slice(&profile);
        for i in 0..m {
            marginal_counts[i][profile[i] as usize] += 1;
            let own = profile[i];
            for j in 0..n as u32 {
                profile[i] = j;
                cumulative[i][j as usize] += game.loss_counted(i, &profile, &counter);
            }
            profile[i] = own;
        }
    }

    Ok(CceResult {
        params,
        noise: NoiseDescriptor { mode: noise_mode, delta },
        seed,
        marginal_counts,
        joint_samples,
        players: m,
        actions: n,
        rounds,
        final_cumulative_loss: cumulative,
        query_count: counter.count(),
        paper_scale: rounds_override.is_none(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{verify_cce, VerifyMode};

    #[test]
    fn params_examples() {
        let p = cce_params(1.0, 1.0, 2, 0.5).unwrap();
        assert_eq!(p.rounds, 1065);
        assert!((p.eta - (2.0_f64.ln() / 1065.0).sqrt()).abs() < 1e-12);

        let p = cce_params(0.3, 1.0, 4, 0.1).unwrap();
        assert!((p.delta - 0.00625).abs() < 1e-15);

        assert!(cce_params(0.3, 1.0, 1, 0.1).is_err());
        assert!(cce_params(0.0, 1.0, 4, 0.1).is_err());
    }

    #[test]
    fn query_count_is_exactly_mnt() {
        let game = NormalFormGame::random_seeded(3, 4, 1.0, 5).unwrap();
        let r = solve_cce(&game, 0.5, 0.2, Some(200), NoiseMode::Exact, None, 11).unwrap();
        assert_eq!(r.query_count, 3 * 4 * 200);
        assert_eq!(r.joint_samples.len(), 200 * 3);
    }

    #[test]
    fn marginals_are_exact_multiples_of_one_over_t() {
        let game = NormalFormGame::random_seeded(2, 3, 1.0, 6).unwrap();
        let r = solve_cce(&game, 0.5, 0.2, Some(64), NoiseMode::Exact, None, 12).unwrap();
        for (i, marg) in r.marginals().iter().enumerate() {
            let total: u64 = r.marginal_counts[i].iter().sum();
            assert_eq!(total, 64);
            for (a, &p) in marg.iter().enumerate() {
                assert_eq!(p, r.marginal_counts[i][a] as f64 / 64.0);
            }
            assert!((marg.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn internal_cumulative_matches_rederivation_from_samples() {
        let game = NormalFormGame::random_seeded(3, 3, 1.0, 7).unwrap();
        let r = solve_cce(&game, 0.5, 0.2, Some(150), NoiseMode::Exact, None, 13).unwrap();
        let scratch = QueryCounter::new();
        let mut rederived = vec![vec![0.0; 3]; 3];
        for t in 0..150 {
            let mut probe = r.sampled_profile(t).to_vec();
            for i in 0..3 {
                let own = probe[i];
                for j in 0..3u32 {
                    probe[i] = j;
                    rederived[i][j as usize] +=
                        game.loss_query(i, &probe, &scratch).unwrap();
                }
                probe[i] = own;
            }
        }
        for (a, b) in rederived.iter().flatten().zip(r.final_cumulative_loss.iter().flatten()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_player_concentrates_on_argmin() {
        // one player, distinct fixed losses: the run should put >= 1 - eps
        // of its marginal on the argmin action
        let losses = vec![0.9, 0.1, 0.5, 0.7];
        let game = NormalFormGame::explicit(1, 4, 1.0, losses).unwrap();
        let r = solve_cce(&game, 0.2, 0.1, None, NoiseMode::Exact, None, 3).unwrap();
        assert!(r.paper_scale);
        let marg = &r.marginals()[0];
        assert!(marg[1] >= 0.8, "mass on argmin was {}", marg[1]);
    }

    #[test]
    fn all_equal_losses_give_zero_gap() {
        let game = NormalFormGame::explicit(2, 2, 1.0, vec![0.5; 8]).unwrap();
        let r = solve_cce(&game, 0.4, 0.2, Some(300), NoiseMode::Exact, None, 4).unwrap();
        let c = QueryCounter::new();
        let report = verify_cce(
            &game,
            &r.product_distribution().unwrap(),
            0.0,
            VerifyMode::Exact,
            0,
            &c,
        )
        .unwrap();
        assert!(report.max_gap().abs() <= 1e-12);
    }

    #[test]
    fn single_action_short_circuits() {
        let game = NormalFormGame::explicit(2, 1, 1.0, vec![0.3, 0.3]).unwrap();
        let r = solve_cce(&game, 0.5, 0.2, None, NoiseMode::Exact, None, 5).unwrap();
        assert_eq!(r.query_count, 0);
        assert_eq!(r.marginals(), vec![vec![1.0], vec![1.0]]);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let game = NormalFormGame::random_seeded(2, 4, 1.0, 8).unwrap();
        let a = solve_cce(&game, 0.5, 0.2, Some(100), NoiseMode::ArgmaxShift, None, 21).unwrap();
        let b = solve_cce(&game, 0.5, 0.2, Some(100), NoiseMode::ArgmaxShift, None, 21).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distributions_product_vs_empirical_shapes() {
        let game = NormalFormGame::random_seeded(2, 2, 1.0, 9).unwrap();
        let r = solve_cce(&game, 0.5, 0.2, Some(16), NoiseMode::Exact, None, 6).unwrap();
        let d = cce_distributions(&r).unwrap();
        assert_eq!(d.product.players(), 2);
        assert!(d.empirical.support_size().unwrap() <= 4);
    }

    #[test]
    fn result_json_round_trip() {
        let game = NormalFormGame::random_seeded(2, 3, 1.0, 10).unwrap();
        let r = solve_cce(&game, 0.5, 0.2, Some(32), NoiseMode::UniformMix, None, 7).unwrap();
        let back = CceResult::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(r, back);
    }

    #[test]
    fn matching_pennies_marginals_near_uniform() {
        // zero-sum 2x2: row player loses 1 on a match, column player loses
        // 1 on a mismatch
        let mut losses = vec![0.0; 8];
        for a in 0..2usize {
            for b in 0..2usize {
                losses[a * 2 + b] = if a == b { 1.0 } else { 0.0 };
                losses[4 + a * 2 + b] = if a == b { 0.0 } else { 1.0 };
            }
        }
        let game = NormalFormGame::explicit(2, 2, 1.0, losses).unwrap();
        let mut passes = 0;
        for seed in 0..6u64 {
            let r = solve_cce(&game, 0.1, 0.1, None, NoiseMode::Exact, None, seed).unwrap();
            let ok = r.marginals().iter().all(|marg| {
                marg.iter().all(|&p| (p - 0.5).abs() <= 0.1)
            });
            if ok {
                passes += 1;
            }
        }
        assert!(passes > 3, "only {passes}/6 seeds stayed near uniform");
    }
}
