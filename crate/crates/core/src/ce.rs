//! Sample-based multi-scale MWU solver for correlated equilibria.
//!
//! Each round, every player draws `S` actions by picking a scale uniformly
//! and sampling the (optionally noisy) Gibbs law over that scale's windowed
//! loss sum; the draw law is therefore exactly the uniform scale mixture.
//! The `S` joint profiles are stored, and each player then pays `n * S`
//! queries to turn them into the round's average loss vector, which the
//! per-scale accumulators fold in at block boundaries. The certificate
//! carries the sample store, the per-round mixture strategies when memory
//! permits, and exact query accounting (`m * n * S * T` in sampled mode).

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dist::JointDistribution;
use crate::error::{Error, Result};
use crate::game::{NormalFormGame, QueryCounter};
use crate::gibbs::{gibbs_distribution, perturb_in_place, sample_index, NoiseDescriptor, NoiseMode};
use crate::mwu::{ms_params, ms_schedule, ms_window_bounds, MsOverrides, MsParams};
use crate::seeds::stream_rng;

/// Retain dense per-round strategies only while `n * m * T` stays under
/// this cap.
pub const STRATEGY_RETENTION_CAP: u64 = 10_000_000;

/// How the per-round loss vectors are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Average the loss over the `S` stored opponent profiles.
    Sampled,
    /// Integrate the loss exactly against the opponents' round strategies;
    /// the `S -> infinity` limit of sampled estimation, for consistency
    /// checks on small games.
    ExactExpectation,
}

/// All joint profiles stored during a run, `S` per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStore {
    pub players: usize,
    pub samples_per_round: usize,
    pub rounds: usize,
    /// Row-major `[round][sample][player]`.
    pub data: Vec<u32>,
}

impl SampleStore {
    fn with_capacity(players: usize, samples_per_round: usize, rounds_hint: usize) -> Self {
        SampleStore {
            players,
            samples_per_round,
            rounds: 0,
            data: Vec::with_capacity(players * samples_per_round * rounds_hint),
        }
    }

    fn push_round(&mut self, flat_profiles: &[u32]) {
        debug_assert_eq!(flat_profiles.len(), self.players * self.samples_per_round);
        self.data.extend_from_slice(flat_profiles);
        self.rounds += 1;
    }

    /// Profile `s` of round `t` (both 0-indexed).
    pub fn profile(&self, t: usize, s: usize) -> &[u32] {
        let base = (t * self.samples_per_round + s) * self.players;
        &self.data[base..base + self.players]
    }

    pub fn len(&self) -> usize {
        self.rounds * self.samples_per_round
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Certificate of a CE run; its verified object is the round mixture
/// `(1/T) sum_t prod_i p_{i,t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeCertificate {
    pub params: MsParams,
    pub noise: NoiseDescriptor,
    pub seed: u64,
    pub loss_mode: LossMode,
    pub sample_store: SampleStore,
    /// `[round][player][action]`, retained while `n * m * T` is under
    /// [`STRATEGY_RETENTION_CAP`].
    pub per_round_strategies: Option<Vec<Vec<Vec<f64>>>>,
    pub query_count: u64,
    pub paper_scale: bool,
}

impl CeCertificate {
    /// The output mixture distribution; needs retained strategies.
    pub fn mixture_distribution(&self) -> Result<JointDistribution> {
        let strategies = self.per_round_strategies.as_ref().ok_or_else(|| {
            Error::InternalState(
                "per-round strategies were not retained; verify the empirical store instead"
                    .into(),
            )
        })?;
        let t = strategies.len();
        JointDistribution::mixture(vec![1.0 / t as f64; t], strategies.clone())
    }

    /// Uniform distribution over every stored profile.
    pub fn empirical_distribution(&self) -> Result<JointDistribution> {
        let mut support = std::collections::BTreeMap::new();
        let total = self.sample_store.len();
        let weight = 1.0 / total as f64;
        for t in 0..self.sample_store.rounds {
            for s in 0..self.sample_store.samples_per_round {
                *support
                    .entry(self.sample_store.profile(t, s).to_vec())
                    .or_insert(0.0) += weight;
            }
        }
        JointDistribution::sparse(self.params.players, self.params.actions, support)
    }

    /// Marginal of the output mixture for one player, falling back to the
    /// empirical store when strategies were not retained.
    pub fn mixture_marginal(&self, player: usize) -> Result<Vec<f64>> {
        if let Some(strategies) = &self.per_round_strategies {
            let n = self.params.actions;
            let mut marg = vec![0.0; n];
            for round in strategies {
                for (a, &p) in round[player].iter().enumerate() {
                    marg[a] += p;
                }
            }
            let t = strategies.len() as f64;
            marg.iter_mut().for_each(|p| *p /= t);
            return Ok(marg);
        }
        self.empirical_distribution()?.marginal(player)
    }

    /// Strategy of one player at one round (0-indexed), when retained.
    pub fn strategy(&self, t: usize, player: usize) -> Option<&[f64]> {
        self.per_round_strategies
            .as_ref()
            .map(|s| s[t][player].as_slice())
    }

    pub fn to_json(&self) -> Result<Value> {
        let mut v = serde_json::to_value(self)?;
        v["format"] = Value::from("nfg-ce-certificate-v1");
        Ok(v)
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        if value.get("format") != Some(&Value::from("nfg-ce-certificate-v1")) {
            return Err(Error::Format("not an nfg-ce-certificate-v1 file".into()));
        }
        let cert: CeCertificate = serde_json::from_value(value.clone())
            .map_err(|e| Error::Format(format!("malformed ce certificate: {e}")))?;
        let expect = cert.sample_store.players
            * cert.sample_store.samples_per_round
            * cert.sample_store.rounds;
        if cert.sample_store.data.len() != expect {
            return Err(Error::Format("sample store has wrong shape".into()));
        }
        Ok(cert)
    }
}

/// Windowed average-loss sum for one player and scale, computed directly
/// from the store: `sum_{tau in window} (1/S) sum_s L_i(a; a_{-i}^{(tau,s)})`
/// for every own action `a`. Queries are counted per loss evaluation.
pub fn windowed_loss(
    store: &SampleStore,
    game: &NormalFormGame,
    player: usize,
    k: u32,
    t: u64,
    params: &MsParams,
    counter: &QueryCounter,
) -> Result<Vec<f64>> {
    if player >= game.players() {
        return Err(Error::InputDomain(format!("player {player} out of range")));
    }
    let n = game.actions();
    let coords = ms_schedule(t, k, params.window_len)?;
    let mut out = vec![0.0; n];
    let Some((start, end)) = ms_window_bounds(coords, k, params.window_len) else {
        return Ok(out);
    };
    if end as usize > store.rounds {
        return Err(Error::InternalState(format!(
            "window [{start}, {end}] references rounds beyond the {} stored",
            store.rounds
        )));
    }
    let scale = 1.0 / store.samples_per_round as f64;
    let mut probe = vec![0u32; store.players];
    for tau in start..=end {
        let mut round_sum = vec![0.0; n];
        for s in 0..store.samples_per_round {
            probe.copy_from_slice(store.profile(tau as usize - 1, s));
            for (a, acc) in round_sum.iter_mut().enumerate() {
                probe[player] = a as u32;
                *acc += game.loss_counted(player, &probe, counter);
            }
        }
        for (acc, v) in out.iter_mut().zip(&round_sum) {
            *acc += scale * v;
        }
    }
    Ok(out)
}

/// Run the sample-based multi-scale solver.
#[allow(clippy::too_many_arguments)]
pub fn solve_ce(
    game: &NormalFormGame,
    eps: f64,
    alpha: f64,
    overrides: &MsOverrides,
    noise_mode: NoiseMode,
    noise_delta: Option<f64>,
    loss_mode: LossMode,
    seed: u64,
) -> Result<CeCertificate> {
    let m = game.players();
    let n = game.actions();
    let params = ms_params(eps, game.loss_bound(), n, m, alpha, overrides)?;
    let rounds = params.rounds;
    let samples = params.samples_per_round;
    let scales = params.num_scales() as usize;
    let rate = ((n as f64).ln() / params.window_len as f64).sqrt();
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
    if let LossMode::ExactExpectation = loss_mode {
        let terms = (n as u128).pow(m as u32);
        if terms.saturating_mul(rounds as u128) > 10_000_000 {
            return Err(Error::InputDomain(
                "exact-expectation losses need n^m * T <= 1e7".into(),
            ));
        }
    }

    let retain = (n as u64) * (m as u64) * rounds <= STRATEGY_RETENTION_CAP;
    let counter = QueryCounter::new();
    let mut store = SampleStore::with_capacity(m, samples as usize, rounds as usize);
    let mut per_round_strategies = retain.then(Vec::new);

    // per (player, scale) windowed sums: committed blocks, plus the block
    // in progress
    let mut committed = vec![vec![vec![0.0; n]; scales]; m];
    let mut pending = vec![vec![vec![0.0; n]; scales]; m];
    let block_span: Vec<u128> = (0..scales)
        .map(|k| (params.window_len as u128).pow(k as u32))
        .collect();
    let window_span: Vec<Option<u128>> = (0..scales)
        .map(|k| (params.window_len as u128).checked_pow(k as u32 + 1))
        .collect();

    let mut rngs: Vec<_> = (0..m).map(|i| stream_rng(seed, i as u64 + 1)).collect();
    let mut round_profiles = vec![0u32; samples as usize * m];
    let mut weights = vec![0.0; n];
    let mut round_loss = vec![vec![0.0; n]; m];

    for t in 1..=rounds {
        // per-scale Gibbs laws and their uniform mixture
        let mut laws: Vec<Vec<Vec<f64>>> = Vec::with_capacity(m);
        let mut mixtures: Vec<Vec<f64>> = Vec::with_capacity(m);
        for i in 0..m {
            let mut per_scale = Vec::with_capacity(scales);
            let mut mix = vec![0.0; n];
            for k in 0..scales {
                for (w, l) in weights.iter_mut().zip(&committed[i][k]) {
                    *w = rate * l;
                }
                let mut law = gibbs_distribution(&weights)?;
                perturb_in_place(&mut law, noise_mode, delta);
                for (acc, v) in mix.iter_mut().zip(&law) {
                    *acc += v / scales as f64;
                }
                per_scale.push(law);
            }
            laws.push(per_scale);
            mixtures.push(mix);
        }
        if let Some(retained) = per_round_strategies.as_mut() {
            retained.push(mixtures.clone());
        }

        // S draws per player: uniform scale, then one sample from its law
        for (i, rng) in rngs.iter_mut().enumerate() {
            use rand::Rng;
            for s in 0..samples as usize {
                let k = rng.gen_range(0..scales);
                round_profiles[s * m + i] = sample_index(&laws[i][k], rng) as u32;
            }
        }
        store.push_round(&round_profiles);

        // realized average loss vectors for this round
        match loss_mode {
            LossMode::Sampled => {
                let inv = 1.0 / samples as f64;
                let mut probe = vec![0u32; m];
                for (i, out) in round_loss.iter_mut().enumerate() {
                    out.iter_mut().for_each(|v| *v = 0.0);
                    for s in 0..samples as usize {
                        probe.copy_from_slice(&round_profiles[s * m..(s + 1) * m]);
                        for (a, acc) in out.iter_mut().enumerate() {
                            probe[i] = a as u32;
                            *acc += game.loss_counted(i, &probe, &counter);
                        }
                    }
                    out.iter_mut().for_each(|v| *v *= inv);
                }
            }
            LossMode::ExactExpectation => {
                for (i, out) in round_loss.iter_mut().enumerate() {
                    *out = expected_losses(game, &mixtures, i, &counter);
                }
            }
        }

        // fold the round into every scale at its block boundaries
        for i in 0..m {
            for k in 0..scales {
                for (acc, v) in pending[i][k].iter_mut().zip(&round_loss[i]) {
                    *acc += v;
                }
                if (t as u128) % block_span[k] == 0 {
                    for (c, p) in committed[i][k].iter_mut().zip(&mut pending[i][k]) {
                        *c += *p;
                        *p = 0.0;
                    }
                }
                if let Some(span) = window_span[k] {
                    if (t as u128) % span == 0 {
                        committed[i][k].iter_mut().for_each(|v| *v = 0.0);
                        pending[i][k].iter_mut().for_each(|v| *v = 0.0);
                    }
                }
            }
        }
    }

    Ok(CeCertificate {
        paper_scale: params.paper_scale,
        params,
        noise: NoiseDescriptor { mode: noise_mode, delta },
        seed,
        loss_mode,
        sample_store: store,
        per_round_strategies,
        query_count: counter.count(),
    })
}

/// Expected loss vector of `player` against the other players' round
/// strategies, by direct enumeration of opponent profiles.
fn expected_losses(
    game: &NormalFormGame,
    strategies: &[Vec<f64>],
    player: usize,
    counter: &QueryCounter,
) -> Vec<f64> {
    let m = game.players();
    let n = game.actions();
    let mut ell = vec![0.0; n];
    let opponents: Vec<usize> = (0..m).filter(|&l| l != player).collect();
    let mut full = vec![0u32; m];
    let mut idx = vec![0u32; opponents.len()];
    loop {
        let mut weight = 1.0;
        for (slot, &l) in idx.iter().zip(&opponents) {
            full[l] = *slot;
            weight *= strategies[l][*slot as usize];
        }
        if weight > 0.0 {
            for (a, e) in ell.iter_mut().enumerate() {
                full[player] = a as u32;
                *e += weight * game.loss_counted(player, &full, counter);
            }
        }
        let mut done = true;
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if (*slot as usize) < n {
                done = false;
                break;
            }
            *slot = 0;
        }
        if done || opponents.is_empty() {
            break;
        }
    }
    ell
}

/// Best-swap improvement of every player against the certificate's output
/// distribution (mixture when retained, else the empirical store).
pub fn ce_mixture_gap(
    cert: &CeCertificate,
    game: &NormalFormGame,
    eps: f64,
    mode: crate::verify::VerifyMode,
    seed: u64,
    counter: &QueryCounter,
) -> Result<crate::verify::EquilibriumReport> {
    let dist = match cert.per_round_strategies {
        Some(_) => cert.mixture_distribution()?,
        None => cert.empirical_distribution()?,
    };
    crate::verify::verify_ce(game, &dist, eps, mode, seed, counter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::tv_distance;
    use crate::mwu::mwu_run;
    use crate::verify::{verify_ce, VerifyMode};

    fn desk_overrides() -> MsOverrides {
        MsOverrides {
            scales_log2: Some(1),
            window_len: Some(8),
            rounds: Some(64),
            samples_per_round: Some(16),
        }
    }

    #[test]
    fn store_and_query_accounting_are_exact() {
        let game = NormalFormGame::random_seeded(2, 3, 1.0, 30).unwrap();
        let cert = solve_ce(
            &game,
            0.3,
            0.1,
            &desk_overrides(),
            NoiseMode::Exact,
            None,
            LossMode::Sampled,
            41,
        )
        .unwrap();
        assert_eq!(cert.sample_store.len(), 64 * 16);
        assert_eq!(cert.query_count, 2 * 3 * 16 * 64);
        assert!(!cert.paper_scale);
        let strategies = cert.per_round_strategies.as_ref().unwrap();
        assert_eq!(strategies.len(), 64);
        for round in strategies {
            for p in round {
                assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                assert!(p.iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn windowed_loss_matches_internal_accumulators_via_strategies() {
        // reconstruct each round's strategy from direct windowed sums and
        // compare with the certificate
        let game = NormalFormGame::random_seeded(2, 3, 1.0, 31).unwrap();
        let overrides = desk_overrides();
        let cert = solve_ce(
            &game,
            0.3,
            0.1,
            &overrides,
            NoiseMode::Exact,
            None,
            LossMode::Sampled,
            42,
        )
        .unwrap();
        let scratch = QueryCounter::new();
        let scales = cert.params.num_scales() as u32;
        for t in 1..=cert.params.rounds {
            for i in 0..2 {
                let mut per_scale = Vec::new();
                for k in 1..=scales {
                    let w = windowed_loss(
                        &cert.sample_store,
                        &game,
                        i,
                        k,
                        t,
                        &cert.params,
                        &scratch,
                    )
                    .unwrap();
                    per_scale.push(
                        crate::mwu::ms_mwu_strategy(&w, cert.params.window_len, 3).unwrap(),
                    );
                }
                let p = crate::mwu::ms_mixture(&per_scale);
                let got = cert.strategy(t as usize - 1, i).unwrap();
                for (a, b) in p.iter().zip(got) {
                    assert!((a - b).abs() <= 1e-9, "round {t}, player {i}");
                }
            }
        }
    }

    #[test]
    fn windowed_loss_examples() {
        let game = NormalFormGame::hard_instance(2, 3, 1.0, vec![1, 2]).unwrap();
        let params = ms_params(
            0.3,
            1.0,
            3,
            2,
            0.1,
            &MsOverrides {
                scales_log2: Some(0),
                window_len: Some(4),
                rounds: Some(4),
                samples_per_round: Some(1),
            },
        )
        .unwrap();
        let mut store = SampleStore::with_capacity(2, 1, 4);
        store.push_round(&[0, 0]);
        store.push_round(&[0, 0]);
        let c = QueryCounter::new();

        // empty window at t = 1
        let w = windowed_loss(&store, &game, 0, 1, 1, &params, &c).unwrap();
        assert_eq!(w, vec![0.0; 3]);

        // one stored round: the hard-instance rule, exactly
        let w = windowed_loss(&store, &game, 0, 1, 2, &params, &c).unwrap();
        assert_eq!(w, vec![1.0, 0.0, 1.0]);

        // two identical rounds double the vector
        let w2 = windowed_loss(&store, &game, 0, 1, 3, &params, &c).unwrap();
        assert_eq!(w2, vec![2.0, 0.0, 2.0]);

        // window reaching beyond the store errors
        let err = windowed_loss(&store, &game, 0, 1, 4, &params, &c);
        assert!(matches!(err, Err(Error::InternalState(_))));
    }

    #[test]
    fn single_scale_run_equals_plain_mwu_on_realized_losses() {
        let game = NormalFormGame::random_seeded(2, 4, 1.0, 32).unwrap();
        let rounds = 48u64;
        let overrides = MsOverrides {
            scales_log2: Some(0),
            window_len: Some(rounds),
            rounds: None, // T = H^1 = H
            samples_per_round: Some(8),
        };
        let cert = solve_ce(
            &game,
            0.3,
            0.1,
            &overrides,
            NoiseMode::Exact,
            None,
            LossMode::Sampled,
            43,
        )
        .unwrap();
        assert_eq!(cert.params.rounds, rounds);

        let scratch = QueryCounter::new();
        for i in 0..2 {
            // realized per-round average losses, recomputed from the store
            let losses: Vec<Vec<f64>> = (1..=rounds)
                .map(|t| {
                    let mut v = vec![0.0; 4];
                    let mut probe = vec![0u32; 2];
                    for s in 0..8 {
                        probe.copy_from_slice(cert.sample_store.profile(t as usize - 1, s));
                        for (a, acc) in v.iter_mut().enumerate() {
                            probe[i] = a as u32;
                            *acc += game.loss_query(i, &probe, &scratch).unwrap() / 8.0;
                        }
                    }
                    v
                })
                .collect();
            let run = mwu_run(&losses, 4, 1.0).unwrap();
            for t in 0..rounds as usize {
                let got = cert.strategy(t, i).unwrap();
                for (a, b) in run.strategies[t].iter().zip(got) {
                    assert!((a - b).abs() <= 1e-9, "player {i}, round {t}");
                }
            }
        }
    }

    #[test]
    fn constant_losses_give_uniform_strategies_and_uniform_mixture() {
        let game = NormalFormGame::explicit(2, 3, 1.0, vec![0.7; 18]).unwrap();
        let cert = solve_ce(
            &game,
            0.3,
            0.1,
            &desk_overrides(),
            NoiseMode::Exact,
            None,
            LossMode::Sampled,
            44,
        )
        .unwrap();
        for round in cert.per_round_strategies.as_ref().unwrap() {
            for p in round {
                for &v in p {
                    assert!((v - 1.0 / 3.0).abs() <= 1e-12);
                }
            }
        }
        for i in 0..2 {
            for &v in &cert.mixture_marginal(i).unwrap() {
                assert!((v - 1.0 / 3.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn exact_expectation_tracks_sampled_runs() {
        let game = NormalFormGame::random_seeded(2, 3, 1.0, 33).unwrap();
        let overrides = MsOverrides {
            scales_log2: Some(1),
            window_len: Some(6),
            rounds: Some(36),
            samples_per_round: Some(24),
        };
        let exact = solve_ce(
            &game,
            0.3,
            0.1,
            &overrides,
            NoiseMode::Exact,
            None,
            LossMode::ExactExpectation,
            0,
        )
        .unwrap();
        let mut averaged = vec![vec![0.0; 3]; 2];
        let seeds = 20;
        for seed in 0..seeds {
            let cert = solve_ce(
                &game,
                0.3,
                0.1,
                &overrides,
                NoiseMode::Exact,
                None,
                LossMode::Sampled,
                100 + seed,
            )
            .unwrap();
            for (i, marg) in averaged.iter_mut().enumerate() {
                for (a, v) in marg.iter_mut().enumerate() {
                    *v += cert.mixture_marginal(i).unwrap()[a] / seeds as f64;
                }
            }
        }
        for i in 0..2 {
            let tv = tv_distance(&averaged[i], &exact.mixture_marginal(i).unwrap()).unwrap();
            assert!(tv <= 0.05, "player {i}: tv {tv}");
        }
    }

    #[test]
    fn hard_instance_concentrates_on_targets() {
        let game = NormalFormGame::hard_instance(2, 4, 1.0, vec![2, 0]).unwrap();
        let overrides = MsOverrides {
            scales_log2: Some(1),
            window_len: Some(16),
            rounds: Some(256),
            samples_per_round: Some(8),
        };
        let cert = solve_ce(
            &game,
            0.1,
            0.1,
            &overrides,
            NoiseMode::Exact,
            None,
            LossMode::Sampled,
            45,
        )
        .unwrap();
        let last = cert.params.rounds as usize - 1;
        assert!(cert.strategy(last, 0).unwrap()[2] >= 0.9);
        assert!(cert.strategy(last, 1).unwrap()[0] >= 0.9);
    }

    #[test]
    fn degenerate_certificate_reproduces_table1_gap() {
        // a hand-made certificate whose mixture is {1/2 (C,A), 1/2 (B,B)}
        let game = NormalFormGame::counterexample();
        let strategies = vec![
            vec![
                vec![0.0, 0.0, 1.0, 0.0],
                vec![1.0, 0.0, 0.0, 0.0],
            ],
            vec![
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.0],
            ],
        ];
        let params = ms_params(
            1.0,
            3.0,
            4,
            2,
            0.5,
            &MsOverrides {
                scales_log2: Some(0),
                window_len: Some(2),
                rounds: Some(2),
                samples_per_round: Some(1),
            },
        )
        .unwrap();
        let mut store = SampleStore::with_capacity(2, 1, 2);
        store.push_round(&[2, 0]);
        store.push_round(&[1, 1]);
        let cert = CeCertificate {
            params,
            noise: NoiseDescriptor::exact(),
            seed: 0,
            loss_mode: LossMode::Sampled,
            sample_store: store,
            per_round_strategies: Some(strategies),
            query_count: 0,
            paper_scale: false,
        };
        let c = QueryCounter::new();
        let report = ce_mixture_gap(&cert, &game, 0.5, VerifyMode::Exact, 0, &c).unwrap();
        assert!((report.per_player_gap[0] - 1.0).abs() <= 1e-12);
        assert!(!report.verdict);
        assert_eq!(report.target, "mixture-of-products");
    }

    #[test]
    fn counterexample_run_verifies_within_quarter() {
        let game = NormalFormGame::counterexample();
        let overrides = MsOverrides {
            scales_log2: Some(1),
            window_len: Some(16),
            rounds: Some(256),
            samples_per_round: None,
        };
        let cert = solve_ce(
            &game,
            0.1,
            0.1,
            &overrides,
            NoiseMode::Exact,
            None,
            LossMode::Sampled,
            46,
        )
        .unwrap();
        let c = QueryCounter::new();
        let report = verify_ce(
            &game,
            &cert.mixture_distribution().unwrap(),
            0.25,
            VerifyMode::Exact,
            0,
            &c,
        )
        .unwrap();
        assert!(report.max_gap() <= 0.25, "gap {}", report.max_gap());
    }

    #[test]
    fn seeded_runs_are_identical() {
        let game = NormalFormGame::random_seeded(2, 3, 1.0, 34).unwrap();
        let a = solve_ce(
            &game, 0.3, 0.1, &desk_overrides(), NoiseMode::ArgmaxShift, None,
            LossMode::Sampled, 50,
        )
        .unwrap();
        let b = solve_ce(
            &game, 0.3, 0.1, &desk_overrides(), NoiseMode::ArgmaxShift, None,
            LossMode::Sampled, 50,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn certificate_json_round_trip() {
        let game = NormalFormGame::random_seeded(2, 2, 1.0, 35).unwrap();
        let overrides = MsOverrides {
            scales_log2: Some(0),
            window_len: Some(4),
            rounds: Some(16),
            samples_per_round: Some(2),
        };
        let cert = solve_ce(
            &game, 0.5, 0.1, &overrides, NoiseMode::Exact, None, LossMode::Sampled, 51,
        )
        .unwrap();
        let back = CeCertificate::from_json(&cert.to_json().unwrap()).unwrap();
        assert_eq!(cert, back);
    }
}
