//! Regret functionals and equilibrium verifiers.
//!
//! `verify_ce` / `verify_cce` report per-player deviation gaps for a joint
//! distribution against a game, either by exact expectation (product
//! structure exploited factor-wise) or by Hoeffding-budgeted Monte Carlo.
//! Verifier queries are counted on the caller's counter, which by
//! convention is separate from any solver counter.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dist::JointDistribution;
use crate::error::{Error, Result};
use crate::game::{NormalFormGame, QueryCounter};
use crate::seeds::stream_rng;

/// Expectation-term budget above which exact verification is refused.
pub const EXACT_TERM_CAP: u128 = 10_000_000;

/// Total loss of played strategies minus the best fixed action in hindsight.
pub fn external_regret(strategies: &[Vec<f64>], losses: &[Vec<f64>]) -> Result<f64> {
    check_streams(strategies, losses)?;
    let n = strategies[0].len();
    let played: f64 = strategies
        .iter()
        .zip(losses)
        .map(|(x, l)| dot(x, l))
        .sum();
    let best_fixed = (0..n)
        .map(|j| losses.iter().map(|l| l[j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok(played - best_fixed)
}

/// Total loss minus the best fixed action-remapping in hindsight, plus the
/// minimizing map. The objective separates per source action, so each row
/// is minimized independently; ties go to the lowest index.
pub fn swap_regret(strategies: &[Vec<f64>], losses: &[Vec<f64>]) -> Result<(f64, Vec<u32>)> {
    check_streams(strategies, losses)?;
    let n = strategies[0].len();
    // weighted[j][j'] = sum_t x_t(j) * l_t(j')
    let mut weighted = vec![vec![0.0; n]; n];
    for (x, l) in strategies.iter().zip(losses) {
        for j in 0..n {
            if x[j] == 0.0 {
                continue;
            }
            for jp in 0..n {
                weighted[j][jp] += x[j] * l[jp];
            }
        }
    }
    let mut map = Vec::with_capacity(n);
    let mut value = 0.0;
    for j in 0..n {
        let (best, best_val) = argmin(&weighted[j]);
        map.push(best as u32);
        value += weighted[j][j] - best_val;
    }
    Ok((value, map))
}

fn check_streams(strategies: &[Vec<f64>], losses: &[Vec<f64>]) -> Result<()> {
    if strategies.len() != losses.len() {
        return Err(Error::InputDomain(format!(
            "{} strategies vs {} loss vectors",
            strategies.len(),
            losses.len()
        )));
    }
    if strategies.is_empty() {
        return Err(Error::InputDomain("empty stream".into()));
    }
    let n = strategies[0].len();
    for (x, l) in strategies.iter().zip(losses) {
        if x.len() != n || l.len() != n {
            return Err(Error::InputDomain("dimension mismatch in stream".into()));
        }
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn argmin(v: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    (best, v[best])
}

/// Which equilibrium notion a report certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Ce,
    Cce,
}

impl std::fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EquilibriumKind::Ce => f.write_str("ce"),
            EquilibriumKind::Cce => f.write_str("cce"),
        }
    }
}

impl std::str::FromStr for EquilibriumKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ce" => Ok(EquilibriumKind::Ce),
            "cce" => Ok(EquilibriumKind::Cce),
            other => Err(Error::InputDomain(format!(
                "unknown equilibrium kind {other:?}; expected ce or cce"
            ))),
        }
    }
}

/// The most profitable deviation found for the worst player.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deviation {
    FixedAction(u32),
    Swap(Vec<u32>),
}

/// How the gaps were computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyMethod {
    Exact,
    MonteCarlo {
        samples: u64,
        confidence: f64,
        ci_half_width: f64,
    },
}

/// Verification mode requested by the caller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VerifyMode {
    /// Exact when the expectation-term budget allows, Monte Carlo otherwise.
    Auto { confidence: f64 },
    Exact,
    MonteCarlo {
        samples: Option<u64>,
        confidence: f64,
    },
}

/// Per-player deviation gaps, worst deviation, and verdict at tolerance
/// `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub kind: EquilibriumKind,
    pub eps: f64,
    pub per_player_gap: Vec<f64>,
    pub worst_player: usize,
    pub worst_deviation: Deviation,
    pub verdict: bool,
    pub method: VerifyMethod,
    pub queries_used: u64,
    /// Which representation of the distribution was verified.
    pub target: String,
}

impl EquilibriumReport {
    pub fn max_gap(&self) -> f64 {
        self.per_player_gap.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_json(&self) -> Result<Value> {
        Ok(serde_json::to_value(self)?)
    }

    pub fn csv_header() -> &'static str {
        "kind,eps,max_gap,worst_player,verdict,method,samples,queries_used,target"
    }

    pub fn to_csv_row(&self) -> String {
        let (method, samples) = match self.method {
            VerifyMethod::Exact => ("exact", 0),
            VerifyMethod::MonteCarlo { samples, .. } => ("mc", samples),
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.kind,
            self.eps,
            self.max_gap(),
            self.worst_player,
            self.verdict,
            method,
            samples,
            self.queries_used,
            self.target
        )
    }
}

fn dist_target(dist: &JointDistribution) -> &'static str {
    match dist {
        JointDistribution::Sparse { .. } => "sparse-support",
        JointDistribution::Product { .. } => "product-of-marginals",
        JointDistribution::Mixture { .. } => "mixture-of-products",
    }
}

/// Expectation terms an exact pass would evaluate.
pub fn exact_term_count(game: &NormalFormGame, dist: &JointDistribution) -> u128 {
    let m = game.players() as u128;
    let n = game.actions() as u128;
    match dist {
        JointDistribution::Sparse { support, .. } => support.len() as u128 * n * m,
        JointDistribution::Product { .. } => n.pow(game.players() as u32) * m,
        JointDistribution::Mixture { weights, .. } => {
            weights.len() as u128 * n.pow(game.players() as u32) * m
        }
    }
}

fn check_dist_matches(game: &NormalFormGame, dist: &JointDistribution) -> Result<()> {
    if dist.players() != game.players() || dist.actions() != game.actions() {
        return Err(Error::InputDomain(format!(
            "distribution is over {}x{} but the game is {}x{}",
            dist.players(),
            dist.actions(),
            game.players(),
            game.actions()
        )));
    }
    Ok(())
}

/// Verify `dist` as an `eps`-coarse correlated equilibrium.
pub fn verify_cce(
    game: &NormalFormGame,
    dist: &JointDistribution,
    eps: f64,
    mode: VerifyMode,
    seed: u64,
    counter: &QueryCounter,
) -> Result<EquilibriumReport> {
    verify(game, dist, eps, mode, seed, counter, EquilibriumKind::Cce)
}

/// Verify `dist` as an `eps`-correlated equilibrium (per-recommended-action
/// swap decomposition).
pub fn verify_ce(
    game: &NormalFormGame,
    dist: &JointDistribution,
    eps: f64,
    mode: VerifyMode,
    seed: u64,
    counter: &QueryCounter,
) -> Result<EquilibriumReport> {
    verify(game, dist, eps, mode, seed, counter, EquilibriumKind::Ce)
}

fn verify(
    game: &NormalFormGame,
    dist: &JointDistribution,
    eps: f64,
    mode: VerifyMode,
    seed: u64,
    counter: &QueryCounter,
    kind: EquilibriumKind,
) -> Result<EquilibriumReport> {
    check_dist_matches(game, dist)?;
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InputDomain(format!("eps must be >= 0, got {eps}")));
    }
    let start = counter.count();
    let terms = exact_term_count(game, dist);
    let exact = match mode {
        VerifyMode::Exact => {
            if terms > EXACT_TERM_CAP {
                return Err(Error::InputDomain(format!(
                    "exact verification needs {terms} expectation terms, over the cap of {EXACT_TERM_CAP}; use Monte Carlo"
                )));
            }
            true
        }
        VerifyMode::Auto { .. } => terms <= EXACT_TERM_CAP,
        VerifyMode::MonteCarlo { .. } => false,
    };

    let mut report = if exact {
        verify_exact(game, dist, eps, counter, kind)?
    } else {
        let (samples, confidence) = match mode {
            VerifyMode::MonteCarlo {
                samples,
                confidence,
            } => (samples, confidence),
            VerifyMode::Auto { confidence } => (None, confidence),
            VerifyMode::Exact => unreachable!(),
        };
        verify_mc(game, dist, eps, samples, confidence, seed, counter, kind)?
    };
    report.queries_used = counter.count() - start;
    report.target = dist_target(dist).to_string();
    Ok(report)
}

/// Exact per-player expected-loss vectors for each mixture component, laid
/// out as `ell[component][player][replacement]`. Sparse distributions are
/// handled separately because their conditionals do not factor.
fn component_expected_losses(
    game: &NormalFormGame,
    factors: &[Vec<Vec<f64>>],
    counter: &QueryCounter,
) -> Vec<Vec<Vec<f64>>> {
    let m = game.players();
    let n = game.actions();
    factors
        .iter()
        .map(|component| {
            crate::par::map_range(m, |i| {
                let mut ell = vec![0.0; n];
                let opponents: Vec<usize> = (0..m).filter(|&l| l != i).collect();
                let mut full = vec![0u32; m];
                let mut idx = vec![0u32; opponents.len()];
                loop {
                    let mut weight = 1.0;
                    for (slot, &l) in idx.iter().zip(&opponents) {
                        full[l] = *slot;
                        weight *= component[l][*slot as usize];
                    }
                    if weight > 0.0 {
                        for (j, e) in ell.iter_mut().enumerate() {
                            full[i] = j as u32;
                            *e += weight * game.loss_counted(i, &full, counter);
                        }
                    }
                    // advance the opponent odometer
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
            })
        })
        .collect()
}

fn verify_exact(
    game: &NormalFormGame,
    dist: &JointDistribution,
    eps: f64,
    counter: &QueryCounter,
    kind: EquilibriumKind,
) -> Result<EquilibriumReport> {
    let m = game.players();
    let n = game.actions();

    // conditional[i][j][j']: mass on recommendation j times the expected
    // loss of playing j' instead, for player i.
    let mut conditional = vec![vec![vec![0.0; n]; n]; m];
    match dist {
        JointDistribution::Sparse { support, .. } => {
            for (profile, &p) in support {
                if p == 0.0 {
                    continue;
                }
                let mut probe = profile.clone();
                for i in 0..m {
                    let recommended = profile[i] as usize;
                    for jp in 0..n {
                        probe[i] = jp as u32;
                        conditional[i][recommended][jp] +=
                            p * game.loss_counted(i, &probe, counter);
                    }
                    probe[i] = profile[i];
                }
            }
        }
        JointDistribution::Product { factors } => {
            let ell = component_expected_losses(game, std::slice::from_ref(factors), counter);
            for i in 0..m {
                for j in 0..n {
                    for jp in 0..n {
                        conditional[i][j][jp] = factors[i][j] * ell[0][i][jp];
                    }
                }
            }
        }
        JointDistribution::Mixture { weights, factors } => {
            let ell = component_expected_losses(game, factors, counter);
            for (t, w) in weights.iter().enumerate() {
                for i in 0..m {
                    for j in 0..n {
                        let mass = w * factors[t][i][j];
                        if mass == 0.0 {
                            continue;
                        }
                        for jp in 0..n {
                            conditional[i][j][jp] += mass * ell[t][i][jp];
                        }
                    }
                }
            }
        }
    }

    Ok(report_from_conditionals(&conditional, eps, kind, VerifyMethod::Exact, 0.0))
}

fn report_from_conditionals(
    conditional: &[Vec<Vec<f64>>],
    eps: f64,
    kind: EquilibriumKind,
    method: VerifyMethod,
    slack: f64,
) -> EquilibriumReport {
    let m = conditional.len();
    let n = conditional[0].len();
    let mut gaps = Vec::with_capacity(m);
    let mut deviations = Vec::with_capacity(m);
    for rows in conditional {
        let base: f64 = (0..n).map(|j| rows[j][j]).sum();
        match kind {
            EquilibriumKind::Ce => {
                let mut map = Vec::with_capacity(n);
                let mut swapped = 0.0;
                for row in rows {
                    let (best, best_val) = argmin(row);
                    map.push(best as u32);
                    swapped += best_val;
                }
                gaps.push(base - swapped);
                deviations.push(Deviation::Swap(map));
            }
            EquilibriumKind::Cce => {
                // fixed deviations are column sums of the conditional matrix
                let mut columns = vec![0.0; n];
                for row in rows {
                    for (jp, v) in row.iter().enumerate() {
                        columns[jp] += v;
                    }
                }
                let (best, best_val) = argmin(&columns);
                gaps.push(base - best_val);
                deviations.push(Deviation::FixedAction(best as u32));
            }
        }
    }
    let worst_player = gaps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let max_gap = gaps[worst_player];
    EquilibriumReport {
        kind,
        eps,
        verdict: max_gap <= eps + slack,
        worst_deviation: deviations.swap_remove(worst_player),
        per_player_gap: gaps,
        worst_player,
        method,
        queries_used: 0,
        target: String::new(),
    }
}

/// Sample budget so that the gap estimate is within `eps/4` of the truth
/// with the requested confidence, by Hoeffding plus a union bound over all
/// estimated expectations.
fn hoeffding_budget(
    kind: EquilibriumKind,
    m: usize,
    n: usize,
    loss_bound: f64,
    eps: f64,
    confidence: f64,
) -> Result<(u64, f64)> {
    if !(0.0..1.0).contains(&confidence) {
        return Err(Error::InputDomain(format!(
            "confidence must be in (0, 1), got {confidence}"
        )));
    }
    if eps <= 0.0 {
        return Err(Error::InputDomain(
            "Monte Carlo verification needs eps > 0 (or an explicit sample count)".into(),
        ));
    }
    let (per_estimate_hw, quantities) = per_estimate_width(kind, m, n, eps);
    let fail = 1.0 - confidence;
    let samples = (loss_bound * loss_bound * (2.0 * quantities / fail).ln()
        / (2.0 * per_estimate_hw * per_estimate_hw))
        .ceil();
    if !samples.is_finite() || samples > 1e12 {
        return Err(Error::InputDomain(format!(
            "Monte Carlo budget {samples} is unreasonable; loosen eps or confidence"
        )));
    }
    Ok((samples.max(1.0) as u64, eps / 4.0))
}

fn per_estimate_width(kind: EquilibriumKind, m: usize, n: usize, eps: f64) -> (f64, f64) {
    match kind {
        // gap error <= 2 * per-expectation half-width
        EquilibriumKind::Cce => (eps / 8.0, (m * (n + 1)) as f64),
        // gap sums n conditional rows, so each entry gets eps/(8n)
        EquilibriumKind::Ce => (eps / (8.0 * n as f64), (m * n * n) as f64),
    }
}

#[allow(clippy::too_many_arguments)]
fn verify_mc(
    game: &NormalFormGame,
    dist: &JointDistribution,
    eps: f64,
    samples: Option<u64>,
    confidence: f64,
    seed: u64,
    counter: &QueryCounter,
    kind: EquilibriumKind,
) -> Result<EquilibriumReport> {
    let m = game.players();
    let n = game.actions();
    let b = game.loss_bound();
    let (samples, ci_half_width) = match samples {
        Some(s) if s > 0 => {
            // report the gap accuracy this budget actually buys
            let (_, quantities) = per_estimate_width(kind, m, n, eps);
            let fail = 1.0 - confidence;
            let hw_e = b * ((2.0 * quantities / fail).ln() / (2.0 * s as f64)).sqrt();
            let scale = match kind {
                EquilibriumKind::Cce => 2.0,
                EquilibriumKind::Ce => 2.0 * n as f64,
            };
            (s, scale * hw_e)
        }
        Some(_) => {
            return Err(Error::InputDomain("sample count must be positive".into()));
        }
        None => hoeffding_budget(kind, m, n, b, eps, confidence)?,
    };

    let mut rng = stream_rng(seed, 0x76657269);
    let mut conditional = vec![vec![vec![0.0; n]; n]; m];
    let mut probe = vec![0u32; m];
    for _ in 0..samples {
        let profile = dist.sample(&mut rng);
        probe.copy_from_slice(&profile);
        for i in 0..m {
            let recommended = profile[i] as usize;
            for jp in 0..n {
                probe[i] = jp as u32;
                conditional[i][recommended][jp] += game.loss_counted(i, &probe, counter);
            }
            probe[i] = profile[i];
        }
    }
    let scale = 1.0 / samples as f64;
    for rows in &mut conditional {
        for row in rows {
            for v in row {
                *v *= scale;
            }
        }
    }
    let method = VerifyMethod::MonteCarlo {
        samples,
        confidence,
        ci_half_width,
    };
    Ok(report_from_conditionals(&conditional, eps, kind, method, ci_half_width))
}
