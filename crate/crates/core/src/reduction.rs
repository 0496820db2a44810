//! Search-to-equilibrium reduction harness.
//!
//! Each trial builds a fresh hard instance (loss 0 on a secret target per
//! player, `B` elsewhere), runs a solver, decodes one action per player by
//! sampling the returned marginals, and scores success when every decoded
//! action hits its target. Measured query counts over an `(m, n)` grid feed
//! a log-log scaling fit.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cce::solve_cce;
use crate::ce::{solve_ce, LossMode};
use crate::error::{Error, Result};
use crate::game::NormalFormGame;
use crate::gibbs::{sample_index, NoiseMode};
use crate::mwu::MsOverrides;
use crate::seeds::{mix, stream_rng};

/// Which solver the harness drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Ce,
    Cce,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ce" => Ok(SolverKind::Ce),
            "cce" => Ok(SolverKind::Cce),
            other => Err(Error::InputDomain(format!(
                "unknown solver {other:?}; expected ce or cce"
            ))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolverKind::Ce => f.write_str("ce"),
            SolverKind::Cce => f.write_str("cce"),
        }
    }
}

/// Harness configuration; echoed verbatim into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub solver: SolverKind,
    pub players: usize,
    pub actions: usize,
    pub loss_bound: f64,
    pub eps: f64,
    pub alpha: f64,
    pub trials: u32,
    pub seed: u64,
    pub noise_mode: NoiseMode,
    pub noise_delta: Option<f64>,
    /// Multi-scale overrides, used by the CE solver only.
    pub ce_overrides: MsOverrides,
    /// Round override, used by the CCE solver only.
    pub cce_rounds: Option<u64>,
}

impl ReductionConfig {
    pub fn new(solver: SolverKind, players: usize, actions: usize, eps: f64) -> Self {
        ReductionConfig {
            solver,
            players,
            actions,
            loss_bound: 1.0,
            eps,
            alpha: 1.0 / 3.0,
            trials: 40,
            seed: 0,
            noise_mode: NoiseMode::Exact,
            noise_delta: None,
            ce_overrides: MsOverrides::none(),
            cce_rounds: None,
        }
    }
}

/// Per-trial success flags and query counts plus the echoed configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub config: ReductionConfig,
    pub trials: u32,
    pub successes: u32,
    pub per_trial_success: Vec<bool>,
    pub per_trial_queries: Vec<u64>,
}

impl ReductionReport {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    pub fn mean_queries(&self) -> f64 {
        self.per_trial_queries.iter().sum::<u64>() as f64 / self.trials as f64
    }

    pub fn to_json(&self) -> Result<Value> {
        let mut v = serde_json::to_value(self)?;
        v["format"] = Value::from("nfg-reduction-v1");
        v["success_rate"] = Value::from(self.success_rate());
        Ok(v)
    }

    pub fn csv_header() -> &'static str {
        "m,n,eps,trial,success,queries"
    }

    pub fn to_csv_rows(&self) -> String {
        let mut out = String::new();
        for (t, (ok, q)) in self
            .per_trial_success
            .iter()
            .zip(&self.per_trial_queries)
            .enumerate()
        {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.config.players, self.config.actions, self.config.eps, t, ok, q
            ));
        }
        out
    }
}

/// Run `trials` independent reductions. Requires the lower-bound regime
/// `eps < min(B/3, 2B/(3m))`.
pub fn run_reduction(config: &ReductionConfig) -> Result<ReductionReport> {
    let b = config.loss_bound;
    let m = config.players as f64;
    let limit = (b / 3.0).min(2.0 * b / (3.0 * m));
    if config.eps >= limit {
        return Err(Error::InputDomain(format!(
            "eps {} violates the lower-bound regime eps < min(B/3, 2B/3m) = {limit}",
            config.eps
        )));
    }
    if config.trials == 0 {
        return Err(Error::InputDomain("need at least one trial".into()));
    }

    let outcomes = crate::par::map_range(config.trials as usize, |trial| {
        run_trial(config, trial as u64)
    });
    let mut per_trial_success = Vec::with_capacity(outcomes.len());
    let mut per_trial_queries = Vec::with_capacity(outcomes.len());
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        let (ok, queries) = outcome
            .map_err(|e| Error::InternalState(format!("trial {trial} failed: {e}")))?;
        per_trial_success.push(ok);
        per_trial_queries.push(queries);
    }
    let successes = per_trial_success.iter().filter(|&&ok| ok).count() as u32;
    Ok(ReductionReport {
        config: config.clone(),
        trials: config.trials,
        successes,
        per_trial_success,
        per_trial_queries,
    })
}

fn run_trial(config: &ReductionConfig, trial: u64) -> Result<(bool, u64)> {
    let trial_seed = mix(config.seed, trial);
    let game = NormalFormGame::hard_instance_seeded(
        config.players,
        config.actions,
        config.loss_bound,
        trial_seed,
    )?;
    let solver_seed = mix(trial_seed, 1);

    // marginals of the returned equilibrium object, one per player
    let (marginals, queries) = match config.solver {
        SolverKind::Cce => {
            let result = solve_cce(
                &game,
                config.eps,
                config.alpha,
                config.cce_rounds,
                config.noise_mode,
                config.noise_delta,
                solver_seed,
            )?;
            (result.marginals(), result.query_count)
        }
        SolverKind::Ce => {
            let cert = solve_ce(
                &game,
                config.eps,
                config.alpha,
                &config.ce_overrides,
                config.noise_mode,
                config.noise_delta,
                LossMode::Sampled,
                solver_seed,
            )?;
            let marginals = (0..config.players)
                .map(|i| cert.mixture_marginal(i))
                .collect::<Result<Vec<_>>>()?;
            (marginals, cert.query_count)
        }
    };

    // decode: one sample per player, success iff every action is on target
    let mut rng = stream_rng(trial_seed, 2);
    let targets = game.targets().expect("hard instance");
    let ok = marginals
        .iter()
        .zip(targets)
        .all(|(marg, &target)| sample_index(marg, &mut rng) as u32 == target);
    Ok((ok, queries))
}

/// Least-squares exponents of `queries ~ c * m^a_m * n^a_n` over grid
/// measurements, with the classical `(1, 1)` and quantum-model `(1, 1/2)`
/// references attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exp_players: f64,
    pub exp_actions: f64,
    pub log_intercept: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub classical_reference: (f64, f64),
    pub quantum_reference: (f64, f64),
}

/// Fit exponents from `(m, n, queries)` grid points; needs at least three
/// distinct values on each axis.
pub fn scaling_fit(points: &[(u64, u64, f64)]) -> Result<ScalingFit> {
    let distinct = |f: fn(&(u64, u64, f64)) -> u64| {
        let mut v: Vec<u64> = points.iter().map(f).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    };
    if distinct(|p| p.0) < 3 || distinct(|p| p.1) < 3 {
        return Err(Error::InputDomain(
            "scaling fit needs >= 3 grid points per axis".into(),
        ));
    }
    if points.iter().any(|&(_, _, q)| q <= 0.0) {
        return Err(Error::InputDomain("query counts must be positive".into()));
    }

    // normal equations for y = b0 + b1*ln m + b2*ln n
    let rows: Vec<[f64; 3]> = points
        .iter()
        .map(|&(m, n, _)| [1.0, (m as f64).ln(), (n as f64).ln()])
        .collect();
    let ys: Vec<f64> = points.iter().map(|&(_, _, q)| q.ln()).collect();
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (row, &y) in rows.iter().zip(&ys) {
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            aty[i] += row[i] * y;
        }
    }
    let beta = solve3(ata, aty).ok_or_else(|| {
        Error::InputDomain("degenerate grid: normal equations are singular".into())
    })?;

    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut residuals = Vec::with_capacity(points.len());
    for (row, &y) in rows.iter().zip(&ys) {
        let fit = beta[0] + beta[1] * row[1] + beta[2] * row[2];
        residuals.push(y - fit);
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };

    Ok(ScalingFit {
        exp_players: beta[1],
        exp_actions: beta[2],
        log_intercept: beta[0],
        r_squared,
        residuals,
        classical_reference: (1.0, 1.0),
        quantum_reference: (1.0, 0.5),
    })
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| {
            m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap()
        })?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..3 {
            if row == col {
                continue;
            }
            let factor = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}
