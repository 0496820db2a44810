//! Multiplicative-weights machinery: the basic update rule, the multi-scale
//! interval scheduler with its parameter derivation, and the strategy
//! mixture.
//!
//! Logs are natural throughout. The MWU step size is `sqrt(ln n / T) / B`,
//! the form under which the `2 B sqrt(T ln n)` regret bound holds for any
//! loss bound `B`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::gibbs_distribution;
use crate::verify::external_regret;

/// State of one MWU learner: step size and accumulated loss vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MwuState {
    cumulative_loss: Vec<f64>,
    eta: f64,
    rounds_seen: u64,
}

impl MwuState {
    pub fn new(actions: usize, eta: f64) -> Result<Self> {
        if actions == 0 {
            return Err(Error::InputDomain("need at least one action".into()));
        }
        if !eta.is_finite() || eta <= 0.0 {
            return Err(Error::InputDomain(format!(
                "step size must be positive and finite, got {eta}"
            )));
        }
        Ok(MwuState {
            cumulative_loss: vec![0.0; actions],
            eta,
            rounds_seen: 0,
        })
    }

    /// Step size for a `rounds`-round run with losses in `[0, loss_bound]`.
    pub fn theorem_step_size(actions: usize, rounds: u64, loss_bound: f64) -> f64 {
        ((actions as f64).ln() / rounds as f64).sqrt() / loss_bound
    }

    pub fn observe(&mut self, loss: &[f64]) -> Result<()> {
        if loss.len() != self.cumulative_loss.len() {
            return Err(Error::InputDomain(format!(
                "loss vector has {} entries, expected {}",
                loss.len(),
                self.cumulative_loss.len()
            )));
        }
        if let Some(bad) = loss.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InputDomain(format!(
                "loss entries must be nonnegative and finite, got {bad}"
            )));
        }
        for (acc, l) in self.cumulative_loss.iter_mut().zip(loss) {
            *acc += l;
        }
        self.rounds_seen += 1;
        Ok(())
    }

    pub fn rounds_seen(&self) -> u64 {
        self.rounds_seen
    }

    pub fn cumulative_loss(&self) -> &[f64] {
        &self.cumulative_loss
    }

    /// Current strategy: Gibbs law of `eta * cumulative_loss`.
    pub fn strategy(&self) -> Vec<f64> {
        let weights: Vec<f64> = self.cumulative_loss.iter().map(|l| self.eta * l).collect();
        gibbs_distribution(&weights).expect("finite by construction")
    }
}

/// Strategy of an [`MwuState`]; free-function form of [`MwuState::strategy`].
pub fn mwu_strategy(state: &MwuState) -> Vec<f64> {
    state.strategy()
}

/// A full MWU run over a loss stream.
#[derive(Debug, Clone, PartialEq)]
pub struct MwuRun {
    pub strategies: Vec<Vec<f64>>,
    pub external_regret: f64,
}

/// Run MWU with the theorem step size over `losses`, validating every loss
/// vector against `[0, loss_bound]^n`. The returned regret satisfies
/// `regret <= 2 * loss_bound * sqrt(T ln n)`.
pub fn mwu_run(losses: &[Vec<f64>], actions: usize, loss_bound: f64) -> Result<MwuRun> {
    if losses.is_empty() {
        return Err(Error::InputDomain("empty loss stream".into()));
    }
    let rounds = losses.len() as u64;
    let eta = MwuState::theorem_step_size(actions, rounds, loss_bound);
    let mut state = MwuState::new(actions, eta)?;
    let mut strategies = Vec::with_capacity(losses.len());
    for loss in losses {
        if loss.iter().any(|&v| v > loss_bound) {
            return Err(Error::InputDomain(format!(
                "loss above the bound {loss_bound}"
            )));
        }
        strategies.push(state.strategy());
        state.observe(loss)?;
    }
    let external_regret = external_regret(&strategies, losses)?;
    Ok(MwuRun {
        strategies,
        external_regret,
    })
}

/// Position of round `t` within the scale-`k` interval structure: `window`
/// is the index of the current length-`H^k` window, `blocks` the number of
/// length-`H^(k-1)` blocks completed before round `t` inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalCoords {
    pub window: u64,
    pub blocks: u64,
}

/// Interval coordinates of round `t` (1-indexed) at scale `k` (1-indexed)
/// with window parameter `window_len`. The aggregation window is the rounds
/// `(window-1)*H^k + 1 ..= (window-1)*H^k + blocks*H^(k-1)`; it is empty
/// when `blocks == 0` and never reaches round `t` itself, so a strategy
/// built from it only consumes history that already exists.
pub fn ms_schedule(t: u64, k: u32, window_len: u64) -> Result<IntervalCoords> {
    if t == 0 {
        return Err(Error::InputDomain("rounds are 1-indexed".into()));
    }
    if k == 0 {
        return Err(Error::InputDomain("scales are 1-indexed".into()));
    }
    if window_len == 0 {
        return Err(Error::InputDomain("window parameter must be >= 1".into()));
    }
    let window_span = (window_len as u128).checked_pow(k).ok_or_else(|| {
        Error::InputDomain(format!("H^k overflows for H={window_len}, k={k}"))
    })?;
    let block_span = (window_len as u128).pow(k - 1);
    let elapsed = (t - 1) as u128;
    let window = elapsed / window_span + 1;
    let blocks = (elapsed % window_span) / block_span;
    Ok(IntervalCoords {
        window: window as u64,
        blocks: blocks as u64,
    })
}

/// First and last round (inclusive) of the aggregation window; `None` when
/// the window is empty.
pub fn ms_window_bounds(
    coords: IntervalCoords,
    k: u32,
    window_len: u64,
) -> Option<(u64, u64)> {
    if coords.blocks == 0 {
        return None;
    }
    let window_span = (window_len as u128).checked_pow(k)?;
    let block_span = (window_len as u128).pow(k - 1);
    let start = (coords.window as u128 - 1) * window_span + 1;
    let end = start - 1 + coords.blocks as u128 * block_span;
    Some((start as u64, end as u64))
}

/// Strategy of the scale-`k` learner given its windowed loss sum:
/// `q = Gibbs(sqrt(ln n / H) * windowed_loss)`.
pub fn ms_mwu_strategy(windowed_loss: &[f64], window_len: u64, actions: usize) -> Result<Vec<f64>> {
    if windowed_loss.len() != actions {
        return Err(Error::InputDomain(format!(
            "windowed loss has {} entries, expected {actions}",
            windowed_loss.len()
        )));
    }
    let rate = ((actions as f64).ln() / window_len as f64).sqrt();
    let weights: Vec<f64> = windowed_loss.iter().map(|l| rate * l).collect();
    gibbs_distribution(&weights)
}

/// Uniform mixture of per-scale strategies.
pub fn ms_mixture(per_scale: &[Vec<f64>]) -> Vec<f64> {
    let n = per_scale[0].len();
    let scale = 1.0 / per_scale.len() as f64;
    let mut p = vec![0.0; n];
    for q in per_scale {
        for (acc, v) in p.iter_mut().zip(q) {
            *acc += scale * v;
        }
    }
    p
}

/// Caller-supplied replacements for the derived multi-scale parameters.
/// Any override marks the run as exploratory rather than paper-scale.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MsOverrides {
    /// Replaces `K` (so the number of scales is `2^K`).
    pub scales_log2: Option<u32>,
    /// Replaces `H`.
    pub window_len: Option<u64>,
    /// Replaces `T`.
    pub rounds: Option<u64>,
    /// Replaces `S`.
    pub samples_per_round: Option<u64>,
}

impl MsOverrides {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// Derived parameters of the sample-based multi-scale run:
/// `K = ceil(log2(3B/eps) + 1)`, `H = ceil(4 ln(n) 2^(2K))`, `T = H^(2^K)`,
/// `S = ceil((18 B^2/eps^2) ln(2 m n T / alpha))`, `delta = eps/(6B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsParams {
    pub scales_log2: u32,
    pub window_len: u64,
    pub rounds: u64,
    pub samples_per_round: u64,
    pub delta: f64,
    pub eps: f64,
    pub loss_bound: f64,
    pub players: usize,
    pub actions: usize,
    /// False when any override replaced a derived value.
    pub paper_scale: bool,
}

impl MsParams {
    pub fn num_scales(&self) -> u64 {
        1u64 << self.scales_log2
    }
}

pub fn ms_params(
    eps: f64,
    loss_bound: f64,
    actions: usize,
    players: usize,
    alpha: f64,
    overrides: &MsOverrides,
) -> Result<MsParams> {
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
    if actions == 0 || players == 0 {
        return Err(Error::InputDomain("need players >= 1 and actions >= 1".into()));
    }

    let scales_log2 = overrides.scales_log2.unwrap_or_else(|| {
        let k = ((3.0 * loss_bound / eps).log2() + 1.0).ceil();
        if k < 0.0 {
            0
        } else {
            k as u32
        }
    });
    if scales_log2 > 20 {
        return Err(Error::PaperScaleInfeasible(format!(
            "K = {scales_log2} gives 2^{scales_log2} scales; override K to run at desk scale"
        )));
    }
    let num_scales = 1u32 << scales_log2;

    let window_len = match overrides.window_len {
        Some(h) if h >= 1 => h,
        Some(h) => {
            return Err(Error::InputDomain(format!("window override {h} must be >= 1")));
        }
        // ln(1) = 0 for a single action; clamp so the schedule stays defined
        None => (((actions as f64).ln() * 4.0 * 4.0_f64.powi(scales_log2 as i32)).ceil() as u64)
            .max(1),
    };

    let rounds = match overrides.rounds {
        Some(t) if t >= 1 => t,
        Some(t) => {
            return Err(Error::InputDomain(format!("rounds override {t} must be >= 1")));
        }
        None => {
            let t = (window_len as u128).checked_pow(num_scales);
            match t {
                Some(t) if t <= i64::MAX as u128 => t as u64,
                _ => {
                    return Err(Error::PaperScaleInfeasible(format!(
                        "T = {window_len}^{num_scales} exceeds 2^63; supply a rounds override (T)"
                    )));
                }
            }
        }
    };

    let samples_per_round = match overrides.samples_per_round {
        Some(s) if s >= 1 => s,
        Some(s) => {
            return Err(Error::InputDomain(format!("samples override {s} must be >= 1")));
        }
        None => {
            let log_arg =
                2.0 * players as f64 * actions as f64 * rounds as f64 / alpha;
            let s = (18.0 * loss_bound * loss_bound / (eps * eps) * log_arg.ln()).ceil();
            if !s.is_finite() || s > i64::MAX as f64 {
                return Err(Error::PaperScaleInfeasible(format!(
                    "S = {s} is not representable; supply a samples override (S)"
                )));
            }
            (s as u64).max(1)
        }
    };

    Ok(MsParams {
        scales_log2,
        window_len,
        rounds,
        samples_per_round,
        delta: eps / (6.0 * loss_bound),
        eps,
        loss_bound,
        players,
        actions,
        paper_scale: overrides.is_empty(),
    })
}
