//! Normal-form games: loss oracles with query accounting, generators, and
//! the on-disk JSON formats.
//!
//! A game has `m` players with `n` actions each and losses in `[0, B]`.
//! Every single-profile loss evaluation made on behalf of a solver or
//! verifier goes through a [`QueryCounter`], the measurable analog of oracle
//! query complexity.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::seeds::{mix, stream_rng};

/// Refuse to materialize explicit loss tensors above this many entries.
pub const DEFAULT_TENSOR_CAP: usize = 100_000_000;

/// One action per player, 0-indexed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionProfile(pub Vec<u32>);

impl ActionProfile {
    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for ActionProfile {
    fn from(actions: Vec<u32>) -> Self {
        ActionProfile(actions)
    }
}

/// Monotone counter of single-profile loss evaluations. Increments are
/// atomic, so concurrent solver threads never lose a count.
#[derive(Debug, Default)]
pub struct QueryCounter(AtomicU64);

impl QueryCounter {
    pub fn new() -> Self {
        QueryCounter(AtomicU64::new(0))
    }

    pub fn increment(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn add(&self, k: u64) {
        self.0.fetch_add(k, Ordering::Relaxed);
    }

    pub fn count(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// Loss-function payload; the game kind determines how losses are computed.
#[derive(Debug, Clone, PartialEq)]
pub enum GameKind {
    /// Dense tensor, player-major then row-major in the profile.
    Explicit { losses: Vec<f64> },
    /// Loss is 0 on the player's secret target action, `B` otherwise.
    HardInstance { targets: Vec<u32> },
    /// Singleton congestion: each action is one resource; the loss of a
    /// player on action `a` is `costs[a][load-1]` where `load` counts the
    /// players choosing `a`.
    Congestion { costs: Vec<Vec<f64>> },
    /// The fixed 2x4 game whose mixed recommendation is a CCE but not a CE.
    Counterexample,
    /// Losses derived from a stateless hash of (seed, player, profile).
    RandomSeeded { seed: u64 },
}

impl GameKind {
    pub fn name(&self) -> &'static str {
        match self {
            GameKind::Explicit { .. } => "explicit",
            GameKind::HardInstance { .. } => "hard_instance",
            GameKind::Congestion { .. } => "congestion",
            GameKind::Counterexample => "counterexample",
            GameKind::RandomSeeded { .. } => "random_seeded",
        }
    }
}

// Player-1 losses of the counterexample game; player 2 loses 2 everywhere.
const COUNTEREXAMPLE_ROWS: [[f64; 4]; 4] = [
    [1.0, 3.0, 2.0, 2.0],
    [2.0, 2.0, 2.0, 2.0],
    [2.0, 2.0, 2.0, 2.0],
    [3.0, 1.0, 2.0, 2.0],
];

/// An `m`-player game with `n` actions per player and losses in
/// `[0, loss_bound]`. Immutable after construction; safe to share across
/// threads.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame {
    players: usize,
    actions: usize,
    loss_bound: f64,
    kind: GameKind,
}

impl NormalFormGame {
    fn check_dims(players: usize, actions: usize, loss_bound: f64) -> Result<()> {
        if players == 0 {
            return Err(Error::Construction("players must be >= 1".into()));
        }
        if actions == 0 {
            return Err(Error::Construction("actions must be >= 1".into()));
        }
        if !loss_bound.is_finite() || loss_bound < 0.0 {
            return Err(Error::Construction(format!(
                "loss bound must be a nonnegative finite real, got {loss_bound}"
            )));
        }
        Ok(())
    }

    /// Dense game from a flat tensor of length `players * actions^players`,
    /// indexed player-major with the first player's action outermost.
    pub fn explicit(
        players: usize,
        actions: usize,
        loss_bound: f64,
        losses: Vec<f64>,
    ) -> Result<Self> {
        Self::explicit_with_cap(players, actions, loss_bound, losses, DEFAULT_TENSOR_CAP)
    }

    pub fn explicit_with_cap(
        players: usize,
        actions: usize,
        loss_bound: f64,
        losses: Vec<f64>,
        cap: usize,
    ) -> Result<Self> {
        Self::check_dims(players, actions, loss_bound)?;
        let profiles = checked_profile_count(players, actions)?;
        let entries = profiles
            .checked_mul(players)
            .ok_or_else(|| Error::Construction("loss tensor size overflows".into()))?;
        if entries > cap {
            return Err(Error::Construction(format!(
                "explicit tensor needs {entries} entries, over the cap of {cap}"
            )));
        }
        if losses.len() != entries {
            return Err(Error::Construction(format!(
                "expected {entries} loss entries, got {}",
                losses.len()
            )));
        }
        if let Some(bad) = losses
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > loss_bound)
        {
            return Err(Error::Construction(format!(
                "loss {bad} outside [0, {loss_bound}]"
            )));
        }
        Ok(NormalFormGame {
            players,
            actions,
            loss_bound,
            kind: GameKind::Explicit { losses },
        })
    }

    /// Hard search instance with explicit targets.
    pub fn hard_instance(
        players: usize,
        actions: usize,
        loss_bound: f64,
        targets: Vec<u32>,
    ) -> Result<Self> {
        Self::check_dims(players, actions, loss_bound)?;
        if loss_bound <= 0.0 {
            return Err(Error::Construction(
                "hard instance needs a positive loss bound".into(),
            ));
        }
        if targets.len() != players {
            return Err(Error::Construction(format!(
                "expected {players} targets, got {}",
                targets.len()
            )));
        }
        if let Some(bad) = targets.iter().find(|&&k| k as usize >= actions) {
            return Err(Error::Construction(format!(
                "target {bad} out of range for {actions} actions"
            )));
        }
        Ok(NormalFormGame {
            players,
            actions,
            loss_bound,
            kind: GameKind::HardInstance { targets },
        })
    }

    /// Hard instance with targets drawn uniformly from a seed.
    pub fn hard_instance_seeded(
        players: usize,
        actions: usize,
        loss_bound: f64,
        seed: u64,
    ) -> Result<Self> {
        Self::check_dims(players, actions, loss_bound)?;
        let mut rng = stream_rng(seed, 0);
        let targets = (0..players)
            .map(|_| rng.gen_range(0..actions as u32))
            .collect();
        Self::hard_instance(players, actions, loss_bound, targets)
    }

    /// Singleton congestion game; `costs` holds one nondecreasing cost row
    /// per action, indexed by load minus one.
    pub fn congestion(
        players: usize,
        actions: usize,
        loss_bound: f64,
        costs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        Self::check_dims(players, actions, loss_bound)?;
        if costs.len() != actions {
            return Err(Error::Construction(format!(
                "expected {actions} cost rows, got {}",
                costs.len()
            )));
        }
        for (a, row) in costs.iter().enumerate() {
            if row.len() != players {
                return Err(Error::Construction(format!(
                    "cost row {a} must have {players} entries, got {}",
                    row.len()
                )));
            }
            if let Some(bad) = row
                .iter()
                .find(|v| !v.is_finite() || **v < 0.0 || **v > loss_bound)
            {
                return Err(Error::Construction(format!(
                    "cost {bad} outside [0, {loss_bound}] in row {a}"
                )));
            }
        }
        Ok(NormalFormGame {
            players,
            actions,
            loss_bound,
            kind: GameKind::Congestion { costs },
        })
    }

    /// The 2-player, 4-action game that is a CCE but not a CE under the
    /// recommendation {1/2 (C,A), 1/2 (B,B)}.
    pub fn counterexample() -> Self {
        NormalFormGame {
            players: 2,
            actions: 4,
            loss_bound: 3.0,
            kind: GameKind::Counterexample,
        }
    }

    /// Game whose losses are a deterministic hash of (seed, player, profile),
    /// mapped into `[0, loss_bound]`. Queryable at any size without storage.
    pub fn random_seeded(
        players: usize,
        actions: usize,
        loss_bound: f64,
        seed: u64,
    ) -> Result<Self> {
        Self::check_dims(players, actions, loss_bound)?;
        Ok(NormalFormGame {
            players,
            actions,
            loss_bound,
            kind: GameKind::RandomSeeded { seed },
        })
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn loss_bound(&self) -> f64 {
        self.loss_bound
    }

    pub fn kind(&self) -> &GameKind {
        &self.kind
    }

    /// Hard-instance targets, for harness scoring only. Solvers never call
    /// this.
    pub fn targets(&self) -> Option<&[u32]> {
        match &self.kind {
            GameKind::HardInstance { targets } => Some(targets),
            _ => None,
        }
    }

    /// Number of joint action profiles `n^m`, when representable.
    pub fn profile_count(&self) -> Option<usize> {
        checked_profile_count(self.players, self.actions).ok()
    }

    fn validate_player(&self, player: usize) -> Result<()> {
        if player >= self.players {
            return Err(Error::InputDomain(format!(
                "player {player} out of range for {} players",
                self.players
            )));
        }
        Ok(())
    }

    fn validate_profile(&self, profile: &[u32]) -> Result<()> {
        if profile.len() != self.players {
            return Err(Error::InputDomain(format!(
                "profile length {} != {} players",
                profile.len(),
                self.players
            )));
        }
        if let Some(bad) = profile.iter().find(|&&a| a as usize >= self.actions) {
            return Err(Error::InputDomain(format!(
                "action {bad} out of range for {} actions",
                self.actions
            )));
        }
        Ok(())
    }

    fn loss_at(&self, player: usize, profile: &[u32]) -> f64 {
        match &self.kind {
            GameKind::Explicit { losses } => {
                let mut idx = player;
                for &a in profile {
                    idx = idx * self.actions + a as usize;
                }
                losses[idx]
            }
            GameKind::HardInstance { targets } => {
                if profile[player] == targets[player] {
                    0.0
                } else {
                    self.loss_bound
                }
            }
            GameKind::Congestion { costs } => {
                let own = profile[player];
                let load = profile.iter().filter(|&&a| a == own).count();
                costs[own as usize][load - 1]
            }
            GameKind::Counterexample => {
                if player == 0 {
                    COUNTEREXAMPLE_ROWS[profile[0] as usize][profile[1] as usize]
                } else {
                    2.0
                }
            }
            GameKind::RandomSeeded { seed } => {
                let mut h = mix(*seed, 0x6e66_675f_7261_6e64 ^ player as u64);
                for &a in profile {
                    h = mix(h, a as u64 + 1);
                }
                // top 53 bits -> [0, 1), then scale
                (h >> 11) as f64 / (1u64 << 53) as f64 * self.loss_bound
            }
        }
    }

    /// Evaluate one loss, validating inputs and counting one query.
    pub fn loss_query(
        &self,
        player: usize,
        profile: &[u32],
        counter: &QueryCounter,
    ) -> Result<f64> {
        self.validate_player(player)?;
        self.validate_profile(profile)?;
        counter.increment();
        Ok(self.loss_at(player, profile))
    }

    /// Counted evaluation for hot loops; the caller guarantees validity.
    pub fn loss_counted(&self, player: usize, profile: &[u32], counter: &QueryCounter) -> f64 {
        debug_assert!(player < self.players && profile.len() == self.players);
        counter.increment();
        self.loss_at(player, profile)
    }

    pub fn to_json(&self) -> Result<Value> {
        let file = match &self.kind {
            GameKind::Explicit { losses } => GameFile::Explicit {
                players: self.players,
                actions: self.actions,
                loss_bound: self.loss_bound,
                losses: flat_to_nested(losses, self.players, self.actions),
            },
            GameKind::HardInstance { targets } => GameFile::Hard {
                players: self.players,
                actions: self.actions,
                loss_bound: self.loss_bound,
                targets: targets.clone(),
            },
            GameKind::Congestion { costs } => GameFile::Congestion {
                players: self.players,
                actions: self.actions,
                loss_bound: self.loss_bound,
                costs: costs.clone(),
            },
            GameKind::Counterexample => GameFile::Counterexample,
            GameKind::RandomSeeded { .. } => {
                // no file format for lazily hashed games; materialize
                let dense = self.materialize()?;
                return dense.to_json();
            }
        };
        Ok(serde_json::to_value(file)?)
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let file: GameFile = serde_json::from_value(value.clone())
            .map_err(|e| Error::Format(format!("unrecognized game file: {e}")))?;
        match file {
            GameFile::Explicit {
                players,
                actions,
                loss_bound,
                losses,
            } => {
                let flat = nested_to_flat(&losses, players, actions)?;
                Self::explicit(players, actions, loss_bound, flat)
            }
            GameFile::Hard {
                players,
                actions,
                loss_bound,
                targets,
            } => Self::hard_instance(players, actions, loss_bound, targets),
            GameFile::Congestion {
                players,
                actions,
                loss_bound,
                costs,
            } => Self::congestion(players, actions, loss_bound, costs),
            GameFile::Counterexample => Ok(Self::counterexample()),
        }
    }

    /// Rewrite any game as an explicit tensor (subject to the tensor cap).
    pub fn materialize(&self) -> Result<NormalFormGame> {
        let profiles = checked_profile_count(self.players, self.actions)?;
        let entries = profiles
            .checked_mul(self.players)
            .filter(|&e| e <= DEFAULT_TENSOR_CAP)
            .ok_or_else(|| {
                Error::Construction("game too large to materialize explicitly".into())
            })?;
        let mut losses = vec![0.0; entries];
        let mut profile = vec![0u32; self.players];
        for i in 0..self.players {
            profile.iter_mut().for_each(|a| *a = 0);
            for p in 0..profiles {
                let mut idx = i;
                for &a in &profile {
                    idx = idx * self.actions + a as usize;
                }
                losses[idx] = self.loss_at(i, &profile);
                if p + 1 < profiles {
                    step_profile(&mut profile, self.actions);
                }
            }
        }
        NormalFormGame::explicit(self.players, self.actions, self.loss_bound, losses)
    }
}

/// `actions^players` with overflow checking.
pub fn checked_profile_count(players: usize, actions: usize) -> Result<usize> {
    let mut count: usize = 1;
    for _ in 0..players {
        count = count.checked_mul(actions).ok_or_else(|| {
            Error::Construction(format!("{actions}^{players} profiles overflow usize"))
        })?;
    }
    Ok(count)
}

/// Advance a profile odometer (last player fastest). Wraps at the end.
pub fn step_profile(profile: &mut [u32], actions: usize) {
    for slot in profile.iter_mut().rev() {
        *slot += 1;
        if (*slot as usize) < actions {
            return;
        }
        *slot = 0;
    }
}

/// Call `f` on every profile of the `players`-fold action space.
pub fn for_each_profile<F: FnMut(&[u32])>(players: usize, actions: usize, mut f: F) {
    let mut profile = vec![0u32; players];
    let total = match checked_profile_count(players, actions) {
        Ok(t) => t,
        Err(_) => return,
    };
    for i in 0..total {
        f(&profile);
        if i + 1 < total {
            step_profile(&mut profile, actions);
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "format")]
enum GameFile {
    #[serde(rename = "nfg-explicit-v1")]
    Explicit {
        players: usize,
        actions: usize,
        loss_bound: f64,
        losses: Value,
    },
    #[serde(rename = "nfg-hard-v1")]
    Hard {
        players: usize,
        actions: usize,
        loss_bound: f64,
        targets: Vec<u32>,
    },
    #[serde(rename = "nfg-congestion-v1")]
    Congestion {
        players: usize,
        actions: usize,
        loss_bound: f64,
        costs: Vec<Vec<f64>>,
    },
    #[serde(rename = "nfg-counterexample-v1")]
    Counterexample,
}

fn flat_to_nested(losses: &[f64], players: usize, actions: usize) -> Value {
    fn build(slice: &[f64], depth: usize, actions: usize) -> Value {
        if depth == 0 {
            debug_assert_eq!(slice.len(), 1);
            return Value::from(slice[0]);
        }
        let chunk = slice.len() / actions;
        Value::Array(
            (0..actions)
                .map(|a| build(&slice[a * chunk..(a + 1) * chunk], depth - 1, actions))
                .collect(),
        )
    }
    let per_player = losses.len() / players;
    Value::Array(
        (0..players)
            .map(|i| build(&losses[i * per_player..(i + 1) * per_player], players, actions))
            .collect(),
    )
}

fn nested_to_flat(value: &Value, players: usize, actions: usize) -> Result<Vec<f64>> {
    fn walk(value: &Value, depth: usize, actions: usize, out: &mut Vec<f64>) -> Result<()> {
        if depth == 0 {
            let v = value
                .as_f64()
                .ok_or_else(|| Error::Format(format!("expected a number, got {value}")))?;
            out.push(v);
            return Ok(());
        }
        let arr = value
            .as_array()
            .ok_or_else(|| Error::Format(format!("expected an array at depth {depth}")))?;
        if arr.len() != actions {
            return Err(Error::Format(format!(
                "expected {actions} entries, got {}",
                arr.len()
            )));
        }
        for item in arr {
            walk(item, depth - 1, actions, out)?;
        }
        Ok(())
    }

    let outer = value
        .as_array()
        .ok_or_else(|| Error::Format("losses must be an array per player".into()))?;
    if outer.len() != players {
        return Err(Error::Format(format!(
            "expected {players} per-player tensors, got {}",
            outer.len()
        )));
    }
    let entries = checked_profile_count(players, actions)?
        .checked_mul(players)
        .ok_or_else(|| Error::Format("loss tensor size overflows".into()))?;
    let mut flat = Vec::with_capacity(entries);
    for per_player in outer {
        walk(per_player, players, actions, &mut flat)?;
    }
    Ok(flat)
}
