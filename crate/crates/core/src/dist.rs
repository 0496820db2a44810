//! Joint distributions over action profiles.
//!
//! Three representations cover everything the solvers emit and the
//! verifiers consume: a sparse support map, a product of per-player
//! marginals, and a uniform-weight mixture of per-round products. Product
//! structure is kept symbolic; nothing here expands an `n^m` table.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::gibbs::sample_index;

const SIMPLEX_TOL: f64 = 1e-9;

fn check_simplex(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InputDomain(format!("{what} is empty")));
    }
    if let Some(bad) = p.iter().find(|v| !v.is_finite() || **v < -SIMPLEX_TOL) {
        return Err(Error::InputDomain(format!(
            "{what} has invalid probability {bad}"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InputDomain(format!(
            "{what} sums to {sum}, not 1"
        )));
    }
    Ok(())
}

fn renormalize(p: &mut [f64]) {
    let sum: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v = (*v).max(0.0) / sum;
    }
}

/// A distribution over joint action profiles of an `m`-player, `n`-action
/// game.
#[derive(Debug, Clone, PartialEq)]
pub enum JointDistribution {
    /// Explicit support with probabilities.
    Sparse {
        players: usize,
        actions: usize,
        support: BTreeMap<Vec<u32>, f64>,
    },
    /// Independent per-player marginals.
    Product { factors: Vec<Vec<f64>> },
    /// Mixture of products with given weights, e.g. a per-round average.
    Mixture {
        weights: Vec<f64>,
        factors: Vec<Vec<Vec<f64>>>,
    },
}

impl JointDistribution {
    pub fn sparse(
        players: usize,
        actions: usize,
        support: BTreeMap<Vec<u32>, f64>,
    ) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InputDomain("empty support".into()));
        }
        let mut total = 0.0;
        for (profile, &p) in &support {
            if profile.len() != players {
                return Err(Error::InputDomain(format!(
                    "profile length {} != {players}",
                    profile.len()
                )));
            }
            if profile.iter().any(|&a| a as usize >= actions) {
                return Err(Error::InputDomain(format!(
                    "profile {profile:?} has an action out of range"
                )));
            }
            if !p.is_finite() || p < -SIMPLEX_TOL {
                return Err(Error::InputDomain(format!("invalid probability {p}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InputDomain(format!(
                "support sums to {total}, not 1"
            )));
        }
        let mut support = support;
        for p in support.values_mut() {
            *p = p.max(0.0) / total;
        }
        Ok(JointDistribution::Sparse {
            players,
            actions,
            support,
        })
    }

    pub fn product(factors: Vec<Vec<f64>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InputDomain("no factors".into()));
        }
        let n = factors[0].len();
        let mut factors = factors;
        for f in &mut factors {
            if f.len() != n {
                return Err(Error::InputDomain(
                    "factors must share one action count".into(),
                ));
            }
            check_simplex(f, "factor")?;
            renormalize(f);
        }
        Ok(JointDistribution::Product { factors })
    }

    pub fn mixture(weights: Vec<f64>, factors: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if weights.len() != factors.len() || weights.is_empty() {
            return Err(Error::InputDomain(
                "mixture needs one factor set per weight".into(),
            ));
        }
        check_simplex(&weights, "mixture weights")?;
        let players = factors[0].len();
        let actions = factors[0].first().map(|f| f.len()).unwrap_or(0);
        let mut factors = factors;
        for fs in &mut factors {
            if fs.len() != players {
                return Err(Error::InputDomain(
                    "every mixture component must cover all players".into(),
                ));
            }
            for f in fs.iter_mut() {
                if f.len() != actions {
                    return Err(Error::InputDomain(
                        "factors must share one action count".into(),
                    ));
                }
                check_simplex(f, "mixture factor")?;
                renormalize(f);
            }
        }
        let mut weights = weights;
        renormalize(&mut weights);
        Ok(JointDistribution::Mixture { weights, factors })
    }

    /// Point mass on one profile.
    pub fn point_mass(profile: Vec<u32>, actions: usize) -> Result<Self> {
        let players = profile.len();
        let mut support = BTreeMap::new();
        support.insert(profile, 1.0);
        Self::sparse(players, actions, support)
    }

    pub fn players(&self) -> usize {
        match self {
            JointDistribution::Sparse { players, .. } => *players,
            JointDistribution::Product { factors } => factors.len(),
            JointDistribution::Mixture { factors, .. } => factors[0].len(),
        }
    }

    pub fn actions(&self) -> usize {
        match self {
            JointDistribution::Sparse { actions, .. } => *actions,
            JointDistribution::Product { factors } => factors[0].len(),
            JointDistribution::Mixture { factors, .. } => factors[0][0].len(),
        }
    }

    /// Marginal law of one player's recommended action.
    pub fn marginal(&self, player: usize) -> Result<Vec<f64>> {
        if player >= self.players() {
            return Err(Error::InputDomain(format!(
                "player {player} out of range"
            )));
        }
        Ok(match self {
            JointDistribution::Sparse {
                actions, support, ..
            } => {
                let mut marg = vec![0.0; *actions];
                for (profile, &p) in support {
                    marg[profile[player] as usize] += p;
                }
                marg
            }
            JointDistribution::Product { factors } => factors[player].clone(),
            JointDistribution::Mixture { weights, factors } => {
                let n = self.actions();
                let mut marg = vec![0.0; n];
                for (w, fs) in weights.iter().zip(factors) {
                    for (a, &q) in fs[player].iter().enumerate() {
                        marg[a] += w * q;
                    }
                }
                marg
            }
        })
    }

    /// Draw one profile.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u32> {
        match self {
            JointDistribution::Sparse { support, .. } => {
                let x: f64 = rng.gen();
                let mut acc = 0.0;
                let mut last = None;
                for (profile, &p) in support {
                    acc += p;
                    last = Some(profile);
                    if x < acc {
                        return profile.clone();
                    }
                }
                last.expect("nonempty support").clone()
            }
            JointDistribution::Product { factors } => factors
                .iter()
                .map(|f| sample_index(f, rng) as u32)
                .collect(),
            JointDistribution::Mixture { weights, factors } => {
                let t = sample_index(weights, rng);
                factors[t]
                    .iter()
                    .map(|f| sample_index(f, rng) as u32)
                    .collect()
            }
        }
    }

    pub fn support_size(&self) -> Option<usize> {
        match self {
            JointDistribution::Sparse { support, .. } => Some(support.len()),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<Value> {
        let file = match self {
            JointDistribution::Sparse {
                players,
                actions,
                support,
            } => DistFile::Sparse {
                players: *players,
                actions: *actions,
                support: support
                    .iter()
                    .map(|(profile, &prob)| SupportEntry {
                        profile: profile.clone(),
                        prob,
                    })
                    .collect(),
            },
            JointDistribution::Product { factors } => DistFile::Product {
                factors: factors.clone(),
            },
            JointDistribution::Mixture { weights, factors } => DistFile::Mixture {
                weights: weights.clone(),
                factors: factors.clone(),
            },
        };
        Ok(serde_json::to_value(file)?)
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let file: DistFile = serde_json::from_value(value.clone())
            .map_err(|e| Error::Format(format!("unrecognized distribution file: {e}")))?;
        match file {
            DistFile::Sparse {
                players,
                actions,
                support,
            } => {
                let mut map = BTreeMap::new();
                for entry in support {
                    if map.insert(entry.profile.clone(), entry.prob).is_some() {
                        return Err(Error::Format(format!(
                            "duplicate profile {:?} in support",
                            entry.profile
                        )));
                    }
                }
                Self::sparse(players, actions, map)
            }
            DistFile::Product { factors } => Self::product(factors),
            DistFile::Mixture { weights, factors } => Self::mixture(weights, factors),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SupportEntry {
    profile: Vec<u32>,
    prob: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "format")]
enum DistFile {
    #[serde(rename = "dist-sparse-v1")]
    Sparse {
        players: usize,
        actions: usize,
        support: Vec<SupportEntry>,
    },
    #[serde(rename = "dist-product-v1")]
    Product { factors: Vec<Vec<f64>> },
    #[serde(rename = "dist-mixture-v1")]
    Mixture {
        weights: Vec<f64>,
        factors: Vec<Vec<Vec<f64>>>,
    },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::stream_rng;

    #[test]
    fn sparse_marginals() {
        let mut support = BTreeMap::new();
        support.insert(vec![2, 0], 0.5);
        support.insert(vec![1, 1], 0.5);
        let d = JointDistribution::sparse(2, 4, support).unwrap();
        let m0 = d.marginal(0).unwrap();
        assert_eq!(m0, vec![0.0, 0.5, 0.5, 0.0]);
        assert!(d.marginal(2).is_err());
    }

    #[test]
    fn product_and_mixture_marginals_agree_on_single_component() {
        let factors = vec![vec![0.25; 4], vec![0.1, 0.2, 0.3, 0.4]];
        let p = JointDistribution::product(factors.clone()).unwrap();
        let m = JointDistribution::mixture(vec![1.0], vec![factors]).unwrap();
        assert_eq!(p.marginal(1).unwrap(), m.marginal(1).unwrap());
    }

    #[test]
    fn rejects_off_simplex() {
        let mut support = BTreeMap::new();
        support.insert(vec![0, 0], 0.7);
        assert!(JointDistribution::sparse(2, 2, support).is_err());
        assert!(JointDistribution::product(vec![vec![0.7, 0.7]]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut support = BTreeMap::new();
        support.insert(vec![2, 0], 0.5);
        support.insert(vec![1, 1], 0.5);
        let dists = vec![
            JointDistribution::sparse(2, 4, support).unwrap(),
            JointDistribution::product(vec![vec![0.5, 0.5], vec![0.25, 0.75]]).unwrap(),
            JointDistribution::mixture(
                vec![0.5, 0.5],
                vec![
                    vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                    vec![vec![0.5, 0.5], vec![0.5, 0.5]],
                ],
            )
            .unwrap(),
        ];
        for d in dists {
            let back = JointDistribution::from_json(&d.to_json().unwrap()).unwrap();
            assert_eq!(d, back);
        }
    }

    #[test]
    fn sampling_matches_marginals_roughly() {
        let d = JointDistribution::product(vec![vec![0.8, 0.2], vec![0.5, 0.5]]).unwrap();
        let mut rng = stream_rng(4, 0);
        let mut count0 = 0;
        let draws = 20_000;
        for _ in 0..draws {
            if d.sample(&mut rng)[0] == 0 {
                count0 += 1;
            }
        }
        assert!((count0 as f64 / draws as f64 - 0.8).abs() < 0.02);
    }
}
