//! Peer reputation: an exponential moving average of the fraction of valid
//! statements a peer delivers per round.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReputationConfig {
    pub alpha: f64,
    pub initial: f64,
    pub threshold: f64,
}

impl Default for ReputationConfig {
    fn default() -> Self {
        ReputationConfig {
            alpha: 0.2,
            initial: 0.5,
            threshold: 0.2,
        }
    }
}

/// What a peer delivered in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RoundStats {
    pub delivered_valid: u64,
    pub delivered_total: u64,
}

impl ReputationConfig {
    pub fn update(&self, prev: f64, stats: RoundStats) -> f64 {
        update_reputation(prev, stats, self.alpha)
    }

    pub fn is_eligible(&self, reputation: f64) -> bool {
        reputation >= self.threshold
    }
}

/// `(1 - alpha) * prev + alpha * valid_fraction`. A round with no
/// deliveries carries no information and leaves the score unchanged.
///
/// ```
/// use stated_node::reputation::{update_reputation, RoundStats};
///
/// let all_valid = RoundStats { delivered_valid: 4, delivered_total: 4 };
/// assert!((update_reputation(0.5, all_valid, 0.2) - 0.6).abs() < 1e-12);
/// assert_eq!(update_reputation(0.5, RoundStats::default(), 0.2), 0.5);
/// ```
pub fn update_reputation(prev: f64, stats: RoundStats, alpha: f64) -> f64 {
    if stats.delivered_total == 0 {
        return prev;
    }
    let valid = stats.delivered_valid.min(stats.delivered_total) as f64;
    let fraction = valid / stats.delivered_total as f64;
    ((1.0 - alpha) * prev + alpha * fraction).clamp(0.0, 1.0)
}
