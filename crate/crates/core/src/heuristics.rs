//! Distance estimates used to order the search frontier.

use std::fmt;
use std::str::FromStr;
use std::thread;
use std::time::Duration;

use thiserror::Error;

use crate::grid::Position;
use crate::mix;

pub const DEFAULT_NOISE_SCALE: f64 = 5.0;
pub const DEFAULT_DELAY: Duration = Duration::from_millis(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeuristicVariant {
    Euclidean,
    Manhattan,
    /// Euclidean plus a deterministic positive delta.
    Inadmissible,
    /// Euclidean after blocking the caller for a fixed delay.
    Expensive,
    ExpensiveInadmissible,
}

impl HeuristicVariant {
    pub const ALL: [HeuristicVariant; 5] = [
        HeuristicVariant::Euclidean,
        HeuristicVariant::Manhattan,
        HeuristicVariant::Inadmissible,
        HeuristicVariant::Expensive,
        HeuristicVariant::ExpensiveInadmissible,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HeuristicVariant::Euclidean => "euclidean",
            HeuristicVariant::Manhattan => "manhattan",
            HeuristicVariant::Inadmissible => "inadmissible",
            HeuristicVariant::Expensive => "expensive",
            HeuristicVariant::ExpensiveInadmissible => "expensive-inadmissible",
        }
    }

    fn is_noisy(self) -> bool {
        matches!(
            self,
            HeuristicVariant::Inadmissible | HeuristicVariant::ExpensiveInadmissible
        )
    }

    fn is_slow(self) -> bool {
        matches!(
            self,
            HeuristicVariant::Expensive | HeuristicVariant::ExpensiveInadmissible
        )
    }
}

impl fmt::Display for HeuristicVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeuristicError {
    #[error("unknown heuristic {0:?}; expected one of euclidean, manhattan, inadmissible, expensive, expensive-inadmissible")]
    UnknownName(String),
    #[error("{0} needs a strictly positive noise scale")]
    NonPositiveNoise(HeuristicVariant),
    #[error("{0} needs a non-zero delay")]
    ZeroDelay(HeuristicVariant),
}

impl FromStr for HeuristicVariant {
    type Err = HeuristicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| HeuristicError::UnknownName(s.to_string()))
    }
}

/// A heuristic strategy together with its evaluation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicKind {
    variant: HeuristicVariant,
    noise_scale: f64,
    delay: Duration,
    noise_seed: u64,
}

impl HeuristicKind {
    pub fn new(
        variant: HeuristicVariant,
        noise_scale: f64,
        delay: Duration,
        noise_seed: u64,
    ) -> Result<Self, HeuristicError> {
        if variant.is_noisy() && !(noise_scale > 0.0 && noise_scale.is_finite()) {
            return Err(HeuristicError::NonPositiveNoise(variant));
        }
        if variant.is_slow() && delay.is_zero() {
            return Err(HeuristicError::ZeroDelay(variant));
        }
        Ok(Self {
            variant,
            noise_scale: if variant.is_noisy() { noise_scale } else { 0.0 },
            delay: if variant.is_slow() { delay } else { Duration::ZERO },
            noise_seed,
        })
    }

    /// The variant with default noise scale, delay and seed 0.
    pub fn with_defaults(variant: HeuristicVariant) -> Self {
        Self::new(variant, DEFAULT_NOISE_SCALE, DEFAULT_DELAY, 0)
            .expect("defaults satisfy every variant")
    }

    pub fn euclidean() -> Self {
        Self::with_defaults(HeuristicVariant::Euclidean)
    }

    pub fn manhattan() -> Self {
        Self::with_defaults(HeuristicVariant::Manhattan)
    }

    pub fn inadmissible(noise_scale: f64, noise_seed: u64) -> Result<Self, HeuristicError> {
        Self::new(
            HeuristicVariant::Inadmissible,
            noise_scale,
            Duration::ZERO,
            noise_seed,
        )
    }

    pub fn expensive(delay: Duration) -> Result<Self, HeuristicError> {
        Self::new(HeuristicVariant::Expensive, 0.0, delay, 0)
    }

    pub fn variant(&self) -> HeuristicVariant {
        self.variant
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    pub fn delay(&self) -> Duration {
        self.delay
    }

    pub fn noise_seed(&self) -> u64 {
        self.noise_seed
    }

    /// Never overestimates the remaining cardinal-move distance.
    pub fn is_admissible(&self) -> bool {
        !self.variant.is_noisy()
    }

    pub fn evaluate(&self, from: Position, goal: Position) -> f64 {
        if self.variant.is_slow() {
            thread::sleep(self.delay);
        }
        match self.variant {
            HeuristicVariant::Manhattan => manhattan(from, goal),
            HeuristicVariant::Euclidean | HeuristicVariant::Expensive => euclidean(from, goal),
            HeuristicVariant::Inadmissible | HeuristicVariant::ExpensiveInadmissible => {
                euclidean(from, goal) + self.noise(from, goal)
            }
        }
    }

    /// Delta in (0, noise_scale], fixed per (seed, from, goal).
    fn noise(&self, from: Position, goal: Position) -> f64 {
        let bits = mix::hash_words(
            self.noise_seed,
            &[
                from.x as u64,
                from.y as u64,
                goal.x as u64,
                goal.y as u64,
            ],
        );
        mix::open_unit(bits) * self.noise_scale
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.variant, f)
    }
}

pub fn manhattan(a: Position, b: Position) -> f64 {
    (a.x.abs_diff(b.x) + a.y.abs_diff(b.y)) as f64
}

pub fn euclidean(a: Position, b: Position) -> f64 {
    let dx = a.x.abs_diff(b.x) as f64;
    let dy = a.y.abs_diff(b.y) as f64;
    (dx * dx + dy * dy).sqrt()
}

#[cfg(test)]
mod tests {
    use std::time::Instant;

    use proptest::prelude::*;

    use super::*;

    fn p(x: u32, y: u32) -> Position {
        Position::new(x, y)
    }

    #[test]
    fn closed_forms() {
        assert_eq!(HeuristicKind::manhattan().evaluate(p(1, 2), p(4, 6)), 7.0);
        assert_eq!(HeuristicKind::euclidean().evaluate(p(0, 0), p(3, 4)), 5.0);
    }

    #[test]
    fn admissibility_flags() {
        use HeuristicVariant::*;
        let flags: Vec<bool> = HeuristicVariant::ALL
            .iter()
            .map(|&v| HeuristicKind::with_defaults(v).is_admissible())
            .collect();
        assert_eq!(
            HeuristicVariant::ALL,
            [Euclidean, Manhattan, Inadmissible, Expensive, ExpensiveInadmissible]
        );
        assert_eq!(flags, [true, true, false, true, false]);
    }

    #[test]
    fn zero_distance_is_zero() {
        for v in [HeuristicVariant::Euclidean, HeuristicVariant::Manhattan] {
            assert_eq!(HeuristicKind::with_defaults(v).evaluate(p(5, 5), p(5, 5)), 0.0);
        }
    }

    #[test]
    fn rejects_degenerate_parameters() {
        assert_eq!(
            HeuristicKind::inadmissible(0.0, 1),
            Err(HeuristicError::NonPositiveNoise(HeuristicVariant::Inadmissible))
        );
        assert_eq!(
            HeuristicKind::expensive(Duration::ZERO),
            Err(HeuristicError::ZeroDelay(HeuristicVariant::Expensive))
        );
        assert!(matches!(
            "astar".parse::<HeuristicVariant>(),
            Err(HeuristicError::UnknownName(_))
        ));
    }

    #[test]
    fn names_round_trip() {
        for v in HeuristicVariant::ALL {
            assert_eq!(v.name().parse::<HeuristicVariant>().unwrap(), v);
        }
    }

    #[test]
    fn expensive_blocks_for_delay() {
        let h = HeuristicKind::expensive(Duration::from_millis(3)).unwrap();
        let t = Instant::now();
        assert_eq!(h.evaluate(p(0, 0), p(3, 4)), 5.0);
        assert!(t.elapsed() >= Duration::from_millis(3));
    }

    proptest! {
        #[test]
        fn inadmissible_within_noise_band(
            ax in 0u32..500, ay in 0u32..500, bx in 0u32..500, by in 0u32..500,
            seed: u64, scale in 0.01f64..20.0,
        ) {
            let (a, b) = (p(ax, ay), p(bx, by));
            let h = HeuristicKind::inadmissible(scale, seed).unwrap();
            let v = h.evaluate(a, b);
            let dx = ax as f64 - bx as f64;
            let dy = ay as f64 - by as f64;
            let exact = (dx * dx + dy * dy).sqrt();
            prop_assert!(v > exact);
            prop_assert!(v <= exact + scale);
            prop_assert_eq!(v, h.evaluate(a, b));
        }

        #[test]
        fn manhattan_dominates_euclidean(
            ax in 0u32..1000, ay in 0u32..1000, bx in 0u32..1000, by in 0u32..1000,
        ) {
            let (a, b) = (p(ax, ay), p(bx, by));
            let m = manhattan(a, b);
            prop_assert!(m >= euclidean(a, b));
            // Open-grid shortest distance is exactly |dx| + |dy|.
            prop_assert_eq!(m, (ax as i64 - bx as i64).abs() as f64 + (ay as i64 - by as i64).abs() as f64);
        }
    }
}
