//! Color-selection histories and the score used to flag likely
//! color-vision-deficient observers.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::color::{hue_bucket, lab_distance, rgb_to_lab, Rgb24};
use crate::error::{Error, Result};

mod synth;

pub use synth::{synthesize_observer, synthesize_observer_with, DichromatModel, ObserverParams};

/// One selection: the observer was shown `target` and picked `selected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionEvent {
    pub turn: u64,
    pub target: Rgb24,
    pub selected: Rgb24,
}

impl ConfusionEvent {
    pub const fn new(turn: u64, target: Rgb24, selected: Rgb24) -> Self {
        Self {
            turn,
            target,
            selected,
        }
    }

    pub fn correct(&self) -> bool {
        self.target == self.selected
    }
}

/// A user's chronological selection history.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionDataset {
    user_id: String,
    events: Vec<ConfusionEvent>,
}

impl ConfusionDataset {
    /// Sorts `events` by turn. Fails on duplicate turn indices.
    pub fn new(user_id: impl Into<String>, mut events: Vec<ConfusionEvent>) -> Result<Self> {
        events.sort_by_key(|e| e.turn);
        if let Some(w) = events.windows(2).find(|w| w[0].turn == w[1].turn) {
            return Err(Error::DuplicateTurn(w[0].turn));
        }
        Ok(Self {
            user_id: user_id.into(),
            events,
        })
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn events(&self) -> &[ConfusionEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Fraction of correct selections; zero for an empty history.
    pub fn accuracy(&self) -> f64 {
        if self.events.is_empty() {
            return 0.0;
        }
        let correct = self.events.iter().filter(|e| e.correct()).count();
        correct as f64 / self.events.len() as f64
    }

    /// The first `len` events in chronological order.
    pub fn prefix(&self, len: usize) -> Self {
        Self {
            user_id: self.user_id.clone(),
            events: self.events[..len.min(self.events.len())].to_vec(),
        }
    }

    /// A dataset holding only the events at `indices` (in chronological order).
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        Self {
            user_id: self.user_id.clone(),
            events: idx.into_iter().map(|i| self.events[i]).collect(),
        }
    }

    /// Only the incorrect selections.
    pub fn confusions(&self) -> Self {
        Self {
            user_id: self.user_id.clone(),
            events: self
                .events
                .iter()
                .filter(|e| !e.correct())
                .copied()
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicConfig {
    /// Weight of the hue-mismatch term; the LAB-distance term gets `1 - beta`.
    pub beta: f64,
    /// Histories shorter than this are not ranked.
    pub min_events: usize,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            min_events: 1000,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter(alloc::format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if self.min_events == 0 {
            return Err(Error::InvalidParameter(
                "min_events must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserScore {
    pub user_id: String,
    pub h: f64,
    pub hue_mismatch_fraction: f64,
    pub mean_lab_distance: f64,
    pub accuracy: f64,
    pub events: usize,
}

/// Weighted sum of the cross-hue selection rate and the mean LAB distance
/// between target and selection, both taken over every event.
///
/// The two terms are not rescaled; the distance term is in LAB units.
pub fn heuristic_score(d: &ConfusionDataset, cfg: &HeuristicConfig) -> Result<UserScore> {
    cfg.validate()?;
    if d.is_empty() {
        return Err(Error::NoEvents);
    }
    let n = d.len() as f64;
    let mut mismatches = 0usize;
    let mut dist_sum = 0.0;
    for e in d.events() {
        if e.correct() {
            continue;
        }
        if hue_bucket(e.target) != hue_bucket(e.selected) {
            mismatches += 1;
        }
        dist_sum += lab_distance(rgb_to_lab(e.target), rgb_to_lab(e.selected));
    }
    let hue_mismatch_fraction = mismatches as f64 / n;
    let mean_lab_distance = dist_sum / n;
    Ok(UserScore {
        user_id: d.user_id().into(),
        h: cfg.beta * hue_mismatch_fraction + (1.0 - cfg.beta) * mean_lab_distance,
        hue_mismatch_fraction,
        mean_lab_distance,
        accuracy: d.accuracy(),
        events: d.len(),
    })
}

/// Scores every history with at least `cfg.min_events` events and returns the
/// `top_k` highest, ties broken by user id.
pub fn rank_users(
    datasets: &[ConfusionDataset],
    cfg: &HeuristicConfig,
    top_k: usize,
) -> Result<Vec<UserScore>> {
    cfg.validate()?;
    let mut scores = datasets
        .iter()
        .filter(|d| d.len() >= cfg.min_events)
        .map(|d| heuristic_score(d, cfg))
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| match b.h.total_cmp(&a.h) {
        Ordering::Equal => a.user_id.cmp(&b.user_id),
        o => o,
    });
    scores.truncate(top_k);
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;

    const RED: Rgb24 = Rgb24::new(255, 0, 0);
    const BLUE: Rgb24 = Rgb24::new(0, 0, 255);

    fn ds(id: &str, pairs: &[(Rgb24, Rgb24)]) -> ConfusionDataset {
        let events = pairs
            .iter()
            .enumerate()
            .map(|(i, &(t, s))| ConfusionEvent::new(i as u64, t, s))
            .collect();
        ConfusionDataset::new(id, events).unwrap()
    }

    #[test]
    fn two_rows_half_accuracy() {
        let d = ds("u", &[(RED, RED), (RED, BLUE)]);
        assert_eq!(d.len(), 2);
        assert_eq!(d.accuracy(), 0.5);
    }

    #[test]
    fn events_sorted_and_unique() {
        let e = vec![
            ConfusionEvent::new(5, RED, RED),
            ConfusionEvent::new(1, BLUE, BLUE),
        ];
        let d = ConfusionDataset::new("u", e).unwrap();
        assert_eq!(d.events()[0].turn, 1);
        let dup = vec![
            ConfusionEvent::new(1, RED, RED),
            ConfusionEvent::new(1, BLUE, BLUE),
        ];
        assert_eq!(
            ConfusionDataset::new("u", dup),
            Err(Error::DuplicateTurn(1))
        );
    }

    #[test]
    fn perfect_observer_scores_zero() {
        let d = ds(
            "u",
            &[
                (RED, RED),
                (BLUE, BLUE),
                (Rgb24::new(1, 2, 3), Rgb24::new(1, 2, 3)),
            ],
        );
        let s = heuristic_score(&d, &HeuristicConfig::default()).unwrap();
        assert_eq!(s.h, 0.0);
        assert_eq!(s.accuracy, 1.0);
    }

    #[test]
    fn pure_hue_term() {
        let d = ds("u", &[(RED, BLUE)]);
        let cfg = HeuristicConfig {
            beta: 1.0,
            min_events: 1,
        };
        assert_eq!(heuristic_score(&d, &cfg).unwrap().h, 1.0);
    }

    #[test]
    fn pure_distance_term() {
        // h = (gap + 0) / 2
        let a = Rgb24::new(100, 100, 100);
        let b = Rgb24::new(112, 112, 112);
        let gap = lab_distance(rgb_to_lab(a), rgb_to_lab(b));
        let d = ds("u", &[(a, b), (a, a)]);
        let cfg = HeuristicConfig {
            beta: 0.0,
            min_events: 1,
        };
        let h = heuristic_score(&d, &cfg).unwrap().h;
        assert!((h - gap / 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_dataset_rejected() {
        let d = ConfusionDataset::new("u", Vec::new()).unwrap();
        assert_eq!(
            heuristic_score(&d, &HeuristicConfig::default()),
            Err(Error::NoEvents)
        );
    }

    #[test]
    fn bad_beta_rejected() {
        let d = ds("u", &[(RED, RED)]);
        let cfg = HeuristicConfig {
            beta: 1.5,
            min_events: 1,
        };
        assert!(matches!(
            heuristic_score(&d, &cfg),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn rank_filters_short_histories() {
        let long = ds("long", &[(RED, BLUE); 3]);
        let short = ds("short", &[(RED, BLUE)]);
        let cfg = HeuristicConfig {
            beta: 0.5,
            min_events: 2,
        };
        let ranked = rank_users(&[short, long], &cfg, 30).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].user_id, "long");
    }

    #[test]
    fn rank_orders_descending() {
        let good = ds("a", &[(RED, RED), (BLUE, BLUE)]);
        let bad = ds("b", &[(RED, BLUE), (BLUE, BLUE)]);
        let cfg = HeuristicConfig {
            beta: 0.5,
            min_events: 1,
        };
        let ranked = rank_users(&[good, bad], &cfg, 5).unwrap();
        assert_eq!(ranked[0].user_id, "b");
        assert_eq!(ranked[1].h, 0.0);
    }

    #[test]
    fn rank_matches_planted_order() {
        // Plant H by the number of red/blue confusions in a 40-event history.
        let cfg = HeuristicConfig {
            beta: 1.0,
            min_events: 1,
        };
        let planted: Vec<(String, usize)> = (0..30)
            .map(|i| (format!("user{i:02}"), (i * 7) % 31))
            .collect();
        let datasets: Vec<_> = planted
            .iter()
            .map(|(id, k)| {
                let pairs: Vec<_> = (0..40)
                    .map(|j| if j < *k { (RED, BLUE) } else { (RED, RED) })
                    .collect();
                ds(id, &pairs)
            })
            .collect();
        let ranked = rank_users(&datasets, &cfg, 30).unwrap();
        let mut oracle = planted.clone();
        oracle.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let got: Vec<_> = ranked.iter().map(|s| s.user_id.clone()).collect();
        let want: Vec<_> = oracle.into_iter().map(|(id, _)| id).collect();
        assert_eq!(got, want);
    }

    fn arb_events() -> impl Strategy<Value = Vec<(Rgb24, Rgb24)>> {
        let c = any::<[u8; 3]>().prop_map(Rgb24::from);
        proptest::collection::vec((c.clone(), c), 1..40)
    }

    proptest! {
        #[test]
        fn score_is_permutation_invariant(pairs in arb_events(), seed in any::<u64>()) {
            let cfg = HeuristicConfig { beta: 0.5, min_events: 1 };
            let a = heuristic_score(&ds("u", &pairs), &cfg).unwrap();
            let mut shuffled = pairs.clone();
            let len = shuffled.len();
            let mut s = seed;
            for i in (1..len).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            let b = heuristic_score(&ds("u", &shuffled), &cfg).unwrap();
            prop_assert!((a.h - b.h).abs() <= 1e-9 * (1.0 + a.h));
        }

        #[test]
        fn score_is_affine_in_beta(pairs in arb_events()) {
            let d = ds("u", &pairs);
            let h = |beta| heuristic_score(&d, &HeuristicConfig { beta, min_events: 1 }).unwrap().h;
            let (h0, h5, h1) = (h(0.0), h(0.5), h(1.0));
            prop_assert!((h5 - (h0 + h1) / 2.0).abs() <= 1e-9 * (1.0 + h0.abs() + h1.abs()));
        }
    }
}
