//! Synthetic selection histories for simulated dichromat observers.
//!
//! Each simulated turn shows a target color among `k` specimens (4 to 9,
//! the target included). Distractors are the target blended toward a random
//! color; the blend weight shrinks as `difficulty` rises. The observer sees
//! every color through a dichromat projection in linear RGB, perturbed by
//! Gaussian noise in LAB, and picks the specimen closest to the target.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{ConfusionDataset, ConfusionEvent};
use crate::color::{linear_rgb_to_lab, LabColor, Rgb24};
use crate::error::{Error, Result};

/// Dichromat projections in linear sRGB (Viénot, Brettel and Mollon 1999,
/// precomputed for sRGB primaries). `None` is the identity observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DichromatModel {
    None,
    Protan,
    Deutan,
    Tritan,
}

const PROTAN: [[f64; 3]; 3] = [
    [0.112_38, 0.887_62, 0.0],
    [0.112_38, 0.887_62, 0.0],
    [0.004_01, -0.004_01, 1.0],
];

const DEUTAN: [[f64; 3]; 3] = [
    [0.292_75, 0.707_25, 0.0],
    [0.292_75, 0.707_25, 0.0],
    [-0.022_34, 0.022_34, 1.0],
];

const TRITAN: [[f64; 3]; 3] = [
    [1.0, 0.144_61, -0.144_61],
    [0.0, 0.859_24, 0.140_76],
    [0.0, 0.859_24, 0.140_76],
];

impl DichromatModel {
    pub const ALL: [DichromatModel; 4] = [Self::None, Self::Protan, Self::Deutan, Self::Tritan];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Protan => "protan",
            Self::Deutan => "deutan",
            Self::Tritan => "tritan",
        }
    }

    pub fn matrix(self) -> Option<&'static [[f64; 3]; 3]> {
        match self {
            Self::None => None,
            Self::Protan => Some(&PROTAN),
            Self::Deutan => Some(&DEUTAN),
            Self::Tritan => Some(&TRITAN),
        }
    }

    /// Simulated appearance of `c` in linear RGB, clamped to gamut.
    pub fn project_linear(self, c: Rgb24) -> [f64; 3] {
        let v = c.to_linear();
        match self.matrix() {
            None => v,
            Some(m) => core::array::from_fn(|i| {
                (m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2]).clamp(0.0, 1.0)
            }),
        }
    }

    pub fn simulate(self, c: Rgb24) -> Rgb24 {
        Rgb24::from_linear(self.project_linear(c))
    }

    /// Perceptual noise standard deviation (LAB units) used by default.
    pub fn default_noise(self) -> f64 {
        match self {
            Self::None => 0.0,
            _ => 1.0,
        }
    }
}

impl FromStr for DichromatModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "protan" | "protanope" => Ok(Self::Protan),
            "deutan" | "deuteranope" => Ok(Self::Deutan),
            "tritan" | "tritanope" => Ok(Self::Tritan),
            other => Err(Error::UnknownModel(other.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverParams {
    pub model: DichromatModel,
    /// Number of simulated turns.
    pub turns: usize,
    pub seed: u64,
    /// In `(0, 1]`; higher means distractors closer to the target.
    pub difficulty: f64,
    /// Standard deviation of per-channel LAB noise.
    pub noise: f64,
    pub min_specimens: usize,
    pub max_specimens: usize,
}

impl ObserverParams {
    pub fn new(model: DichromatModel, turns: usize, seed: u64, difficulty: f64) -> Self {
        Self {
            model,
            turns,
            seed,
            difficulty,
            noise: model.default_noise(),
            min_specimens: 4,
            max_specimens: 9,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.turns == 0 {
            return Err(Error::InvalidParameter("turns must be positive".into()));
        }
        if !(self.difficulty > 0.0 && self.difficulty <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "difficulty must lie in (0, 1], got {}",
                self.difficulty
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidParameter(
                "noise must be finite and non-negative".into(),
            ));
        }
        if self.min_specimens < 2 || self.min_specimens > self.max_specimens {
            return Err(Error::InvalidParameter(
                "invalid specimen count range".into(),
            ));
        }
        Ok(())
    }

    /// Upper bound of the distractor blend weight.
    fn spread(&self) -> f64 {
        0.05 + 0.45 * (1.0 - self.difficulty)
    }
}

/// Simulates a history for the named model with its default noise level.
pub fn synthesize_observer(
    model: &str,
    turns: usize,
    seed: u64,
    difficulty: f64,
) -> Result<ConfusionDataset> {
    let model: DichromatModel = model.parse()?;
    synthesize_observer_with(&ObserverParams::new(model, turns, seed, difficulty))
}

pub fn synthesize_observer_with(p: &ObserverParams) -> Result<ConfusionDataset> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let spread = p.spread();

    let perceive = |c: Rgb24, rng: &mut ChaCha8Rng| -> LabColor {
        let lab = linear_rgb_to_lab(p.model.project_linear(c));
        if p.noise == 0.0 {
            return lab;
        }
        LabColor::new(
            lab.l + p.noise * normal.sample(rng),
            lab.a + p.noise * normal.sample(rng),
            lab.b + p.noise * normal.sample(rng),
        )
    };

    let mut events = Vec::with_capacity(p.turns);
    let mut specimens: Vec<Rgb24> = Vec::with_capacity(p.max_specimens);
    for turn in 0..p.turns {
        let target = Rgb24::new(rng.random(), rng.random(), rng.random());
        let k = rng.random_range(p.min_specimens..=p.max_specimens);
        specimens.clear();
        for _ in 0..k - 1 {
            let toward = Rgb24::new(rng.random(), rng.random(), rng.random());
            let w: f64 = rng.random_range(0.25 * spread..spread);
            specimens.push(blend(target, toward, w));
        }
        let slot = rng.random_range(0..k);
        specimens.insert(slot, target);

        let seen_target = perceive(target, &mut rng);
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, &s) in specimens.iter().enumerate() {
            let d = crate::color::lab_distance(seen_target, perceive(s, &mut rng));
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        events.push(ConfusionEvent::new(turn as u64, target, specimens[best]));
    }
    ConfusionDataset::new(synthetic_user_id(p), events)
}

fn synthetic_user_id(p: &ObserverParams) -> String {
    format!("synthetic-{}-{}", p.model.name(), p.seed)
}

fn blend(from: Rgb24, to: Rgb24, w: f64) -> Rgb24 {
    let mix = |a: u8, b: u8| {
        let v = f64::from(a) + w * (f64::from(b) - f64::from(a));
        libm::round(v).clamp(0.0, 255.0) as u8
    };
    Rgb24::new(mix(from.r, to.r), mix(from.g, to.g), mix(from.b, to.b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confusion::{heuristic_score, HeuristicConfig};

    #[test]
    fn identity_observer_is_perfect() {
        let d = synthesize_observer("none", 2000, 7, 0.9).unwrap();
        assert_eq!(d.len(), 2000);
        assert_eq!(d.accuracy(), 1.0);
    }

    #[test]
    fn same_seed_same_history() {
        let a = synthesize_observer("protan", 500, 11, 0.5).unwrap();
        let b = synthesize_observer("protan", 500, 11, 0.5).unwrap();
        assert_eq!(a, b);
        let c = synthesize_observer("protan", 500, 12, 0.5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn unknown_model_rejected() {
        assert_eq!(
            synthesize_observer("achromat", 10, 0, 0.5),
            Err(Error::UnknownModel("achromat".into()))
        );
        assert!(synthesize_observer("protan", 0, 0, 0.5).is_err());
        assert!(synthesize_observer("protan", 10, 0, 0.0).is_err());
    }

    #[test]
    fn projections_fix_white_and_gray_axis() {
        for m in DichromatModel::ALL {
            assert_eq!(m.simulate(Rgb24::WHITE), Rgb24::WHITE, "{m:?}");
            assert_eq!(m.simulate(Rgb24::BLACK), Rgb24::BLACK, "{m:?}");
        }
        // protan and deutan leave blue alone, tritan leaves red alone
        assert_eq!(
            DichromatModel::Protan.simulate(Rgb24::new(0, 0, 255)),
            Rgb24::new(0, 0, 255)
        );
        assert_eq!(
            DichromatModel::Deutan.simulate(Rgb24::new(0, 0, 255)),
            Rgb24::new(0, 0, 255)
        );
        let red = DichromatModel::Tritan.simulate(Rgb24::new(255, 0, 0));
        assert_eq!(red, Rgb24::new(255, 0, 0));
    }

    #[test]
    fn red_green_collapse_for_protan() {
        // Red and green map to colors with equal R and G under protan/deutan.
        for m in [DichromatModel::Protan, DichromatModel::Deutan] {
            let r = m.simulate(Rgb24::new(255, 0, 0));
            assert_eq!(r.r, r.g, "{m:?}");
        }
    }

    #[test]
    fn protan_confuses_across_hues_more_than_identity() {
        let cfg = HeuristicConfig {
            beta: 0.5,
            min_events: 1,
        };
        let protan = synthesize_observer("protan", 10_000, 3, 0.7).unwrap();
        let none = synthesize_observer("none", 10_000, 3, 0.7).unwrap();
        let sp = heuristic_score(&protan, &cfg).unwrap();
        let sn = heuristic_score(&none, &cfg).unwrap();
        assert!(sp.hue_mismatch_fraction > sn.hue_mismatch_fraction);
        assert!(sp.h > sn.h);
        assert!(sp.accuracy < 1.0 && sp.accuracy > 0.3, "{}", sp.accuracy);
    }
}
