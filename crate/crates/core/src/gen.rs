//! Seeded random instances. The same parameters always produce the same
//! instance, and hence the same serialized bytes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::Instance;
use crate::net::{DiscreteMarking, NetBuilder};

#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    pub places: usize,
    pub transitions: usize,
    /// Smallest input arc weight.
    pub min_weight: u64,
    /// Largest arc weight.
    pub max_weight: u64,
    /// Largest entry of the initial and target markings.
    pub max_tokens: u64,
    /// Probability that a given place is an input (and, independently, an
    /// output) of a given transition.
    pub density: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            places: 4,
            transitions: 5,
            min_weight: 1,
            max_weight: 2,
            max_tokens: 3,
            density: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("need at least one place and one transition")]
    Empty,
    #[error("weights must satisfy 1 <= min <= max")]
    Weight,
    #[error("density must lie in [0, 1], got {0}")]
    Density(f64),
}

pub fn generate(params: &GenParams) -> Result<Instance, GenError> {
    if params.places == 0 || params.transitions == 0 {
        return Err(GenError::Empty);
    }
    if params.min_weight == 0 || params.min_weight > params.max_weight {
        return Err(GenError::Weight);
    }
    if !(0.0..=1.0).contains(&params.density) {
        return Err(GenError::Density(params.density));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut b = NetBuilder::new();
    let places: Vec<_> = (0..params.places)
        .map(|i| b.add_place(format!("p{i}")))
        .collect();
    for j in 0..params.transitions {
        let t = b.add_transition(format!("t{}", j + 1));
        let mut has_input = false;
        for &p in &places {
            if rng.gen_bool(params.density) {
                b.set_pre(p, t, rng.gen_range(params.min_weight..=params.max_weight));
                has_input = true;
            }
            if rng.gen_bool(params.density) {
                b.set_post(p, t, rng.gen_range(1..=params.max_weight));
            }
        }
        // Source transitions make most instances trivially unsafe.
        if !has_input {
            let p = places[rng.gen_range(0..places.len())];
            b.set_pre(p, t, rng.gen_range(params.min_weight..=params.max_weight));
        }
    }
    let net = b.build().expect("generated names are distinct");
    let marking = |rng: &mut ChaCha8Rng| {
        DiscreteMarking(
            (0..params.places)
                .map(|_| rng.gen_range(0..=params.max_tokens))
                .collect(),
        )
    };
    let initial = marking(&mut rng);
    let mut target = marking(&mut rng);
    if target.sum() == 0 {
        let p = rng.gen_range(0..params.places);
        target.0[p] = 1;
    }
    Ok(Instance {
        name: format!(
            "gen-p{}-t{}-s{}",
            params.places, params.transitions, params.seed
        ),
        net,
        initial,
        targets: vec![target],
    })
}
