//! Deterministic sampling plans used by every verification sweep.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chart::BoxDomain;

/// Distance ladder used for graded near-Y sampling and graded-limit extension.
pub const GRADES: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// Tolerance set: roundtrips, pointwise identities, and composed (cocycle) checks.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// tau_rt: inverse-roundtrip residual bound.
    pub roundtrip: f64,
    /// tau_id: pointwise identity residual bound.
    pub identity: f64,
    /// tau_coc: bound for checks composing two numeric maps.
    pub cocycle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            roundtrip: 1e-9,
            identity: 1e-9,
            cocycle: 1e-7,
        }
    }
}

/// A deterministic sampling plan: same seed, same sample set.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SamplePlan {
    pub seed: u64,
    /// Interior points per sweep.
    pub interior: usize,
    /// Near-Y points per grade of the distance ladder.
    pub near_per_grade: usize,
    /// On-Y points per sweep.
    pub on_y: usize,
    pub tols: Tolerances,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            seed: 7,
            interior: 160,
            near_per_grade: 24,
            on_y: 40,
            tols: Tolerances::default(),
        }
    }
}

impl SamplePlan {
    pub fn with_seed(seed: u64) -> Self {
        SamplePlan {
            seed,
            ..SamplePlan::default()
        }
    }

    /// Root generator for this plan.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Independent deterministic substream, salted by purpose.
    pub fn rng_for(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    /// `n` uniform samples from a box.
    pub fn sample_box(&self, b: &BoxDomain, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..n).map(|_| b.sample(rng)).collect()
    }

    /// Stratified ambient samples for a region whose first `cs` real slots are
    /// the submanifold-cutting coordinates: interior points, near-Y points at
    /// the graded distances, and on-Y points.
    pub fn ambient_samples(&self, b: &BoxDomain, cs: usize, salt: u64) -> AmbientSamples {
        let mut rng = self.rng_for(salt);
        let interior = self.sample_box(b, self.interior, &mut rng);
        let radius = normal_radius(b, cs);
        let mut near = Vec::new();
        for &grade in GRADES.iter() {
            for _ in 0..self.near_per_grade {
                let mut x = b.sample(&mut rng);
                let dir = unit_direction(cs, &mut rng);
                for k in 0..cs {
                    x[k] = grade * radius * dir[k];
                }
                near.push((grade, x));
            }
        }
        let mut on_y = Vec::new();
        for _ in 0..self.on_y {
            let mut x = b.sample(&mut rng);
            for k in 0..cs {
                x[k] = 0.0;
            }
            on_y.push(x);
        }
        AmbientSamples {
            interior,
            near,
            on_y,
        }
    }
}

/// Stratified samples around the submanifold `{first cs coordinates = 0}`.
#[derive(Debug, Clone)]
pub struct AmbientSamples {
    pub interior: Vec<Vec<f64>>,
    /// (grade, point) pairs at graded distances from Y.
    pub near: Vec<(f64, Vec<f64>)>,
    pub on_y: Vec<Vec<f64>>,
}

impl AmbientSamples {
    /// All sampled points, interior first, then near-Y by grade, then on-Y.
    pub fn all(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.interior
            .iter()
            .chain(self.near.iter().map(|(_, x)| x))
            .chain(self.on_y.iter())
    }

    /// All points off Y (interior and graded).
    pub fn off_y(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.interior.iter().chain(self.near.iter().map(|(_, x)| x))
    }
}

/// Largest radius in the normal slots that stays inside the box.
fn normal_radius(b: &BoxDomain, cs: usize) -> f64 {
    let mut r = f64::INFINITY;
    for k in 0..cs {
        let (lo, hi) = b.interval(k);
        r = r.min((-lo).min(hi));
    }
    debug_assert!(r > 0.0, "Y must lie inside the box in the normal slots");
    0.9 * r
}

fn unit_direction(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
