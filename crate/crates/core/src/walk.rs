//! Random walks `Φ_n = φ_n ∘ ⋯ ∘ φ_1` driven by independent autonomous draws.
//!
//! A walk stores its generating Hamiltonians only; point maps are recomputed
//! on demand.

use std::sync::Arc;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::field::{HamiltonianSampler, LawDefiningConfig, RandomHamiltonian};
use crate::flow::{concat_autonomous, integrate_point, BumpFunction, Concat, FlowSettings};
use crate::hamiltonian::{Hamiltonian, SharedHamiltonian};
use crate::rng;
use crate::temporal::KernelTag;
use crate::torus::{TorusPoint, Vec2};

#[derive(Clone)]
pub struct WalkState {
    steps: Vec<SharedHamiltonian>,
    draws: Option<Vec<Arc<RandomHamiltonian>>>,
    settings: FlowSettings,
}

impl std::fmt::Debug for WalkState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WalkState")
            .field("steps_taken", &self.steps.len())
            .field("settings", &self.settings)
            .finish()
    }
}

impl WalkState {
    /// Walk through explicitly given autonomous steps.
    pub fn from_steps(steps: Vec<SharedHamiltonian>, settings: FlowSettings) -> Result<Self> {
        if steps.iter().any(|h| !h.is_autonomous()) {
            return Err(Error::NotAutonomous);
        }
        settings.validate()?;
        Ok(WalkState {
            steps,
            draws: None,
            settings,
        })
    }

    pub fn steps_taken(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[SharedHamiltonian] {
        &self.steps
    }

    /// The sampled step Hamiltonians, when the walk came from [`sample_walk`].
    pub fn draws(&self) -> Option<&[Arc<RandomHamiltonian>]> {
        self.draws.as_deref()
    }

    pub fn settings(&self) -> &FlowSettings {
        &self.settings
    }
}

fn check_autonomous(config: &LawDefiningConfig) -> Result<()> {
    if config.kernel.tag != KernelTag::Autonomous {
        return Err(Error::NotAutonomous);
    }
    Ok(())
}

/// Walk number `walk_index` of `config.seed`; step `i` uses the stream
/// `derive(seed, [walk_index, i])`.
pub fn sample_walk_indexed(
    config: &LawDefiningConfig,
    walk_index: u64,
    n: usize,
    settings: FlowSettings,
) -> Result<WalkState> {
    check_autonomous(config)?;
    settings.validate()?;
    let sampler = HamiltonianSampler::new(*config)?;
    let draws: Vec<Arc<RandomHamiltonian>> = (0..n as u64)
        .map(|i| Arc::new(sampler.sample(&mut rng::derive(config.seed, &[walk_index, i]))))
        .collect();
    Ok(WalkState {
        steps: draws.iter().map(|d| d.clone() as SharedHamiltonian).collect(),
        draws: Some(draws),
        settings,
    })
}

/// Walk whose master seed is taken from `rng`.
pub fn sample_walk<R: RngCore + ?Sized>(
    config: &LawDefiningConfig,
    n: usize,
    settings: FlowSettings,
    rng: &mut R,
) -> Result<WalkState> {
    let seeded = config.with_seed(rng.next_u64());
    sample_walk_indexed(&seeded, 0, n, settings)
}

/// `φ_n ∘ ⋯ ∘ φ_1 (p)`.
pub fn apply_walk(w: &WalkState, p: TorusPoint) -> Result<TorusPoint> {
    Ok(*induced_point_walk(w, p)?.last().expect("trajectory starts with p"))
}

/// `[p, Φ_1(p), …, Φ_n(p)]`.
pub fn induced_point_walk(w: &WalkState, p: TorusPoint) -> Result<Vec<TorusPoint>> {
    let mut out = Vec::with_capacity(w.steps.len() + 1);
    out.push(p);
    let mut q = p;
    for h in &w.steps {
        q = integrate_point(h.as_ref(), q, 0.0, 1.0, &w.settings)?.point;
        out.push(q);
    }
    Ok(out)
}

/// One time-dependent Hamiltonian whose time-one flow is the whole walk.
pub struct WalkLaw {
    concat: Concat,
    draws: Option<Vec<Arc<RandomHamiltonian>>>,
    beta: BumpFunction,
}

pub fn walk_law_hamiltonian(w: &WalkState, beta: BumpFunction) -> Result<WalkLaw> {
    if w.steps.is_empty() {
        return Err(Error::validation("walk", "needs at least one step"));
    }
    Ok(WalkLaw {
        concat: concat_autonomous(w.steps.clone(), beta)?,
        draws: w.draws.clone(),
        beta,
    })
}

impl WalkLaw {
    /// `Z̃(t) = Σ_i n β(nt - i + 1) Z^{(i)}` for basis mode `mode`.
    pub fn coefficient_path(&self, mode: usize, t: f64) -> Result<f64> {
        let draws = self
            .draws
            .as_ref()
            .ok_or_else(|| Error::Unsupported("coefficient paths need sampled steps".into()))?;
        let n = draws.len() as f64;
        let mut z = 0.0;
        for (i, d) in draws.iter().enumerate() {
            let b = self.beta.value(n * t - i as f64);
            if b != 0.0 {
                let path = d.temporal().get(mode).ok_or_else(|| {
                    Error::validation("mode", format!("index {mode} outside the basis"))
                })?;
                z += n * b * path.evaluate(0.0)?;
            }
        }
        Ok(z)
    }
}

impl Hamiltonian for WalkLaw {
    fn value(&self, t: f64, p: Vec2) -> Result<f64> {
        self.concat.value(t, p)
    }

    fn gradient(&self, t: f64, p: Vec2) -> Result<Vec2> {
        self.concat.gradient(t, p)
    }

    fn vector_field_batch(&self, t: f64, points: &[Vec2], out: &mut [Vec2]) -> Result<()> {
        self.concat.vector_field_batch(t, points, out)
    }

    fn stiffness(&self) -> usize {
        self.concat.stiffness()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Truncation;
    use crate::hamiltonian::{Shear, Zero};
    use crate::stats::ks_two_sample;
    use rand::Rng;

    fn small(seed: u64) -> LawDefiningConfig {
        LawDefiningConfig::new(
            0.1,
            Truncation {
                spatial_max: 4,
                include_axis_modes: false,
                temporal_max: 3,
            },
            KernelTag::Autonomous,
        )
        .with_seed(seed)
    }

    fn probes(seed: u64, n: usize) -> Vec<TorusPoint> {
        let mut r = rng::derive(seed, &[]);
        (0..n).map(|_| TorusPoint::new(r.gen(), r.gen())).collect()
    }

    #[test]
    fn zero_step_walk_is_identity() {
        let w = sample_walk_indexed(&small(1), 0, 0, FlowSettings::default()).unwrap();
        assert_eq!(w.steps_taken(), 0);
        let p = TorusPoint::new(0.2, 0.4);
        assert_eq!(apply_walk(&w, p).unwrap(), p);
        assert_eq!(induced_point_walk(&w, p).unwrap(), vec![p]);
    }

    #[test]
    fn non_autonomous_kernels_are_rejected() {
        let mut cfg = small(1);
        cfg.kernel.tag = KernelTag::Periodic;
        assert_eq!(
            sample_walk_indexed(&cfg, 0, 2, FlowSettings::default()).unwrap_err(),
            Error::NotAutonomous
        );
        let periodic = crate::field::sample_hamiltonian(&cfg, &mut rng::derive(2, &[])).unwrap();
        assert!(WalkState::from_steps(vec![Arc::new(periodic)], FlowSettings::default()).is_err());
    }

    #[test]
    fn equal_seeds_give_equal_walks() {
        let a = sample_walk_indexed(&small(3), 5, 3, FlowSettings::default()).unwrap();
        let b = sample_walk_indexed(&small(3), 5, 3, FlowSettings::default()).unwrap();
        let p = TorusPoint::new(0.1, 0.9);
        assert_eq!(apply_walk(&a, p).unwrap(), apply_walk(&b, p).unwrap());
        let c = sample_walk_indexed(&small(3), 6, 3, FlowSettings::default()).unwrap();
        assert_ne!(apply_walk(&a, p).unwrap(), apply_walk(&c, p).unwrap());
    }

    #[test]
    fn one_step_walk_is_a_single_flow() {
        let s = FlowSettings::default();
        let w = sample_walk_indexed(&small(4), 0, 1, s).unwrap();
        for p in probes(5, 5) {
            let direct = integrate_point(w.steps()[0].as_ref(), p, 0.0, 1.0, &s).unwrap().point;
            assert_eq!(apply_walk(&w, p).unwrap(), direct);
        }
    }

    #[test]
    fn perpendicular_shear_steps() {
        let s = FlowSettings::default();
        let w = WalkState::from_steps(
            vec![Arc::new(Shear::vertical(1.0)), Arc::new(Shear::horizontal(1.0))],
            s,
        )
        .unwrap();
        for p in probes(6, 10) {
            let expected = Shear::horizontal(1.0)
                .exact_flow(Shear::vertical(1.0).exact_flow(p.as_lift(), 1.0), 1.0);
            assert!(apply_walk(&w, p).unwrap().distance(TorusPoint::from_lift(expected)) < 1e-9);
        }
    }

    #[test]
    fn identity_steps_give_constant_trajectory() {
        let w = WalkState::from_steps(vec![Arc::new(Zero), Arc::new(Zero), Arc::new(Zero)], FlowSettings::default())
            .unwrap();
        let p = TorusPoint::new(0.6, 0.25);
        assert_eq!(induced_point_walk(&w, p).unwrap(), vec![p; 4]);
    }

    #[test]
    fn walk_law_matches_sequential_flows() {
        let s = FlowSettings::default();
        for n in [1, 3] {
            let w = sample_walk_indexed(&small(7), 0, n, s).unwrap();
            let law = walk_law_hamiltonian(&w, BumpFunction::default()).unwrap();
            let tol = if n == 1 { 1e-5 } else { 1e-4 };
            for p in probes(8, 20) {
                let via_law = integrate_point(&law, p, 0.0, 1.0, &s).unwrap().point;
                let d = via_law.distance(apply_walk(&w, p).unwrap());
                assert!(d < tol, "n={n} {d}");
            }
        }
    }

    #[test]
    fn coefficient_paths_are_time_symmetric_in_law() {
        let beta = BumpFunction::default();
        let s = FlowSettings::default();
        let (mut early, mut late) = (Vec::new(), Vec::new());
        for i in 0..2000 {
            let w = sample_walk_indexed(&small(9), i, 3, s).unwrap();
            let law = walk_law_hamiltonian(&w, beta).unwrap();
            early.push(law.coefficient_path(0, 0.2).unwrap());
            late.push(law.coefficient_path(0, 0.8).unwrap());
        }
        assert!(ks_two_sample(&early, &late).passes(0.01));
    }

    #[test]
    fn coefficient_path_matches_bump_combination() {
        let beta = BumpFunction::default();
        let w = sample_walk_indexed(&small(10), 0, 2, FlowSettings::default()).unwrap();
        let law = walk_law_hamiltonian(&w, beta).unwrap();
        let z: Vec<f64> = w.draws().unwrap().iter().map(|d| d.temporal()[1].evaluate(0.0).unwrap()).collect();
        let t = 0.3;
        let expected = 2.0 * beta.value(2.0 * t) * z[0] + 2.0 * beta.value(2.0 * t - 1.0) * z[1];
        assert!((law.coefficient_path(1, t).unwrap() - expected).abs() < 1e-14);
    }
}
