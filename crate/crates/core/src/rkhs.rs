//! Reproducing-kernel norm of periodic-kernel draws.
//!
//! A periodic draw expands as `Σ a_{k,n} √2 cos(2πkt) e_n + b_{k,n} √2 sin(2πkt) e_n`
//! (the `k = 0` term without the `√2`). High modes have coefficients far below
//! the smallest double, so every entry keeps its exponential factor apart:
//! `value = mantissa · exp(log_scale)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::basis::{Mode, SpectralBasis};
use crate::error::{Error, Result};
use crate::field::RandomHamiltonian;
use crate::temporal::{KernelTag, TemporalPayload};
use crate::torus::TorusPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Parity {
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntryKey {
    /// Temporal harmonic.
    pub k: u32,
    /// Index into the spatial basis.
    pub n: usize,
    pub parity: Parity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl Coefficient {
    pub fn plain(value: f64) -> Self {
        Coefficient {
            mantissa: value,
            log_scale: 0.0,
        }
    }

    pub fn value(&self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    modes: Vec<Mode>,
    entries: BTreeMap<EntryKey, Coefficient>,
}

fn temporal_eigenvalue(k: u32) -> f64 {
    4.0 * PI * PI * f64::from(k) * f64::from(k)
}

impl CoefficientTable {
    pub fn new(basis: &SpectralBasis) -> Self {
        CoefficientTable {
            modes: basis.modes().to_vec(),
            entries: BTreeMap::new(),
        }
    }

    /// Sets an entry; zero mantissas remove it.
    pub fn insert(&mut self, key: EntryKey, c: Coefficient) -> Result<()> {
        if key.n >= self.modes.len() {
            return Err(Error::validation("n", format!("index {} outside the basis", key.n)));
        }
        if key.k == 0 && key.parity == Parity::Sin {
            return Err(Error::validation("parity", "no sin entry at k = 0"));
        }
        if c.mantissa == 0.0 {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, c);
        }
        Ok(())
    }

    pub fn get(&self, key: &EntryKey) -> Option<Coefficient> {
        self.entries.get(key).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&EntryKey, &Coefficient)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in out.entries.values_mut() {
            c.mantissa *= s;
        }
        out.entries.retain(|_, c| c.mantissa != 0.0);
        out
    }

    /// Reassembled `H(t, p)`.
    pub fn evaluate(&self, t: f64, p: TorusPoint) -> f64 {
        let mut acc = 0.0;
        for (key, c) in &self.entries {
            let phase = 2.0 * PI * f64::from(key.k) * t;
            let time = match (key.k, key.parity) {
                (0, _) => 1.0,
                (_, Parity::Cos) => std::f64::consts::SQRT_2 * phase.cos(),
                (_, Parity::Sin) => std::f64::consts::SQRT_2 * phase.sin(),
            };
            acc += c.value() * time * self.modes[key.n].evaluate(p);
        }
        acc
    }
}

/// Orthogonal expansion of a periodic or autonomous draw.
pub fn coefficient_expansion(h: &RandomHamiltonian) -> Result<CoefficientTable> {
    let cfg = h.config();
    let r = cfg.regularity;
    let scale = cfg.kernel.per_mode_scale;
    let mut table = CoefficientTable::new(h.basis());
    for (n, (mode, z)) in h.basis().modes().iter().zip(h.temporal()).enumerate() {
        // -½ r λ computed as in rkhs_norm so the exponents cancel bit-exactly
        let spatial = -0.5 * (r * mode.eigenvalue);
        match (&z.payload, cfg.kernel.tag) {
            (TemporalPayload::Constant { c }, KernelTag::Autonomous) => {
                table.insert(
                    EntryKey { k: 0, n, parity: Parity::Cos },
                    Coefficient { mantissa: *c, log_scale: spatial },
                )?;
            }
            (TemporalPayload::Periodic { x0, cos, sin }, KernelTag::Periodic) => {
                table.insert(
                    EntryKey { k: 0, n, parity: Parity::Cos },
                    Coefficient { mantissa: scale * x0, log_scale: spatial },
                )?;
                for (i, (a, b)) in cos.iter().zip(sin).enumerate() {
                    let k = i as u32 + 1;
                    let log_scale = -0.5 * (r * mode.eigenvalue + r * temporal_eigenvalue(k));
                    table.insert(EntryKey { k, n, parity: Parity::Cos }, Coefficient { mantissa: scale * a, log_scale })?;
                    table.insert(EntryKey { k, n, parity: Parity::Sin }, Coefficient { mantissa: scale * b, log_scale })?;
                }
            }
            _ => {
                return Err(Error::Unsupported(
                    "coefficient expansion needs a periodic or autonomous kernel".into(),
                ))
            }
        }
    }
    Ok(table)
}

/// `sqrt(Σ exp(r (4π²k² + λ_n)) (a² + b²))`.
pub fn rkhs_norm(c: &CoefficientTable, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::validation("regularity", "must be positive"));
    }
    let mut sum = 0.0;
    for (key, e) in &c.entries {
        let lambda = c.modes[key.n].eigenvalue;
        let exponent = 2.0 * e.log_scale + (r * lambda + r * temporal_eigenvalue(key.k));
        sum += e.mantissa * e.mantissa * exponent.exp();
    }
    Ok(sum.sqrt())
}

/// `Σ_n exp(ε λ_n) a_{0,n}`, or with `|a_{0,n}|` when `absolute` is set.
pub fn weighted_coefficient_sum(c: &CoefficientTable, eps: f64, absolute: bool) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::validation("eps", "must be positive"));
    }
    let mut sum = 0.0;
    for (key, e) in &c.entries {
        if key.k != 0 {
            continue;
        }
        let m = if absolute { e.mantissa.abs() } else { e.mantissa };
        sum += m * (e.log_scale + eps * c.modes[key.n].eigenvalue).exp();
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Truncation;
    use crate::field::{sample_hamiltonian, weight, LawDefiningConfig};
    use crate::rng;
    use crate::temporal::{KernelKind, TemporalSample};
    use rand::Rng;

    fn trunc(n: u32) -> Truncation {
        Truncation {
            spatial_max: n,
            include_axis_modes: false,
            temporal_max: 3,
        }
    }

    fn periodic_sample(x0: f64, tmax: usize, r: f64) -> TemporalSample {
        TemporalSample {
            kind: KernelKind::periodic(r, tmax as u32),
            payload: TemporalPayload::Periodic {
                x0,
                cos: vec![0.0; tmax],
                sin: vec![0.0; tmax],
            },
        }
    }

    #[test]
    fn zero_draw_has_empty_table() {
        let cfg = LawDefiningConfig::new(0.1, trunc(2), KernelTag::Periodic);
        let paths = (0..16).map(|_| periodic_sample(0.0, 3, 0.1)).collect();
        let h = RandomHamiltonian::from_parts(cfg, paths).unwrap();
        let t = coefficient_expansion(&h).unwrap();
        assert!(t.is_empty());
        assert_eq!(rkhs_norm(&t, 0.1).unwrap(), 0.0);
        assert_eq!(weighted_coefficient_sum(&t, 0.1, false).unwrap(), 0.0);
    }

    #[test]
    fn single_mode_unfolds_to_its_weight() {
        let r = 0.1;
        let cfg = LawDefiningConfig::new(r, trunc(2), KernelTag::Periodic);
        let mut paths: Vec<TemporalSample> = (0..16).map(|_| periodic_sample(0.0, 3, r)).collect();
        paths[5] = periodic_sample(1.0, 3, r);
        let h = RandomHamiltonian::from_parts(cfg, paths).unwrap();
        let t = coefficient_expansion(&h).unwrap();
        assert_eq!(t.len(), 1);
        let key = EntryKey { k: 0, n: 5, parity: Parity::Cos };
        let w = weight(h.basis().modes()[5].eigenvalue, r);
        assert!((t.get(&key).unwrap().value() - w).abs() < 1e-15);
        assert_eq!(rkhs_norm(&t, r).unwrap(), 1.0);
    }

    #[test]
    fn unit_norm_for_every_scaled_mode_of_the_reference_basis() {
        let basis = SpectralBasis::new(Truncation::default()).unwrap();
        for r in [0.04, 0.14, 1.0] {
            for (n, m) in basis.modes().iter().enumerate() {
                let mut t = CoefficientTable::new(&basis);
                let key = EntryKey { k: 0, n, parity: Parity::Cos };
                t.insert(key, Coefficient { mantissa: 1.0, log_scale: -0.5 * (r * m.eigenvalue) }).unwrap();
                assert!((rkhs_norm(&t, r).unwrap() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn cancellation_identity_for_constant_paths() {
        let r = 0.04;
        let cfg = LawDefiningConfig::new(r, Truncation::default(), KernelTag::Periodic);
        let mut g = rng::derive(1, &[]);
        let x0: Vec<f64> = (0..2500).map(|_| g.gen::<f64>() - 0.5).collect();
        let paths = x0.iter().map(|&x| periodic_sample(x, 10, r)).collect();
        let h = RandomHamiltonian::from_parts(cfg, paths).unwrap();
        let t = coefficient_expansion(&h).unwrap();
        let expected = x0.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((rkhs_norm(&t, r).unwrap() - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn reconstruction_matches_evaluation() {
        for tag in [KernelTag::Periodic, KernelTag::Autonomous] {
            let cfg = LawDefiningConfig::new(0.06, trunc(5), tag);
            let h = sample_hamiltonian(&cfg, &mut rng::derive(2, &[])).unwrap();
            let table = coefficient_expansion(&h).unwrap();
            let mut g = rng::derive(3, &[]);
            for _ in 0..50 {
                let (t, p) = (g.gen::<f64>(), TorusPoint::new(g.gen(), g.gen()));
                let direct = h.eval_h(t, p).unwrap();
                assert!((table.evaluate(t, p) - direct).abs() < 1e-12, "{tag:?}");
            }
        }
    }

    #[test]
    fn squared_exponential_draws_are_unsupported() {
        let cfg = LawDefiningConfig::new(0.1, trunc(2), KernelTag::SquaredExponential);
        let h = sample_hamiltonian(&cfg, &mut rng::derive(4, &[])).unwrap();
        assert!(matches!(coefficient_expansion(&h), Err(Error::Unsupported(_))));
    }

    #[test]
    fn homogeneity_and_monotonicity() {
        let cfg = LawDefiningConfig::new(0.1, trunc(4), KernelTag::Periodic);
        let h = sample_hamiltonian(&cfg, &mut rng::derive(5, &[])).unwrap();
        let t = coefficient_expansion(&h).unwrap();
        let n = rkhs_norm(&t, 0.1).unwrap();
        assert!((rkhs_norm(&t.scaled(2.0), 0.1).unwrap() - 2.0 * n).abs() <= 1e-12 * n);
        let mut prev = 0.0;
        for r in [0.01, 0.05, 0.1, 0.2, 0.5] {
            let v = rkhs_norm(&t, r).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn weighted_sum_examples() {
        let basis = SpectralBasis::new(trunc(2)).unwrap();
        let mut t = CoefficientTable::new(&basis);
        t.insert(EntryKey { k: 0, n: 3, parity: Parity::Cos }, Coefficient::plain(-0.7)).unwrap();
        let lambda = basis.modes()[3].eigenvalue;
        let v = weighted_coefficient_sum(&t, 0.01, false).unwrap();
        assert!((v - (0.01 * lambda).exp() * -0.7).abs() < 1e-14);
        assert!((weighted_coefficient_sum(&t, 0.01, true).unwrap() + v).abs() < 1e-14);
        t.insert(EntryKey { k: 0, n: 7, parity: Parity::Cos }, Coefficient::plain(0.2)).unwrap();
        t.insert(EntryKey { k: 2, n: 7, parity: Parity::Sin }, Coefficient::plain(9.0)).unwrap();
        assert!((weighted_coefficient_sum(&t, 1e-12, false).unwrap() - (-0.5)).abs() < 1e-9);
        assert!(t.insert(EntryKey { k: 0, n: 1, parity: Parity::Sin }, Coefficient::plain(1.0)).is_err());
    }
}
