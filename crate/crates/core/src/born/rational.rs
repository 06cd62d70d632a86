use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::Fraction;
use crate::error::{Error, Result};
use crate::hilbert::DensityOperator;
use crate::tolerance::Tolerances;

/// Below this approximation error a spectrum counts as exactly rational.
const EXACT: f64 = 1e-12;

/// Distinct positive eigenvalues written as `m_j / M` over a common
/// denominator, with `sum_j d_j m_j = M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalSpectrum {
    pub numerators: Vec<u64>,
    pub denominator: u64,
    pub multiplicities: Vec<usize>,
    /// The eigenvalues that were approximated.
    pub values: Vec<f64>,
    pub exact: bool,
    /// `sqrt(sum_j d_j (m_j/M - r_j)^2)`, the HS distance of the two densities
    /// built on shared eigen-projectors.
    pub error: f64,
}

impl RationalSpectrum {
    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    /// `m_j / M`, the rational eigenvalue of block `j`.
    pub fn eigenvalue(&self, j: usize) -> Fraction {
        Fraction::new(self.numerators[j], self.denominator)
    }

    /// `d_j m_j / M`, the weight of the whole block.
    pub fn block_weight(&self, j: usize) -> Fraction {
        Fraction::new(self.multiplicities[j] as u64 * self.numerators[j], self.denominator)
    }

    pub fn approximations(&self) -> Vec<f64> {
        self.numerators.iter().map(|&m| m as f64 / self.denominator as f64).collect()
    }

    /// Approximates explicit values with multiplicities.
    pub fn from_values(values: &[f64], multiplicities: &[usize], max_denominator: u64) -> Result<Self> {
        if max_denominator == 0 {
            return Err(Error::Precondition("max_denominator must be at least 1".into()));
        }
        if values.len() != multiplicities.len() {
            return Err(Error::DimensionMismatch { expected: values.len(), found: multiplicities.len() });
        }
        if values.is_empty() || values.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Precondition("eigenvalues must be positive".into()));
        }
        if multiplicities.contains(&0) {
            return Err(Error::Precondition("multiplicities must be positive".into()));
        }
        let candidate = per_value(values, multiplicities, max_denominator)
            .filter(|(m, big_m)| error_of(values, multiplicities, m, *big_m) < EXACT)
            .or_else(|| scan(values, multiplicities, max_denominator))
            .ok_or(Error::InexactSpectrum { error: f64::INFINITY })?;
        let (numerators, denominator) = reduce(candidate.0, candidate.1);
        let error = error_of(values, multiplicities, &numerators, denominator);
        Ok(Self {
            numerators,
            denominator,
            multiplicities: multiplicities.to_vec(),
            values: values.to_vec(),
            exact: error < EXACT,
            error,
        })
    }
}

/// Rational approximation of the clustered positive spectrum of `rho1`.
pub fn rational_spectrum(
    rho1: &DensityOperator,
    max_denominator: u64,
    tol: &Tolerances,
) -> Result<RationalSpectrum> {
    let spec = rho1.spectral(tol);
    let values: Vec<f64> = spec.blocks.iter().map(|b| b.value).collect();
    let mults: Vec<usize> = spec.blocks.iter().map(|b| b.multiplicity).collect();
    RationalSpectrum::from_values(&values, &mults, max_denominator)
}

/// Best rational approximation `p/q` of `x >= 0` with `q <= max_den`, from the
/// continued fraction expansion including semiconvergents.
pub fn best_rational(x: f64, max_den: u64) -> (u64, u64) {
    assert!(max_den >= 1 && x >= 0.0 && x.is_finite());
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut v = x;
    loop {
        let a = v.floor();
        let next = if a < u64::MAX as f64 {
            let a = a as u64;
            a.checked_mul(q1).and_then(|t| t.checked_add(q0)).filter(|&q| q <= max_den).and_then(|q2| {
                a.checked_mul(p1).and_then(|t| t.checked_add(p0)).map(|p2| (a, p2, q2))
            })
        } else {
            None
        };
        let Some((_, p2, q2)) = next else {
            // Largest admissible semiconvergent against the last convergent.
            let k = (max_den - q0).checked_div(q1).unwrap_or(0);
            let (ps, qs) = (p0 + k * p1, q0 + k * q1);
            if q1 == 0 {
                return (ps, qs);
            }
            let e_conv = (p1 as f64 / q1 as f64 - x).abs();
            let e_semi = (ps as f64 / qs as f64 - x).abs();
            return if e_semi < e_conv { (ps, qs) } else { (p1, q1) };
        };
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = v - a;
        if frac <= 1e-15 || (p1 as f64 / q1 as f64 - x).abs() <= 1e-15 * x.max(1.0) {
            return (p1, q1);
        }
        v = 1.0 / frac;
    }
}

fn per_value(values: &[f64], mults: &[usize], max_den: u64) -> Option<(Vec<u64>, u64)> {
    let fracs: Vec<(u64, u64)> = values.iter().map(|&r| best_rational(r, max_den)).collect();
    let mut big_m = 1u64;
    for &(_, q) in &fracs {
        big_m = big_m.lcm(&q);
        if big_m > max_den {
            return None;
        }
    }
    let m: Vec<u64> = fracs.iter().map(|&(p, q)| p * (big_m / q)).collect();
    let total: u64 = m.iter().zip(mults).map(|(&m, &d)| m * d as u64).sum();
    (total == big_m && m.iter().all(|&x| x >= 1)).then_some((m, big_m))
}

fn error_of(values: &[f64], mults: &[usize], m: &[u64], big_m: u64) -> f64 {
    values
        .iter()
        .zip(mults)
        .zip(m)
        .map(|((&r, &d), &m)| d as f64 * (m as f64 / big_m as f64 - r).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Rounds `r_j M` and repairs the integer constraint `sum d_j m_j = M` with
/// `m_j >= 1`, moving one unit at a time where the squared error grows least.
fn repaired(values: &[f64], mults: &[usize], big_m: u64) -> Option<Vec<u64>> {
    let target: Vec<f64> = values.iter().map(|r| r * big_m as f64).collect();
    let mut m: Vec<i64> = target.iter().map(|t| (t.round() as i64).max(1)).collect();
    let mut deficit =
        big_m as i64 - m.iter().zip(mults).map(|(&m, &d)| m * d as i64).sum::<i64>();
    let budget = 4 * mults.iter().sum::<usize>() + 8;
    for _ in 0..budget {
        if deficit == 0 {
            return Some(m.into_iter().map(|x| x as u64).collect());
        }
        let grow = deficit > 0;
        let pick = (0..m.len())
            .filter(|&j| if grow { mults[j] as i64 <= deficit } else { m[j] > 1 })
            .min_by(|&a, &b| {
                let cost = |j: usize| {
                    let s = if grow { 1.0 } else { -1.0 };
                    mults[j] as f64 * (2.0 * s * (m[j] as f64 - target[j]) + 1.0)
                };
                cost(a).total_cmp(&cost(b))
            })?;
        if grow {
            m[pick] += 1;
            deficit -= mults[pick] as i64;
        } else {
            m[pick] -= 1;
            deficit += mults[pick] as i64;
        }
    }
    None
}

/// Smallest-error feasible common denominator up to `max_den`.
fn scan(values: &[f64], mults: &[usize], max_den: u64) -> Option<(Vec<u64>, u64)> {
    let min_total: u64 = mults.iter().map(|&d| d as u64).sum();
    let mut best: Option<(Vec<u64>, u64, f64)> = None;
    for big_m in min_total..=max_den {
        let Some(m) = repaired(values, mults, big_m) else { continue };
        let err = error_of(values, mults, &m, big_m);
        if best.as_ref().is_none_or(|b| err < b.2) {
            best = Some((m, big_m, err));
        }
    }
    best.map(|(m, big_m, _)| (m, big_m))
}

fn reduce(m: Vec<u64>, big_m: u64) -> (Vec<u64>, u64) {
    let g = m.iter().fold(big_m, |g, &x| g.gcd(&x)).max(1);
    (m.into_iter().map(|x| x / g).collect(), big_m / g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::diagonal;

    #[test]
    fn convergents() {
        assert_eq!(best_rational(2.0 / 3.0, 100), (2, 3));
        assert_eq!(best_rational(0.5, 1), (0, 1));
        assert_eq!(best_rational(std::f64::consts::PI - 3.0, 7), (1, 7));
        assert_eq!(best_rational(std::f64::consts::PI - 3.0, 113), (16, 113));
        assert_eq!(best_rational(0.0, 10), (0, 1));
    }

    #[test]
    fn two_thirds_is_exact() {
        let t = Tolerances::default();
        let rho = DensityOperator::new(diagonal(&[2.0 / 3.0, 1.0 / 3.0]), &t).unwrap();
        let s = rational_spectrum(&rho, 100, &t).unwrap();
        assert_eq!((s.numerators.clone(), s.denominator), (vec![2, 1], 3));
        assert!(s.exact);
    }

    #[test]
    fn degenerate_half() {
        let t = Tolerances::default();
        let rho = DensityOperator::new(diagonal(&[0.5, 0.5]), &t).unwrap();
        let s = rational_spectrum(&rho, 100, &t).unwrap();
        assert_eq!((s.numerators.clone(), s.denominator, s.multiplicities.clone()), (vec![1], 2, vec![2]));
        assert!(s.exact);
    }

    #[test]
    fn irrational_is_flagged() {
        let r = 0.5f64.sqrt();
        let s = RationalSpectrum::from_values(&[r, 1.0 - r], &[1, 1], 1000).unwrap();
        assert!(!s.exact);
        // Any fraction m/M with M <= N is at least 1/(M(M+1)) away from an
        // irrational, and the best one is within 1/M^2 by Dirichlet.
        assert!(s.error > 0.0 && s.error < 2.0f64.sqrt() / 1000.0);
        let total: u64 = s.numerators.iter().sum();
        assert_eq!(total, s.denominator);
    }

    #[test]
    fn sum_identity_holds_after_repair() {
        let s = RationalSpectrum::from_values(&[0.31, 0.23, 0.0767], &[1, 2, 5], 50).unwrap();
        let total: u64 = s.numerators.iter().zip(&s.multiplicities).map(|(&m, &d)| m * d as u64).sum();
        assert_eq!(total, s.denominator);
        assert!(s.numerators.iter().all(|&m| m >= 1));
    }

    #[test]
    fn error_never_grows_with_the_bound() {
        let v = [0.4142, 0.3333, 0.2525];
        let mut last = f64::INFINITY;
        for n in [5, 10, 50, 100, 1000, 10000] {
            let s = RationalSpectrum::from_values(&v, &[1, 1, 1], n).unwrap();
            assert!(s.error <= last + 1e-15);
            last = s.error;
        }
        assert!(RationalSpectrum::from_values(&v, &[1, 1, 1], 0).is_err());
    }
}
