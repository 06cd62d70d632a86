use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{tensor, CMatrix, CVector, C64};
use crate::error::{Error, Result};
use crate::json;
use crate::random::random_vector;
use crate::tolerance::Tolerances;

/// A normalized vector in `C^d1 (x) C^d2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRecord", into = "StateRecord")]
pub struct BipartiteState {
    d1: usize,
    d2: usize,
    amplitudes: CVector,
}

#[derive(Serialize, Deserialize)]
struct StateRecord {
    d1: usize,
    d2: usize,
    amplitudes: Vec<[f64; 2]>,
}

impl TryFrom<StateRecord> for BipartiteState {
    type Error = Error;

    fn try_from(r: StateRecord) -> Result<Self> {
        BipartiteState::new(r.d1, r.d2, json::decode_vector(&r.amplitudes), &Tolerances::default())
    }
}

impl From<BipartiteState> for StateRecord {
    fn from(s: BipartiteState) -> Self {
        StateRecord { d1: s.d1, d2: s.d2, amplitudes: json::encode_vector(&s.amplitudes) }
    }
}

impl BipartiteState {
    pub fn new(d1: usize, d2: usize, amplitudes: CVector, tol: &Tolerances) -> Result<Self> {
        if d1 == 0 || d2 == 0 {
            return Err(Error::Precondition("factor dimensions must be positive".into()));
        }
        if amplitudes.len() != d1 * d2 {
            return Err(Error::DimensionMismatch { expected: d1 * d2, found: amplitudes.len() });
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() >= tol.tol_norm {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { d1, d2, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(d1: usize, d2: usize, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized { norm });
        }
        Self::new(d1, d2, amplitudes / C64::new(norm, 0.0), &Tolerances::default())
    }

    /// From the `d1 x d2` coefficient matrix `A[k, l] = <k|<l|psi>`.
    pub fn from_matrix(a: &CMatrix, tol: &Tolerances) -> Result<Self> {
        let (d1, d2) = a.shape();
        let amps = CVector::from_fn(d1 * d2, |idx, _| a[(idx / d2, idx % d2)]);
        Self::new(d1, d2, amps, tol)
    }

    pub fn product(a: &CVector, b: &CVector) -> Result<Self> {
        Self::new(a.len(), b.len(), tensor(a, b), &Tolerances::default())
    }

    /// Gaussian-random direction in the full product space.
    pub fn random<R: Rng + ?Sized>(d1: usize, d2: usize, rng: &mut R) -> Self {
        let v = random_vector(d1 * d2, rng);
        Self::normalized(d1, d2, v).expect("gaussian vector is nonzero")
    }

    /// `(|00> + |11>)/sqrt(2)`
    pub fn bell() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amps = super::real_vector(&[h, 0.0, 0.0, h]);
        Self { d1: 2, d2: 2, amplitudes: amps }
    }

    /// `sqrt(2/3)|00> + sqrt(1/3)|11>`
    pub fn two_thirds() -> Self {
        let amps = super::real_vector(&[(2.0f64 / 3.0).sqrt(), 0.0, 0.0, (1.0f64 / 3.0).sqrt()]);
        Self::normalized(2, 2, amps).expect("nonzero")
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d1, self.d2)
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, k: usize, l: usize) -> C64 {
        self.amplitudes[k * self.d2 + l]
    }

    /// The `d1 x d2` coefficient matrix.
    pub fn coefficient_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.d1, self.d2, |k, l| self.amplitude(k, l))
    }

    pub fn scaled_by_phase(&self, theta: f64) -> Self {
        let phase = C64::from_polar(1.0, theta);
        Self { amplitudes: self.amplitudes.map(|z| z * phase), ..self.clone() }
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let t = Tolerances::default();
        assert!(matches!(
            BipartiteState::new(2, 2, CVector::zeros(3), &t),
            Err(Error::DimensionMismatch { expected: 4, found: 3 })
        ));
        assert!(matches!(
            BipartiteState::new(2, 2, CVector::from_element(4, C64::new(1.0, 0.0)), &t),
            Err(Error::NotNormalized { .. })
        ));
        assert!(BipartiteState::new(0, 2, CVector::zeros(0), &t).is_err());
        assert!(BipartiteState::normalized(1, 2, CVector::zeros(2)).is_err());
    }

    #[test]
    fn json_shape_and_hash() {
        let bell = BipartiteState::bell();
        let text = bell.canonical_json();
        assert!(text.starts_with("{\"d1\":2,\"d2\":2,\"amplitudes\":[["));
        let back: BipartiteState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, bell);
        assert_eq!(back.hash(), bell.hash());
        assert_eq!(bell.hash().len(), 64);

        let bad = r#"{"d1":1,"d2":2,"amplitudes":[[1.0,0.0],[1.0,0.0]]}"#;
        assert!(serde_json::from_str::<BipartiteState>(bad).is_err());
    }

    #[test]
    fn coefficient_matrix_is_row_major() {
        let mut rng = crate::random::rng_from_seed(1);
        let s = BipartiteState::random(2, 3, &mut rng);
        let a = s.coefficient_matrix();
        for k in 0..2 {
            for l in 0..3 {
                assert_eq!(a[(k, l)], s.amplitudes()[k * 3 + l]);
            }
        }
        let back = BipartiteState::from_matrix(&a, &Tolerances::default()).unwrap();
        assert_eq!(back, s);
    }
}
