use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{c64, CMatrix, PosDefMatrix};
use crate::error::{LabError, Result};

pub const DEFAULT_EIG_LOW: f64 = 0.1;
pub const DEFAULT_EIG_HIGH: f64 = 10.0;

/// Seeded positive definite sampler: log-uniform eigenvalues, Haar eigenbasis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub dim: usize,
    pub eig_low: f64,
    pub eig_high: f64,
    pub seed: u64,
    #[serde(default)]
    pub stream_index: u64,
}

impl SamplerConfig {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            eig_low: DEFAULT_EIG_LOW,
            eig_high: DEFAULT_EIG_HIGH,
            seed,
            stream_index: 0,
        }
    }

    pub fn with_range(mut self, eig_low: f64, eig_high: f64) -> Self {
        self.eig_low = eig_low;
        self.eig_high = eig_high;
        self
    }

    pub fn with_stream(mut self, stream_index: u64) -> Self {
        self.stream_index = stream_index;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(LabError::InvalidParameter("sampler dim must be positive".into()));
        }
        if !(self.eig_low > 0.0 && self.eig_low <= self.eig_high && self.eig_high.is_finite()) {
            return Err(LabError::InvalidParameter(format!(
                "eigenvalue range must satisfy 0 < low <= high, got [{}, {}]",
                self.eig_low, self.eig_high
            )));
        }
        Ok(())
    }

    pub fn rng(&self) -> ChaCha8Rng {
        stream_rng(self.seed, self.stream_index)
    }
}

/// Independent generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Matrix with i.i.d. standard complex Gaussian entries (variance 1/2 per component).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64(re * scale, im * scale)
    })
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases of
/// the R diagonal pushed back into Q.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = complex_gaussian(rng, dim, dim);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { c64(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Positive definite matrix with log-uniform eigenvalues in `[low, high]`.
pub fn random_posdef<R: Rng + ?Sized>(rng: &mut R, dim: usize, low: f64, high: f64) -> PosDefMatrix {
    let (ll, lh) = (low.ln(), high.ln());
    let values: Vec<f64> = (0..dim)
        .map(|_| {
            if lh > ll {
                rng.random_range(ll..=lh).exp().clamp(low, high)
            } else {
                low
            }
        })
        .collect();
    let basis = haar_unitary(rng, dim);
    PosDefMatrix::from_parts(values, basis)
}

pub fn sample_posdef(cfg: &SamplerConfig) -> Result<PosDefMatrix> {
    cfg.validate()?;
    let mut rng = cfg.rng();
    Ok(random_posdef(&mut rng, cfg.dim, cfg.eig_low, cfg.eig_high))
}

pub fn sample_unitary(dim: usize, seed: u64, stream: u64) -> CMatrix {
    let mut rng = stream_rng(seed, stream);
    haar_unitary(&mut rng, dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_entry, HermMatrix};

    #[test]
    fn samples_satisfy_invariants() {
        for stream in 0..20 {
            let cfg = SamplerConfig::new(4, 11).with_stream(stream);
            let p = sample_posdef(&cfg).unwrap();
            assert!(p.min_eigenvalue() > 0.0);
            let u = p.basis();
            let gram = u.adjoint() * u;
            assert!(max_abs_entry(&(gram - CMatrix::identity(4, 4))) < 1e-10);
            let rebuilt = u * CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                4,
                p.spectrum().iter().map(|v| c64(*v, 0.0)),
            )) * u.adjoint();
            let err = max_abs_entry(&(rebuilt - p.matrix())) / p.max_eigenvalue();
            assert!(err < 1e-10);
        }
    }

    #[test]
    fn determinism_per_stream() {
        let cfg = SamplerConfig::new(3, 42).with_stream(5);
        let a = sample_posdef(&cfg).unwrap();
        let b = sample_posdef(&cfg).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        let c = sample_posdef(&cfg.clone().with_stream(6)).unwrap();
        assert_ne!(a.matrix(), c.matrix());
    }

    #[test]
    fn eigenvalues_stay_in_range() {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        let mut rng = stream_rng(3, 0);
        for _ in 0..10_000 {
            let p = random_posdef(&mut rng, 2, 0.1, 10.0);
            lo = lo.min(p.min_eigenvalue());
            hi = hi.max(p.max_eigenvalue());
        }
        assert!(lo >= 0.1 && hi <= 10.0);
        // log-uniform over two decades: the extremes get close to both ends
        assert!(lo < 0.11 && hi > 9.0);
    }

    #[test]
    fn invalid_range_rejected() {
        let cfg = SamplerConfig::new(2, 0).with_range(2.0, 1.0);
        assert!(sample_posdef(&cfg).is_err());
        let cfg = SamplerConfig::new(2, 0).with_range(0.0, 1.0);
        assert!(sample_posdef(&cfg).is_err());
    }

    #[test]
    fn unitary_examples() {
        let u1 = sample_unitary(1, 9, 0);
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-14);

        let u = sample_unitary(5, 9, 1);
        let gram = &u * u.adjoint();
        assert!(max_abs_entry(&(gram - CMatrix::identity(5, 5))) < 1e-10);
        assert_eq!(u, sample_unitary(5, 9, 1));

        let u3 = sample_unitary(3, 2, 4);
        let d = HermMatrix::from_diag(&[1.0, 2.0, 3.0]);
        let eig = d.conjugate_by(&u3).eigenvalues();
        for (got, want) in eig.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-10);
        }
    }
}
