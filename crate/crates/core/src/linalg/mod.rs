//! Hermitian spectral calculus.
//!
//! Every functional in the crate is evaluated through eigendecompositions of
//! Hermitian matrices. [`HermMatrix`] guarantees the Hermitian invariant,
//! [`PosDefMatrix`] additionally caches an ascending spectrum together with an
//! eigenbasis so that real powers, logarithms and inverses cost a single
//! reassembly.

mod json;
mod sample;

pub use json::MatrixJson;
pub use sample::{
    complex_gaussian, haar_unitary, random_posdef, sample_posdef, sample_unitary, stream_rng,
    SamplerConfig, DEFAULT_EIG_HIGH, DEFAULT_EIG_LOW,
};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::error::{LabError, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Relative regularization used when a PSD input must be pushed into the PD cone.
pub const DEFAULT_REGULARIZATION: f64 = 1e-8;

pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Largest |m_ij - conj(m_ji)|.
pub fn max_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_entry(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Absolute tolerance for the Hermitian check: 1e-12 times the largest entry, floored at 1.
pub fn hermitian_tolerance(m: &CMatrix) -> f64 {
    1e-12 * max_abs_entry(m).max(1.0)
}

/// Block diagonal `[[a, 0], [0, b]]`.
pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Operator (spectral) norm of an arbitrary complex matrix.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = HermMatrix::hermitize(m.adjoint() * m);
    gram.eigenvalues().last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// A complex Hermitian matrix.
///
/// The stored entries are exactly Hermitian: construction replaces `M` by
/// `(M + M*)/2` after the tolerance check.
#[derive(Clone, Debug, PartialEq)]
pub struct HermMatrix {
    m: CMatrix,
}

impl HermMatrix {
    /// Checked constructor; rejects asymmetry beyond [`hermitian_tolerance`].
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(LabError::Shape(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(LabError::Shape("matrix must have positive dimension".into()));
        }
        let asym = max_asymmetry(&m);
        let tol = hermitian_tolerance(&m);
        if asym > tol {
            return Err(LabError::NotHermitian {
                max_asymmetry: asym,
                tolerance: tol,
            });
        }
        Ok(Self::hermitize(m))
    }

    /// Replace `m` by its Hermitian part without checking. Panics on non-square input.
    pub fn hermitize(m: CMatrix) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "hermitize needs a square matrix");
        let adj = m.adjoint();
        Self {
            m: (m + adj) * c64(0.5, 0.0),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: CMatrix::zeros(dim, dim),
        }
    }

    pub fn from_diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = c64(*v, 0.0);
        }
        Self { m }
    }

    /// Real symmetric matrix given row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(LabError::Shape(format!("row {i} has length {}", row.len())));
            }
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = c64(*v, 0.0);
            }
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            m: &self.m * c64(t, 0.0),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self::hermitize(&self.m + &other.m))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self::hermitize(&self.m - &other.m))
    }

    /// `lambda * a + (1 - lambda) * b`.
    pub fn combine(lambda: f64, a: &Self, b: &Self) -> Result<Self> {
        check_dims(a.dim(), b.dim())?;
        Ok(Self::hermitize(
            &a.m * c64(lambda, 0.0) + &b.m * c64(1.0 - lambda, 0.0),
        ))
    }

    /// `U H U*`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        Self::hermitize(u * &self.m * u.adjoint())
    }

    /// `X* H X` for a rectangular `X` with `dim` rows.
    pub fn congruence(&self, x: &CMatrix) -> Result<Self> {
        if x.nrows() != self.dim() {
            return Err(LabError::DimensionMismatch {
                expected: self.dim(),
                found: x.nrows(),
            });
        }
        Ok(Self::hermitize(x.adjoint() * &self.m * x))
    }

    pub fn trace(&self) -> f64 {
        self.m.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn max_abs_entry(&self) -> f64 {
        max_abs_entry(&self.m)
    }

    pub fn spectral(&self) -> Spectral {
        decompose(&self.m)
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.m.clone());
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().expect("positive dimension")
    }

    /// Spectral exponential; the result is always positive definite.
    pub fn exp(&self) -> PosDefMatrix {
        let spec = self.spectral();
        let values = spec.eigenvalues.iter().map(|v| v.exp()).collect();
        PosDefMatrix::from_parts(values, spec.basis)
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(LabError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Eigendecomposition with eigenvalues ascending and basis columns aligned.
#[derive(Clone, Debug)]
pub struct Spectral {
    pub eigenvalues: Vec<f64>,
    pub basis: CMatrix,
}

impl Spectral {
    /// `U diag(values) U*`.
    pub fn reassemble(&self, values: &[f64]) -> CMatrix {
        reassemble(&self.basis, values)
    }
}

fn reassemble(basis: &CMatrix, values: &[f64]) -> CMatrix {
    let mut scaled = basis.clone();
    for (j, v) in values.iter().enumerate() {
        let mut col = scaled.column_mut(j);
        col *= c64(*v, 0.0);
    }
    scaled * basis.adjoint()
}

fn decompose(m: &CMatrix) -> Spectral {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut basis = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        basis.set_column(dst, &eig.eigenvectors.column(src));
    }
    Spectral { eigenvalues, basis }
}

/// Eigendecomposition of a raw matrix, rejecting non-Hermitian input.
pub fn spectral_decompose(m: &CMatrix) -> Result<Spectral> {
    let h = HermMatrix::new(m.clone())?;
    Ok(h.spectral())
}

/// A Hermitian positive definite matrix with its cached spectral decomposition.
#[derive(Clone, Debug)]
pub struct PosDefMatrix {
    base: HermMatrix,
    spectrum: Vec<f64>,
    basis: CMatrix,
}

impl PartialEq for PosDefMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base
    }
}

impl PosDefMatrix {
    pub fn new(h: HermMatrix) -> Result<Self> {
        let spec = h.spectral();
        let min = spec.eigenvalues[0];
        if !(min > 0.0) {
            return Err(LabError::NotPositiveDefinite {
                min_eigenvalue: min,
            });
        }
        Ok(Self {
            base: h,
            spectrum: spec.eigenvalues,
            basis: spec.basis,
        })
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Self::new(HermMatrix::new(m)?)
    }

    /// Build from eigenvalues (any order, all positive) and a unitary basis.
    pub fn from_spectrum(values: Vec<f64>, basis: CMatrix) -> Result<Self> {
        if basis.nrows() != values.len() || basis.ncols() != values.len() {
            return Err(LabError::Shape(format!(
                "basis is {}x{} for {} eigenvalues",
                basis.nrows(),
                basis.ncols(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(LabError::NotPositiveDefinite {
                min_eigenvalue: *bad,
            });
        }
        Ok(Self::from_parts(values, basis))
    }

    // Caller guarantees positivity.
    pub(crate) fn from_parts(values: Vec<f64>, basis: CMatrix) -> Self {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let spectrum: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        let mut sorted = CMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            sorted.set_column(dst, &basis.column(src));
        }
        let base = HermMatrix::hermitize(reassemble(&sorted, &spectrum));
        Self {
            base,
            spectrum,
            basis: sorted,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            base: HermMatrix::identity(dim),
            spectrum: vec![1.0; dim],
            basis: CMatrix::identity(dim, dim),
        }
    }

    pub fn from_diag(values: &[f64]) -> Result<Self> {
        Self::new(HermMatrix::from_diag(values))
    }

    /// `H + eps * max(lambda_max, tiny) * I`, for PSD inputs sitting on the boundary.
    pub fn regularize(h: &HermMatrix, eps_rel: f64) -> Result<Self> {
        let top = h.max_eigenvalue().max(f64::MIN_POSITIVE);
        let shift = HermMatrix::identity(h.dim()).scaled(eps_rel * top);
        Self::new(h.add(&shift)?)
    }

    pub fn dim(&self) -> usize {
        self.spectrum.len()
    }

    pub fn as_herm(&self) -> &HermMatrix {
        &self.base
    }

    pub fn matrix(&self) -> &CMatrix {
        self.base.matrix()
    }

    /// Eigenvalues in ascending order.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.spectrum[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.spectrum[self.spectrum.len() - 1]
    }

    /// Real power on the PD domain; `P^0 = I`, `P^1 = P`.
    pub fn power(&self, t: f64) -> Self {
        if t == 0.0 {
            return Self::identity(self.dim());
        }
        if t == 1.0 {
            return self.clone();
        }
        let values = self.spectrum.iter().map(|v| v.powf(t)).collect();
        Self::from_parts(values, self.basis.clone())
    }

    pub fn inverse(&self) -> Self {
        self.power(-1.0)
    }

    pub fn sqrt(&self) -> Self {
        self.power(0.5)
    }

    pub fn log(&self) -> HermMatrix {
        let values: Vec<f64> = self.spectrum.iter().map(|v| v.ln()).collect();
        HermMatrix::hermitize(reassemble(&self.basis, &values))
    }

    /// Spectral application of a scalar function.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> Result<HermMatrix> {
        let mut values = Vec::with_capacity(self.dim());
        for &v in &self.spectrum {
            let fv = f(v);
            if !fv.is_finite() {
                return Err(LabError::NonFiniteFunction { eigenvalue: v });
            }
            values.push(fv);
        }
        Ok(HermMatrix::hermitize(reassemble(&self.basis, &values)))
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(LabError::InvalidParameter(format!(
                "scaling factor must be positive, got {t}"
            )));
        }
        let values = self.spectrum.iter().map(|v| v * t).collect();
        Ok(Self::from_parts(values, self.basis.clone()))
    }

    /// `lambda * a + (1 - lambda) * b` for `lambda` in [0, 1].
    pub fn combine(lambda: f64, a: &Self, b: &Self) -> Result<Self> {
        Self::new(HermMatrix::combine(lambda, &a.base, &b.base)?)
    }

    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        Self::new(self.base.conjugate_by(u))
    }
}

/// Spectral real power `P^t`.
pub fn matrix_power(p: &PosDefMatrix, t: f64) -> PosDefMatrix {
    p.power(t)
}

/// Spectral application `f(P)`; rejects functions that are not finite on the spectrum.
pub fn matrix_function<F: Fn(f64) -> f64>(p: &PosDefMatrix, f: F) -> Result<HermMatrix> {
    p.apply(f)
}

/// Outcome of a Loewner-order comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoewnerComparison {
    pub holds: bool,
    /// Smallest eigenvalue of `B - A`.
    pub witness: f64,
}

/// `A <= B` in Loewner order, i.e. `lambda_min(B - A) >= -tol`.
pub fn loewner_leq(a: &HermMatrix, b: &HermMatrix, tol: f64) -> Result<LoewnerComparison> {
    let diff = b.sub(a)?;
    let witness = diff.min_eigenvalue();
    Ok(LoewnerComparison {
        holds: witness >= -tol,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        let scale = max_abs_entry(a).max(max_abs_entry(b)).max(1e-300);
        max_abs_entry(&(a - b)) / scale
    }

    fn random_hermitian(seed: u64, dim: usize) -> HermMatrix {
        let mut rng = stream_rng(seed, 0);
        let g = complex_gaussian(&mut rng, dim, dim);
        HermMatrix::hermitize(g)
    }

    #[test]
    fn diagonal_input_sorts_eigenvalues() {
        let spec = HermMatrix::from_diag(&[2.0, 1.0]).spectral();
        assert_eq!(spec.eigenvalues, vec![1.0, 2.0]);
        // basis is a permutation (up to phases)
        for i in 0..2 {
            for j in 0..2 {
                let mag = spec.basis[(i, j)].norm();
                assert!(mag < 1e-14 || (mag - 1.0).abs() < 1e-14);
            }
        }
        assert!((spec.basis[(1, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_spectrum() {
        let spec = HermMatrix::identity(3).spectral();
        assert_eq!(spec.eigenvalues, vec![1.0, 1.0, 1.0]);
        let rebuilt = spec.reassemble(&spec.eigenvalues);
        assert!(rel_diff(&rebuilt, &CMatrix::identity(3, 3)) < 1e-14);
    }

    #[test]
    fn reconstruction_of_random_hermitian() {
        for seed in 0..20 {
            let h = random_hermitian(seed, 4);
            let spec = h.spectral();
            assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            // reassembly oracle: entrywise comparison against the input
            let rebuilt = spec.reassemble(&spec.eigenvalues);
            assert!(rel_diff(&rebuilt, h.matrix()) < 1e-10);
            let gram = spec.basis.adjoint() * &spec.basis;
            assert!(max_abs_entry(&(gram - CMatrix::identity(4, 4))) < 1e-10);
        }
    }

    #[test]
    fn non_hermitian_is_rejected_with_asymmetry() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = c64(0.5, 0.0);
        match spectral_decompose(&m) {
            Err(LabError::NotHermitian { max_asymmetry, .. }) => {
                assert!((max_asymmetry - 0.5).abs() < 1e-15)
            }
            other => panic!("unexpected {other:?}"),
        }
        // drift below tolerance is accepted
        m[(0, 1)] = c64(1e-14, 0.0);
        assert!(spectral_decompose(&m).is_ok());
    }

    #[test]
    fn power_examples() {
        let p = PosDefMatrix::from_diag(&[4.0, 9.0]).unwrap();
        let r = p.power(0.5);
        assert_eq!(r.spectrum(), &[2.0, 3.0]);
        assert!(rel_diff(r.matrix(), HermMatrix::from_diag(&[2.0, 3.0]).matrix()) < 1e-15);
        assert_eq!(p.power(1.0), p);
        assert_eq!(p.power(0.0), PosDefMatrix::identity(2));
    }

    #[test]
    fn power_roundtrip() {
        for seed in 0..10 {
            let cfg = SamplerConfig::new(4, seed);
            let p = sample_posdef(&cfg).unwrap();
            for t in [-1.5, 0.3, 2.0] {
                let back = p.power(t).power(1.0 / t);
                assert!(rel_diff(back.matrix(), p.matrix()) < 1e-9, "t = {t}");
            }
        }
    }

    #[test]
    fn log_exp_examples() {
        let p = PosDefMatrix::from_diag(&[1.0, std::f64::consts::E]).unwrap();
        let l = p.log();
        assert!(rel_diff(l.matrix(), HermMatrix::from_diag(&[0.0, 1.0]).matrix()) < 1e-15);
        let e = HermMatrix::zeros(3).exp();
        assert_eq!(e.matrix(), &CMatrix::identity(3, 3));
        for seed in 0..10 {
            let p = sample_posdef(&SamplerConfig::new(3, seed)).unwrap();
            let back = p.log().exp();
            assert!(rel_diff(back.matrix(), p.matrix()) < 1e-9);
        }
    }

    #[test]
    fn function_agrees_with_power() {
        for seed in 0..10 {
            let p = sample_posdef(&SamplerConfig::new(4, seed)).unwrap();
            let s = 0.37;
            let via_f = p.apply(|x| x.powf(s)).unwrap();
            assert!(rel_diff(via_f.matrix(), p.power(s).matrix()) < 1e-12);
        }
    }

    #[test]
    fn non_finite_function_names_eigenvalue() {
        let p = PosDefMatrix::from_diag(&[1.0, 2.0]).unwrap();
        let err = p.apply(|x| 1.0 / (x - 2.0)).unwrap_err();
        assert_eq!(err, LabError::NonFiniteFunction { eigenvalue: 2.0 });
    }

    #[test]
    fn loewner_examples() {
        let z = HermMatrix::zeros(2);
        let i = HermMatrix::identity(2);
        let up = loewner_leq(&z, &i, 0.0).unwrap();
        assert!(up.holds);
        assert!((up.witness - 1.0).abs() < 1e-15);
        let down = loewner_leq(&i, &z, 0.0).unwrap();
        assert!(!down.holds);
        assert!((down.witness + 1.0).abs() < 1e-15);
        assert!(matches!(
            loewner_leq(&i, &HermMatrix::identity(3), 0.0),
            Err(LabError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn loewner_psd_increment() {
        for seed in 0..50 {
            let mut rng = stream_rng(seed, 7);
            let a = HermMatrix::hermitize(complex_gaussian(&mut rng, 3, 3));
            let g = complex_gaussian(&mut rng, 3, 2);
            let b = a.add(&HermMatrix::hermitize(&g * g.adjoint())).unwrap();
            assert!(loewner_leq(&a, &b, 1e-12).unwrap().holds);
        }
    }

    #[test]
    fn block_diag_layout() {
        let a = HermMatrix::from_diag(&[1.0, 2.0]);
        let b = HermMatrix::from_diag(&[3.0]);
        let d = block_diag(a.matrix(), b.matrix());
        assert_eq!(d.shape(), (3, 3));
        assert_eq!(d[(2, 2)], c64(3.0, 0.0));
        assert_eq!(d[(0, 2)], c64(0.0, 0.0));
    }
}
