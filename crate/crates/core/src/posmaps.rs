//! Positive linear maps `M_n -> M_m` in structural form.
//!
//! Kraus-type pieces `X_i` are `n x m` (input rows, output columns) and act as
//! `A -> sum_i X_i* A X_i`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{
    c64, complex_gaussian, max_abs_entry, stream_rng, CMatrix, HermMatrix, MatrixJson, PosDefMatrix,
};

/// Strict positivity threshold: `lambda_min(Phi(I)) > 1e-12 * lambda_max(Phi(I))`.
pub const STRICT_POSITIVITY_FLOOR: f64 = 1e-12;

/// Eigenvalue floor used when inverting `Phi(A^{-1})` in [`MapSpec::hat`].
pub const HAT_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub enum MapKind {
    Identity,
    Conjugation(CMatrix),
    Kraus(Vec<CMatrix>),
    /// Mutually orthogonal projections summing to the identity.
    Pinching(Vec<CMatrix>),
    /// `A -> sum_i X_i* A^T X_i`; positive, not completely positive.
    TransposeThenKraus(Vec<CMatrix>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapSpec {
    pub kind: MapKind,
    pub in_dim: usize,
    pub out_dim: usize,
}

fn pieces_shape(pieces: &[CMatrix]) -> Result<(usize, usize)> {
    let first = pieces
        .first()
        .ok_or_else(|| LabError::Shape("map needs at least one Kraus piece".into()))?;
    let shape = first.shape();
    if shape.0 == 0 || shape.1 == 0 {
        return Err(LabError::Shape("Kraus pieces must be non-empty".into()));
    }
    if let Some((i, bad)) = pieces.iter().enumerate().find(|(_, x)| x.shape() != shape) {
        return Err(LabError::Shape(format!(
            "Kraus piece {i} is {}x{}, expected {}x{}",
            bad.nrows(),
            bad.ncols(),
            shape.0,
            shape.1
        )));
    }
    Ok(shape)
}

impl MapSpec {
    pub fn identity(dim: usize) -> Self {
        Self {
            kind: MapKind::Identity,
            in_dim: dim,
            out_dim: dim,
        }
    }

    /// `A -> X* A X` with `X` of shape `in_dim x out_dim`.
    pub fn conjugation(x: CMatrix) -> Result<Self> {
        let (n, m) = pieces_shape(std::slice::from_ref(&x))?;
        Ok(Self {
            kind: MapKind::Conjugation(x),
            in_dim: n,
            out_dim: m,
        })
    }

    pub fn kraus(pieces: Vec<CMatrix>) -> Result<Self> {
        let (n, m) = pieces_shape(&pieces)?;
        Ok(Self {
            kind: MapKind::Kraus(pieces),
            in_dim: n,
            out_dim: m,
        })
    }

    pub fn transpose_then_kraus(pieces: Vec<CMatrix>) -> Result<Self> {
        let (n, m) = pieces_shape(&pieces)?;
        Ok(Self {
            kind: MapKind::TransposeThenKraus(pieces),
            in_dim: n,
            out_dim: m,
        })
    }

    pub fn pinching(projections: Vec<CMatrix>) -> Result<Self> {
        let (n, m) = pieces_shape(&projections)?;
        if n != m {
            return Err(LabError::Shape("pinching projections must be square".into()));
        }
        let tol = 1e-10;
        let mut total = CMatrix::zeros(n, n);
        for (i, p) in projections.iter().enumerate() {
            let herm = max_abs_entry(&(p - p.adjoint()));
            let idem = max_abs_entry(&(p * p - p));
            if herm > tol || idem > tol {
                return Err(LabError::InvalidParameter(format!(
                    "pinching piece {i} is not an orthogonal projection"
                )));
            }
            for (j, q) in projections.iter().enumerate().skip(i + 1) {
                if max_abs_entry(&(p * q)) > tol {
                    return Err(LabError::InvalidParameter(format!(
                        "pinching pieces {i} and {j} are not orthogonal"
                    )));
                }
            }
            total += p;
        }
        if max_abs_entry(&(total - CMatrix::identity(n, n))) > tol {
            return Err(LabError::InvalidParameter(
                "pinching projections do not sum to the identity".into(),
            ));
        }
        Ok(Self {
            kind: MapKind::Pinching(projections),
            in_dim: n,
            out_dim: n,
        })
    }

    /// Diagonal pinching onto the standard basis vectors.
    pub fn diagonal_pinching(dim: usize) -> Self {
        let pieces = (0..dim)
            .map(|i| {
                let mut p = CMatrix::zeros(dim, dim);
                p[(i, i)] = c64(1.0, 0.0);
                p
            })
            .collect();
        Self {
            kind: MapKind::Pinching(pieces),
            in_dim: dim,
            out_dim: dim,
        }
    }

    /// `diag(A, B) -> A + B` through `X = [I; I]` of shape `2n x n`.
    pub fn block_sum(n: usize) -> Self {
        let mut x = CMatrix::zeros(2 * n, n);
        for i in 0..n {
            x[(i, i)] = c64(1.0, 0.0);
            x[(n + i, i)] = c64(1.0, 0.0);
        }
        Self::conjugation(x).expect("non-empty")
    }

    /// `[[1, 0], [1, eps]]` conjugation on `M_2`.
    pub fn x_eps(eps: f64) -> Self {
        let x = CMatrix::from_row_slice(
            2,
            2,
            &[c64(1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0), c64(eps, 0.0)],
        );
        Self::conjugation(x).expect("non-empty")
    }

    /// `[[I_2, 0], [I_2, eps I_2]]` conjugation on `M_4`.
    pub fn x_eps_block(eps: f64) -> Self {
        let mut x = CMatrix::zeros(4, 4);
        for i in 0..2 {
            x[(i, i)] = c64(1.0, 0.0);
            x[(2 + i, i)] = c64(1.0, 0.0);
            x[(2 + i, 2 + i)] = c64(eps, 0.0);
        }
        Self::conjugation(x).expect("non-empty")
    }

    /// `Theta([[A, X], [Y, B]]) = Phi(A) + Psi(B)` for completely positive `Phi`, `Psi`.
    pub fn block_combine(phi: &MapSpec, psi: &MapSpec) -> Result<Self> {
        if phi.out_dim != psi.out_dim {
            return Err(LabError::DimensionMismatch {
                expected: phi.out_dim,
                found: psi.out_dim,
            });
        }
        if !phi.is_cp() || !psi.is_cp() {
            return Err(LabError::InvalidParameter(
                "block combination needs completely positive pieces".into(),
            ));
        }
        let (n, m, l) = (phi.in_dim, psi.in_dim, phi.out_dim);
        let mut pieces = Vec::new();
        for x in phi.kraus_pieces() {
            let mut big = CMatrix::zeros(n + m, l);
            big.view_mut((0, 0), (n, l)).copy_from(&x);
            pieces.push(big);
        }
        for y in psi.kraus_pieces() {
            let mut big = CMatrix::zeros(n + m, l);
            big.view_mut((n, 0), (m, l)).copy_from(&y);
            pieces.push(big);
        }
        Self::kraus(pieces)
    }

    /// Kraus pieces realizing the map (for the transpose kind, the pieces applied after `A^T`).
    pub fn kraus_pieces(&self) -> Vec<CMatrix> {
        match &self.kind {
            MapKind::Identity => vec![CMatrix::identity(self.in_dim, self.in_dim)],
            MapKind::Conjugation(x) => vec![x.clone()],
            MapKind::Kraus(p) | MapKind::Pinching(p) | MapKind::TransposeThenKraus(p) => p.clone(),
        }
    }

    pub fn is_cp(&self) -> bool {
        !matches!(self.kind, MapKind::TransposeThenKraus(_))
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            MapKind::Identity => "identity",
            MapKind::Conjugation(_) => "conjugation",
            MapKind::Kraus(_) => "kraus",
            MapKind::Pinching(_) => "pinching",
            MapKind::TransposeThenKraus(_) => "transpose-kraus",
        }
    }

    /// `c * Phi` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(LabError::InvalidParameter(format!("map scale must be positive, got {c}")));
        }
        let root = c64(c.sqrt(), 0.0);
        let pieces: Vec<CMatrix> = self.kraus_pieces().into_iter().map(|x| x * root).collect();
        match self.kind {
            MapKind::TransposeThenKraus(_) => Self::transpose_then_kraus(pieces),
            MapKind::Identity | MapKind::Conjugation(_) if pieces.len() == 1 => {
                Self::conjugation(pieces.into_iter().next().expect("one piece"))
            }
            _ => Self::kraus(pieces),
        }
    }

    pub fn apply(&self, a: &HermMatrix) -> Result<HermMatrix> {
        apply_map(self, a)
    }

    /// Apply to a PD input; the output must be PD (true for strictly positive maps).
    pub fn apply_pd(&self, a: &PosDefMatrix) -> Result<PosDefMatrix> {
        PosDefMatrix::new(self.apply(a.as_herm())?)
    }

    /// `Phi(I_n)`.
    pub fn unit_image(&self) -> HermMatrix {
        self.apply(&HermMatrix::identity(self.in_dim))
            .expect("identity has the input dimension")
    }

    pub fn is_strictly_positive(&self) -> bool {
        is_strictly_positive(self)
    }

    pub fn hat(&self, a: &PosDefMatrix) -> Result<PosDefMatrix> {
        hat_map(self, a)
    }
}

/// `Phi(A)`.
pub fn apply_map(spec: &MapSpec, a: &HermMatrix) -> Result<HermMatrix> {
    if a.dim() != spec.in_dim {
        return Err(LabError::DimensionMismatch {
            expected: spec.in_dim,
            found: a.dim(),
        });
    }
    let m = a.matrix();
    let out = match &spec.kind {
        MapKind::Identity => m.clone(),
        MapKind::Conjugation(x) => x.adjoint() * m * x,
        MapKind::Kraus(pieces) | MapKind::Pinching(pieces) => {
            let mut acc = CMatrix::zeros(spec.out_dim, spec.out_dim);
            for x in pieces {
                acc += x.adjoint() * m * x;
            }
            acc
        }
        MapKind::TransposeThenKraus(pieces) => {
            let t = m.transpose();
            let mut acc = CMatrix::zeros(spec.out_dim, spec.out_dim);
            for x in pieces {
                acc += x.adjoint() * &t * x;
            }
            acc
        }
    };
    Ok(HermMatrix::hermitize(out))
}

/// `lambda_min(Phi(I)) > 1e-12 * lambda_max(Phi(I))`.
pub fn is_strictly_positive(spec: &MapSpec) -> bool {
    strict_positivity(spec).is_ok()
}

pub(crate) fn strict_positivity(spec: &MapSpec) -> Result<()> {
    let eig = spec.unit_image().eigenvalues();
    let (lo, hi) = (eig[0], eig[eig.len() - 1]);
    if hi > 0.0 && lo > STRICT_POSITIVITY_FLOOR * hi {
        Ok(())
    } else {
        Err(LabError::NotStrictlyPositive {
            min_eigenvalue: lo,
            max_eigenvalue: hi,
        })
    }
}

/// `Phi(A^{-1})^{-1}`, inverted spectrally with an eigenvalue floor; failures are surfaced.
pub fn hat_map(spec: &MapSpec, a: &PosDefMatrix) -> Result<PosDefMatrix> {
    let image = spec.apply(a.inverse().as_herm())?;
    let s = image.spectral();
    let top = s.eigenvalues[s.eigenvalues.len() - 1];
    let floor = HAT_FLOOR * top.max(0.0);
    if !(s.eigenvalues[0] > floor) {
        return Err(LabError::RegularizationFailure {
            min_eigenvalue: s.eigenvalues[0],
            floor,
        });
    }
    let inv: Vec<f64> = s.eigenvalues.iter().map(|v| 1.0 / v).collect();
    PosDefMatrix::from_spectrum(inv, s.basis)
}

/// Random rank-`rank` Kraus map scaled so that `||Phi(I)||_op = 1`; resampled until strictly positive.
pub fn sample_kraus(in_dim: usize, out_dim: usize, rank: usize, seed: u64, stream: u64) -> Result<MapSpec> {
    if rank == 0 || in_dim == 0 || out_dim == 0 {
        return Err(LabError::InvalidParameter(
            "Kraus rank and dimensions must be positive".into(),
        ));
    }
    let mut rng = stream_rng(seed, stream);
    for _ in 0..64 {
        let pieces: Vec<CMatrix> = (0..rank)
            .map(|_| complex_gaussian(&mut rng, in_dim, out_dim))
            .collect();
        let map = MapSpec::kraus(pieces)?;
        let top = map.unit_image().max_eigenvalue();
        let map = map.scaled(1.0 / top)?;
        if map.is_strictly_positive() {
            return Ok(map);
        }
    }
    Err(LabError::InvalidParameter(format!(
        "could not draw a strictly positive rank-{rank} map {in_dim}->{out_dim}; need rank * in_dim >= out_dim"
    )))
}

/// Rescale a pair so that `Phi(I) + Psi(I) = I`.
pub fn normalize_unital_pair(phi: &MapSpec, psi: &MapSpec) -> Result<(MapSpec, MapSpec)> {
    if phi.out_dim != psi.out_dim {
        return Err(LabError::DimensionMismatch {
            expected: phi.out_dim,
            found: psi.out_dim,
        });
    }
    let total = PosDefMatrix::new(phi.unit_image().add(&psi.unit_image())?)?;
    let root = total.power(-0.5);
    let rescale = |map: &MapSpec| -> Result<MapSpec> {
        let pieces: Vec<CMatrix> = map.kraus_pieces().into_iter().map(|x| x * root.matrix()).collect();
        if map.is_cp() {
            MapSpec::kraus(pieces)
        } else {
            MapSpec::transpose_then_kraus(pieces)
        }
    };
    Ok((rescale(phi)?, rescale(psi)?))
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kraus: Option<Vec<MatrixJson>>,
    in_dim: usize,
    out_dim: usize,
    #[serde(default)]
    cp: Option<bool>,
}

impl Serialize for MapSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let kraus = match self.kind {
            MapKind::Identity => None,
            _ => Some(self.kraus_pieces().iter().map(MatrixJson::from_matrix).collect()),
        };
        MapJson {
            kind: self.kind_name().to_string(),
            kraus,
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            cp: Some(self.is_cp()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MapSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let raw = MapJson::deserialize(deserializer)?;
        let pieces = || -> std::result::Result<Vec<CMatrix>, D::Error> {
            raw.kraus
                .as_ref()
                .ok_or_else(|| D::Error::custom(format!("map kind `{}` needs `kraus`", raw.kind)))?
                .iter()
                .map(|m| m.to_matrix().map_err(D::Error::custom))
                .collect()
        };
        let spec = match raw.kind.as_str() {
            "identity" => {
                if raw.in_dim != raw.out_dim || raw.in_dim == 0 {
                    return Err(D::Error::custom("identity map needs in_dim == out_dim > 0"));
                }
                MapSpec::identity(raw.in_dim)
            }
            "conjugation" => {
                let mut p = pieces()?;
                if p.len() != 1 {
                    return Err(D::Error::custom("conjugation takes exactly one matrix"));
                }
                MapSpec::conjugation(p.remove(0))
            }
            .map_err(D::Error::custom)?,
            "kraus" => MapSpec::kraus(pieces()?).map_err(D::Error::custom)?,
            "pinching" => MapSpec::pinching(pieces()?).map_err(D::Error::custom)?,
            "transpose-kraus" => MapSpec::transpose_then_kraus(pieces()?).map_err(D::Error::custom)?,
            other => return Err(D::Error::custom(format!("unknown map kind `{other}`"))),
        };
        if spec.in_dim != raw.in_dim || spec.out_dim != raw.out_dim {
            return Err(D::Error::custom(format!(
                "declared dims {}->{} do not match the pieces ({}->{})",
                raw.in_dim, raw.out_dim, spec.in_dim, spec.out_dim
            )));
        }
        if let Some(cp) = raw.cp {
            if cp != spec.is_cp() {
                return Err(D::Error::custom(format!(
                    "`cp: {cp}` contradicts map kind `{}`",
                    raw.kind
                )));
            }
        }
        Ok(spec)
    }
}
