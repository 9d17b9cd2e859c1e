//! Generalized Wigner matrices, the Ornstein-Uhlenbeck matrix flow and
//! eigenvalue extraction.
//!
//! Entries are `h_ij = sigma_ij * xi_ij` with `xi` drawn from a standardized
//! law (mean 0, variance 1) and `sigma_ij^2` taken from a variance profile.
//! The GOE uses the profile `2/N` on the diagonal and `1/N` off it, so its
//! column sums equal `1 + 1/N` instead of 1.

use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, ensure_finite, Error, Result};
use crate::rng::Rng;

/// Header of the binary matrix format.
pub const MATRIX_MAGIC: &[u8; 8] = b"DBMLMAT1";

/// Moment order `p` checked by default.
pub const DEFAULT_MOMENT_P: f64 = 10.0;

/// Tolerance for the column-sum normalization of a variance profile.
pub const PROFILE_SUM_TOL: f64 = 1e-12;

/// Entry distribution of a generalized Wigner ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Goe,
    Bernoulli,
    Custom,
}

impl EnsembleKind {
    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::Goe => "goe",
            EnsembleKind::Bernoulli => "bernoulli",
            EnsembleKind::Custom => "custom",
        }
    }
}

/// Standardized entry law for custom ensembles.
pub trait EntrySampler: Send + Sync {
    /// One draw with mean 0 and variance 1.
    fn sample(&self, rng: &mut Rng) -> f64;
    /// `E|xi|^p`; infinite when the moment does not exist.
    fn abs_moment(&self, p: f64) -> f64;
}

/// Standard normal entries.
#[derive(Debug, Clone, Copy, Default)]
pub struct NormalEntries;

impl EntrySampler for NormalEntries {
    fn sample(&self, rng: &mut Rng) -> f64 {
        StandardNormal.sample(rng)
    }

    fn abs_moment(&self, p: f64) -> f64 {
        2f64.powf(0.5 * p) * libm::tgamma(0.5 * (p + 1.0)) / std::f64::consts::PI.sqrt()
    }
}

/// Symmetric `±1` entries.
#[derive(Debug, Clone, Copy, Default)]
pub struct RademacherEntries;

impl EntrySampler for RademacherEntries {
    fn sample(&self, rng: &mut Rng) -> f64 {
        if rng.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    fn abs_moment(&self, _p: f64) -> f64 {
        1.0
    }
}

/// Symmetric `N x N` matrix of entry variances.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceProfile {
    pub n: usize,
    values: Vec<f64>,
}

impl VarianceProfile {
    /// `1/N` everywhere.
    pub fn flat(n: usize) -> Self {
        Self::from_fn(n, |_, _| 1.0 / n as f64)
    }

    /// `2/N` on the diagonal and `1/N` off it.
    pub fn goe(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 2.0 } else { 1.0 } / n as f64)
    }

    /// Profile from `f(i, j)`; the upper triangle is authoritative.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self { n, values }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Smallest and largest values of `N * sigma_ij^2`.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.n as f64;
        self.values
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
                (lo.min(n * v), hi.max(n * v))
            })
    }

    /// Checks normalization and non-degeneracy for the given kind.
    ///
    /// Column sums must equal 1, or `1 + 1/N` for the GOE, within
    /// [`PROFILE_SUM_TOL`]; every entry must satisfy `c/N <= sigma^2 <= C/N`.
    pub fn validate(&self, kind: EnsembleKind, lower: f64, upper: f64) -> Result<()> {
        let n = self.n;
        if self.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return config("variance profile has negative or non-finite entries");
        }
        let target = match kind {
            EnsembleKind::Goe => 1.0 + 1.0 / n as f64,
            _ => 1.0,
        };
        for j in 0..n {
            let s: f64 = (0..n).map(|i| self.get(i, j)).sum();
            if (s - target).abs() > PROFILE_SUM_TOL {
                return config(format!(
                    "column {j} of the variance profile sums to {s}, expected {target}"
                ));
            }
        }
        let (lo, hi) = self.bounds();
        if lo < lower || hi > upper {
            return config(format!(
                "variance profile N*sigma^2 spans [{lo}, {hi}], outside [{lower}, {upper}]"
            ));
        }
        Ok(())
    }
}

/// Serializable description of an ensemble draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDoc {
    pub n: usize,
    pub kind: EnsembleKind,
    pub seed: u64,
    pub moment_p: f64,
}

/// Parameters of a generalized Wigner ensemble.
#[derive(Clone)]
pub struct EnsembleSpec {
    pub n: usize,
    pub kind: EnsembleKind,
    pub profile: VarianceProfile,
    pub moment_p: f64,
    /// Bounds `(c, C)` with `c/N <= sigma_ij^2 <= C/N`.
    pub variance_bounds: (f64, f64),
    /// Bound on `E|xi|^p` for `p = moment_p`.
    pub moment_bound: f64,
    pub sampler: Option<Arc<dyn EntrySampler>>,
}

impl fmt::Debug for EnsembleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnsembleSpec")
            .field("n", &self.n)
            .field("kind", &self.kind)
            .field("moment_p", &self.moment_p)
            .field("variance_bounds", &self.variance_bounds)
            .field("has_sampler", &self.sampler.is_some())
            .finish()
    }
}

impl EnsembleSpec {
    /// GOE: Gaussian entries with diagonal variance `2/N`.
    pub fn goe(n: usize) -> Self {
        Self::with_profile(n, EnsembleKind::Goe, VarianceProfile::goe(n))
    }

    /// Symmetric `+-N^{-1/2}` entries on a flat profile.
    pub fn bernoulli(n: usize) -> Self {
        Self::with_profile(n, EnsembleKind::Bernoulli, VarianceProfile::flat(n))
    }

    /// Arbitrary variance profile with a user sampler of standardized entries.
    pub fn custom(n: usize, profile: VarianceProfile, sampler: Arc<dyn EntrySampler>) -> Self {
        let mut spec = Self::with_profile(n, EnsembleKind::Custom, profile);
        spec.sampler = Some(sampler);
        spec
    }

    fn with_profile(n: usize, kind: EnsembleKind, profile: VarianceProfile) -> Self {
        Self {
            n,
            kind,
            profile,
            moment_p: DEFAULT_MOMENT_P,
            variance_bounds: (0.5, 2.0),
            moment_bound: 1e6,
            sampler: None,
        }
    }

    /// Rebuilds a GOE or Bernoulli spec from its JSON description.
    pub fn from_doc(doc: &EnsembleDoc) -> Result<Self> {
        let mut spec = match doc.kind {
            EnsembleKind::Goe => Self::goe(doc.n),
            EnsembleKind::Bernoulli => Self::bernoulli(doc.n),
            EnsembleKind::Custom => {
                return config("custom ensembles need a sampler and cannot be built from JSON")
            }
        };
        spec.moment_p = doc.moment_p;
        Ok(spec)
    }

    /// JSON description of this spec together with the seed used to sample it.
    pub fn to_doc(&self, seed: u64) -> EnsembleDoc {
        EnsembleDoc {
            n: self.n,
            kind: self.kind,
            seed,
            moment_p: self.moment_p,
        }
    }

    fn entry_law(&self) -> Result<Arc<dyn EntrySampler>> {
        match self.kind {
            EnsembleKind::Goe => Ok(Arc::new(NormalEntries)),
            EnsembleKind::Bernoulli => Ok(Arc::new(RademacherEntries)),
            EnsembleKind::Custom => match &self.sampler {
                Some(s) => Ok(s.clone()),
                None => config("custom ensemble without a sampler"),
            },
        }
    }

    /// Checks dimension, variance profile and moment conditions.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return config(format!(
                "matrix dimension must be at least 2, got {}",
                self.n
            ));
        }
        if self.profile.n != self.n {
            return config("variance profile dimension does not match N");
        }
        let (c, cc) = self.variance_bounds;
        self.profile.validate(self.kind, c, cc)?;
        let law = self.entry_law()?;
        let m = law.abs_moment(self.moment_p);
        if !m.is_finite() || m > self.moment_bound {
            return config(format!(
                "moment E|xi|^{} = {m} exceeds the bound {}",
                self.moment_p, self.moment_bound
            ));
        }
        Ok(())
    }
}

/// Dense symmetric matrix stored row-major with both triangles filled.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Builds from the upper triangle `f(i, j)`, `i <= j`, mirroring it.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds from a dense row-major buffer; the lower triangle is overwritten
    /// by the upper one.
    pub fn from_row_major(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return config(format!("expected {} entries, got {}", n * n, data.len()));
        }
        Ok(Self::from_upper(n, |i, j| data[i * n + j]))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    /// `O^T M O` for an orthogonal matrix `O` given row-major.
    pub fn conjugate(&self, o: &[f64]) -> Self {
        let n = self.n;
        let m = DMatrix::from_row_slice(n, n, &self.data);
        let o = DMatrix::from_row_slice(n, n, o);
        let r = o.transpose() * m * o;
        Self::from_upper(n, |i, j| 0.5 * (r[(i, j)] + r[(j, i)]))
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    /// Writes the magic header, `N` as little-endian u64 and the row-major entries.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MATRIX_MAGIC)?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MATRIX_MAGIC {
            return Err(Error::Format("bad matrix magic".into()));
        }
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf)?;
        let n = u64::from_le_bytes(buf) as usize;
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        Self::from_row_major(n, &data)
    }
}

/// Draws a generalized Wigner matrix.
///
/// Upper-triangle entries are drawn row by row, `i <= j`, one standardized
/// variate each, so a seed fixes the matrix exactly.
pub fn sample_generalized_wigner(spec: &EnsembleSpec, rng: &mut Rng) -> Result<SymmetricMatrix> {
    spec.validate()?;
    let law = spec.entry_law()?;
    let n = spec.n;
    Ok(SymmetricMatrix::from_upper(n, |i, j| {
        spec.profile.get(i, j).sqrt() * law.sample(rng)
    }))
}

/// GOE sample without re-validating the profile.
pub fn sample_goe(n: usize, rng: &mut Rng) -> SymmetricMatrix {
    let d = (2.0 / n as f64).sqrt();
    let o = (1.0 / n as f64).sqrt();
    SymmetricMatrix::from_upper(n, |i, j| {
        let z: f64 = StandardNormal.sample(rng);
        if i == j {
            d * z
        } else {
            o * z
        }
    })
}

/// `e^{-t/2} H0 + sqrt(1 - e^{-t}) G` with `G` an independent GOE matrix.
///
/// At `t = 0` the input is returned unchanged and no randomness is consumed.
pub fn matrix_flow(h0: &SymmetricMatrix, t: f64, rng: &mut Rng) -> Result<SymmetricMatrix> {
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!(
            "flow time must be finite and non-negative, got {t}"
        ));
    }
    if t == 0.0 {
        return Ok(h0.clone());
    }
    let g = sample_goe(h0.n(), rng);
    Ok(h0.combine((-0.5 * t).exp(), &g, (-(-t).exp_m1()).sqrt()))
}

/// Where a spectrum came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: Option<EnsembleKind>,
    pub seed: Option<u64>,
    pub flow_time: f64,
}

/// Eigenvalues in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl Spectrum {
    /// Wraps arbitrary values, sorting them.
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self {
            values,
            provenance: Provenance::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn eigenvalues(m: &SymmetricMatrix) -> Result<Spectrum> {
    ensure_finite(m.as_slice(), "matrix entries")?;
    let mut values: Vec<f64> = m
        .to_nalgebra()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    Ok(Spectrum {
        values,
        provenance: Provenance::default(),
    })
}

/// Eigenvalues of a fresh ensemble draw, optionally pushed along the matrix flow.
pub fn sample_spectrum(spec: &EnsembleSpec, flow_time: f64, rng: &mut Rng) -> Result<Spectrum> {
    let h = sample_generalized_wigner(spec, rng)?;
    let h = matrix_flow(&h, flow_time, rng)?;
    let mut s = eigenvalues(&h)?;
    s.provenance = Provenance {
        kind: Some(spec.kind),
        seed: None,
        flow_time,
    };
    Ok(s)
}

/// Diagnostics of a full eigendecomposition.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EigenCheck {
    /// `max_k |(M - lambda_k) v_k| / |M|` with `|M|` the spectral norm.
    pub max_residual: f64,
    /// Relative error of `sum lambda_k` against the trace.
    pub trace_error: f64,
    /// Relative error of `sum lambda_k^2` against the squared Frobenius norm.
    pub frobenius_error: f64,
}

/// Eigendecomposition with residual and trace diagnostics.
pub fn eigen_check(m: &SymmetricMatrix) -> Result<(Spectrum, EigenCheck)> {
    ensure_finite(m.as_slice(), "matrix entries")?;
    let a = m.to_nalgebra();
    let eig = a.clone().symmetric_eigen();
    let norm = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut max_res = 0.0f64;
    for k in 0..m.n() {
        let v = eig.eigenvectors.column(k);
        let r = &a * v - v * eig.eigenvalues[k];
        max_res = max_res.max(r.norm());
    }
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    let tr = m.trace();
    let sum: f64 = values.iter().sum();
    let fro = m.frobenius_sq();
    let sum2: f64 = values.iter().map(|v| v * v).sum();
    let scale = norm.max(f64::MIN_POSITIVE);
    let check = EigenCheck {
        max_residual: max_res / scale,
        trace_error: (sum - tr).abs() / tr.abs().max(scale),
        frobenius_error: (sum2 - fro).abs() / fro.max(f64::MIN_POSITIVE),
    };
    Ok((
        Spectrum {
            values,
            provenance: Provenance::default(),
        },
        check,
    ))
}

/// Haar-distributed orthogonal matrix (row-major) via QR of a Gaussian matrix.
pub fn haar_orthogonal(n: usize, rng: &mut Rng) -> Vec<f64> {
    let g: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(q[(i, j)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn goe_profile_sums_to_one_plus_one_over_n() {
        let p = VarianceProfile::goe(10);
        p.validate(EnsembleKind::Goe, 0.5, 2.0).unwrap();
        assert!(p.validate(EnsembleKind::Bernoulli, 0.5, 2.0).is_err());
        VarianceProfile::flat(10)
            .validate(EnsembleKind::Bernoulli, 0.5, 2.0)
            .unwrap();
    }

    #[test]
    fn degenerate_profile_is_rejected_before_sampling() {
        let n = 4;
        let prof = VarianceProfile::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 });
        let spec = EnsembleSpec::custom(n, prof, Arc::new(NormalEntries));
        let mut rng = seeded(1);
        assert!(matches!(
            sample_generalized_wigner(&spec, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn bernoulli_entries_have_fixed_modulus() {
        let mut rng = seeded(3);
        let h = sample_generalized_wigner(&EnsembleSpec::bernoulli(16), &mut rng).unwrap();
        for v in h.as_slice() {
            assert!((v.abs() - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn normal_moments() {
        let z = NormalEntries;
        assert!((z.abs_moment(2.0) - 1.0).abs() < 1e-14);
        assert!((z.abs_moment(4.0) - 3.0).abs() < 1e-13);
        assert!((z.abs_moment(10.0) - 945.0).abs() < 1e-9);
        assert!((z.abs_moment(1.0) - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn flow_at_zero_is_identity() {
        let mut rng = seeded(5);
        let h = sample_goe(6, &mut rng);
        assert_eq!(matrix_flow(&h, 0.0, &mut rng).unwrap(), h);
        assert!(matrix_flow(&h, -0.1, &mut rng).is_err());
    }

    #[test]
    fn non_finite_matrix_is_rejected() {
        let mut m = SymmetricMatrix::zeros(3);
        m.set(0, 1, f64::NAN);
        assert!(matches!(eigenvalues(&m), Err(Error::NonFinite(_))));
    }

    #[test]
    fn binary_round_trip() {
        let mut rng = seeded(9);
        let h = sample_goe(5, &mut rng);
        let mut buf = Vec::new();
        h.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], MATRIX_MAGIC);
        assert_eq!(buf.len(), 16 + 25 * 8);
        let back = SymmetricMatrix::read_binary(&buf[..]).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn doc_round_trip() {
        let doc: EnsembleDoc =
            serde_json::from_str(r#"{"n":500,"kind":"bernoulli","seed":7,"moment_p":8.0}"#)
                .unwrap();
        let spec = EnsembleSpec::from_doc(&doc).unwrap();
        assert_eq!(spec.to_doc(7), doc);
    }
}
