//! Seeded samplers for the simulation designs.
//!
//! Every generator is a pure function of its [`SeedSpec`]. Mixing matrices
//! come from the `DESIGN` sub-stream of the spec seed, data from the `DATA`
//! sub-stream, so a design can be held fixed while replications vary.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SampleMatrix, SeedSpec};
use crate::error::{Error, Result};

const DESIGN: u64 = 0xd3;
const DATA: u64 = 0xda;
const CHI: u64 = 0xc5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    #[default]
    Linear,
    Mixture,
    Additive,
    Triangle,
    Cantor,
    CustomMatrix,
}

/// Law of the i.i.d. entries of the latent vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Base {
    #[default]
    Gaussian,
    T2,
    T4,
}

impl std::str::FromStr for Base {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Base::Gaussian),
            "t2" => Ok(Base::T2),
            "t4" => Ok(Base::T4),
            other => Err(Error::InvalidInput(format!("unknown base `{other}`"))),
        }
    }
}

/// Noise scaling of the additive family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Noise {
    /// `Y = ηZ + (1 - η)ε`
    #[default]
    Complementary,
    /// `Y = ηZ + ε`
    Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    #[serde(default)]
    pub family: Family,
    pub d_y: usize,
    pub d_z: usize,
    #[serde(default)]
    pub d_x: usize,
    #[serde(default)]
    pub base: Base,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_y: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_z: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digits: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: SeedSpec,
}

fn default_seed() -> SeedSpec {
    SeedSpec::new(0)
}

impl SamplerSpec {
    pub fn linear(d_y: usize, d_z: usize, base: Base, seed: SeedSpec) -> Self {
        Self {
            family: Family::Linear,
            d_y,
            d_z,
            d_x: 0,
            base,
            eta: 0.0,
            noise: Noise::Complementary,
            b_y: None,
            b_z: None,
            digits: None,
            seed,
        }
    }

    pub fn additive(d: usize, base: Base, eta: f64, noise: Noise, seed: SeedSpec) -> Self {
        Self { family: Family::Additive, eta, noise, ..Self::linear(d, d, base, seed) }
    }

    pub fn mixture(d: usize, base: Base, eta: f64, seed: SeedSpec) -> Self {
        Self { family: Family::Mixture, eta, ..Self::linear(d, d, base, seed) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_y == 0 || self.d_z == 0 {
            return Err(Error::InvalidInput("dims must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidInput(format!("eta must lie in [0, 1], got {}", self.eta)));
        }
        match self.family {
            Family::Mixture | Family::Additive if self.d_y != self.d_z => {
                Err(Error::InvalidInput("mixture and additive families need d_y == d_z".into()))
            }
            Family::Triangle if (self.d_y, self.d_z) != (2, 1) => {
                Err(Error::InvalidInput("triangle family has d_y = 2, d_z = 1".into()))
            }
            Family::Cantor if self.d_z != 1 => Err(Error::InvalidInput("cantor family has d_z = 1".into())),
            Family::CustomMatrix if self.b_y.is_none() || self.b_z.is_none() => {
                Err(Error::InvalidInput("custom-matrix family needs b_y and b_z".into()))
            }
            _ => {
                for (m, d, name) in [(&self.b_y, self.d_y, "b_y"), (&self.b_z, self.d_z, "b_z")] {
                    if let Some(m) = m {
                        check_square(m, d, name)?;
                    }
                }
                Ok(())
            }
        }
    }

    /// Mixing matrices: the supplied ones, or fresh row-normalized Gaussian
    /// matrices from the design stream. The second matrix mixes `Z` (or the
    /// noise in the additive family).
    pub fn design(&self) -> Result<(Matrix, Matrix)> {
        self.validate()?;
        let mut rng = self.seed.derive(DESIGN).rng();
        let b_y = match &self.b_y {
            Some(m) => Matrix::from_rows(m.clone()),
            None => Matrix::random_normalized(self.d_y, &mut rng),
        };
        let b_z = match &self.b_z {
            Some(m) => Matrix::from_rows(m.clone()),
            None => Matrix::random_normalized(self.d_z, &mut rng),
        };
        Ok((b_y, b_z))
    }

    /// Same spec with the design drawn and frozen, reseeded for the data.
    pub fn freeze_design(&self, data_seed: SeedSpec) -> Result<Self> {
        let (b_y, b_z) = self.design()?;
        Ok(Self { b_y: Some(b_y.rows), b_z: Some(b_z.rows), seed: data_seed, ..self.clone() })
    }

    pub fn generate(&self, n: usize) -> Result<Dataset<f64>> {
        match self.family {
            Family::Linear | Family::CustomMatrix => gen_linear(self, n),
            Family::Mixture => gen_mixture_spec(self, n),
            Family::Additive => gen_additive(self, n),
            Family::Triangle => gen_triangle(n, &self.seed),
            Family::Cantor => {
                let z = gen_cantor(n, self.digits.unwrap_or(DEFAULT_DIGITS), &self.seed.derive(1))?;
                let y = gen_base(n, self.d_y, self.base, &self.seed.derive(2))?;
                Dataset::new(y, z, None)
            }
        }
    }
}

fn check_square(m: &[Vec<f64>], d: usize, name: &str) -> Result<()> {
    if m.len() != d || m.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidInput(format!("{name} must be {d}x{d}")));
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} has non-finite entries")));
    }
    Ok(())
}

/// Small dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: Vec<Vec<f64>>,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn identity(d: usize) -> Self {
        Self { rows: (0..d).map(|i| (0..d).map(|j| f64::from(u8::from(i == j))).collect()).collect() }
    }

    /// i.i.d. `N(0, 1)` entries, each row scaled to unit `ℓ₂` norm.
    pub fn random_normalized(d: usize, rng: &mut ChaCha8Rng) -> Self {
        let rows = (0..d)
            .map(|_| {
                let r: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                r.into_iter().map(|v| v / norm).collect()
            })
            .collect();
        Self { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Applies the matrix to every row of `x`.
    pub fn apply(&self, x: &SampleMatrix<f64>) -> Result<SampleMatrix<f64>> {
        let d = self.dim();
        if x.cols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.cols() });
        }
        let mut out = Vec::with_capacity(x.rows() * d);
        for i in 0..x.rows() {
            let v = x.row(i);
            out.extend(self.rows.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()));
        }
        SampleMatrix::new(x.rows(), d, out)
    }
}

/// `n × d` i.i.d. draws from the base law. Student-t variates are a Gaussian
/// divided by an independent `√(χ²_ν/ν)` from its own sub-stream.
pub fn gen_base(n: usize, d: usize, base: Base, seed: &SeedSpec) -> Result<SampleMatrix<f64>> {
    let mut rng = seed.derive(DATA).rng();
    let mut v: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    let nu = match base {
        Base::Gaussian => None,
        Base::T2 => Some(2.0),
        Base::T4 => Some(4.0),
    };
    if let Some(nu) = nu {
        let chi = ChiSquared::new(nu).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut rng = seed.derive(CHI).rng();
        for x in &mut v {
            let c: f64 = chi.sample(&mut rng);
            *x /= (c / nu).sqrt();
        }
    }
    SampleMatrix::new(n, d, v)
}

/// `Y = B_Y Y'`, `Z = B_Z Z'` with independent latent vectors, so `Y ⫫ Z`.
pub fn gen_linear(spec: &SamplerSpec, n: usize) -> Result<Dataset<f64>> {
    let (b_y, b_z) = spec.design()?;
    let y = b_y.apply(&gen_base(n, spec.d_y, spec.base, &spec.seed.derive(1))?)?;
    let z = b_z.apply(&gen_base(n, spec.d_z, spec.base, &spec.seed.derive(2))?)?;
    let x = if spec.d_x > 0 {
        let mut rng = spec.seed.derive(DESIGN).derive(3).rng();
        let b_x = Matrix::random_normalized(spec.d_x, &mut rng);
        Some(b_x.apply(&gen_base(n, spec.d_x, spec.base, &spec.seed.derive(3))?)?)
    } else {
        None
    };
    Dataset::new(y, z, x)
}

/// Mixture of an independent and a functional component.
///
/// `Z = B_Z Z'`. With probability `η` the row has `Y = Z`; otherwise `Y` is an
/// independent copy drawn from the law of `Z`, so `Y` has the same marginal
/// in both components.
pub fn gen_mixture(eta: f64, n: usize, d: usize, base: Base, seed: &SeedSpec) -> Result<Dataset<f64>> {
    gen_mixture_spec(&SamplerSpec::mixture(d, base, eta, *seed), n)
}

fn gen_mixture_spec(spec: &SamplerSpec, n: usize) -> Result<Dataset<f64>> {
    let (_, b_z) = spec.design()?;
    let d = spec.d_z;
    let z = b_z.apply(&gen_base(n, d, spec.base, &spec.seed.derive(2))?)?;
    let other = b_z.apply(&gen_base(n, d, spec.base, &spec.seed.derive(1))?)?;
    let mut rng = spec.seed.derive(4).rng();
    let mut y = Vec::with_capacity(n * d);
    for i in 0..n {
        let src = if rng.random_bool(spec.eta) { &z } else { &other };
        y.extend_from_slice(src.row(i));
    }
    Dataset::new(SampleMatrix::new(n, d, y)?, z, None)
}

/// Additive model `Y = ηZ + s(η)ε` with `Z = B_Z Z'` and `ε = B_ε ε'`.
pub fn gen_additive(spec: &SamplerSpec, n: usize) -> Result<Dataset<f64>> {
    if spec.d_y != spec.d_z {
        return Err(Error::InvalidInput("additive family needs d_y == d_z".into()));
    }
    let (b_eps, b_z) = spec.design()?;
    let z = b_z.apply(&gen_base(n, spec.d_z, spec.base, &spec.seed.derive(2))?)?;
    let eps = b_eps.apply(&gen_base(n, spec.d_y, spec.base, &spec.seed.derive(1))?)?;
    let scale = match spec.noise {
        Noise::Complementary => 1.0 - spec.eta,
        Noise::Unit => 1.0,
    };
    let eta = spec.eta;
    let y: Vec<f64> = z.values().iter().zip(eps.values()).map(|(z, e)| eta * z + scale * e).collect();
    Dataset::new(SampleMatrix::new(n, spec.d_y, y)?, z, None)
}

/// Two-dimensional `Y` on the upper triangle of the unit square with a
/// binary `Z` that changes only the law on the diagonal segment.
///
/// With probability 1/2, `Y` is uniform on the open triangle regardless of
/// `Z`. Otherwise `Y = (u, 1 - u)` with `u ~ U(0, 1/2)` when `Z = 1` and
/// `u ~ U(1/2, 1)` when `Z = 0`.
pub fn gen_triangle(n: usize, seed: &SeedSpec) -> Result<Dataset<f64>> {
    let mut rng = seed.derive(DATA).rng();
    let mut y = Vec::with_capacity(2 * n);
    let mut z = Vec::with_capacity(n);
    for _ in 0..n {
        let zi = rng.random_bool(0.5);
        if rng.random_bool(0.5) {
            let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
            if u + v < 1.0 {
                (u, v) = (1.0 - u, 1.0 - v);
            }
            y.extend([u, v]);
        } else {
            let h: f64 = rng.random::<f64>() * 0.5;
            let u = if zi { h } else { 0.5 + h };
            y.extend([u, 1.0 - u]);
        }
        z.push(f64::from(u8::from(zi)));
    }
    Dataset::new(SampleMatrix::new(n, 2, y)?, SampleMatrix::from_column(z)?, None)
}

/// Ternary digits beyond double precision.
pub const DEFAULT_DIGITS: usize = 40;

/// `Z = Σ_j 3^{-j} Z_j` with `Z_j` uniform on `{0, 2}`.
pub fn gen_cantor(n: usize, digits: usize, seed: &SeedSpec) -> Result<SampleMatrix<f64>> {
    if digits == 0 {
        return Err(Error::InvalidInput("digits must be positive".into()));
    }
    let mut rng = seed.derive(DATA).rng();
    let z = (0..n)
        .map(|_| {
            let mut bits = 0u64;
            let mut z = 0.0;
            let mut scale = 1.0;
            for j in 0..digits {
                if j % 64 == 0 {
                    bits = rng.random();
                }
                scale /= 3.0;
                z += scale * 2.0 * (bits & 1) as f64;
                bits >>= 1;
            }
            z
        })
        .collect();
    SampleMatrix::from_column(z)
}

/// Log-periodic function with `(n-1) P(M(1)=2, M(2)=1) ≈ ½ A(n)` for Cantor `Z`.
pub fn cantor_a(x: f64) -> f64 {
    (-80..=80).map(|k| {
        let t = 2f64.powi(-k) * x;
        t * (-t).exp()
    })
    .sum()
}

/// Log-periodic function with `(n-1) P(M(1)=M(2)) ≈ ½ B(n)` for Cantor `Z`.
pub fn cantor_b(x: f64) -> f64 {
    (-80..=80)
        .map(|k| {
            let t = 2f64.powi(-k) * x;
            if t > 700.0 {
                0.0
            } else {
                t * t / (t.exp() * t.exp_m1())
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    #[test]
    fn design_rows_have_unit_norm() {
        let spec = SamplerSpec::linear(5, 3, Base::Gaussian, SeedSpec::new(9));
        let (b_y, b_z) = spec.design().unwrap();
        for r in b_y.rows.iter().chain(&b_z.rows) {
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        assert_eq!(b_y.dim(), 5);
        assert_eq!(b_z.dim(), 3);
    }

    #[test]
    fn deterministic_and_stream_separated() {
        let spec = SamplerSpec::linear(2, 2, Base::T4, SeedSpec::new(1));
        assert_eq!(spec.generate(50).unwrap(), spec.generate(50).unwrap());
        let other = SamplerSpec { seed: SeedSpec::with_stream(1, 1), ..spec.clone() };
        assert_ne!(spec.generate(50).unwrap().y, other.generate(50).unwrap().y);
    }

    #[test]
    fn frozen_design_keeps_matrices() {
        let spec = SamplerSpec::linear(2, 3, Base::Gaussian, SeedSpec::new(4));
        let frozen = spec.freeze_design(SeedSpec::new(99)).unwrap();
        assert_eq!(spec.design().unwrap(), frozen.design().unwrap());
        assert_eq!(frozen.seed, SeedSpec::new(99));
    }

    #[test]
    fn spec_validation() {
        let mut spec = SamplerSpec::mixture(2, Base::Gaussian, 1.5, SeedSpec::new(0));
        assert!(spec.validate().is_err());
        spec.eta = 0.5;
        spec.d_z = 3;
        assert!(spec.validate().is_err());
        let bad = SamplerSpec { b_y: Some(vec![vec![1.0]]), ..SamplerSpec::linear(2, 2, Base::Gaussian, SeedSpec::new(0)) };
        assert!(bad.validate().is_err());
        let custom = SamplerSpec { family: Family::CustomMatrix, ..SamplerSpec::linear(1, 1, Base::Gaussian, SeedSpec::new(0)) };
        assert!(custom.validate().is_err());
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec = SamplerSpec::additive(2, Base::T2, 0.3, Noise::Unit, SeedSpec::with_stream(3, 4));
        let json = serde_json::to_string(&spec).unwrap();
        let back: SamplerSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        let minimal: SamplerSpec = serde_json::from_str(r#"{"family":"triangle","d_y":2,"d_z":1}"#).unwrap();
        assert_eq!(minimal.family, Family::Triangle);
    }

    #[test]
    fn triangle_support() {
        let ds = gen_triangle(5000, &SeedSpec::new(2)).unwrap();
        for i in 0..ds.n() {
            let r = ds.y.row(i);
            assert!(r[0] + r[1] >= 1.0 - 1e-12);
            assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(ds.z.get(i, 0) == 0.0 || ds.z.get(i, 0) == 1.0);
        }
    }

    #[test]
    fn cantor_moments() {
        let z = gen_cantor(100_000, DEFAULT_DIGITS, &SeedSpec::new(3)).unwrap();
        let v: Vec<f64> = z.column(0).collect();
        assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
        assert!((stats::mean(&v) - 0.5).abs() < 0.01);
        assert!((stats::variance(&v) - 0.125).abs() < 0.01);
    }

    #[test]
    fn cantor_functions_are_log_periodic() {
        for &x in &[1.0, 1.3, 1.7] {
            assert!((cantor_a(2.0 * x) - cantor_a(x)).abs() < 1e-12);
            assert!((cantor_b(2.0 * x) - cantor_b(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn t2_has_heavy_tails() {
        let small: Vec<f64> = gen_base(1000, 1, Base::T2, &SeedSpec::new(5)).unwrap().column(0).collect();
        let large: Vec<f64> = gen_base(200_000, 1, Base::T2, &SeedSpec::new(5)).unwrap().column(0).collect();
        let gauss: Vec<f64> = gen_base(200_000, 1, Base::Gaussian, &SeedSpec::new(5)).unwrap().column(0).collect();
        assert!(stats::kurtosis(&large) > stats::kurtosis(&small));
        assert!(stats::kurtosis(&large) > 20.0);
        assert!((stats::kurtosis(&gauss) - 3.0).abs() < 0.1);
    }

    #[test]
    fn linear_y_and_z_uncorrelated() {
        let ds = SamplerSpec::linear(2, 2, Base::Gaussian, SeedSpec::new(6)).generate(100_000).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let ya: Vec<f64> = ds.y.column(a).collect();
                let zb: Vec<f64> = ds.z.column(b).collect();
                assert!(stats::pearson(&ya, &zb).abs() < 0.02);
            }
        }
    }

    #[test]
    fn mixture_preserves_y_marginal() {
        let n = 100_000;
        let y0 = gen_mixture(0.0, n, 1, Base::Gaussian, &SeedSpec::new(7)).unwrap();
        let y1 = gen_mixture(1.0, n, 1, Base::Gaussian, &SeedSpec::new(8)).unwrap();
        let a: Vec<f64> = y0.y.column(0).collect();
        let b: Vec<f64> = y1.y.column(0).collect();
        assert!(stats::ks_two_sample(&a, &b) < stats::ks_critical(0.01, n, Some(n)));
    }

    #[test]
    fn additive_endpoints() {
        let spec = SamplerSpec::additive(2, Base::Gaussian, 1.0, Noise::Complementary, SeedSpec::new(1));
        let ds = spec.generate(100).unwrap();
        assert_eq!(ds.y, ds.z);
        let spec = SamplerSpec { eta: 0.0, ..spec };
        let ds = spec.generate(100).unwrap();
        assert!(ds.y.values().iter().zip(ds.z.values()).all(|(a, b)| a != b));
    }
}
