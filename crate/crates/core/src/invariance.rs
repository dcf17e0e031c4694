//! Linear equality constraints `A_k y = 0` expressing invariance of a measure.
//!
//! Every system class ends up as rows `l_y(p_alpha) = 0`, one per basis element
//! `b_alpha` with `1 <= |alpha| <= k`. The polynomial `p_alpha` is what changes
//! between classes:
//!
//! | class            | `p_alpha`                                        |
//! |------------------|--------------------------------------------------|
//! | discrete         | `b_alpha(T(x)) - b_alpha(x)`                     |
//! | continuous       | `grad b_alpha . b`                               |
//! | discrete Markov  | `E_w[b_alpha(T(x, w))] - b_alpha(x)`             |
//! | SDE              | `grad b_alpha . b + c tr(sigma sigma^T hess b_alpha)` |
//!
//! Eigenmeasures of the transfer operator use four stacked moment vectors
//! (positive and negative parts of the real and imaginary components).

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moment::{LinearFunctional, SemialgebraicSet};
use crate::polynomial::{basis_size, binomial, Basis, MultiIndex, Polynomial, PolynomialMap};

/// Which invariance relation a model imposes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Discrete,
    Continuous,
    DiscreteMarkov,
    Sde,
    PfEigen,
}

/// Distribution of the noise `w`, used for analytic moments and for sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseDistribution {
    /// Independent uniform coordinates on `[lo_i, hi_i]`.
    Uniform { lo: Vec<f64>, hi: Vec<f64> },
    /// Finitely many atoms with probabilities.
    Discrete { atoms: Vec<Vec<f64>>, weights: Vec<f64> },
    /// Independent normal coordinates.
    Gaussian { mean: Vec<f64>, std: Vec<f64> },
}

impl NoiseDistribution {
    pub fn dim(&self) -> usize {
        match self {
            NoiseDistribution::Uniform { lo, .. } => lo.len(),
            NoiseDistribution::Discrete { atoms, .. } => atoms.first().map_or(0, Vec::len),
            NoiseDistribution::Gaussian { mean, .. } => mean.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        match self {
            NoiseDistribution::Uniform { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return bad("uniform noise needs equal-length nonempty `lo` and `hi`");
                }
                if lo.iter().zip(hi).any(|(l, h)| !(h > l)) {
                    return bad("uniform noise needs lo < hi");
                }
            }
            NoiseDistribution::Discrete { atoms, weights } => {
                let n = self.dim();
                if n == 0 || atoms.len() != weights.len() || atoms.iter().any(|a| a.len() != n) {
                    return bad("discrete noise needs atoms of one dimension and matching weights");
                }
                if weights.iter().any(|&w| w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return bad("discrete noise weights must be nonnegative and sum to 1");
                }
            }
            NoiseDistribution::Gaussian { mean, std } => {
                if mean.is_empty() || mean.len() != std.len() || std.iter().any(|&s| s < 0.0) {
                    return bad("gaussian noise needs equal-length `mean` and nonnegative `std`");
                }
            }
        }
        Ok(())
    }

    /// Exact monomial moments `E[w^gamma]` for `|gamma| <= degree`.
    pub fn moments(&self, degree: u32) -> BTreeMap<MultiIndex, f64> {
        let n = self.dim();
        let univariate: Box<dyn Fn(usize, u32) -> f64> = match self {
            NoiseDistribution::Uniform { lo, hi } => {
                let (lo, hi) = (lo.clone(), hi.clone());
                Box::new(move |i, k| {
                    let e = k as i32 + 1;
                    (hi[i].powi(e) - lo[i].powi(e)) / (e as f64 * (hi[i] - lo[i]))
                })
            }
            NoiseDistribution::Gaussian { mean, std } => {
                let (mean, std) = (mean.clone(), std.clone());
                Box::new(move |i, k| gaussian_moment(mean[i], std[i], k))
            }
            NoiseDistribution::Discrete { atoms, weights } => {
                let mut out = BTreeMap::new();
                for a in MultiIndex::enumerate(n, degree) {
                    let v = atoms
                        .iter()
                        .zip(weights)
                        .map(|(p, w)| {
                            w * p
                                .iter()
                                .zip(a.exponents())
                                .map(|(x, &e)| x.powi(e as i32))
                                .product::<f64>()
                        })
                        .sum();
                    out.insert(a, v);
                }
                return out;
            }
        };
        MultiIndex::enumerate(n, degree)
            .into_iter()
            .map(|a| {
                let v = a
                    .exponents()
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| univariate(i, e))
                    .product();
                (a, v)
            })
            .collect()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            NoiseDistribution::Uniform { lo, hi } => {
                lo.iter().zip(hi).map(|(&l, &h)| rng.gen_range(l..h)).collect()
            }
            NoiseDistribution::Gaussian { mean, std } => mean
                .iter()
                .zip(std)
                .map(|(&m, &s)| Normal::new(m, s).expect("validated std").sample(rng))
                .collect(),
            NoiseDistribution::Discrete { atoms, weights } => {
                let mut u: f64 = rng.gen();
                for (a, &w) in atoms.iter().zip(weights) {
                    if u < w {
                        return a.clone();
                    }
                    u -= w;
                }
                atoms.last().expect("validated atoms").clone()
            }
        }
    }
}

fn gaussian_moment(mean: f64, std: f64, k: u32) -> f64 {
    // E[(m + s Z)^k] = sum_j C(k, j) m^(k-j) s^j E[Z^j], E[Z^j] = (j-1)!! for even j
    let mut acc = 0.0;
    let mut double_fact = 1.0;
    for j in (0..=k).step_by(2) {
        if j >= 2 {
            double_fact *= (j - 1) as f64;
        }
        acc += binomial(k as usize, j as usize) as f64
            * mean.powi((k - j) as i32)
            * std.powi(j as i32)
            * double_fact;
    }
    acc
}

/// Noise law known through its monomial moments, and optionally its distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    dim: usize,
    moments: BTreeMap<MultiIndex, f64>,
    distribution: Option<NoiseDistribution>,
}

impl NoiseModel {
    /// Noise given only through moments; `E[1]` must equal 1.
    pub fn from_moments(dim: usize, moments: BTreeMap<MultiIndex, f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("noise dimension must be positive".into()));
        }
        if moments.keys().any(|a| a.dim() != dim) {
            return Err(Error::DimensionMismatch("noise moment index has wrong length".into()));
        }
        match moments.get(&MultiIndex::zeros(dim)) {
            Some(&m0) if (m0 - 1.0).abs() <= 1e-12 => {}
            _ => {
                return Err(Error::InvalidParameter(
                    "noise moment of order zero must be 1".into(),
                ))
            }
        }
        Ok(NoiseModel {
            dim,
            moments,
            distribution: None,
        })
    }

    /// Exact moments of `distribution` up to `degree`.
    pub fn from_distribution(distribution: NoiseDistribution, degree: u32) -> Result<Self> {
        distribution.validate()?;
        Ok(NoiseModel {
            dim: distribution.dim(),
            moments: distribution.moments(degree),
            distribution: Some(distribution),
        })
    }

    /// Moments estimated from `samples` draws with a seeded generator.
    pub fn monte_carlo(
        distribution: NoiseDistribution,
        degree: u32,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        distribution.validate()?;
        if samples == 0 {
            return Err(Error::InvalidParameter("sample count must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = distribution.dim();
        let index = MultiIndex::enumerate(dim, degree);
        let mut acc = vec![0.0; index.len()];
        for _ in 0..samples {
            let w = distribution.sample(&mut rng);
            for (s, a) in acc.iter_mut().zip(&index) {
                *s += a
                    .exponents()
                    .iter()
                    .zip(&w)
                    .map(|(&e, x)| x.powi(e as i32))
                    .product::<f64>();
            }
        }
        let moments = index
            .into_iter()
            .zip(acc)
            .map(|(a, s)| (a, s / samples as f64))
            .collect();
        Ok(NoiseModel {
            dim,
            moments,
            distribution: Some(distribution),
        })
    }

    /// `w = 0` almost surely.
    pub fn degenerate(dim: usize, degree: u32) -> Self {
        let moments = MultiIndex::enumerate(dim, degree)
            .into_iter()
            .map(|a| {
                let v = if a.is_zero() { 1.0 } else { 0.0 };
                (a, v)
            })
            .collect();
        NoiseModel {
            dim,
            moments,
            distribution: Some(NoiseDistribution::Discrete {
                atoms: vec![vec![0.0; dim]],
                weights: vec![1.0],
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn distribution(&self) -> Option<&NoiseDistribution> {
        self.distribution.as_ref()
    }

    pub fn moments(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.moments
    }

    /// Largest `d` such that every moment with `|gamma| <= d` is known.
    pub fn available_degree(&self) -> u32 {
        let mut d = 0;
        loop {
            let next = d + 1;
            let complete = MultiIndex::enumerate(self.dim, next)
                .iter()
                .filter(|a| a.degree() == next)
                .all(|a| self.moments.contains_key(a));
            if !complete {
                return d;
            }
            d = next;
        }
    }

    /// `E[b_gamma(w)]` for a basis element of `basis`.
    pub fn basis_moment(&self, basis: Basis, gamma: &MultiIndex) -> Result<f64> {
        let p = Polynomial::basis_element(basis, gamma.clone(), 1.0).change_basis(Basis::Monomial);
        let mut acc = 0.0;
        for (a, c) in p.terms() {
            let m = self.moments.get(a).ok_or(Error::MissingNoiseMoments {
                required_degree: a.degree(),
                available_degree: self.available_degree(),
            })?;
            acc += c * m;
        }
        Ok(acc)
    }
}

/// Dynamics in some coordinate frame. `Discrete` maps and drifts have `n`
/// components in `n` variables; a Markov map takes `n + n_w` variables with the
/// noise last; `diffusion` is `n x m`.
#[derive(Clone, Debug)]
pub enum Dynamics {
    Discrete {
        map: PolynomialMap,
    },
    Continuous {
        drift: PolynomialMap,
    },
    DiscreteMarkov {
        map: PolynomialMap,
        noise: NoiseModel,
    },
    Sde {
        drift: PolynomialMap,
        diffusion: Vec<Vec<Polynomial>>,
        diffusion_half: bool,
    },
    PfEigen {
        map: PolynomialMap,
        eigenvalue: Complex64,
    },
}

impl Dynamics {
    pub fn kind(&self) -> SystemKind {
        match self {
            Dynamics::Discrete { .. } => SystemKind::Discrete,
            Dynamics::Continuous { .. } => SystemKind::Continuous,
            Dynamics::DiscreteMarkov { .. } => SystemKind::DiscreteMarkov,
            Dynamics::Sde { .. } => SystemKind::Sde,
            Dynamics::PfEigen { .. } => SystemKind::PfEigen,
        }
    }

    /// State dimension `n`.
    pub fn state_dim(&self) -> usize {
        match self {
            Dynamics::Discrete { map }
            | Dynamics::DiscreteMarkov { map, .. }
            | Dynamics::PfEigen { map, .. } => map.len(),
            Dynamics::Continuous { drift } | Dynamics::Sde { drift, .. } => drift.len(),
        }
    }

    /// Number of stacked moment vectors in the decision variable.
    pub fn blocks(&self) -> usize {
        match self {
            Dynamics::PfEigen { .. } => 4,
            _ => 1,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.state_dim();
        let square = |m: &PolynomialMap, what: &str| {
            if m.input_dim() != m.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{what} has {} components in {} variables",
                    m.len(),
                    m.input_dim()
                )));
            }
            Ok(())
        };
        match self {
            Dynamics::Discrete { map } | Dynamics::PfEigen { map, .. } => square(map, "map"),
            Dynamics::Continuous { drift } => square(drift, "drift"),
            Dynamics::DiscreteMarkov { map, noise } => {
                if map.input_dim() != n + noise.dim() {
                    return Err(Error::DimensionMismatch(format!(
                        "Markov map takes {} variables, expected state {} + noise {}",
                        map.input_dim(),
                        n,
                        noise.dim()
                    )));
                }
                Ok(())
            }
            Dynamics::Sde {
                drift, diffusion, ..
            } => {
                square(drift, "drift")?;
                let cols = diffusion.first().map_or(0, Vec::len);
                if diffusion.len() != n || cols == 0 || diffusion.iter().any(|r| r.len() != cols) {
                    return Err(Error::DimensionMismatch(format!(
                        "diffusion must be {n} x m with m >= 1"
                    )));
                }
                if diffusion.iter().flatten().any(|p| p.dim() != n) {
                    return Err(Error::DimensionMismatch(
                        "diffusion entries must be polynomials in the state".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Moment degree `d_k` needed by order-`k` rows.
    pub fn moment_degree(&self, k: u32) -> u32 {
        let n = self.state_dim();
        match self {
            Dynamics::Discrete { map } | Dynamics::PfEigen { map, .. } => k * map.degree(),
            Dynamics::Continuous { drift } => (k + drift.degree()).saturating_sub(1),
            Dynamics::DiscreteMarkov { map, .. } => k * map.degree_in(0, n),
            Dynamics::Sde {
                drift, diffusion, ..
            } => {
                let first = (k + drift.degree()).saturating_sub(1);
                let second = (k + 2 * diffusion_degree(diffusion)).saturating_sub(2);
                first.max(second)
            }
        }
    }

    /// The same dynamics after substituting `x = c + h u` and converting to `basis`.
    pub fn to_scaled(&self, set: &SemialgebraicSet, basis: Basis) -> Result<Dynamics> {
        let s = set.scaling();
        let n = self.state_dim();
        let rescale = |comps: &[Polynomial], shift: bool| -> Result<PolynomialMap> {
            let mut out = Vec::with_capacity(comps.len());
            for (i, p) in comps.iter().enumerate() {
                let p = p.change_basis(Basis::Monomial);
                let sub = s.user_in_scaled(Basis::Monomial, p.dim());
                let mut q = p.compose(&sub)?;
                if shift {
                    q = q.sub(&Polynomial::constant(q.dim(), Basis::Monomial, s.center()[i]));
                }
                out.push(q.scale(1.0 / s.half_width()[i]).change_basis(basis));
            }
            PolynomialMap::new(out)
        };
        if set.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "dynamics has {n} states, set has {}",
                set.dim()
            )));
        }
        Ok(match self {
            Dynamics::Discrete { map } => Dynamics::Discrete {
                map: rescale(map.components(), true)?,
            },
            Dynamics::PfEigen { map, eigenvalue } => Dynamics::PfEigen {
                map: rescale(map.components(), true)?,
                eigenvalue: *eigenvalue,
            },
            Dynamics::DiscreteMarkov { map, noise } => Dynamics::DiscreteMarkov {
                map: rescale(map.components(), true)?,
                noise: noise.clone(),
            },
            Dynamics::Continuous { drift } => Dynamics::Continuous {
                drift: rescale(drift.components(), false)?,
            },
            Dynamics::Sde {
                drift,
                diffusion,
                diffusion_half,
            } => {
                let mut scaled = Vec::with_capacity(n);
                for (i, row) in diffusion.iter().enumerate() {
                    let mut r = Vec::with_capacity(row.len());
                    for p in row {
                        let p = p.change_basis(Basis::Monomial);
                        let q = p.compose(&s.user_in_scaled(Basis::Monomial, n))?;
                        r.push(q.scale(1.0 / s.half_width()[i]).change_basis(basis));
                    }
                    scaled.push(r);
                }
                Dynamics::Sde {
                    drift: rescale(drift.components(), false)?,
                    diffusion: scaled,
                    diffusion_half: *diffusion_half,
                }
            }
        })
    }
}

fn diffusion_degree(diffusion: &[Vec<Polynomial>]) -> u32 {
    diffusion
        .iter()
        .flatten()
        .map(Polynomial::degree)
        .max()
        .unwrap_or(0)
}

/// Dynamics together with the state set, both in user coordinates.
#[derive(Clone, Debug)]
pub struct SystemModel {
    dynamics: Dynamics,
    set: SemialgebraicSet,
}

impl SystemModel {
    pub fn new(dynamics: Dynamics, set: SemialgebraicSet) -> Result<Self> {
        dynamics.validate()?;
        if dynamics.state_dim() != set.dim() {
            return Err(Error::DimensionMismatch(format!(
                "dynamics has {} states, set has {}",
                dynamics.state_dim(),
                set.dim()
            )));
        }
        Ok(SystemModel { dynamics, set })
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn set(&self) -> &SemialgebraicSet {
        &self.set
    }

    pub fn kind(&self) -> SystemKind {
        self.dynamics.kind()
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    /// Dynamics in scaled coordinates and the requested basis.
    pub fn working_dynamics(&self, basis: Basis) -> Result<Dynamics> {
        self.dynamics.to_scaled(&self.set, basis)
    }
}

/// Rows of `A_k y = 0` for one relaxation order.
#[derive(Clone, Debug)]
pub struct EqualityBlock {
    pub kind: SystemKind,
    pub order: u32,
    pub moment_degree: u32,
    pub n: usize,
    pub basis: Basis,
    /// Number of stacked moment vectors (4 for eigenmeasures, 1 otherwise).
    pub blocks: usize,
    pub rows: Vec<LinearFunctional>,
}

impl EqualityBlock {
    /// Length of one moment vector.
    pub fn moment_len(&self) -> usize {
        basis_size(self.n, self.moment_degree)
    }

    /// Length of the stacked decision vector.
    pub fn vector_len(&self) -> usize {
        self.blocks * self.moment_len()
    }

    /// `(row, index, coefficient)` triplets.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, f)| f.terms().iter().map(move |&(i, c)| (r, i, c)))
            .collect()
    }

    pub fn header(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind,
            "k": self.order,
            "d_k": self.moment_degree,
            "basis": self.basis,
            "n": self.n,
            "blocks": self.blocks,
            "rows": self.rows.len(),
            "vector_len": self.vector_len(),
        })
    }

    /// Largest `|A y|` entry.
    pub fn residual(&self, y: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| r.apply(y).abs())
            .fold(0.0, f64::max)
    }
}

fn check_order(k: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("relaxation order must be at least 1".into()));
    }
    Ok(())
}

fn nonconstant_indices(n: usize, k: u32) -> impl Iterator<Item = MultiIndex> {
    MultiIndex::enumerate(n, k).into_iter().skip(1)
}

/// Rows `l_y(b_alpha o T - b_alpha) = 0` for `1 <= |alpha| <= k`, with `d_k = k deg T`.
pub fn discrete_rows(map: &PolynomialMap, k: u32) -> Result<EqualityBlock> {
    check_order(k)?;
    let n = map.len();
    let basis = map.basis();
    let mut rows = Vec::new();
    for a in nonconstant_indices(n, k) {
        let p = map
            .compose_basis_element(&a)?
            .sub(&Polynomial::basis_element(basis, a, 1.0));
        rows.push(LinearFunctional::from_polynomial(&p, 0));
    }
    Ok(EqualityBlock {
        kind: SystemKind::Discrete,
        order: k,
        moment_degree: k * map.degree(),
        n,
        basis,
        blocks: 1,
        rows,
    })
}

/// Rows `l_y(grad b_alpha . b) = 0` for `1 <= |alpha| <= k`, with `d_k = k - 1 + deg b`.
pub fn continuous_rows(drift: &PolynomialMap, k: u32) -> Result<EqualityBlock> {
    check_order(k)?;
    let n = drift.len();
    let basis = drift.basis();
    let rows = nonconstant_indices(n, k)
        .map(|a| LinearFunctional::from_polynomial(&drift_term(drift, &a), 0))
        .collect();
    Ok(EqualityBlock {
        kind: SystemKind::Continuous,
        order: k,
        moment_degree: (k + drift.degree()).saturating_sub(1),
        n,
        basis,
        blocks: 1,
        rows,
    })
}

fn drift_term(drift: &PolynomialMap, a: &MultiIndex) -> Polynomial {
    let n = drift.len();
    let f = Polynomial::basis_element(drift.basis(), a.clone(), 1.0);
    let mut acc = Polynomial::zero(n, drift.basis());
    for (i, b) in drift.components().iter().enumerate() {
        if a.exponents()[i] > 0 {
            acc = acc.add(&f.differentiate(i).mul(b));
        }
    }
    acc
}

/// Rows `sum t_{alpha beta gamma} m_gamma y_beta = y_alpha`, where
/// `b_alpha(T(x, w)) = sum t_{alpha beta gamma} b_beta(x) b_gamma(w)`.
pub fn markov_discrete_rows(map: &PolynomialMap, noise: &NoiseModel, k: u32) -> Result<EqualityBlock> {
    check_order(k)?;
    let n = map.len();
    let nw = noise.dim();
    if map.input_dim() != n + nw {
        return Err(Error::DimensionMismatch(format!(
            "Markov map takes {} variables, expected {} + {}",
            map.input_dim(),
            n,
            nw
        )));
    }
    let basis = map.basis();
    let required = k * map.degree_in(n, n + nw);
    let available = noise.available_degree();
    if available < required {
        return Err(Error::MissingNoiseMoments {
            required_degree: required,
            available_degree: available,
        });
    }
    let mut cache: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    let mut rows = Vec::new();
    for a in nonconstant_indices(n, k) {
        let composed = Polynomial::basis_element(basis, a.clone(), 1.0).compose(map.components())?;
        let mut terms = vec![(a.rank(), -1.0)];
        for (full, c) in composed.terms() {
            let beta = MultiIndex::new(full.exponents()[..n].to_vec());
            let gamma = MultiIndex::new(full.exponents()[n..].to_vec());
            let m = match cache.get(&gamma) {
                Some(&m) => m,
                None => {
                    let m = noise.basis_moment(basis, &gamma)?;
                    cache.insert(gamma, m);
                    m
                }
            };
            terms.push((beta.rank(), c * m));
        }
        rows.push(LinearFunctional::new(terms));
    }
    Ok(EqualityBlock {
        kind: SystemKind::DiscreteMarkov,
        order: k,
        moment_degree: k * map.degree_in(0, n),
        n,
        basis,
        blocks: 1,
        rows,
    })
}

/// Rows `l_y(A b_alpha) = 0` with `A f = b . grad f + c sum_ij (sigma sigma^T)_ij d_ij f`,
/// where `c = 1/2` when `diffusion_half` is set and `c = 1` otherwise.
pub fn sde_rows(
    drift: &PolynomialMap,
    diffusion: &[Vec<Polynomial>],
    k: u32,
    diffusion_half: bool,
) -> Result<EqualityBlock> {
    check_order(k)?;
    let n = drift.len();
    let basis = drift.basis();
    if diffusion.len() != n {
        return Err(Error::DimensionMismatch(format!("diffusion must have {n} rows")));
    }
    // a = sigma sigma^T
    let mut a = vec![vec![Polynomial::zero(n, basis); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut s = Polynomial::zero(n, basis);
            for (p, q) in diffusion[i].iter().zip(&diffusion[j]) {
                s = s.add(&p.change_basis(basis).mul(&q.change_basis(basis)));
            }
            a[j][i] = s.clone();
            a[i][j] = s;
        }
    }
    let c = if diffusion_half { 0.5 } else { 1.0 };
    let mut rows = Vec::new();
    for alpha in nonconstant_indices(n, k) {
        let f = Polynomial::basis_element(basis, alpha.clone(), 1.0);
        let mut p = drift_term(drift, &alpha);
        for i in 0..n {
            let fi = f.differentiate(i);
            for j in 0..n {
                if a[i][j].is_zero() {
                    continue;
                }
                p = p.add(&fi.differentiate(j).mul(&a[i][j]).scale(c));
            }
        }
        rows.push(LinearFunctional::from_polynomial(&p, 0));
    }
    let first = (k + drift.degree()).saturating_sub(1);
    let second = (k + 2 * diffusion_degree(diffusion)).saturating_sub(2);
    Ok(EqualityBlock {
        kind: SystemKind::Sde,
        order: k,
        moment_degree: first.max(second),
        n,
        basis,
        blocks: 1,
        rows,
    })
}

/// Rows for `P mu = lambda mu` with `mu = (mu_R+ - mu_R-) + i (mu_I+ - mu_I-)`,
/// over the stacked vector `[y_R+, y_R-, y_I+, y_I-]`. With `g = f o T - lambda_R f`:
///
/// ```text
/// Re: l_R(g) + lambda_I l_I(f) = 0
/// Im: l_I(g) - lambda_I l_R(f) = 0
/// ```
///
/// where `l_R = l_{R+} - l_{R-}` and `l_I = l_{I+} - l_{I-}`. All real rows
/// come first, then all imaginary rows. The `alpha = 0` pair is kept unless
/// `lambda = 1`, where it vanishes identically.
pub fn pf_rows(map: &PolynomialMap, eigenvalue: Complex64, k: u32) -> Result<EqualityBlock> {
    check_order(k)?;
    let n = map.len();
    let basis = map.basis();
    let d_k = k * map.degree();
    let len = basis_size(n, d_k);
    let (lr, li) = (eigenvalue.re, eigenvalue.im);
    let skip = usize::from(lr == 1.0 && li == 0.0);
    let signed = |p: &Polynomial, plus: usize, scale: f64| -> LinearFunctional {
        let f = LinearFunctional::from_polynomial(p, 0).scale(scale);
        f.shifted(plus * len).add(&f.scale(-1.0).shifted((plus + 1) * len))
    };
    let mut re_rows = Vec::new();
    let mut im_rows = Vec::new();
    for a in MultiIndex::enumerate(n, k).into_iter().skip(skip) {
        let f = Polynomial::basis_element(basis, a.clone(), 1.0);
        let g = map.compose_basis_element(&a)?.sub(&f.scale(lr));
        re_rows.push(signed(&g, 0, 1.0).add(&signed(&f, 2, li)));
        im_rows.push(signed(&g, 2, 1.0).add(&signed(&f, 0, -li)));
    }
    re_rows.extend(im_rows);
    Ok(EqualityBlock {
        kind: SystemKind::PfEigen,
        order: k,
        moment_degree: d_k,
        n,
        basis,
        blocks: 4,
        rows: re_rows,
    })
}

/// Rows for any dynamics, already expressed in the working frame.
pub fn rows_for(dynamics: &Dynamics, k: u32) -> Result<EqualityBlock> {
    match dynamics {
        Dynamics::Discrete { map } => discrete_rows(map, k),
        Dynamics::Continuous { drift } => continuous_rows(drift, k),
        Dynamics::DiscreteMarkov { map, noise } => markov_discrete_rows(map, noise, k),
        Dynamics::Sde {
            drift,
            diffusion,
            diffusion_half,
        } => sde_rows(drift, diffusion, k, *diffusion_half),
        Dynamics::PfEigen { map, eigenvalue } => pf_rows(map, *eigenvalue, k),
    }
}
