//! Support regions and densities recovered from a truncated moment vector.
//!
//! Both constructions run in the scaled box with a working basis and are
//! evaluated at user coordinates. Inputs are user-frame moments in any basis.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moment::{cube_lebesgue_matrix, moment_matrix, BoxScaling, MomentVector, SemialgebraicSet};
use crate::polynomial::{binomial, Basis, MultiIndex, Polynomial};

/// `q(x) = v(x)' (M_d(y) + reg I)^{-1} v(x)` with its confidence level.
#[derive(Clone, Debug)]
pub struct ChristoffelModel {
    /// Polynomial in the scaled coordinates of `scaling`.
    pub q: Polynomial,
    pub level: f64,
    pub d: u32,
    pub confidence: f64,
    pub regularization: f64,
    pub scaling: BoxScaling,
}

impl ChristoffelModel {
    /// `q` at a user-frame point.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.q.evaluate(&self.scaling.to_scaled(x))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.evaluate(x) <= self.level
    }

    /// `q` rewritten as a monomial polynomial in user coordinates.
    pub fn user_polynomial(&self) -> Result<Polynomial> {
        self.scaling
            .polynomial_to_user(&self.q.change_basis(Basis::Monomial))
    }
}

/// `binom(n + d/2, n) / (1 - eps)`.
pub fn christoffel_level(n: usize, d: u32, eps: f64) -> f64 {
    binomial(n + (d / 2) as usize, n) as f64 / (1.0 - eps)
}

fn check_christoffel_args(y: &MomentVector, d: u32, eps: f64) -> Result<()> {
    if d % 2 != 0 {
        return Err(Error::InvalidParameter(format!("Christoffel degree must be even, got {d}")));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("confidence must lie in [0, 1), got {eps}")));
    }
    if y.degree() < d {
        return Err(Error::MissingMoments {
            required_degree: d,
            available_degree: y.degree(),
        });
    }
    Ok(())
}

/// Christoffel polynomial in the frame and basis of `y`.
///
/// `reg = None` uses `1e-8 * lambda_max`; `Some(0.0)` demands an invertible `M_d(y)`.
pub fn christoffel(y: &MomentVector, d: u32, eps: f64, reg: Option<f64>) -> Result<ChristoffelModel> {
    check_christoffel_args(y, d, eps)?;
    let n = y.dim();
    let m = moment_matrix(n, y.basis(), d).evaluate(y.values());
    let eig = SymmetricEigen::new(m);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let lmin = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let reg = match reg {
        Some(r) if r < 0.0 => {
            return Err(Error::InvalidParameter(format!("regularization must be nonnegative, got {r}")))
        }
        Some(r) => r,
        None => 1e-8 * lmax,
    };
    if lmin + reg <= 1e-13 * lmax.max(1e-300) {
        return Err(Error::Singular(format!(
            "moment matrix of degree {d} is singular (smallest eigenvalue {lmin:.3e}); pass a positive regularization"
        )));
    }
    let q_vals = &eig.eigenvectors;
    let inv_diag = eig.eigenvalues.map(|l| 1.0 / (l + reg));
    let w = q_vals * DMatrix::from_diagonal(&inv_diag) * q_vals.transpose();

    let elems: Vec<Polynomial> = MultiIndex::enumerate(n, d / 2)
        .into_iter()
        .map(|a| Polynomial::basis_element(y.basis(), a, 1.0))
        .collect();
    let mut q = Polynomial::zero(n, y.basis());
    for i in 0..elems.len() {
        let mut row = Polynomial::zero(n, y.basis());
        for j in 0..elems.len() {
            let c = if i == j { w[(i, j)] } else { w[(i, j)] + w[(j, i)] };
            if j >= i && c != 0.0 {
                row = row.add(&elems[j].scale(c));
            }
        }
        q = q.add(&elems[i].mul(&row));
    }
    Ok(ChristoffelModel {
        q,
        level: christoffel_level(n, d, eps),
        d,
        confidence: eps,
        regularization: reg,
        scaling: BoxScaling::identity(n),
    })
}

/// Christoffel polynomial of user-frame moments `y`, computed in the scaled
/// box of `set` with the Chebyshev basis.
pub fn christoffel_in_box(
    y: &MomentVector,
    set: &SemialgebraicSet,
    d: u32,
    eps: f64,
    reg: Option<f64>,
) -> Result<ChristoffelModel> {
    check_christoffel_args(y, d, eps)?;
    let scaling = set.scaling();
    let sub = scaling.scaled_in_user(y.basis(), y.dim());
    let ys = y.truncate(d)?.pushforward(&sub, Basis::Chebyshev, d)?;
    let mut model = christoffel(&ys, d, eps, reg)?;
    model.scaling = scaling.clone();
    Ok(model)
}

/// Fraction of `points` inside `{q <= level}`.
pub fn coverage_check(points: &[Vec<f64>], model: &ChristoffelModel) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let inside = points.par_iter().filter(|p| model.contains(p)).count();
    inside as f64 / points.len() as f64
}

/// Which moments feed the density solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Only moments up to the density degree `k`.
    #[default]
    Truncated,
    /// Every available moment; the density degree is the moment degree.
    Full,
}

/// Signed polynomial density `q(u(x)) / prod h_i` on a box.
#[derive(Clone, Debug)]
pub struct DensityModel {
    /// Density with respect to `du` on `[-1, 1]^n`, Chebyshev basis.
    pub q: Polynomial,
    pub degree: u32,
    pub truncation: Truncation,
    pub scaling: BoxScaling,
}

impl DensityModel {
    /// Density with respect to Lebesgue measure at a user-frame point.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.q.evaluate(&self.scaling.to_scaled(x)) / self.scaling.jacobian()
    }

    /// The density as a monomial polynomial in user coordinates.
    pub fn user_polynomial(&self) -> Result<Polynomial> {
        Ok(self
            .scaling
            .polynomial_to_user(&self.q.change_basis(Basis::Monomial))?
            .scale(1.0 / self.scaling.jacobian()))
    }
}

/// Polynomial density whose moments against Lebesgue measure on the box of
/// `set` reproduce the user-frame moments `y` up to the density degree.
pub fn density(y: &MomentVector, k: u32, set: &SemialgebraicSet, truncation: Truncation) -> Result<DensityModel> {
    if !set.is_box() {
        return Err(Error::Unsupported("density reconstruction needs a box-shaped set".into()));
    }
    let degree = match truncation {
        Truncation::Truncated => k,
        Truncation::Full => y.degree(),
    };
    if y.degree() < degree {
        return Err(Error::MissingMoments {
            required_degree: degree,
            available_degree: y.degree(),
        });
    }
    let scaling = set.scaling();
    let sub = scaling.scaled_in_user(y.basis(), y.dim());
    let ys = y.truncate(degree)?.pushforward(&sub, Basis::Chebyshev, degree)?;
    density_scaled(&ys, scaling, truncation)
}

/// Same as [`density`] for moments already in the scaled frame, using all of them.
pub fn density_scaled(ys: &MomentVector, scaling: &BoxScaling, truncation: Truncation) -> Result<DensityModel> {
    let n = ys.dim();
    let ys = ys.change_basis(Basis::Chebyshev)?;
    let ml = cube_lebesgue_matrix(n, ys.degree(), Basis::Chebyshev);
    let rhs = DVector::from_column_slice(ys.values());
    let coeffs = ml
        .clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .or_else(|| ml.lu().solve(&rhs))
        .ok_or_else(|| Error::Singular("Lebesgue moment matrix of the box".into()))?;
    let q = Polynomial::from_terms(
        n,
        Basis::Chebyshev,
        MultiIndex::enumerate(n, ys.degree())
            .into_iter()
            .zip(coeffs.iter().copied()),
    );
    Ok(DensityModel {
        q,
        degree: ys.degree(),
        truncation,
        scaling: scaling.clone(),
    })
}

/// Axis-aligned grid; the first coordinate varies slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points: Vec<usize>,
}

impl GridSpec {
    pub fn over_box(scaling: &BoxScaling, points: usize) -> Self {
        GridSpec {
            lower: scaling.lower(),
            upper: scaling.upper(),
            points: vec![points; scaling.dim()],
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.lower.len();
        if n == 0 || self.upper.len() != n || self.points.len() != n {
            return Err(Error::DimensionMismatch("grid bounds and point counts must have equal length".into()));
        }
        if self.points.contains(&0) {
            return Err(Error::InvalidParameter("grid needs at least one point per axis".into()));
        }
        Ok(())
    }

    fn axis(&self, i: usize) -> Vec<f64> {
        let p = self.points[i];
        if p == 1 {
            return vec![0.5 * (self.lower[i] + self.upper[i])];
        }
        (0..p)
            .map(|j| self.lower[i] + (self.upper[i] - self.lower[i]) * j as f64 / (p - 1) as f64)
            .collect()
    }

    /// All grid points in row-major order.
    pub fn nodes(&self) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let axes: Vec<Vec<f64>> = (0..self.lower.len()).map(|i| self.axis(i)).collect();
        let total: usize = self.points.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; axes.len()];
        for _ in 0..total {
            out.push(idx.iter().enumerate().map(|(i, &j)| axes[i][j]).collect());
            for i in (0..idx.len()).rev() {
                idx[i] += 1;
                if idx[i] < axes[i].len() {
                    break;
                }
                idx[i] = 0;
            }
        }
        Ok(out)
    }
}

/// Values of `q` on a grid and the indicator `q <= level`.
#[derive(Clone, Debug)]
pub struct LevelSetGrid {
    pub nodes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub inside: Vec<bool>,
}

impl LevelSetGrid {
    /// CSV with header `x1,...,xn,q,inside`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.nodes.first().map_or(0, Vec::len);
        let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        header.push("q".into());
        header.push("inside".into());
        writeln!(w, "{}", header.join(","))?;
        for ((x, q), inside) in self.nodes.iter().zip(&self.values).zip(&self.inside) {
            let coords: Vec<String> = x.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{},{q:e},{}", coords.join(","), u8::from(*inside))?;
        }
        Ok(())
    }
}

/// Evaluates `q` (user coordinates) on `grid` and thresholds at `level`.
pub fn levelset_grid<F>(q: F, level: f64, grid: &GridSpec) -> Result<LevelSetGrid>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let nodes = grid.nodes()?;
    let values: Vec<f64> = nodes.par_iter().map(|x| q(x)).collect();
    let inside = values.iter().map(|&v| v <= level).collect();
    Ok(LevelSetGrid { nodes, values, inside })
}
