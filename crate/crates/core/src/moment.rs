//! Moment vectors, the Riesz functional, localizing matrices and the
//! semialgebraic description of the state set.
//!
//! All assembly happens in *scaled* coordinates `u = (x - c) / h`, where the
//! user's bounding box `c ± h` maps onto `[-1, 1]^n`. [`BoxScaling`] holds that
//! affine map and produces the substitutions used to move polynomials and
//! moment vectors between the user frame and the scaled frame.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::{basis_size, interval_integral, Basis, MultiIndex, Polynomial};

/// Affine map between user coordinates `x` and scaled coordinates `u = (x - c) / h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxScaling {
    center: Vec<f64>,
    half_width: Vec<f64>,
}

impl BoxScaling {
    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch(
                "box bounds must be nonempty and of equal length".into(),
            ));
        }
        let mut center = Vec::with_capacity(lo.len());
        let mut half_width = Vec::with_capacity(lo.len());
        for (&l, &h) in lo.iter().zip(hi) {
            if !(l.is_finite() && h.is_finite() && h > l) {
                return Err(Error::InvalidParameter(format!(
                    "box side [{l}, {h}] must be finite with nonempty interior"
                )));
            }
            center.push(0.5 * (l + h));
            half_width.push(0.5 * (h - l));
        }
        Ok(BoxScaling { center, half_width })
    }

    pub fn identity(n: usize) -> Self {
        BoxScaling {
            center: vec![0.0; n],
            half_width: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn half_width(&self) -> &[f64] {
        &self.half_width
    }

    pub fn lower(&self) -> Vec<f64> {
        self.center
            .iter()
            .zip(&self.half_width)
            .map(|(c, h)| c - h)
            .collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.center
            .iter()
            .zip(&self.half_width)
            .map(|(c, h)| c + h)
            .collect()
    }

    /// Volume factor `dx = det(h) du`.
    pub fn jacobian(&self) -> f64 {
        self.half_width.iter().product()
    }

    pub fn to_scaled(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.center.iter().zip(&self.half_width))
            .map(|(x, (c, h))| (x - c) / h)
            .collect()
    }

    pub fn to_user(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.center.iter().zip(&self.half_width))
            .map(|(u, (c, h))| c + h * u)
            .collect()
    }

    /// `x_i = c_i + h_i u_i` as polynomials in `total_dim` variables; coordinates
    /// past `dim()` pass through unchanged.
    pub fn user_in_scaled(&self, basis: Basis, total_dim: usize) -> Vec<Polynomial> {
        (0..total_dim)
            .map(|i| {
                let v = Polynomial::variable(total_dim, basis, i);
                if i < self.dim() {
                    v.scale(self.half_width[i])
                        .add(&Polynomial::constant(total_dim, basis, self.center[i]))
                } else {
                    v
                }
            })
            .collect()
    }

    /// `u_i = (x_i - c_i) / h_i` as polynomials in the user variables.
    pub fn scaled_in_user(&self, basis: Basis, total_dim: usize) -> Vec<Polynomial> {
        (0..total_dim)
            .map(|i| {
                let v = Polynomial::variable(total_dim, basis, i);
                if i < self.dim() {
                    v.sub(&Polynomial::constant(total_dim, basis, self.center[i]))
                        .scale(1.0 / self.half_width[i])
                } else {
                    v
                }
            })
            .collect()
    }

    /// `g(c + h u)`: a user-frame polynomial rewritten in scaled coordinates.
    pub fn polynomial_to_scaled(&self, p: &Polynomial) -> Result<Polynomial> {
        p.compose(&self.user_in_scaled(p.basis(), p.dim()))
    }

    /// `g((x - c) / h)`: a scaled-frame polynomial rewritten in user coordinates.
    pub fn polynomial_to_user(&self, p: &Polynomial) -> Result<Polynomial> {
        p.compose(&self.scaled_in_user(p.basis(), p.dim()))
    }
}

/// Compact set `{x : g_i(x) >= 0}` plus the bounding box that defines the scaling.
#[derive(Clone, Debug)]
pub struct SemialgebraicSet {
    n: usize,
    user_inequalities: Vec<Polynomial>,
    scaled_inequalities: Vec<Polynomial>,
    scaling: BoxScaling,
    ball_radius: f64,
    is_box: bool,
}

impl SemialgebraicSet {
    /// The box `prod [lo_i, hi_i]`, written as `(x_i - lo_i)(hi_i - x_i) >= 0`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let scaling = BoxScaling::from_bounds(lo, hi)?;
        let n = scaling.dim();
        let user = (0..n)
            .map(|i| {
                let x = Polynomial::variable(n, Basis::Monomial, i);
                let a = x.sub(&Polynomial::constant(n, Basis::Monomial, lo[i]));
                let b = Polynomial::constant(n, Basis::Monomial, hi[i]).sub(&x);
                a.mul(&b)
            })
            .collect();
        Self::build(user, scaling, true)
    }

    /// General set `{g_i >= 0}` contained in the bounding box `[lo, hi]`.
    pub fn new(inequalities: Vec<Polynomial>, lo: &[f64], hi: &[f64]) -> Result<Self> {
        let scaling = BoxScaling::from_bounds(lo, hi)?;
        for g in &inequalities {
            if g.dim() != scaling.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "inequality has {} variables, set has {}",
                    g.dim(),
                    scaling.dim()
                )));
            }
        }
        Self::build(inequalities, scaling, false)
    }

    fn build(user: Vec<Polynomial>, scaling: BoxScaling, is_box: bool) -> Result<Self> {
        let n = scaling.dim();
        let mut scaled = Vec::with_capacity(user.len());
        for g in &user {
            let g = scaling.polynomial_to_scaled(&g.change_basis(Basis::Monomial))?;
            let m = g.max_abs_coefficient();
            if m == 0.0 {
                return Err(Error::InvalidParameter("zero inequality polynomial".into()));
            }
            scaled.push(g.scale(1.0 / m));
        }
        Ok(SemialgebraicSet {
            n,
            user_inequalities: user,
            scaled_inequalities: scaled,
            scaling,
            ball_radius: 1.05 * (n as f64).sqrt(),
            is_box,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn scaling(&self) -> &BoxScaling {
        &self.scaling
    }

    pub fn ball_radius(&self) -> f64 {
        self.ball_radius
    }

    pub fn is_box(&self) -> bool {
        self.is_box
    }

    pub fn user_inequalities(&self) -> &[Polynomial] {
        &self.user_inequalities
    }

    /// Inequalities in scaled coordinates, monomial basis, normalized to unit max coefficient.
    pub fn scaled_inequalities(&self) -> &[Polynomial] {
        &self.scaled_inequalities
    }

    /// `g_0 = 1, g_1, ..., g_ng` and the redundant ball `r^2 - u^T u`, in `basis`.
    pub fn localizing_polynomials(&self, basis: Basis) -> Vec<Polynomial> {
        let n = self.n;
        let mut out = vec![Polynomial::one(n, basis)];
        out.extend(self.scaled_inequalities.iter().map(|g| g.change_basis(basis)));
        let mut ball = Polynomial::constant(n, Basis::Monomial, self.ball_radius.powi(2));
        for i in 0..n {
            let x = Polynomial::variable(n, Basis::Monomial, i);
            ball = ball.sub(&x.mul(&x));
        }
        out.push(ball.change_basis(basis));
        out
    }

    /// Membership test in user coordinates.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.user_inequalities.iter().all(|g| g.evaluate(x) >= -tol)
    }
}

/// Truncated (pseudo-)moment sequence indexed by graded basis elements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    n: usize,
    basis: Basis,
    degree: u32,
    values: Vec<f64>,
}

impl MomentVector {
    pub fn new(n: usize, basis: Basis, degree: u32, values: Vec<f64>) -> Result<Self> {
        let expected = basis_size(n, degree);
        if values.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "moment vector of degree {degree} in {n} variables needs {expected} entries, got {}",
                values.len()
            )));
        }
        Ok(MomentVector {
            n,
            basis,
            degree,
            values,
        })
    }

    pub fn zeros(n: usize, basis: Basis, degree: u32) -> Self {
        MomentVector {
            n,
            basis,
            degree,
            values: vec![0.0; basis_size(n, degree)],
        }
    }

    /// Moments of `sum_j w_j delta_{p_j}`.
    pub fn from_atoms(basis: Basis, degree: u32, points: &[Vec<f64>], weights: &[f64]) -> Self {
        assert_eq!(points.len(), weights.len());
        let n = points.first().map(Vec::len).expect("at least one atom");
        let index = MultiIndex::enumerate(n, degree);
        let mut values = vec![0.0; index.len()];
        for (p, &w) in points.iter().zip(weights) {
            let tables: Vec<Vec<f64>> = p
                .iter()
                .map(|&x| crate::polynomial::univariate_values(basis, x, degree))
                .collect();
            for (v, a) in values.iter_mut().zip(&index) {
                let mut t = w;
                for (i, &e) in a.exponents().iter().enumerate() {
                    t *= tables[i][e as usize];
                }
                *v += t;
            }
        }
        MomentVector {
            n,
            basis,
            degree,
            values,
        }
    }

    /// Moments of the empirical probability measure on `points`.
    pub fn empirical(basis: Basis, degree: u32, points: &[Vec<f64>]) -> Self {
        let w = vec![1.0 / points.len() as f64; points.len()];
        Self::from_atoms(basis, degree, points, &w)
    }

    pub fn dirac(basis: Basis, degree: u32, point: &[f64]) -> Self {
        Self::from_atoms(basis, degree, &[point.to_vec()], &[1.0])
    }

    /// Moments of the uniform probability measure on `[-1, 1]^n`.
    pub fn uniform_cube(n: usize, basis: Basis, degree: u32) -> Self {
        let values = MultiIndex::enumerate(n, degree)
            .iter()
            .map(|a| {
                a.exponents()
                    .iter()
                    .map(|&e| 0.5 * interval_integral(basis, e))
                    .product()
            })
            .collect();
        MomentVector {
            n,
            basis,
            degree,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        if alpha.dim() != self.n || alpha.degree() > self.degree {
            return None;
        }
        Some(self.values[alpha.rank()])
    }

    pub fn truncate(&self, degree: u32) -> Result<MomentVector> {
        if degree > self.degree {
            return Err(Error::MissingMoments {
                required_degree: degree,
                available_degree: self.degree,
            });
        }
        Ok(MomentVector {
            n: self.n,
            basis: self.basis,
            degree,
            values: self.values[..basis_size(self.n, degree)].to_vec(),
        })
    }

    /// `l_y(p) = sum_alpha p_alpha y_alpha`.
    pub fn riesz(&self, p: &Polynomial) -> Result<f64> {
        riesz_apply(self, p)
    }

    /// Moments of the pushforward under `x -> s(x)`: entry `alpha` is
    /// `l_y(b_alpha(s(x)))`, with `b_alpha` from `target` and `s` written in
    /// this vector's variables and basis.
    pub fn pushforward(&self, s: &[Polynomial], target: Basis, degree: u32) -> Result<MomentVector> {
        let out_n = s.len();
        let mut values = Vec::with_capacity(basis_size(out_n, degree));
        for a in MultiIndex::enumerate(out_n, degree) {
            let p = Polynomial::basis_element(target, a, 1.0).compose(s)?;
            values.push(self.riesz(&p)?);
        }
        MomentVector::new(out_n, target, degree, values)
    }

    /// Same measure expressed in another basis.
    pub fn change_basis(&self, target: Basis) -> Result<MomentVector> {
        if target == self.basis {
            return Ok(self.clone());
        }
        let id: Vec<Polynomial> = (0..self.n)
            .map(|i| Polynomial::variable(self.n, self.basis, i))
            .collect();
        self.pushforward(&id, target, self.degree)
    }
}

/// Riesz functional `l_y(p) = sum_alpha p_alpha y_alpha`.
pub fn riesz_apply(y: &MomentVector, p: &Polynomial) -> Result<f64> {
    if p.dim() != y.n {
        return Err(Error::DimensionMismatch(format!(
            "polynomial has {} variables, moments have {}",
            p.dim(),
            y.n
        )));
    }
    if p.basis() != y.basis {
        return Err(Error::BasisMismatch {
            expected: y.basis,
            found: p.basis(),
        });
    }
    if p.degree() > y.degree {
        return Err(Error::DegreeMismatch(format!(
            "polynomial degree {} exceeds moment degree {}",
            p.degree(),
            y.degree
        )));
    }
    Ok(p.terms().map(|(a, c)| c * y.values[a.rank()]).sum())
}

/// Sparse linear functional `y -> sum_k c_k y_{i_k}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearFunctional {
    terms: Vec<(usize, f64)>,
}

impl LinearFunctional {
    pub fn new(mut terms: Vec<(usize, f64)>) -> Self {
        terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (i, c) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        LinearFunctional { terms: merged }
    }

    /// Coefficients of `l_y(p)` against a vector stored starting at `offset`.
    pub fn from_polynomial(p: &Polynomial, offset: usize) -> Self {
        Self::new(p.terms().map(|(a, c)| (offset + a.rank(), c)).collect())
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn apply(&self, y: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * y[i]).sum()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.last().map(|t| t.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.terms.iter().map(|&(i, c)| (i, c * s)).collect())
    }

    pub fn shifted(&self, offset: usize) -> Self {
        LinearFunctional {
            terms: self.terms.iter().map(|&(i, c)| (i + offset, c)).collect(),
        }
    }

    pub fn add(&self, other: &LinearFunctional) -> Self {
        Self::new(self.terms.iter().chain(&other.terms).copied().collect())
    }

    pub fn norm(&self) -> f64 {
        self.terms.iter().map(|t| t.1 * t.1).sum::<f64>().sqrt()
    }
}

/// Symmetric matrix whose entries are linear functionals of a moment vector.
///
/// Entries are stored for the upper triangle `i <= j`, packed column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMatrixMap {
    size: usize,
    entries: Vec<LinearFunctional>,
}

fn packed_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

impl LinearMatrixMap {
    pub fn from_entries(size: usize, entries: Vec<LinearFunctional>) -> Self {
        assert_eq!(entries.len(), size * (size + 1) / 2);
        LinearMatrixMap { size, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self, i: usize, j: usize) -> &LinearFunctional {
        &self.entries[packed_index(i, j)]
    }

    /// Upper-triangle entries in packed order `(0,0), (0,1), (1,1), (0,2), ...`.
    pub fn packed(&self) -> impl Iterator<Item = (usize, usize, &LinearFunctional)> {
        (0..self.size).flat_map(move |j| (0..=j).map(move |i| (i, j, self.entry(i, j))))
    }

    pub fn evaluate(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for (i, j, f) in self.packed() {
            let v = f.apply(y);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    /// Functional giving the trace.
    pub fn trace(&self) -> LinearFunctional {
        let mut acc = Vec::new();
        for i in 0..self.size {
            acc.extend_from_slice(self.entry(i, i).terms());
        }
        LinearFunctional::new(acc)
    }

    pub fn scale(&self, s: f64) -> Self {
        LinearMatrixMap {
            size: self.size,
            entries: self.entries.iter().map(|f| f.scale(s)).collect(),
        }
    }

    pub fn shifted(&self, offset: usize) -> Self {
        LinearMatrixMap {
            size: self.size,
            entries: self.entries.iter().map(|f| f.shifted(offset)).collect(),
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.iter().filter_map(LinearFunctional::max_index).max()
    }

    /// `(row, col, moment index, coefficient)` for the upper triangle.
    pub fn triplets(&self) -> Vec<(usize, usize, usize, f64)> {
        self.packed()
            .flat_map(|(i, j, f)| f.terms().iter().map(move |&(k, c)| (i, j, k, c)))
            .collect()
    }
}

/// `M_d(g y)`: entry `(beta, gamma)` is `y -> l_y(g b_beta b_gamma)` for `|beta|, |gamma| <= floor((d - deg g) / 2)`.
pub fn localizing_matrix(g: &Polynomial, d: u32) -> Result<LinearMatrixMap> {
    let dg = g.degree();
    if dg > d {
        return Err(Error::DegreeMismatch(format!(
            "localizing polynomial degree {dg} exceeds moment degree {d}"
        )));
    }
    let half = (d - dg) / 2;
    let n = g.dim();
    let basis = g.basis();
    let elems: Vec<Polynomial> = MultiIndex::enumerate(n, half)
        .into_iter()
        .map(|a| Polynomial::basis_element(basis, a, 1.0))
        .collect();
    let size = elems.len();
    let mut entries = Vec::with_capacity(size * (size + 1) / 2);
    for j in 0..size {
        let gj = g.mul(&elems[j]);
        for ei in elems.iter().take(j + 1) {
            entries.push(LinearFunctional::from_polynomial(&gj.mul(ei), 0));
        }
    }
    Ok(LinearMatrixMap { size, entries })
}

/// Moment matrix `M_d(y)` of a vector in `n` variables.
pub fn moment_matrix(n: usize, basis: Basis, d: u32) -> LinearMatrixMap {
    localizing_matrix(&Polynomial::one(n, basis), d).expect("constant has degree zero")
}

/// `int_{[-1,1]^n} p(u) du`.
pub fn cube_integral(p: &Polynomial) -> f64 {
    p.terms()
        .map(|(a, c)| {
            c * a
                .exponents()
                .iter()
                .map(|&e| interval_integral(p.basis(), e))
                .product::<f64>()
        })
        .sum()
}

/// `int b_beta b_gamma du` over the scaled box `[-1, 1]^n` for `|beta|, |gamma| <= d`.
pub fn lebesgue_moment_matrix(set: &SemialgebraicSet, d: u32, basis: Basis) -> Result<DMatrix<f64>> {
    if !set.is_box() {
        return Err(Error::Unsupported(
            "Lebesgue moment matrices are only available for box-shaped sets".into(),
        ));
    }
    Ok(cube_lebesgue_matrix(set.dim(), d, basis))
}

pub(crate) fn cube_lebesgue_matrix(n: usize, d: u32, basis: Basis) -> DMatrix<f64> {
    let idx = MultiIndex::enumerate(n, d);
    let one_d = |a: u32, b: u32| -> f64 {
        match basis {
            Basis::Monomial => interval_integral(basis, a + b),
            Basis::Chebyshev => {
                0.5 * (interval_integral(basis, a + b) + interval_integral(basis, a.abs_diff(b)))
            }
        }
    };
    let s = idx.len();
    let mut m = DMatrix::zeros(s, s);
    for i in 0..s {
        for j in i..s {
            let v: f64 = idx[i]
                .exponents()
                .iter()
                .zip(idx[j].exponents())
                .map(|(&a, &b)| one_d(a, b))
                .product();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_1d(d: u32) -> MomentVector {
        MomentVector::uniform_cube(1, Basis::Monomial, d)
    }

    #[test]
    fn riesz_at_atom_and_uniform() {
        let y = MomentVector::dirac(Basis::Monomial, 4, &[0.0]);
        let p = Polynomial::from_terms(
            1,
            Basis::Monomial,
            [(MultiIndex::new(vec![0]), 3.0), (MultiIndex::new(vec![2]), 1.0)],
        );
        assert_eq!(riesz_apply(&y, &p).unwrap(), 3.0);
        let u = uniform_1d(4);
        let x2 = Polynomial::basis_element(Basis::Monomial, MultiIndex::new(vec![2]), 1.0);
        assert!((riesz_apply(&u, &x2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn riesz_rejects_high_degree() {
        let u = uniform_1d(2);
        let x3 = Polynomial::basis_element(Basis::Monomial, MultiIndex::new(vec![3]), 1.0);
        assert!(matches!(riesz_apply(&u, &x3), Err(Error::DegreeMismatch(_))));
    }

    #[test]
    fn moment_matrix_examples() {
        let m = moment_matrix(1, Basis::Monomial, 2);
        let delta = MomentVector::dirac(Basis::Monomial, 2, &[0.0]);
        let md = m.evaluate(delta.values());
        assert_eq!(md, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let mu = m.evaluate(uniform_1d(2).values());
        assert!((mu[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(mu[(0, 1)], 0.0);
        assert!((mu[(1, 1)] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn localizing_interval_constraint() {
        let g = Polynomial::from_terms(
            1,
            Basis::Monomial,
            [(MultiIndex::new(vec![0]), 1.0), (MultiIndex::new(vec![2]), -1.0)],
        );
        let l = localizing_matrix(&g, 2).unwrap();
        assert_eq!(l.size(), 1);
        let v = l.evaluate(uniform_1d(2).values());
        assert!((v[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn localizing_matrices_psd_on_empirical_measures() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let set = SemialgebraicSet::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        for basis in [Basis::Monomial, Basis::Chebyshev] {
            let pts: Vec<Vec<f64>> = (0..200)
                .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .collect();
            let y = MomentVector::empirical(basis, 6, &pts);
            for g in set.localizing_polynomials(basis) {
                let m = localizing_matrix(&g, 6).unwrap().evaluate(y.values());
                let scale = m.norm();
                assert!(min_eigenvalue(&m) >= -1e-8 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn uniform_moment_matrix_is_positive_definite() {
        for basis in [Basis::Monomial, Basis::Chebyshev] {
            let y = MomentVector::uniform_cube(2, basis, 8);
            let m = moment_matrix(2, basis, 8).evaluate(y.values());
            assert!(min_eigenvalue(&m) > 0.0);
        }
    }

    #[test]
    fn lebesgue_matrix_closed_forms() {
        let set = SemialgebraicSet::from_box(&[-1.0], &[1.0]).unwrap();
        let m = lebesgue_moment_matrix(&set, 1, Basis::Monomial).unwrap();
        assert!((m[(0, 0)] - 2.0).abs() < 1e-15);
        assert_eq!(m[(0, 1)], 0.0);
        assert!((m[(1, 1)] - 2.0 / 3.0).abs() < 1e-15);
        let set2 = SemialgebraicSet::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let m2 = lebesgue_moment_matrix(&set2, 2, Basis::Chebyshev).unwrap();
        assert!((m2[(0, 0)] - 4.0).abs() < 1e-15);
        let disk = SemialgebraicSet::new(vec![set2.user_inequalities()[0].clone()], &[-1.0, -1.0], &[1.0, 1.0])
            .unwrap();
        assert!(matches!(
            lebesgue_moment_matrix(&disk, 2, Basis::Monomial),
            Err(Error::Unsupported(_))
        ));
    }

    /// Composite Gauss-Legendre quadrature on [-1, 1], independent of the closed forms.
    fn quadrature(f: impl Fn(f64) -> f64) -> f64 {
        let nodes = [
            (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
            (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
            (0.0, 0.568_888_888_888_888_9),
            (0.538_469_310_105_683, 0.478_628_670_499_366_5),
            (0.906_179_845_938_664, 0.236_926_885_056_189_1),
        ];
        let panels = 64;
        let h = 2.0 / panels as f64;
        let mut acc = 0.0;
        for k in 0..panels {
            let mid = -1.0 + (k as f64 + 0.5) * h;
            for (x, w) in nodes {
                acc += 0.5 * h * w * f(mid + 0.5 * h * x);
            }
        }
        acc
    }

    #[test]
    fn lebesgue_matrix_matches_quadrature() {
        for basis in [Basis::Monomial, Basis::Chebyshev] {
            let m = cube_lebesgue_matrix(1, 6, basis);
            for i in 0..=6u32 {
                for j in 0..=6u32 {
                    let q = quadrature(|x| {
                        let v = univariate_values_pair(basis, x, i, j);
                        v.0 * v.1
                    });
                    assert!((m[(i as usize, j as usize)] - q).abs() < 1e-10, "{basis} {i} {j}");
                }
            }
        }
    }

    fn univariate_values_pair(basis: Basis, x: f64, i: u32, j: u32) -> (f64, f64) {
        let v = crate::polynomial::univariate_values(basis, x, i.max(j));
        (v[i as usize], v[j as usize])
    }

    #[test]
    fn pushforward_round_trip_through_scaling() {
        let scaling = BoxScaling::from_bounds(&[-1.5, -0.4], &[1.5, 0.4]).unwrap();
        let pts = vec![vec![0.3, -0.1], vec![-1.2, 0.35], vec![0.9, 0.05]];
        let user = MomentVector::empirical(Basis::Monomial, 4, &pts);
        let scaled_pts: Vec<Vec<f64>> = pts.iter().map(|p| scaling.to_scaled(p)).collect();
        let expect = MomentVector::empirical(Basis::Chebyshev, 4, &scaled_pts);
        let got = user
            .pushforward(&scaling.scaled_in_user(Basis::Monomial, 2), Basis::Chebyshev, 4)
            .unwrap();
        for (a, b) in got.values().iter().zip(expect.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let back = got
            .pushforward(&scaling.user_in_scaled(Basis::Chebyshev, 2), Basis::Monomial, 4)
            .unwrap();
        for (a, b) in back.values().iter().zip(user.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
