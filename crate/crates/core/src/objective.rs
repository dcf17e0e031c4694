//! Objectives and extra constraints that select one invariant measure.
//!
//! Targets and coefficients always refer to user-frame monomial moments
//! `E[x^alpha]`; [`WorkingFrame`] turns each of them into a linear functional
//! of the working decision vector.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moment::{moment_matrix, BoxScaling, LinearFunctional, LinearMatrixMap, MomentVector};
use crate::polynomial::{basis_size, Basis, MultiIndex, Polynomial};

/// Coordinates in which a program is assembled: scaled box, working basis,
/// moment degree and the number of stacked moment vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkingFrame {
    pub n: usize,
    pub basis: Basis,
    pub moment_degree: u32,
    pub blocks: usize,
    pub scaling: BoxScaling,
}

impl WorkingFrame {
    pub fn moment_len(&self) -> usize {
        basis_size(self.n, self.moment_degree)
    }

    /// `E[x^alpha]` in user coordinates as a functional of the working vector.
    /// With stacked vectors this is the real part `y_R+ - y_R-`.
    pub fn user_moment(&self, alpha: &MultiIndex) -> Result<LinearFunctional> {
        if alpha.dim() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "moment index {:?} has {} entries, system has {} states",
                alpha.exponents(),
                alpha.dim(),
                self.n
            )));
        }
        if alpha.degree() > self.moment_degree {
            return Err(Error::DegreeMismatch(format!(
                "moment index {:?} has degree {} above the relaxation degree {}",
                alpha.exponents(),
                alpha.degree(),
                self.moment_degree
            )));
        }
        let p = Polynomial::basis_element(Basis::Monomial, alpha.clone(), 1.0)
            .compose(&self.scaling.user_in_scaled(self.basis, self.n))?;
        let f = LinearFunctional::from_polynomial(&p, 0);
        Ok(if self.blocks == 1 {
            f
        } else {
            f.add(&f.scale(-1.0).shifted(self.moment_len()))
        })
    }

    /// User-frame monomial moments of a working vector, up to `degree`.
    pub fn to_user_moments(&self, y: &[f64], degree: u32) -> Result<MomentVector> {
        let values = MultiIndex::enumerate(self.n, degree)
            .iter()
            .map(|a| Ok(self.user_moment(a)?.apply(y)))
            .collect::<Result<Vec<f64>>>()?;
        MomentVector::new(self.n, Basis::Monomial, degree, values)
    }

    /// Working-frame moments of a measure given by user-frame moments of any basis.
    pub fn from_user_moments(&self, y: &MomentVector) -> Result<MomentVector> {
        let sub = self.scaling.scaled_in_user(y.basis(), self.n);
        y.pushforward(&sub, self.basis, y.degree())
    }
}

/// Reference measure `nu` for absolute-continuity constraints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMeasure {
    /// Uniform probability on the bounding box.
    Uniform,
    /// Lebesgue measure on the bounding box.
    Lebesgue,
    /// Explicit user-frame monomial moments.
    Moments(Vec<MomentTarget>),
}

/// One `(alpha, value)` pair, the JSON shape shared by targets and moment files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentTarget {
    pub alpha: MultiIndex,
    pub value: f64,
}

pub fn targets_to_map(targets: &[MomentTarget]) -> BTreeMap<MultiIndex, f64> {
    targets.iter().map(|t| (t.alpha.clone(), t.value)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObjectiveKind {
    /// `sum (E[x^alpha] - z_alpha)^2`.
    LeastSquares(BTreeMap<MultiIndex, f64>),
    /// `sum c_alpha E[x^alpha]`, minimized or maximized.
    Linear {
        coeffs: BTreeMap<MultiIndex, f64>,
        maximize: bool,
    },
    Feasibility,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Addon {
    /// `M_d(gamma z - y) >= 0`; `degree` defaults to the relaxation degree.
    AbsContinuity {
        reference: ReferenceMeasure,
        gamma: f64,
        degree: Option<u32>,
    },
    /// `trace M_d(y) <= gamma` in user-frame monomials; `degree` defaults to the relaxation degree.
    TraceBound { gamma: f64, degree: Option<u32> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub addons: Vec<Addon>,
}

impl ObjectiveSpec {
    pub fn feasibility() -> Self {
        ObjectiveSpec {
            kind: ObjectiveKind::Feasibility,
            addons: Vec::new(),
        }
    }

    pub fn least_squares(targets: BTreeMap<MultiIndex, f64>) -> Self {
        ObjectiveSpec {
            kind: ObjectiveKind::LeastSquares(targets),
            addons: Vec::new(),
        }
    }

    pub fn minimize(coeffs: BTreeMap<MultiIndex, f64>) -> Self {
        ObjectiveSpec {
            kind: ObjectiveKind::Linear {
                coeffs,
                maximize: false,
            },
            addons: Vec::new(),
        }
    }

    pub fn maximize(coeffs: BTreeMap<MultiIndex, f64>) -> Self {
        ObjectiveSpec {
            kind: ObjectiveKind::Linear {
                coeffs,
                maximize: true,
            },
            addons: Vec::new(),
        }
    }

    pub fn with_addon(mut self, addon: Addon) -> Self {
        self.addons.push(addon);
        self
    }
}

/// `sum_i (l_i(y) - t_i)^2 + c(y) + constant`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadraticObjective {
    pub squares: Vec<(LinearFunctional, f64)>,
    pub linear: LinearFunctional,
    pub constant: f64,
}

impl QuadraticObjective {
    pub fn value(&self, y: &[f64]) -> f64 {
        self.squares
            .iter()
            .map(|(f, t)| (f.apply(y) - t).powi(2))
            .sum::<f64>()
            + self.linear.apply(y)
            + self.constant
    }

    pub fn is_zero(&self) -> bool {
        self.squares.is_empty() && self.linear.is_zero() && self.constant == 0.0
    }
}

/// Least-squares moment matching against user-frame targets.
pub fn least_squares(targets: &BTreeMap<MultiIndex, f64>, frame: &WorkingFrame) -> Result<QuadraticObjective> {
    if targets.is_empty() {
        return Err(Error::InvalidParameter("least-squares objective needs at least one target".into()));
    }
    let squares = targets
        .iter()
        .map(|(a, &t)| Ok((frame.user_moment(a)?, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuadraticObjective {
        squares,
        ..Default::default()
    })
}

/// `sum c_alpha E[x^alpha]`; pass `maximize` to negate.
pub fn linear_functional(
    coeffs: &BTreeMap<MultiIndex, f64>,
    maximize: bool,
    frame: &WorkingFrame,
) -> Result<QuadraticObjective> {
    let sign = if maximize { -1.0 } else { 1.0 };
    let mut linear = LinearFunctional::default();
    for (a, &c) in coeffs {
        linear = linear.add(&frame.user_moment(a)?.scale(sign * c));
    }
    Ok(QuadraticObjective {
        linear,
        ..Default::default()
    })
}

/// PSD block `constant + map(y)`.
#[derive(Clone, Debug)]
pub struct AffinePsdBlock {
    pub name: String,
    pub constant: Option<DMatrix<f64>>,
    pub map: LinearMatrixMap,
}

impl AffinePsdBlock {
    pub fn size(&self) -> usize {
        self.map.size()
    }

    pub fn evaluate(&self, y: &[f64]) -> DMatrix<f64> {
        let m = self.map.evaluate(y);
        match &self.constant {
            Some(c) => m + c,
            None => m,
        }
    }
}

/// `M_d(gamma z - y) >= 0` with `z` and `y` in the same frame and basis.
pub fn abs_continuity_block(z: &MomentVector, gamma: f64, d: u32) -> Result<AffinePsdBlock> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "absolute-continuity bound must be positive, got {gamma}"
        )));
    }
    if z.degree() < d {
        return Err(Error::MissingMoments {
            required_degree: d,
            available_degree: z.degree(),
        });
    }
    let m = moment_matrix(z.dim(), z.basis(), d);
    let constant = m.evaluate(z.values()) * gamma;
    Ok(AffinePsdBlock {
        name: "abs_continuity".into(),
        constant: Some(constant),
        map: m.scale(-1.0),
    })
}

/// `l(y) <= upper`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarInequality {
    pub name: String,
    pub functional: LinearFunctional,
    pub upper: f64,
}

/// `sum_{|beta| <= d/2} E[x^(2 beta)] <= gamma`.
pub fn trace_bound(gamma: f64, d: u32, frame: &WorkingFrame) -> Result<ScalarInequality> {
    if !(gamma >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "trace bound must be at least 1 (the trace includes y_0 = 1), got {gamma}"
        )));
    }
    let mut f = LinearFunctional::default();
    for b in MultiIndex::enumerate(frame.n, d / 2) {
        f = f.add(&frame.user_moment(&b.add(&b))?);
    }
    Ok(ScalarInequality {
        name: "trace_bound".into(),
        functional: f,
        upper: gamma,
    })
}

/// Working-frame moments of a reference measure, to degree `d`.
pub fn reference_moments(reference: &ReferenceMeasure, frame: &WorkingFrame, d: u32) -> Result<MomentVector> {
    match reference {
        ReferenceMeasure::Uniform => Ok(MomentVector::uniform_cube(frame.n, frame.basis, d)),
        ReferenceMeasure::Lebesgue => {
            let mass = frame.scaling.jacobian() * 2f64.powi(frame.n as i32);
            let u = MomentVector::uniform_cube(frame.n, frame.basis, d);
            MomentVector::new(
                frame.n,
                frame.basis,
                d,
                u.values().iter().map(|v| v * mass).collect(),
            )
        }
        ReferenceMeasure::Moments(list) => {
            let map = targets_to_map(list);
            let values = MultiIndex::enumerate(frame.n, d)
                .into_iter()
                .map(|a| {
                    map.get(&a).copied().ok_or_else(|| Error::MissingMoments {
                        required_degree: d,
                        available_degree: a.degree().saturating_sub(1),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let user = MomentVector::new(frame.n, Basis::Monomial, d, values)?;
            frame.from_user_moments(&user)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moment::min_eigenvalue;

    fn frame_1d(basis: Basis, d: u32) -> WorkingFrame {
        WorkingFrame {
            n: 1,
            basis,
            moment_degree: d,
            blocks: 1,
            scaling: BoxScaling::identity(1),
        }
    }

    fn idx(e: u32) -> MultiIndex {
        MultiIndex::new(vec![e])
    }

    #[test]
    fn least_squares_zero_at_own_moments() {
        let frame = frame_1d(Basis::Chebyshev, 6);
        let y = MomentVector::dirac(Basis::Chebyshev, 6, &[0.3]);
        let targets: BTreeMap<_, _> = (1..=4).map(|k| (idx(k), 0.3f64.powi(k as i32))).collect();
        let obj = least_squares(&targets, &frame).unwrap();
        assert!(obj.value(y.values()).abs() < 1e-14);
        let over: BTreeMap<_, _> = [(idx(7), 0.0)].into();
        assert!(least_squares(&over, &frame).is_err());
        assert!(least_squares(&BTreeMap::new(), &frame).is_err());
    }

    #[test]
    fn user_moment_through_scaling() {
        let frame = WorkingFrame {
            n: 1,
            basis: Basis::Chebyshev,
            moment_degree: 4,
            blocks: 1,
            scaling: BoxScaling::from_bounds(&[0.0], &[4.0]).unwrap(),
        };
        // delta at x = 3, i.e. u = 0.5
        let y = MomentVector::dirac(Basis::Chebyshev, 4, &[0.5]);
        let f = frame.user_moment(&idx(3)).unwrap();
        assert!((f.apply(y.values()) - 27.0).abs() < 1e-12);
    }

    #[test]
    fn trace_bound_examples() {
        let frame = frame_1d(Basis::Monomial, 2);
        let t = trace_bound(1.5, 2, &frame).unwrap();
        let at = |p: f64| t.functional.apply(MomentVector::dirac(Basis::Monomial, 2, &[p]).values());
        assert_eq!(at(0.0), 1.0);
        assert_eq!(at(1.0), 2.0);
        assert!(at(1.0) > t.upper && at(0.0) <= t.upper);
        let u = MomentVector::uniform_cube(1, Basis::Monomial, 2);
        assert!((t.functional.apply(u.values()) - 4.0 / 3.0).abs() < 1e-15);
        assert!(trace_bound(0.5, 2, &frame).is_err());
    }

    #[test]
    fn abs_continuity_blocks() {
        let z = MomentVector::uniform_cube(1, Basis::Monomial, 16);
        let same = abs_continuity_block(&z, 1.0, 4).unwrap();
        assert!(same.evaluate(z.values()).norm() < 1e-15);
        assert!(abs_continuity_block(&z, 0.0, 4).is_err());

        // an atom is dominated at low degree but not once d is large enough
        // (the Christoffel function of the uniform law at 0 passes 4 between d = 8 and d = 16)
        let delta = MomentVector::dirac(Basis::Monomial, 16, &[0.0]);
        let low = abs_continuity_block(&z, 4.0, 2).unwrap();
        assert!(min_eigenvalue(&low.evaluate(delta.values())) >= 0.0);
        let high = abs_continuity_block(&z, 4.0, 16).unwrap();
        assert!(min_eigenvalue(&high.evaluate(delta.values())) < 0.0);
    }

    #[test]
    fn arcsine_law_against_uniform_bound() {
        // arcsine moments C(2j, j) / 4^j; with gamma = 4 the d = 2 block is PSD
        let y = MomentVector::new(1, Basis::Monomial, 2, vec![1.0, 0.0, 0.5]).unwrap();
        let z = MomentVector::uniform_cube(1, Basis::Monomial, 2);
        let b = abs_continuity_block(&z, 4.0, 2).unwrap();
        assert!(min_eigenvalue(&b.evaluate(y.values())) >= 0.0);
    }
}
