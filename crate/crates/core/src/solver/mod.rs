//! Finite conic programs over moment vectors and their assembly from a model.

mod admm;
pub mod psd;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::invariance::{rows_for, SystemKind, SystemModel};
use crate::moment::{localizing_matrix, LinearFunctional, LinearMatrixMap};
use crate::objective::{
    abs_continuity_block, least_squares, linear_functional, reference_moments, Addon, ObjectiveKind,
    ObjectiveSpec, QuadraticObjective, ScalarInequality, WorkingFrame,
};
use crate::polynomial::{basis_size, Basis};

pub use crate::objective::AffinePsdBlock;
pub use admm::{solve, SolveResult, SolveStatus, SolverOptions};

/// `min f(y)` subject to linear equalities, scalar upper bounds and affine PSD blocks.
#[derive(Clone, Debug)]
pub struct ConicProgram {
    pub n_vars: usize,
    pub equalities: Vec<(LinearFunctional, f64)>,
    pub psd_blocks: Vec<AffinePsdBlock>,
    pub inequalities: Vec<ScalarInequality>,
    pub objective: QuadraticObjective,
    /// Present when the program was assembled from a model.
    pub frame: Option<WorkingFrame>,
    pub meta: Option<ProgramMeta>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProgramMeta {
    pub kind: SystemKind,
    pub order: u32,
    pub moment_degree: u32,
    pub invariance_rows: usize,
}

impl ConicProgram {
    /// Empty program in `n_vars` variables.
    pub fn new(n_vars: usize) -> Self {
        ConicProgram {
            n_vars,
            equalities: Vec::new(),
            psd_blocks: Vec::new(),
            inequalities: Vec::new(),
            objective: QuadraticObjective::default(),
            frame: None,
            meta: None,
        }
    }

    /// Checks that every referenced index is a variable.
    pub fn validate(&self) -> Result<()> {
        let check = |f: &LinearFunctional, what: &str| match f.max_index() {
            Some(i) if i >= self.n_vars => Err(Error::DimensionMismatch(format!(
                "{what} references variable {i}, program has {}",
                self.n_vars
            ))),
            _ => Ok(()),
        };
        for (f, _) in &self.equalities {
            check(f, "equality")?;
        }
        for g in &self.inequalities {
            check(&g.functional, "inequality")?;
        }
        for b in &self.psd_blocks {
            if let Some(i) = b.map.max_index() {
                if i >= self.n_vars {
                    return Err(Error::DimensionMismatch(format!(
                        "PSD block {} references variable {i}, program has {}",
                        b.name, self.n_vars
                    )));
                }
            }
            if let Some(c) = &b.constant {
                if c.nrows() != b.size() || c.ncols() != b.size() {
                    return Err(Error::DimensionMismatch(format!(
                        "PSD block {} constant has the wrong shape",
                        b.name
                    )));
                }
            }
        }
        for (f, _) in &self.objective.squares {
            check(f, "objective")?;
        }
        check(&self.objective.linear, "objective")
    }

    /// Largest `|l(y) - r|` over equality rows.
    pub fn equality_residual(&self, y: &[f64]) -> f64 {
        self.equalities
            .iter()
            .map(|(f, r)| (f.apply(y) - r).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue over all PSD blocks at `y`.
    pub fn min_psd_eigenvalue(&self, y: &[f64]) -> f64 {
        self.psd_blocks
            .iter()
            .map(|b| crate::moment::min_eigenvalue(&b.evaluate(y)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `max(l(y) - u, 0)` over scalar inequalities.
    pub fn inequality_violation(&self, y: &[f64]) -> f64 {
        self.inequalities
            .iter()
            .map(|g| (g.functional.apply(y) - g.upper).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Sparse text dump; see the README for the format.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        s.push_str("conic_program v1\n");
        if let (Some(frame), Some(meta)) = (&self.frame, &self.meta) {
            let header = serde_json::json!({
                "kind": meta.kind,
                "k": meta.order,
                "d_k": meta.moment_degree,
                "n": frame.n,
                "basis": frame.basis,
                "blocks": frame.blocks,
                "invariance_rows": meta.invariance_rows,
                "center": frame.scaling.center(),
                "half_width": frame.scaling.half_width(),
            });
            let _ = writeln!(s, "meta {header}");
        }
        let _ = writeln!(s, "variables {}", self.n_vars);
        let _ = writeln!(s, "equalities {}", self.equalities.len());
        for (r, (f, rhs)) in self.equalities.iter().enumerate() {
            for &(i, c) in f.terms() {
                let _ = writeln!(s, "E {r} {i} {c:e}");
            }
            let _ = writeln!(s, "R {r} {rhs:e}");
        }
        let _ = writeln!(s, "psd {}", self.psd_blocks.len());
        for (b, block) in self.psd_blocks.iter().enumerate() {
            let _ = writeln!(s, "P {b} {} {}", block.size(), block.name);
            if let Some(c) = &block.constant {
                for j in 0..c.ncols() {
                    for i in 0..=j {
                        if c[(i, j)] != 0.0 {
                            let _ = writeln!(s, "C {b} {i} {j} {:e}", c[(i, j)]);
                        }
                    }
                }
            }
            for (i, j, k, c) in block.map.triplets() {
                let _ = writeln!(s, "A {b} {i} {j} {k} {c:e}");
            }
        }
        let _ = writeln!(s, "inequalities {}", self.inequalities.len());
        for (r, g) in self.inequalities.iter().enumerate() {
            for &(i, c) in g.functional.terms() {
                let _ = writeln!(s, "I {r} {i} {c:e}");
            }
            let _ = writeln!(s, "U {r} {:e}", g.upper);
        }
        let _ = writeln!(s, "objective {}", self.objective.squares.len());
        for (r, (f, t)) in self.objective.squares.iter().enumerate() {
            for &(i, c) in f.terms() {
                let _ = writeln!(s, "S {r} {i} {c:e}");
            }
            let _ = writeln!(s, "T {r} {t:e}");
        }
        for &(i, c) in self.objective.linear.terms() {
            let _ = writeln!(s, "L {i} {c:e}");
        }
        let _ = writeln!(s, "K {:e}", self.objective.constant);
        s
    }
}

/// Builds the order-`k` relaxation of `model` in `basis`.
pub fn assemble(model: &SystemModel, k: u32, objective: &ObjectiveSpec, basis: Basis) -> Result<ConicProgram> {
    let dynamics = model.working_dynamics(basis)?;
    let block = rows_for(&dynamics, k)?;
    let n = model.dim();
    let d_k = block.moment_degree;
    let len = basis_size(n, d_k);
    let blocks = block.blocks;
    let frame = WorkingFrame {
        n,
        basis,
        moment_degree: d_k,
        blocks,
        scaling: model.set().scaling().clone(),
    };

    let mut program = ConicProgram::new(blocks * len);
    program.equalities.extend(
        block
            .rows
            .iter()
            .filter(|r| !r.is_zero())
            .map(|r| (r.clone(), 0.0)),
    );
    let invariance_rows = program.equalities.len();
    let normalization = LinearFunctional::new((0..blocks).map(|b| (b * len, 1.0)).collect());
    program.equalities.push((normalization, 1.0));

    let names = localizer_names(model.set().scaled_inequalities().len());
    for (g, name) in model.set().localizing_polynomials(basis).iter().zip(&names) {
        if g.degree() > d_k {
            log::debug!("skipping localizer {name}: degree {} above d_k = {d_k}", g.degree());
            continue;
        }
        let m: LinearMatrixMap = localizing_matrix(g, d_k)?;
        for b in 0..blocks {
            program.psd_blocks.push(AffinePsdBlock {
                name: if blocks == 1 {
                    name.clone()
                } else {
                    format!("{name}[{}]", ["re+", "re-", "im+", "im-"][b])
                },
                constant: None,
                map: m.shifted(b * len),
            });
        }
    }

    program.objective = match &objective.kind {
        ObjectiveKind::LeastSquares(t) => least_squares(t, &frame)?,
        ObjectiveKind::Linear { coeffs, maximize } => linear_functional(coeffs, *maximize, &frame)?,
        ObjectiveKind::Feasibility => QuadraticObjective::default(),
    };
    for addon in &objective.addons {
        if blocks != 1 {
            return Err(Error::Unsupported(
                "objective add-ons are not available for eigenmeasure programs".into(),
            ));
        }
        match addon {
            Addon::AbsContinuity {
                reference,
                gamma,
                degree,
            } => {
                let d = degree.unwrap_or(d_k).min(d_k);
                let z = reference_moments(reference, &frame, d)?;
                program.psd_blocks.push(abs_continuity_block(&z, *gamma, d)?);
            }
            Addon::TraceBound { gamma, degree } => {
                let d = degree.unwrap_or(d_k).min(d_k);
                program
                    .inequalities
                    .push(crate::objective::trace_bound(*gamma, d, &frame)?);
            }
        }
    }

    program.meta = Some(ProgramMeta {
        kind: model.kind(),
        order: k,
        moment_degree: d_k,
        invariance_rows,
    });
    program.frame = Some(frame);
    program.validate()?;
    Ok(program)
}

fn localizer_names(ng: usize) -> Vec<String> {
    let mut v = vec!["moment".to_string()];
    v.extend((1..=ng).map(|i| format!("g{i}")));
    v.push("ball".into());
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariance::Dynamics;
    use crate::moment::SemialgebraicSet;
    use crate::parse::parse_polynomial;
    use crate::polynomial::PolynomialMap;

    fn logistic() -> SystemModel {
        let map = PolynomialMap::new(vec![parse_polynomial("2*x^2 - 1", 1, 0).unwrap()]).unwrap();
        SystemModel::new(
            Dynamics::Discrete { map },
            SemialgebraicSet::from_box(&[-1.0], &[1.0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn logistic_order_two_counts() {
        let p = assemble(&logistic(), 2, &ObjectiveSpec::feasibility(), Basis::Monomial).unwrap();
        assert_eq!(p.n_vars, 5);
        assert_eq!(p.equalities.len(), 3);
        let sizes: Vec<usize> = p.psd_blocks.iter().map(AffinePsdBlock::size).collect();
        assert_eq!(sizes, vec![3, 2, 2]);
    }

    #[test]
    fn henon_order_ten_length() {
        let map = PolynomialMap::new(vec![
            parse_polynomial("1 - 1.4*x1^2 + x2", 2, 0).unwrap(),
            parse_polynomial("0.3*x1", 2, 0).unwrap(),
        ])
        .unwrap();
        let model = SystemModel::new(
            Dynamics::Discrete { map },
            SemialgebraicSet::from_box(&[-1.5, -0.4], &[1.5, 0.4]).unwrap(),
        )
        .unwrap();
        let p = assemble(&model, 10, &ObjectiveSpec::feasibility(), Basis::Chebyshev).unwrap();
        assert_eq!(p.n_vars, 231);
    }

    #[test]
    fn eigenmeasure_quadruples_variables() {
        let map = PolynomialMap::new(vec![parse_polynomial("-x", 1, 0).unwrap()]).unwrap();
        let model = SystemModel::new(
            Dynamics::PfEigen {
                map,
                eigenvalue: num_complex::Complex64::new(-1.0, 0.0),
            },
            SemialgebraicSet::from_box(&[-1.0], &[1.0]).unwrap(),
        )
        .unwrap();
        let p = assemble(&model, 3, &ObjectiveSpec::feasibility(), Basis::Monomial).unwrap();
        assert_eq!(p.n_vars, 4 * 4);
        assert_eq!(p.psd_blocks.len(), 4 * 3);
        assert_eq!(p.equalities.last().unwrap().0.terms().len(), 4);
    }

    #[test]
    fn dump_lists_every_section() {
        let p = assemble(&logistic(), 2, &ObjectiveSpec::feasibility(), Basis::Chebyshev).unwrap();
        let text = p.dump();
        for key in ["conic_program v1", "meta {", "variables 5", "equalities 3", "psd 3", "inequalities 0", "objective 0"] {
            assert!(text.contains(key), "{key}");
        }
    }
}
