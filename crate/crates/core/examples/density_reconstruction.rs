//! Polynomial densities of the logistic physical measure at several orders.
//!
//! Prints the relaxed density against `1 / (pi sqrt(1 - x^2))` at a few points.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use invmeas::invariance::{Dynamics, SystemModel};
use invmeas::moment::SemialgebraicSet;
use invmeas::objective::ObjectiveSpec;
use invmeas::parse::parse_polynomial;
use invmeas::reconstruct::{density, Truncation};
use invmeas::solver::{assemble, solve, SolverOptions};
use invmeas::{Basis, MultiIndex, PolynomialMap};

fn main() -> invmeas::Result<()> {
    let map = PolynomialMap::new(vec![parse_polynomial("2*x^2 - 1", 1, 0)?])?;
    let model = SystemModel::new(Dynamics::Discrete { map }, SemialgebraicSet::from_box(&[-1.0], &[1.0])?)?;
    let targets = BTreeMap::from([(MultiIndex::new(vec![1]), 0.0)]);
    let xs = [0.0, 0.3, 0.6, 0.9];
    print!("{:>4}", "k");
    for x in xs {
        print!(" {:>9}", format!("x={x}"));
    }
    println!();
    for k in [5, 10, 20] {
        let program = assemble(&model, k, &ObjectiveSpec::least_squares(targets.clone()), Basis::Chebyshev)?;
        let result = solve(&program, &SolverOptions::default())?;
        let y = program.frame.as_ref().unwrap().to_user_moments(&result.y, k)?;
        let rho = density(&y, k, model.set(), Truncation::Truncated)?;
        print!("{k:>4}");
        for x in xs {
            print!(" {:>9.4}", rho.evaluate(&[x]));
        }
        println!();
    }
    print!("{:>4}", "true");
    for x in xs {
        print!(" {:>9.4}", 1.0 / (PI * (1.0 - x * x).sqrt()));
    }
    println!();
    Ok(())
}
