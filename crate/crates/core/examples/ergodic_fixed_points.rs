//! Extreme invariant measures of the logistic map picked out by a linear objective.
//!
//! Minimizing `E[x]` lands on the fixed point `-1/2`, maximizing it on `1`.

use std::collections::BTreeMap;

use invmeas::invariance::{Dynamics, SystemModel};
use invmeas::moment::SemialgebraicSet;
use invmeas::objective::ObjectiveSpec;
use invmeas::parse::parse_polynomial;
use invmeas::solver::{assemble, solve, SolverOptions};
use invmeas::{Basis, MultiIndex, PolynomialMap};

fn main() -> invmeas::Result<()> {
    let map = PolynomialMap::new(vec![parse_polynomial("2*x^2 - 1", 1, 0)?])?;
    let model = SystemModel::new(Dynamics::Discrete { map }, SemialgebraicSet::from_box(&[-1.0], &[1.0])?)?;
    let c = BTreeMap::from([(MultiIndex::new(vec![1]), 1.0)]);
    for (label, objective, point) in [
        ("min E[x]", ObjectiveSpec::minimize(c.clone()), -0.5f64),
        ("max E[x]", ObjectiveSpec::maximize(c), 1.0),
    ] {
        let program = assemble(&model, 8, &objective, Basis::Chebyshev)?;
        let result = solve(&program, &SolverOptions::default())?;
        let y = program.frame.as_ref().unwrap().to_user_moments(&result.y, 4)?;
        println!("{label}: {:?}", result.status);
        for j in 1..=4u32 {
            println!("  y{j} = {:>9.6}   ({point})^{j} = {:>9.6}", y.get(&MultiIndex::new(vec![j])).unwrap(), point.powi(j as i32));
        }
    }
    Ok(())
}
