//! Signed eigenmeasure of the reflection `x -> -x` at eigenvalue `-1`.
//!
//! Maximizing the real part of `E[x]` gives `(delta_1 - delta_-1) / 2`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use invmeas::invariance::{Dynamics, SystemModel};
use invmeas::moment::SemialgebraicSet;
use invmeas::objective::ObjectiveSpec;
use invmeas::parse::parse_polynomial;
use invmeas::solver::{assemble, solve, SolverOptions};
use invmeas::{Basis, MultiIndex, PolynomialMap};

fn main() -> invmeas::Result<()> {
    let model = SystemModel::new(
        Dynamics::PfEigen {
            map: PolynomialMap::new(vec![parse_polynomial("-x", 1, 0)?])?,
            eigenvalue: Complex64::new(-1.0, 0.0),
        },
        SemialgebraicSet::from_box(&[-1.0], &[1.0])?,
    )?;
    let objective = ObjectiveSpec::maximize(BTreeMap::from([(MultiIndex::new(vec![1]), 1.0)]));
    let program = assemble(&model, 4, &objective, Basis::Chebyshev)?;
    let result = solve(&program, &SolverOptions::default())?;
    let y = program.frame.as_ref().unwrap().to_user_moments(&result.y, 4)?;
    println!("status {:?}, {} variables", result.status, program.n_vars);
    for j in 0..=4u32 {
        println!("Re E[x^{j}] = {:>9.6}", y.get(&MultiIndex::new(vec![j])).unwrap());
    }
    Ok(())
}
