//! Physical measure of the logistic map `x -> 2x^2 - 1` on `[-1, 1]`.
//!
//! Only the first moment is targeted (`E[x] = 0`); invariance pins down the
//! rest. The exact moments are `E[x^(2j)] = C(2j, j) / 4^j`.

use std::collections::BTreeMap;
use std::time::Instant;

use invmeas::invariance::{Dynamics, SystemModel};
use invmeas::moment::SemialgebraicSet;
use invmeas::objective::ObjectiveSpec;
use invmeas::parse::parse_polynomial;
use invmeas::polynomial::binomial;
use invmeas::solver::{assemble, solve, SolverOptions};
use invmeas::{Basis, MultiIndex, PolynomialMap};

fn main() -> invmeas::Result<()> {
    env_logger::init();
    let map = PolynomialMap::new(vec![parse_polynomial("2*x^2 - 1", 1, 0)?])?;
    let model = SystemModel::new(
        Dynamics::Discrete { map },
        SemialgebraicSet::from_box(&[-1.0], &[1.0])?,
    )?;
    let targets = BTreeMap::from([(MultiIndex::new(vec![1]), 0.0)]);

    let start = Instant::now();
    let program = assemble(&model, 10, &ObjectiveSpec::least_squares(targets), Basis::Chebyshev)?;
    let result = solve(&program, &SolverOptions::default())?;
    let frame = program.frame.as_ref().expect("assembled from a model");
    let user = frame.to_user_moments(&result.y, 10)?;

    println!(
        "status {:?}, {} iterations, {:.2?}",
        result.status,
        result.iterations,
        start.elapsed()
    );
    println!("{:>3} {:>10} {:>10}", "j", "relaxed", "exact");
    for j in 1..=10u32 {
        let exact = if j % 2 == 1 {
            0.0
        } else {
            binomial(j as usize, j as usize / 2) as f64 / 2f64.powi(j as i32)
        };
        let got = user.get(&MultiIndex::new(vec![j])).unwrap();
        println!("{j:>3} {got:>10.4} {exact:>10.4}");
    }
    Ok(())
}
