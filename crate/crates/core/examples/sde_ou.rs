//! Ornstein-Uhlenbeck process `dx = -x dt + dW` under both generator conventions.
//!
//! With the `1/2` factor the stationary variance is `1/2`; without it, `1`.

use invmeas::invariance::{Dynamics, SystemModel};
use invmeas::moment::SemialgebraicSet;
use invmeas::objective::ObjectiveSpec;
use invmeas::parse::parse_polynomial;
use invmeas::solver::{assemble, solve, SolverOptions};
use invmeas::{Basis, MultiIndex, Polynomial, PolynomialMap};

fn main() -> invmeas::Result<()> {
    for diffusion_half in [true, false] {
        let model = SystemModel::new(
            Dynamics::Sde {
                drift: PolynomialMap::new(vec![parse_polynomial("-x", 1, 0)?])?,
                diffusion: vec![vec![Polynomial::one(1, Basis::Monomial)]],
                diffusion_half,
            },
            SemialgebraicSet::from_box(&[-6.0], &[6.0])?,
        )?;
        let program = assemble(&model, 4, &ObjectiveSpec::feasibility(), Basis::Chebyshev)?;
        let result = solve(&program, &SolverOptions::default())?;
        let y = program.frame.as_ref().unwrap().to_user_moments(&result.y, 4)?;
        println!(
            "half factor {diffusion_half}: {:?}, E[x] = {:.2e}, E[x^2] = {:.6}, E[x^4] = {:.6}",
            result.status,
            y.get(&MultiIndex::new(vec![1])).unwrap(),
            y.get(&MultiIndex::new(vec![2])).unwrap(),
            y.get(&MultiIndex::new(vec![4])).unwrap(),
        );
    }
    Ok(())
}
