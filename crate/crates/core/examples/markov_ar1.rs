//! Stationary moments of the AR(1) chain `x' = x/2 + w`, `w = +-1/4`.
//!
//! The relaxation is a pure feasibility problem: the invariance rows fix every
//! moment. A simulated chain is shown alongside.

use invmeas::invariance::{Dynamics, NoiseDistribution, NoiseModel, SystemModel};
use invmeas::moment::SemialgebraicSet;
use invmeas::objective::ObjectiveSpec;
use invmeas::parse::parse_polynomial;
use invmeas::simulate::{estimate_moments, TrajectoryConfig};
use invmeas::solver::{assemble, solve, SolverOptions};
use invmeas::{Basis, MultiIndex, PolynomialMap};

fn main() -> invmeas::Result<()> {
    let noise = NoiseModel::from_distribution(
        NoiseDistribution::Discrete {
            atoms: vec![vec![-0.25], vec![0.25]],
            weights: vec![0.5, 0.5],
        },
        6,
    )?;
    let model = SystemModel::new(
        Dynamics::DiscreteMarkov {
            map: PolynomialMap::new(vec![parse_polynomial("0.5*x1 + w1", 1, 1)?])?,
            noise,
        },
        SemialgebraicSet::from_box(&[-1.0], &[1.0])?,
    )?;

    let program = assemble(&model, 6, &ObjectiveSpec::feasibility(), Basis::Chebyshev)?;
    let result = solve(&program, &SolverOptions::default())?;
    let y = program.frame.as_ref().unwrap().to_user_moments(&result.y, 4)?;

    let mut cfg = TrajectoryConfig::new(vec![0.0], 1_000_000, 4);
    cfg.seed = 42;
    let sim = estimate_moments(&model, &cfg)?;

    println!("status {:?}", result.status);
    println!("{:>3} {:>10} {:>10}", "j", "relaxed", "simulated");
    for j in 1..=4u32 {
        let a = MultiIndex::new(vec![j]);
        println!("{j:>3} {:>10.6} {:>10.6}", y.get(&a).unwrap(), sim[&a]);
    }
    println!("E[x^2] should be 1/12 = {:.6}", 1.0 / 12.0);
    Ok(())
}
