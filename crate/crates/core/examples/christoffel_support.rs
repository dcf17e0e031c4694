//! Support regions of the Hénon attractor from empirical moments.
//!
//! Writes `support_0.5.csv` and `support_0.9.csv` (`x1,x2,q,inside`) to the
//! directory given as the first argument, default `.`.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use invmeas::invariance::{Dynamics, SystemModel};
use invmeas::moment::{MomentVector, SemialgebraicSet};
use invmeas::parse::parse_polynomial;
use invmeas::reconstruct::{christoffel_in_box, coverage_check, levelset_grid, GridSpec};
use invmeas::simulate::{trajectory, TrajectoryConfig};
use invmeas::{Basis, PolynomialMap};

fn main() -> invmeas::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let model = SystemModel::new(
        Dynamics::Discrete {
            map: PolynomialMap::new(vec![
                parse_polynomial("1 - 1.4*x1^2 + x2", 2, 0)?,
                parse_polynomial("0.3*x1", 2, 0)?,
            ])?,
        },
        SemialgebraicSet::from_box(&[-1.5, -0.4], &[1.5, 0.4])?,
    )?;
    let points = trajectory(&model, &TrajectoryConfig::new(vec![0.1, 0.1], 6000, 0))?;
    let y = MomentVector::empirical(Basis::Monomial, 8, &points);
    let grid = GridSpec::over_box(model.set().scaling(), 200);
    for eps in [0.5, 0.9] {
        let q = christoffel_in_box(&y, model.set(), 8, eps, None)?;
        let cells = levelset_grid(|x: &[f64]| q.evaluate(x), q.level, &grid)?;
        let path = out.join(format!("support_{eps}.csv"));
        cells.write_csv(BufWriter::new(File::create(&path)?))?;
        let area = cells.inside.iter().filter(|&&b| b).count() as f64 / cells.inside.len() as f64;
        println!(
            "eps {eps}: level {:.1}, orbit coverage {:.4}, box fraction {area:.4} -> {}",
            q.level,
            coverage_check(&points, &q),
            path.display()
        );
    }
    Ok(())
}
