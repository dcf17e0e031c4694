//! Operator-splitting solver for
//!
//! ```text
//! min 1/2 x'Px + q'x   s.t.   Ax + s = b,   s in K
//! ```
//!
//! with `K` a product of zero, nonnegative and PSD cones. Each iteration solves
//! one linear system with the cached factorization of `P + sigma I + A'RA`,
//! over-relaxes, projects the slack onto `K` and updates the multipliers.
//! Rows are equilibrated with a Ruiz-type diagonal scaling that is kept uniform
//! inside each PSD block so that the cone is preserved.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::psd::{project_svec, smat};
use super::ConicProgram;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub eps_primal: f64,
    pub eps_dual: f64,
    pub eps_psd: f64,
    pub eps_gap: f64,
    pub eps_infeasible: f64,
    pub max_iters: u64,
    pub rho: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub adaptive_rho: bool,
    pub check_interval: u64,
    pub scaling_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            eps_primal: 1e-7,
            eps_dual: 1e-7,
            eps_psd: 1e-8,
            eps_gap: 1e-6,
            eps_infeasible: 1e-6,
            max_iters: 200_000,
            rho: 0.1,
            sigma: 1e-6,
            alpha: 1.6,
            adaptive_rho: true,
            check_interval: 25,
            scaling_iters: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    Infeasible,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveResult {
    pub y: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    /// Largest equality residual or bound violation at `y`, over `max(1, ||b||_inf)`.
    pub primal_residual: f64,
    /// `||Py + q - A'lambda||_inf / max(1, ||Py||, ||q||, ||A'lambda||)`.
    pub dual_residual: f64,
    /// Primal-dual objective difference over `max(1, |primal|, |dual|)`.
    pub gap: f64,
    pub iterations: u64,
    pub equality_residual: f64,
    pub min_psd_eigenvalue: f64,
    /// Optimal moment vectors need not be unique; the solver returns the point it converged to.
    pub uniqueness_assumed: bool,
}

#[derive(Clone, Copy, Debug)]
enum Cone {
    Zero,
    Nonneg,
    Psd,
}

struct Segment {
    cone: Cone,
    start: usize,
    len: usize,
}

/// Row-wise sparse matrix.
struct SparseRows {
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    fn mul(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    fn mul_t(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (r, &v) in self.rows.iter().zip(y) {
            if v != 0.0 {
                for &(j, a) in r {
                    out[j] += a * v;
                }
            }
        }
        out
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Standard-form data derived from a [`ConicProgram`].
struct StandardForm {
    p: DMatrix<f64>,
    q: Vec<f64>,
    a: SparseRows,
    b: Vec<f64>,
    segments: Vec<Segment>,
}

fn standard_form(program: &ConicProgram) -> StandardForm {
    let n = program.n_vars;
    let mut rows = Vec::new();
    let mut b = Vec::new();
    let mut segments = Vec::new();

    let start = rows.len();
    for (f, r) in &program.equalities {
        rows.push(f.terms().to_vec());
        b.push(*r);
    }
    segments.push(Segment {
        cone: Cone::Zero,
        start,
        len: rows.len() - start,
    });

    let start = rows.len();
    for g in &program.inequalities {
        rows.push(g.functional.terms().to_vec());
        b.push(g.upper);
    }
    segments.push(Segment {
        cone: Cone::Nonneg,
        start,
        len: rows.len() - start,
    });

    for block in &program.psd_blocks {
        let start = rows.len();
        for (i, j, f) in block.map.packed() {
            let w = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
            rows.push(f.terms().iter().map(|&(k, c)| (k, -w * c)).collect());
            b.push(block.constant.as_ref().map_or(0.0, |c| w * c[(i, j)]));
        }
        segments.push(Segment {
            cone: Cone::Psd,
            start,
            len: rows.len() - start,
        });
    }
    segments.retain(|s| s.len > 0);

    let mut p = DMatrix::zeros(n, n);
    let mut q = vec![0.0; n];
    for (f, t) in &program.objective.squares {
        for &(i, a) in f.terms() {
            q[i] -= 2.0 * t * a;
            for &(j, c) in f.terms() {
                p[(i, j)] += 2.0 * a * c;
            }
        }
    }
    for &(i, c) in program.objective.linear.terms() {
        q[i] += c;
    }
    StandardForm {
        p,
        q,
        a: SparseRows { ncols: n, rows },
        b,
        segments,
    }
}

struct Scaling {
    d: Vec<f64>,
    e: Vec<f64>,
    c: f64,
}

fn equilibrate(sf: &mut StandardForm, iters: usize) -> Scaling {
    let n = sf.a.ncols;
    let m = sf.a.rows.len();
    let mut d = vec![1.0; m];
    let mut e = vec![1.0; n];
    let clamp = |v: f64| if v < 1e-8 { 1.0 } else { v.clamp(1e-4, 1e4) };
    for _ in 0..iters {
        let mut col = vec![0.0f64; n];
        let mut row = vec![0.0f64; m];
        for (i, r) in sf.a.rows.iter().enumerate() {
            for &(j, a) in r {
                let v = (a * d[i] * e[j]).abs();
                col[j] = col[j].max(v);
                row[i] = row[i].max(v);
            }
        }
        for j in 0..n {
            for k in 0..n {
                col[j] = col[j].max((sf.p[(k, j)] * e[k] * e[j]).abs());
            }
        }
        for seg in &sf.segments {
            if let Cone::Psd = seg.cone {
                let mx = row[seg.start..seg.start + seg.len]
                    .iter()
                    .fold(0.0f64, |a, &b| a.max(b));
                row[seg.start..seg.start + seg.len].fill(mx);
            }
        }
        for j in 0..n {
            e[j] = (e[j] / clamp(col[j]).sqrt()).clamp(1e-4, 1e4);
        }
        for i in 0..m {
            d[i] = (d[i] / clamp(row[i]).sqrt()).clamp(1e-4, 1e4);
        }
    }
    for (i, r) in sf.a.rows.iter_mut().enumerate() {
        for t in r.iter_mut() {
            t.1 *= d[i] * e[t.0];
        }
        sf.b[i] *= d[i];
    }
    for j in 0..n {
        for k in 0..n {
            sf.p[(k, j)] *= e[k] * e[j];
        }
        sf.q[j] *= e[j];
    }
    let mean_p = if n == 0 {
        0.0
    } else {
        (0..n)
            .map(|j| sf.p.column(j).iter().fold(0.0f64, |a, b| a.max(b.abs())))
            .sum::<f64>()
            / n as f64
    };
    let scale = mean_p.max(inf_norm(&sf.q));
    let c = if scale < 1e-8 { 1.0 } else { (1.0 / scale).clamp(1e-4, 1e4) };
    sf.p *= c;
    for v in &mut sf.q {
        *v *= c;
    }
    Scaling { d, e, c }
}

fn factor(sf: &StandardForm, r: &[f64], sigma: f64) -> Result<Cholesky<f64, Dyn>> {
    let n = sf.a.ncols;
    let mut k = sf.p.clone();
    for i in 0..n {
        k[(i, i)] += sigma;
    }
    for (row, &w) in sf.a.rows.iter().zip(r) {
        for &(i, a) in row {
            for &(j, c) in row {
                k[(i, j)] += w * a * c;
            }
        }
    }
    Cholesky::new(k).ok_or_else(|| Error::Singular("ADMM linear system is not positive definite".into()))
}

fn project(sf: &StandardForm, v: &mut [f64]) {
    for seg in &sf.segments {
        let part = &mut v[seg.start..seg.start + seg.len];
        match seg.cone {
            Cone::Zero => part.fill(0.0),
            Cone::Nonneg => part.iter_mut().for_each(|x| *x = x.max(0.0)),
            Cone::Psd => project_svec(part),
        }
    }
}

fn rho_vector(sf: &StandardForm, rho: f64) -> Vec<f64> {
    let mut r = vec![rho; sf.b.len()];
    for seg in &sf.segments {
        if let Cone::Zero = seg.cone {
            r[seg.start..seg.start + seg.len].fill(1e3 * rho);
        }
    }
    r
}

/// Whether `dl` (unscaled) is in the polar cone up to `tol`.
fn in_polar(sf: &StandardForm, dl: &[f64], tol: f64) -> bool {
    sf.segments.iter().all(|seg| {
        let part = &dl[seg.start..seg.start + seg.len];
        match seg.cone {
            Cone::Zero => true,
            Cone::Nonneg => part.iter().all(|&x| x <= tol),
            Cone::Psd => {
                let m = smat(part);
                nalgebra::SymmetricEigen::new(m)
                    .eigenvalues
                    .iter()
                    .all(|&l| l <= tol)
            }
        }
    })
}

/// `|y'Py + q'y - b'lambda|` relative to the primal and dual objective magnitudes.
fn relative_gap(sf: &StandardForm, y: &[f64], lam: &[f64]) -> f64 {
    let py: Vec<f64> = (&sf.p * DVector::from_column_slice(y)).data.into();
    let quad = 0.5 * dot(y, &py);
    let primal = quad + dot(&sf.q, y);
    let dual = dot(&sf.b, lam) - quad;
    (primal - dual).abs() / 1f64.max(primal.abs()).max(dual.abs())
}

/// Solves `program`; deterministic for identical inputs.
pub fn solve(program: &ConicProgram, opts: &SolverOptions) -> Result<SolveResult> {
    program.validate()?;
    if !(opts.alpha > 0.0 && opts.alpha < 2.0) || opts.rho <= 0.0 || opts.sigma <= 0.0 {
        return Err(Error::InvalidParameter(
            "solver needs 0 < alpha < 2, rho > 0 and sigma > 0".into(),
        ));
    }
    let unscaled = standard_form(program);
    let mut sf = standard_form(program);
    let sc = equilibrate(&mut sf, opts.scaling_iters);
    let n = sf.a.ncols;
    let m = sf.b.len();

    let mut rho = opts.rho;
    let mut r = rho_vector(&sf, rho);
    let mut chol = factor(&sf, &r, opts.sigma)?;

    let mut x = vec![0.0; n];
    let mut s = vec![0.0; m];
    let mut lam = vec![0.0; m];
    let mut lam_prev = lam.clone();
    let mut certificate_streak = 0;
    let interval = opts.check_interval.max(1);

    let unscale_x = |x: &[f64]| -> Vec<f64> { x.iter().zip(&sc.e).map(|(v, e)| v * e).collect() };

    let mut status = SolveStatus::MaxIters;
    let mut iterations = 0;
    let mut last = (f64::INFINITY, f64::INFINITY);
    while iterations < opts.max_iters {
        iterations += 1;
        let w: Vec<f64> = (0..m).map(|i| r[i] * (sf.b[i] - s[i]) + lam[i]).collect();
        let at_w = sf.a.mul_t(&w);
        let rhs: Vec<f64> = (0..n)
            .map(|j| opts.sigma * x[j] - sf.q[j] + at_w[j])
            .collect();
        let xt = chol.solve(&DVector::from_vec(rhs));
        let ax = sf.a.mul(xt.as_slice());
        for j in 0..n {
            x[j] = opts.alpha * xt[j] + (1.0 - opts.alpha) * x[j];
        }
        let mut v = vec![0.0; m];
        let mut s_hat = vec![0.0; m];
        for i in 0..m {
            s_hat[i] = opts.alpha * (sf.b[i] - ax[i]) + (1.0 - opts.alpha) * s[i];
            v[i] = s_hat[i] + lam[i] / r[i];
        }
        s.copy_from_slice(&v);
        project(&sf, &mut s);
        for i in 0..m {
            lam[i] = r[i] * (v[i] - s[i]);
        }

        if iterations % interval != 0 && iterations != opts.max_iters {
            continue;
        }

        // residuals in scaled space
        let ax = sf.a.mul(&x);
        let px: Vec<f64> = (&sf.p * DVector::from_column_slice(&x)).data.into();
        let at_l = sf.a.mul_t(&lam);
        let rp_s: Vec<f64> = (0..m).map(|i| ax[i] + s[i] - sf.b[i]).collect();
        let rd_s: Vec<f64> = (0..n).map(|j| px[j] + sf.q[j] - at_l[j]).collect();

        // optimality is judged on y itself: equalities, bounds and PSD blocks,
        // plus the dual residual and duality gap of the current multipliers
        let y = unscale_x(&x);
        let rp_rel = program.equality_residual(&y).max(program.inequality_violation(&y))
            / 1f64.max(inf_norm(&unscaled.b));
        let unsc_e = |v: &[f64]| -> Vec<f64> {
            v.iter().zip(&sc.e).map(|(x, e)| x / (e * sc.c)).collect()
        };
        let rd = inf_norm(&unsc_e(&rd_s));
        let dual_scale = 1f64
            .max(inf_norm(&unsc_e(&px)))
            .max(inf_norm(&unscaled.q))
            .max(inf_norm(&unsc_e(&at_l)));
        let rd_rel = rd / dual_scale;
        last = (rp_rel, rd_rel);

        if iterations % (interval * 200) == 0 {
            log::debug!(
                "iter {iterations}: primal {rp_rel:.3e} dual {rd_rel:.3e} slack {:.3e} rho {rho:.3e}",
                inf_norm(&rp_s)
            );
        }

        if rp_rel <= opts.eps_primal && rd_rel <= opts.eps_dual {
            let lam_u: Vec<f64> = (0..m).map(|i| lam[i] * sc.d[i] / sc.c).collect();
            if relative_gap(&unscaled, &y, &lam_u) <= opts.eps_gap
                && program.min_psd_eigenvalue(&y) >= -opts.eps_psd
            {
                status = SolveStatus::Optimal;
                break;
            }
        }

        // infeasibility certificate from the multiplier increment
        let dl: Vec<f64> = (0..m)
            .map(|i| (lam[i] - lam_prev[i]) * sc.d[i] / sc.c)
            .collect();
        lam_prev.copy_from_slice(&lam);
        let dl_norm = inf_norm(&dl);
        if dl_norm > 1e-12 {
            let atdl = unscaled.a.mul_t(&dl);
            let tol = opts.eps_infeasible * dl_norm;
            let bdl = dot(&unscaled.b, &dl);
            if inf_norm(&atdl) <= tol && bdl > tol && in_polar(&unscaled, &dl, tol) {
                certificate_streak += 1;
                if certificate_streak >= 3 {
                    status = SolveStatus::Infeasible;
                    break;
                }
            } else {
                certificate_streak = 0;
            }
        } else {
            certificate_streak = 0;
        }

        if opts.adaptive_rho {
            let sp = inf_norm(&rp_s)
                / inf_norm(&ax).max(inf_norm(&s)).max(inf_norm(&sf.b)).max(1e-10);
            let sd = inf_norm(&rd_s)
                / inf_norm(&px).max(inf_norm(&sf.q)).max(inf_norm(&at_l)).max(1e-10);
            if sp > 0.0 && sd > 0.0 {
                let new_rho = (rho * (sp / sd).sqrt()).clamp(1e-6, 1e6);
                if new_rho > 5.0 * rho || new_rho < 0.2 * rho {
                    rho = new_rho;
                    r = rho_vector(&sf, rho);
                    chol = factor(&sf, &r, opts.sigma)?;
                }
            }
        }
    }

    let y = unscale_x(&x);
    let lam_u: Vec<f64> = (0..m).map(|i| lam[i] * sc.d[i] / sc.c).collect();
    let objective = program.objective.value(&y);
    let gap = relative_gap(&unscaled, &y, &lam_u);
    log::info!(
        "solver finished: {status:?} after {iterations} iterations, primal {:.2e}, dual {:.2e}",
        last.0,
        last.1
    );
    Ok(SolveResult {
        equality_residual: program.equality_residual(&y),
        min_psd_eigenvalue: program.min_psd_eigenvalue(&y),
        y,
        objective,
        status,
        primal_residual: last.0,
        dual_residual: last.1,
        gap,
        iterations,
        uniqueness_assumed: false,
    })
}
