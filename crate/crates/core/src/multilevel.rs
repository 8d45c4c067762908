//! Geometric multilevel solver: operator setup over a moving-front hierarchy,
//! Gauss-Seidel smoothing, V-cycles and the outer iteration.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nodeset::NodeSet;
use crate::problems::{evaluate_problem, TestProblem};
use crate::rbffd::{assemble_I, assemble_L, assemble_R, SparseOperator, StencilConfig};
use crate::subsample::{mlmfsub, HierarchyParams, LevelHierarchy};

/// Relative residual above which the iteration is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;
const STAGNATION_FACTOR: f64 = 0.999;
const STAGNATION_RUN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlSettings {
    pub nu1: usize,
    pub nu2: usize,
    pub i_max: usize,
    pub tol: f64,
}

impl Default for MlSettings {
    fn default() -> Self {
        MlSettings {
            nu1: 2,
            nu2: 1,
            i_max: 50,
            tol: 1e-16,
        }
    }
}

impl MlSettings {
    pub fn validate(&self) -> Result<()> {
        if self.i_max < 1 {
            return Err(Error::Validation("i_max must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Validation(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Operators of every level, finest first.
#[derive(Debug)]
pub struct MlOperators {
    hierarchy: LevelHierarchy,
    l: Vec<SparseOperator>,
    /// `interp[j]` maps level `j + 1` to level `j`.
    interp: Vec<SparseOperator>,
    /// `restrict[j]` maps level `j` to level `j + 1`.
    restrict: Vec<SparseOperator>,
    coarse_lu: LU<f64, Dyn, Dyn>,
}

impl MlOperators {
    /// Assembles `L` on every level, interpolation and injection between adjacent
    /// levels, and factorizes the coarsest `L` once.
    pub fn from_hierarchy(
        hierarchy: LevelHierarchy,
        laplacian: &StencilConfig,
        interpolation: &StencilConfig,
    ) -> Result<Self> {
        let p = hierarchy.depth();
        let mut l = Vec::with_capacity(p);
        for level in hierarchy.levels() {
            l.push(assemble_L(level, &level.boundary_mask(), laplacian)?);
        }
        let mut interp = Vec::with_capacity(p.saturating_sub(1));
        let mut restrict = Vec::with_capacity(p.saturating_sub(1));
        for j in 0..p - 1 {
            interp.push(assemble_I(hierarchy.level(j + 1), hierarchy.level(j), interpolation)?);
            restrict.push(assemble_R(hierarchy.inject(j), hierarchy.level(j).len())?);
        }
        let coarsest = &l[p - 1];
        let dense = DMatrix::from_fn(coarsest.rows(), coarsest.cols(), |i, j| coarsest.get(i, j));
        let coarse_lu = dense.lu();
        if !coarse_lu.is_invertible() {
            return Err(Error::Conditioning {
                point: hierarchy.level(p - 1).point(0),
                row: None,
                rcond: 0.0,
            });
        }
        Ok(MlOperators {
            hierarchy,
            l,
            interp,
            restrict,
            coarse_lu,
        })
    }

    pub fn depth(&self) -> usize {
        self.l.len()
    }

    pub fn hierarchy(&self) -> &LevelHierarchy {
        &self.hierarchy
    }

    pub fn laplacian(&self, j: usize) -> &SparseOperator {
        &self.l[j]
    }

    pub fn interpolation(&self, j: usize) -> &SparseOperator {
        &self.interp[j]
    }

    pub fn restriction(&self, j: usize) -> &SparseOperator {
        &self.restrict[j]
    }

    /// Exact solve with the coarsest-level operator.
    pub fn coarse_solve(&self, r: &[f64]) -> Vec<f64> {
        let b = DVector::from_column_slice(r);
        // invertibility was checked at setup
        self.coarse_lu
            .solve(&b)
            .expect("coarsest operator factorized")
            .as_slice()
            .to_vec()
    }
}

/// Hierarchy plus operators for a domain/boundary pair.
pub fn mlpre(
    domain: &NodeSet,
    boundary: &NodeSet,
    params: &HierarchyParams,
    laplacian: &StencilConfig,
) -> Result<MlOperators> {
    let h = mlmfsub(domain, boundary, params)?;
    MlOperators::from_hierarchy(h, laplacian, &StencilConfig::interpolation())
}

/// Forward Gauss-Seidel sweeps in row order.
pub fn relax(u: &mut [f64], f: &[f64], l: &SparseOperator, sweeps: usize) -> Result<()> {
    for _ in 0..sweeps {
        for i in 0..l.rows() {
            let (cols, vals) = l.row(i);
            let mut diag = 0.0;
            let mut s = f[i];
            for (&j, &w) in cols.iter().zip(vals) {
                if j == i {
                    diag = w;
                } else {
                    s -= w * u[j];
                }
            }
            if diag == 0.0 {
                return Err(Error::Smoother { row: i });
            }
            u[i] = s / diag;
        }
    }
    Ok(())
}

fn add_assign(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// One V-cycle, updating `u` in place.
pub fn mlvcyc(u: &mut [f64], f: &[f64], ops: &MlOperators, nu1: usize, nu2: usize) -> Result<()> {
    let p = ops.depth();
    if p == 1 {
        let x = ops.coarse_solve(f);
        u.copy_from_slice(&x);
        return Ok(());
    }
    relax(u, f, &ops.l[0], nu1)?;
    // r[j] and e[j] are indexed by level; index 0 is unused
    let mut r: Vec<Vec<f64>> = vec![Vec::new(); p];
    let mut e: Vec<Vec<f64>> = vec![Vec::new(); p];
    r[1] = ops.restrict[0].apply(&ops.l[0].residual(f, u));
    for j in 1..p - 1 {
        let mut ej = vec![0.0; r[j].len()];
        relax(&mut ej, &r[j], &ops.l[j], nu1)?;
        r[j + 1] = ops.restrict[j].apply(&ops.l[j].residual(&r[j], &ej));
        e[j] = ej;
    }
    e[p - 1] = ops.coarse_solve(&r[p - 1]);
    for j in (1..p - 1).rev() {
        let corr = ops.interp[j].apply(&e[j + 1]);
        add_assign(&mut e[j], &corr);
        relax(&mut e[j], &r[j], &ops.l[j], nu2)?;
    }
    let corr = ops.interp[0].apply(&e[1]);
    add_assign(u, &corr);
    relax(u, f, &ops.l[0], nu2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Stagnated,
    Diverged,
    /// The initial residual was already zero.
    ExactStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub residual_history: Vec<f64>,
    pub convergence_factors: Vec<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub max_relative_error: Option<f64>,
    #[serde(default)]
    pub level_sizes: Vec<usize>,
}

impl SolveReport {
    pub fn final_relative_residual(&self) -> Option<f64> {
        self.residual_history.last().copied()
    }

    /// `iteration,relres,convfactor`, one line per completed V-cycle.
    pub fn residual_csv(&self) -> String {
        let mut s = String::from("iteration,relres,convfactor\n");
        for (i, r) in self.residual_history.iter().enumerate() {
            let _ = writeln!(s, "{},{:.17e},{:.17e}", i + 1, r, self.convergence_factors[i]);
        }
        s
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        crate::nodeset::write_atomic(path.as_ref(), s.as_bytes())
    }

    pub fn write_residual_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::nodeset::write_atomic(path.as_ref(), self.residual_csv().as_bytes())
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs V-cycles while fewer than `i_max` have completed and the relative residual
/// is at least `tol`. Also stops after five consecutive convergence factors of at
/// least 0.999, and fails once the relative residual exceeds the divergence limit.
pub fn mlsolver(u: &mut [f64], f: &[f64], ops: &MlOperators, settings: &MlSettings) -> Result<SolveReport> {
    settings.validate()?;
    let start = Instant::now();
    let l1 = &ops.l[0];
    let r0 = norm2(&l1.residual(f, u));
    let mut report = SolveReport {
        residual_history: Vec::new(),
        convergence_factors: Vec::new(),
        iterations: 0,
        status: SolveStatus::MaxIterations,
        setup_seconds: 0.0,
        solve_seconds: 0.0,
        max_relative_error: None,
        level_sizes: ops.hierarchy.level_sizes(),
    };
    if r0 == 0.0 {
        report.status = SolveStatus::ExactStart;
        report.solve_seconds = start.elapsed().as_secs_f64();
        return Ok(report);
    }
    let mut relres = 1.0;
    let mut prev = r0;
    let mut slow = 0;
    while report.iterations < settings.i_max && relres >= settings.tol {
        mlvcyc(u, f, ops, settings.nu1, settings.nu2)?;
        report.iterations += 1;
        let rn = norm2(&l1.residual(f, u));
        relres = rn / r0;
        let factor = rn / prev;
        prev = rn;
        report.residual_history.push(relres);
        report.convergence_factors.push(factor);
        if relres.is_nan() || relres > DIVERGENCE_LIMIT {
            report.status = SolveStatus::Diverged;
            report.solve_seconds = start.elapsed().as_secs_f64();
            return Err(Error::Divergence {
                report: Box::new(report),
            });
        }
        slow = if factor >= STAGNATION_FACTOR { slow + 1 } else { 0 };
        if slow >= STAGNATION_RUN {
            report.status = SolveStatus::Stagnated;
            break;
        }
    }
    if report.status != SolveStatus::Stagnated && relres < settings.tol {
        report.status = SolveStatus::Converged;
    }
    report.solve_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// `max |u - u_exact| / max |u_exact|`.
pub fn max_relative_error(u: &[f64], exact: &[f64]) -> f64 {
    let num = u.iter().zip(exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let den = exact.iter().map(|v| v.abs()).fold(0.0, f64::max);
    num / den
}

/// Result of a full solve on the disk.
#[derive(Debug, Clone)]
pub struct DiskSolution {
    /// Finest-level nodes (interior first, then boundary) matching `u`.
    pub nodes: NodeSet,
    pub u: Vec<f64>,
    pub u_exact: Vec<f64>,
    pub report: SolveReport,
}

/// Sets up the hierarchy and operators for `problem` on the given nodes, solves from
/// a zero initial guess, and records the error against the exact solution.
pub fn solve_disk_problem(
    domain: &NodeSet,
    boundary: &NodeSet,
    problem: &TestProblem,
    m_l: u32,
    hierarchy: &HierarchyParams,
    settings: &MlSettings,
) -> Result<DiskSolution> {
    let t0 = Instant::now();
    let ops = mlpre(domain, boundary, hierarchy, &StencilConfig::for_laplacian(m_l))?;
    let nodes = ops.hierarchy().level(0).clone();
    let samples = evaluate_problem(problem, &nodes)?;
    let mask = nodes.boundary_mask();
    let rhs: Vec<f64> = (0..nodes.len())
        .map(|i| if mask[i] { samples.g[i] } else { samples.f[i] })
        .collect();
    let setup_seconds = t0.elapsed().as_secs_f64();
    let mut u = vec![0.0; nodes.len()];
    let mut report = mlsolver(&mut u, &rhs, &ops, settings)?;
    report.setup_seconds = setup_seconds;
    report.max_relative_error = Some(max_relative_error(&u, &samples.u_exact));
    Ok(DiskSolution {
        nodes,
        u,
        u_exact: samples.u_exact,
        report,
    })
}
