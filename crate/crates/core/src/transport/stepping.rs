//! Crank-Nicolson time stepping with a factorization reused across steps.

use crate::error::{Error, Result};
use crate::fespace::{l2_project_cell, l2_project_skeleton};
use crate::flow::FlowSolution;
use crate::mesh::Mesh;
use crate::sparse::{CondensedSolver, CsrMatrix};

use super::{TransportOperators, TransportProblem, TransportSpaces, TransportState};

/// Relative residual required of every linear solve.
pub const STEP_TOLERANCE: f64 = 1e-10;

/// Step counts may differ from `T / dt` by this relative amount.
const STEP_COUNT_SLACK: f64 = 1e-9;

/// `(M/dt + B/2) x^{n+1} = (M/dt - B/2) x^n + (F^n + F^{n+1}) / 2` with
/// the left-hand side factored once.
pub struct CrankNicolson {
    pub dt: f64,
    explicit: CsrMatrix,
    solver: CondensedSolver,
}

impl CrankNicolson {
    pub fn new(ops: &TransportOperators, mesh: &Mesh, dt: f64) -> Result<Self> {
        Self::from_matrices(&ops.mass, &ops.operator, ops.spaces.cell_blocks(mesh), dt)
    }

    /// `blocks` are the cell-local unknowns eliminated before factoring.
    pub fn from_matrices(mass: &CsrMatrix, operator: &CsrMatrix, blocks: Vec<Vec<usize>>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Problem(format!("time step {dt} must be positive")));
        }
        if mass.nrows != operator.nrows || mass.ncols != operator.ncols {
            return Err(Error::Problem("mass and operator dimensions differ".into()));
        }
        let implicit = CsrMatrix::linear_combination(1.0 / dt, mass, 0.5, operator);
        let explicit = CsrMatrix::linear_combination(1.0 / dt, mass, -0.5, operator);
        let solver = CondensedSolver::factor(implicit, blocks)?;
        Ok(Self { dt, explicit, solver })
    }

    /// Advance `x^n` to `x^{n+1}` given the loads at both time levels.
    pub fn step(&self, x: &[f64], load_n: &[f64], load_np1: &[f64]) -> Result<Vec<f64>> {
        let mut rhs = self.explicit.mul_vec(x);
        for ((r, a), b) in rhs.iter_mut().zip(load_n).zip(load_np1) {
            *r += 0.5 * (a + b);
        }
        self.solver.solve(&rhs, STEP_TOLERANCE)
    }
}

/// One step of Crank-Nicolson without reusing a factorization.
pub fn crank_nicolson_step(
    mass: &CsrMatrix,
    operator: &CsrMatrix,
    blocks: Vec<Vec<usize>>,
    dt: f64,
    x: &[f64],
    load_n: &[f64],
    load_np1: &[f64],
) -> Result<Vec<f64>> {
    CrankNicolson::from_matrices(mass, operator, blocks, dt)?.step(x, load_n, load_np1)
}

/// Initial data: cellwise L2 projection of `c0` into the cell space and
/// L2 projection onto the continuous trace space.
pub fn initial_state(mesh: &Mesh, spaces: &TransportSpaces, problem: &TransportProblem) -> Result<TransportState> {
    let c0 = &problem.c0;
    let c = l2_project_cell(mesh, &spaces.c, |x| c0(x))?;
    let cbar = l2_project_skeleton(mesh, &spaces.cbar, &|x, _| c0(x))?;
    Ok(TransportState { c, cbar, t: 0.0 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    /// `int phi c_h`.
    pub mass: f64,
    /// Mass change not accounted for by sources and boundary fluxes.
    pub drift: f64,
    /// `|drift|` over the magnitude of everything summed to form it: the
    /// gross initial and current mass and the gross fluxes so far. Net
    /// mass alone is no scale, since it can vanish for sign-changing data.
    pub relative_drift: f64,
}

pub struct TransportRun {
    pub operators: TransportOperators,
    pub final_state: TransportState,
    pub records: Vec<StepRecord>,
}

impl TransportRun {
    pub fn max_relative_drift(&self) -> f64 {
        self.records.iter().map(|r| r.relative_drift).fold(0.0, f64::max)
    }
}

/// Net rate at which material enters (sources plus boundary inflow minus
/// outflow) and the magnitude of its terms. The load already carries
/// sources and the prescribed fluxes.
fn net_rate(ops: &TransportOperators, load: &[f64], x: &[f64]) -> (f64, f64) {
    let net = load.iter().sum::<f64>() - ops.outflow_rate(x);
    let gross = load.iter().map(|v| v.abs()).sum::<f64>() + ops.gross_outflow(x);
    (net, gross)
}

/// Integrate from `t = 0` to `t_final` with `N = round(t_final / dt)` steps.
///
/// The observer sees the initial state (step 0) and every later one.
pub fn run_transport(
    mesh: &Mesh,
    flow: &FlowSolution,
    problem: &TransportProblem,
    t_final: f64,
    dt: f64,
    observer: &mut dyn FnMut(&TransportState, &StepRecord) -> Result<()>,
) -> Result<TransportRun> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Problem(format!("final time {t_final} must be positive")));
    }
    let ratio = t_final / dt;
    let n_steps = ratio.round() as usize;
    if n_steps == 0 || (ratio - n_steps as f64).abs() > STEP_COUNT_SLACK * ratio.max(1.0) {
        return Err(Error::Problem(format!("final time {t_final} is not a whole number of steps of {dt}")));
    }
    let ops = TransportOperators::new(mesh, flow, problem)?;
    let cn = CrankNicolson::new(&ops, mesh, dt)?;
    let mut state = initial_state(mesh, &ops.spaces, problem)?;
    let mut x = state.to_vector();
    let mass0 = ops.total_mass(&x);
    let gross0 = ops.gross_mass(&x);
    let mut load = ops.load(mesh, problem, 0.0)?;
    let mut rate = net_rate(&ops, &load, &x);
    let mut expected = 0.0;
    let mut flux_scale = 0.0;
    let first = StepRecord { step: 0, t: 0.0, mass: mass0, drift: 0.0, relative_drift: 0.0 };
    observer(&state, &first)?;
    let mut records = vec![first];
    for n in 1..=n_steps {
        let t = n as f64 * dt;
        let next_load = if problem.forcing.steady { load.clone() } else { ops.load(mesh, problem, t)? };
        x = cn.step(&x, &load, &next_load)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver(format!("non-finite concentration at step {n}")));
        }
        let next_rate = net_rate(&ops, &next_load, &x);
        expected += 0.5 * dt * (rate.0 + next_rate.0);
        flux_scale += 0.5 * dt * (rate.1 + next_rate.1);
        let mass = ops.total_mass(&x);
        let drift = mass - mass0 - expected;
        let denom = (gross0 + ops.gross_mass(&x) + flux_scale).max(f64::MIN_POSITIVE);
        let rec = StepRecord { step: n, t, mass, drift, relative_drift: drift.abs() / denom };
        state = TransportState::from_vector(&ops.spaces, &x, t);
        observer(&state, &rec)?;
        records.push(rec);
        load = next_load;
        rate = next_rate;
    }
    Ok(TransportRun { operators: ops, final_state: state, records })
}
