//! Offline value iteration over ball cells.

use alloc::vec;
use alloc::vec::Vec;

use crate::field::{BallOutcome, CellId, FieldSpec};

use super::{
    offline_entry_cost, transition_distribution, ActionSet, ApproachModel, PlannerError,
    RewardParams,
};

/// Expected time-to-score per grid cell, seconds, row-major
/// (`index = row * cols + col`). Goals terminate with value 0 by
/// convention, so every stored value is non-negative.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueFunction {
    cols: u32,
    rows: u32,
    values: Vec<f64>,
}

impl ValueFunction {
    pub fn zeros(cols: u32, rows: u32) -> Self {
        ValueFunction {
            cols,
            rows,
            values: vec![0.0; cols as usize * rows as usize],
        }
    }

    pub fn from_values(cols: u32, rows: u32, values: Vec<f64>) -> Result<Self, PlannerError> {
        if values.len() != cols as usize * rows as usize {
            return Err(PlannerError::GridMismatch {
                expected: (cols, rows),
                got: (values.len() as u32, 1),
            });
        }
        Ok(ValueFunction { cols, rows, values })
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, cell: CellId) -> f64 {
        debug_assert!(cell.col < self.cols && cell.row < self.rows);
        self.values[cell.row as usize * self.cols as usize + cell.col as usize]
    }

    pub fn set(&mut self, cell: CellId, value: f64) {
        debug_assert!(cell.col < self.cols && cell.row < self.rows);
        self.values[cell.row as usize * self.cols as usize + cell.col as usize] = value;
    }

    /// True when the grid shape matches the field discretization.
    pub fn matches_grid(&self, field: &FieldSpec) -> bool {
        self.cols == field.cols() && self.rows == field.rows()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Converged value function plus solver diagnostics.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub value: ValueFunction,
    pub iterations: usize,
    pub residual: f64,
    /// Sup-norm residual after each sweep.
    pub residual_history: Vec<f64>,
}

/// One action's compiled backup at one cell: constant cost plus the
/// value continuation stencil.
struct CompiledAction {
    base_cost: f64,
    continuations: Vec<(u32, f64)>,
}

/// Solves the shortest-time fixed point
/// `V(s) = min_a E[c(s, s') + V(s')]` by Jacobi value iteration from
/// `V = 0`, sweeping until the sup-norm residual drops below
/// `epsilon`.
///
/// Transition distributions are integrated once up front with
/// `quadrature_points` angle nodes. Costs are the kick execution time,
/// the canonical travel time to the next ball position, the
/// out-of-field penalty, and the own-goal penalty; scoring terminates
/// at cost 0.
pub fn solve_value_function(
    field: &FieldSpec,
    actions: &ActionSet,
    approach: &ApproachModel,
    reward: &RewardParams,
    epsilon: f64,
    max_iters: usize,
    quadrature_points: usize,
) -> Result<SolveOutcome, PlannerError> {
    actions.validate()?;
    approach.validate()?;
    reward.validate()?;
    if !(epsilon > 0.0) {
        return Err(PlannerError::InvalidModel("epsilon must be positive"));
    }
    if max_iters == 0 {
        return Err(PlannerError::InvalidModel("max_iters must be at least 1"));
    }

    let cols = field.cols();
    let rows = field.rows();
    let n = field.cell_count();
    let n_actions = actions.len();

    let mut compiled: Vec<CompiledAction> = Vec::with_capacity(n * n_actions);
    for row in 0..rows {
        for col in 0..cols {
            let s = CellId::new(col, row);
            for action in actions.actions() {
                let trans = transition_distribution(s, &action, field, quadrature_points)?;
                let mut base_cost = action.kick.execution_time_s;
                let mut continuations = Vec::new();
                for &(outcome, p) in trans.entries() {
                    base_cost += p * offline_entry_cost(field, s, outcome, approach, reward);
                    match outcome {
                        BallOutcome::InPlay(c) => {
                            continuations.push((field.cell_index(c) as u32, p));
                        }
                        BallOutcome::OutOfField { reentry } => {
                            continuations.push((field.cell_index(reentry) as u32, p));
                        }
                        BallOutcome::GoalFor | BallOutcome::GoalAgainst => {}
                    }
                }
                compiled.push(CompiledAction {
                    base_cost,
                    continuations,
                });
            }
        }
    }

    let mut v = vec![0.0f64; n];
    let mut v_next = vec![0.0f64; n];
    let mut residual_history = Vec::new();
    for iteration in 1..=max_iters {
        let mut residual = 0.0f64;
        for i in 0..n {
            let mut best = f64::INFINITY;
            for a in 0..n_actions {
                let ca = &compiled[i * n_actions + a];
                let mut q = ca.base_cost;
                for &(j, p) in &ca.continuations {
                    q += p * v[j as usize];
                }
                if q < best {
                    best = q;
                }
            }
            v_next[i] = best;
            let delta = (best - v[i]).abs();
            if delta > residual {
                residual = delta;
            }
        }
        core::mem::swap(&mut v, &mut v_next);
        residual_history.push(residual);
        if residual < epsilon {
            return Ok(SolveOutcome {
                value: ValueFunction {
                    cols,
                    rows,
                    values: v,
                },
                iterations: iteration,
                residual,
                residual_history,
            });
        }
    }
    Err(PlannerError::NoConvergence {
        residual: *residual_history.last().expect("at least one sweep ran"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::KickModel;
    use approx::assert_relative_eq;

    /// One cell, one deterministic scoring kick: the value is exactly
    /// the canonical travel to the goal (1 m at 0.2 m/s = 5 s).
    #[test]
    fn single_cell_one_step_termination() {
        let field = FieldSpec::new(2.0, 2.0, 1.0, 0.5, 2.0, 0.5).unwrap();
        assert_eq!((field.cols(), field.rows()), (1, 1));
        // The deterministic kick always scores, so the cell is worth
        // exactly one kick execution: goals charge no approach walk.
        let actions = ActionSet {
            kicks: alloc::vec![KickModel::new("straight", 2.0, 0.0, 0.0, 5.0)],
            orientation_count: 1,
        };
        let approach = ApproachModel {
            walk_speed_mps: 0.2,
            turn_speed_radps: 1.0,
            placement_overhead_s: 0.0,
        };
        let out = solve_value_function(
            &field,
            &actions,
            &approach,
            &RewardParams::default(),
            1e-9,
            100,
            7,
        )
        .unwrap();
        assert_relative_eq!(out.value.get(CellId::new(0, 0)), 5.0, epsilon = 1e-12);
        assert!(out.residual < 1e-9);
    }

    #[test]
    fn values_are_finite_and_nonnegative_on_default_field() {
        let field = FieldSpec::default();
        let out = solve_value_function(
            &field,
            &ActionSet::default(),
            &ApproachModel::default(),
            &RewardParams::default(),
            1e-2,
            10_000,
            7,
        )
        .unwrap();
        for &v in out.value.values() {
            assert!(v.is_finite());
            assert!(v >= 0.0);
        }
        // Scoring from next to the goal must be faster than from our
        // own corner.
        let near_goal = out.value.get(CellId::new(35, 11));
        let far_corner = out.value.get(CellId::new(0, 0));
        assert!(near_goal < far_corner);
    }

    #[test]
    fn improper_process_reports_no_convergence() {
        // A pass too short to ever reach the goal line from the far
        // half still converges (out-of-field recycles the ball), so
        // instead starve the iteration budget.
        let field = FieldSpec::default();
        let err = solve_value_function(
            &field,
            &ActionSet::default(),
            &ApproachModel::default(),
            &RewardParams::default(),
            1e-9,
            2,
            7,
        )
        .unwrap_err();
        assert!(matches!(err, PlannerError::NoConvergence { .. }));
    }

    #[test]
    fn rejects_bad_parameters() {
        let field = FieldSpec::default();
        let bad = solve_value_function(
            &field,
            &ActionSet::default(),
            &ApproachModel::default(),
            &RewardParams::default(),
            0.0,
            10,
            7,
        );
        assert!(bad.is_err());
        let empty = solve_value_function(
            &field,
            &ActionSet {
                kicks: alloc::vec![],
                orientation_count: 16,
            },
            &ApproachModel::default(),
            &RewardParams::default(),
            1e-3,
            10,
            7,
        );
        assert!(empty.is_err());
    }
}
