//! Kick planning: action models, stochastic ball-transition
//! distributions, offline value iteration and the online depth-one
//! policy with game-context shaping.
//!
//! The planner treats play as a shortest-time Markov decision process
//! over ball cells. Costs are seconds; the optimal policy minimizes
//! expected time to score. (A reward-maximization reading of the same
//! model is recovered by `reward = -cost`.)

mod solve;
mod transition;

pub use solve::{solve_value_function, SolveOutcome, ValueFunction};
pub use transition::{transition_distribution, TransitionDistribution, TRUNCATION_SIGMAS};

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::angles::wrap_angle;
use crate::field::{BallOutcome, CellId, FieldSpec};
use crate::geom::{point_segment_distance, Point2, Pose};

/// Distances below this count as "already at the ball".
const AT_BALL_EPS_M: f64 = 1e-9;

/// Errors raised by planner configuration, integration and solving.
#[derive(Clone, Debug, PartialEq)]
pub enum PlannerError {
    /// A model parameter violates its documented range.
    InvalidModel(&'static str),
    /// The kick is too weak for the grid: distances within four sigma
    /// of the mean stay below one grid resolution.
    DegenerateKick { kick: String },
    /// Value iteration hit the iteration cap before reaching the
    /// target residual; signals an improper process (e.g. no goal
    /// reachable).
    NoConvergence { residual: f64 },
    /// Value function shape does not match the field grid.
    GridMismatch {
        expected: (u32, u32),
        got: (u32, u32),
    },
}

impl fmt::Display for PlannerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlannerError::InvalidModel(what) => write!(f, "invalid planner model: {what}"),
            PlannerError::DegenerateKick { kick } => {
                write!(f, "kick '{kick}' cannot leave a grid cell within four sigma")
            }
            PlannerError::NoConvergence { residual } => {
                write!(f, "value iteration did not converge (residual {residual:.6})")
            }
            PlannerError::GridMismatch { expected, got } => write!(
                f,
                "value function grid is {}x{}, field grid is {}x{}",
                got.0, got.1, expected.0, expected.1
            ),
        }
    }
}

impl core::error::Error for PlannerError {}

/// A parameterized kick: how far and how precisely the ball travels,
/// and how long the kick motion takes.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KickModel {
    pub name: String,
    pub mean_distance_m: f64,
    pub sigma_distance_m: f64,
    pub sigma_angle_rad: f64,
    pub execution_time_s: f64,
    /// Heading offset between the robot's facing and the ball's travel
    /// direction during the kick: 0 for a forward kick, +pi/2 for a
    /// lateral kick to the robot's left.
    #[cfg_attr(feature = "serde", serde(default))]
    pub facing_offset_rad: f64,
}

impl KickModel {
    pub fn new(
        name: &str,
        mean_distance_m: f64,
        sigma_distance_m: f64,
        sigma_angle_rad: f64,
        execution_time_s: f64,
    ) -> Self {
        Self {
            name: String::from(name),
            mean_distance_m,
            sigma_distance_m,
            sigma_angle_rad,
            execution_time_s,
            facing_offset_rad: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        if !(self.mean_distance_m > 0.0) || !self.mean_distance_m.is_finite() {
            return Err(PlannerError::InvalidModel("kick mean distance must be positive"));
        }
        if !(self.sigma_distance_m >= 0.0) || !(self.sigma_angle_rad >= 0.0) {
            return Err(PlannerError::InvalidModel("kick sigmas must be non-negative"));
        }
        if !(self.execution_time_s >= 0.0) {
            return Err(PlannerError::InvalidModel("kick execution time must be non-negative"));
        }
        if !self.facing_offset_rad.is_finite() {
            return Err(PlannerError::InvalidModel("kick facing offset must be finite"));
        }
        Ok(())
    }
}

/// The action set: a kick catalog crossed with evenly spaced aim
/// directions. Action `(kick, o)` aims at `2*pi*o / orientation_count`
/// in the field frame.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ActionSet {
    pub kicks: Vec<KickModel>,
    pub orientation_count: u32,
}

impl Default for ActionSet {
    /// Three-kick catalog: a powerful clearance, a short pass and a
    /// lateral kick struck side-on, each with 15% distance noise and
    /// 10 degrees of aim noise; 16 aim directions.
    fn default() -> Self {
        let deg10 = 10.0f64.to_radians();
        let mut lateral = KickModel::new("lateral", 1.5, 0.225, deg10, 3.0);
        lateral.facing_offset_rad = core::f64::consts::FRAC_PI_2;
        ActionSet {
            kicks: alloc::vec![
                KickModel::new("powerful", 7.0, 1.05, deg10, 3.0),
                KickModel::new("pass", 2.0, 0.30, deg10, 3.0),
                lateral,
            ],
            orientation_count: 16,
        }
    }
}

impl ActionSet {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if self.kicks.is_empty() {
            return Err(PlannerError::InvalidModel("action set needs at least one kick"));
        }
        if self.orientation_count == 0 {
            return Err(PlannerError::InvalidModel("orientation count must be positive"));
        }
        for kick in &self.kicks {
            kick.validate()?;
        }
        Ok(())
    }

    /// Number of actions (kicks x orientations).
    pub fn len(&self) -> usize {
        self.kicks.len() * self.orientation_count as usize
    }

    pub fn is_empty(&self) -> bool {
        self.kicks.is_empty()
    }

    /// Aim angle of an orientation index, wrapped to `(-pi, pi]`.
    pub fn aim_rad(&self, orientation_index: u32) -> f64 {
        debug_assert!(orientation_index < self.orientation_count);
        wrap_angle(TAU * orientation_index as f64 / self.orientation_count as f64)
    }

    pub fn action(&self, kick_index: usize, orientation_index: u32) -> KickAction {
        KickAction {
            kick: self.kicks[kick_index].clone(),
            kick_index,
            orientation_index,
            orientation_count: self.orientation_count,
        }
    }

    /// All actions, kicks in catalog order, orientations ascending.
    pub fn actions(&self) -> impl Iterator<Item = KickAction> + '_ {
        self.kicks.iter().enumerate().flat_map(move |(ki, kick)| {
            (0..self.orientation_count).map(move |o| KickAction {
                kick: kick.clone(),
                kick_index: ki,
                orientation_index: o,
                orientation_count: self.orientation_count,
            })
        })
    }

    /// Orientation index whose aim is closest to `angle`.
    pub fn nearest_orientation(&self, angle: f64) -> u32 {
        let n = self.orientation_count;
        let step = TAU / n as f64;
        let idx = (wrap_angle(angle) / step).round() as i64;
        idx.rem_euclid(n as i64) as u32
    }
}

/// One concrete action: a kick from the catalog plus a discrete aim.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KickAction {
    pub kick: KickModel,
    pub kick_index: usize,
    pub orientation_index: u32,
    pub orientation_count: u32,
}

impl KickAction {
    /// Ball travel direction in the field frame.
    pub fn aim_rad(&self) -> f64 {
        debug_assert!(self.orientation_index < self.orientation_count);
        wrap_angle(TAU * self.orientation_index as f64 / self.orientation_count as f64)
    }

    /// Robot heading required to strike the ball along the aim.
    pub fn facing_rad(&self) -> f64 {
        wrap_angle(self.aim_rad() - self.kick.facing_offset_rad)
    }
}

/// Walking and ball-placement timing of the robot.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ApproachModel {
    pub walk_speed_mps: f64,
    pub turn_speed_radps: f64,
    pub placement_overhead_s: f64,
}

impl Default for ApproachModel {
    fn default() -> Self {
        ApproachModel {
            walk_speed_mps: 0.15,
            turn_speed_radps: 1.0,
            placement_overhead_s: 2.0,
        }
    }
}

impl ApproachModel {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if !(self.walk_speed_mps > 0.0) || !(self.turn_speed_radps > 0.0) {
            return Err(PlannerError::InvalidModel("approach speeds must be positive"));
        }
        if !(self.placement_overhead_s >= 0.0) {
            return Err(PlannerError::InvalidModel("placement overhead must be non-negative"));
        }
        Ok(())
    }
}

/// Penalty terms of the shaped cost (the planner's reward knowledge).
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RewardParams {
    /// Time lost when the ball leaves the field.
    pub out_penalty_s: f64,
    /// Cost of scoring when direct goals are not allowed; also charged
    /// for scoring into our own goal.
    pub forbidden_goal_penalty_s: f64,
    /// Width of the corridor around the kick ray checked against
    /// opponents.
    pub opponent_corridor_width_m: f64,
    /// Cost of kicking through an opponent's corridor.
    pub opponent_penalty_s: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            out_penalty_s: 15.0,
            forbidden_goal_penalty_s: 300.0,
            opponent_corridor_width_m: 0.4,
            opponent_penalty_s: 10.0,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), PlannerError> {
        let vals = [
            self.out_penalty_s,
            self.forbidden_goal_penalty_s,
            self.opponent_corridor_width_m,
            self.opponent_penalty_s,
        ];
        if vals.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(PlannerError::InvalidModel("reward parameters must be non-negative"));
        }
        Ok(())
    }
}

/// Referee situation relevant to the kick decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RestartState {
    #[default]
    Normal,
    /// We have kick-off and the ball has not left the centre circle
    /// yet, so a direct goal would not count.
    KickoffOursBallNotInPlay,
    ThrowIn,
    IndirectPenalty,
}

impl RestartState {
    /// True when scoring directly from the next kick is disallowed.
    pub fn forbids_direct_goal(self) -> bool {
        !matches!(self, RestartState::Normal)
    }
}

/// Everything the online policy knows about the current game beyond
/// the ball cell.
#[derive(Clone, Debug, PartialEq)]
pub struct GameContext {
    pub kicker_pose: Pose,
    pub teammate_poses: Vec<Pose>,
    /// Opponent positions when available from perception.
    pub opponent_positions: Option<Vec<Point2>>,
    pub restart_state: RestartState,
}

impl GameContext {
    /// A context with no game knowledge: alone on the field, normal
    /// play. The online policy then reduces to the offline greedy one.
    pub fn empty(kicker_pose: Pose) -> Self {
        GameContext {
            kicker_pose,
            teammate_poses: Vec::new(),
            opponent_positions: None,
            restart_state: RestartState::Normal,
        }
    }

    pub fn validate(&self, field: &FieldSpec) -> Result<(), PlannerError> {
        let poses = core::iter::once(&self.kicker_pose).chain(self.teammate_poses.iter());
        for pose in poses {
            if !field.in_domain(pose.position()) {
                return Err(PlannerError::InvalidModel("robot pose outside the field domain"));
            }
        }
        if let Some(opponents) = &self.opponent_positions {
            if opponents.iter().any(|p| !field.in_domain(*p)) {
                return Err(PlannerError::InvalidModel("opponent outside the field domain"));
            }
        }
        Ok(())
    }
}

/// Time for the robot to get behind the ball and be ready to kick with
/// heading `kick_aim`: turn toward the ball, walk, align, place.
pub fn time_to_reach(robot_pose: Pose, ball: Point2, kick_aim: f64, model: &ApproachModel) -> f64 {
    let dist = robot_pose.position().distance(ball);
    let (turn_to_ball, align) = if dist > AT_BALL_EPS_M {
        let bearing = robot_pose.position().angle_to(ball);
        (
            wrap_angle(bearing - robot_pose.theta).abs(),
            wrap_angle(kick_aim - bearing).abs(),
        )
    } else {
        // Already at the ball: only the final alignment remains.
        (0.0, wrap_angle(kick_aim - robot_pose.theta).abs())
    };
    (turn_to_ball + align) / model.turn_speed_radps
        + dist / model.walk_speed_mps
        + model.placement_overhead_s
}

/// Plain travel time to a point, aiming along the approach direction
/// (no extra alignment turn).
pub(crate) fn time_to_point(pose: Pose, target: Point2, model: &ApproachModel) -> f64 {
    let dist = pose.position().distance(target);
    if dist <= AT_BALL_EPS_M {
        return model.placement_overhead_s;
    }
    let bearing = pose.position().angle_to(target);
    time_to_reach(pose, target, bearing, model)
}

/// Representative point of an outcome: the continuation cell centre,
/// or the goal mouth centre for terminal outcomes.
pub(crate) fn outcome_point(field: &FieldSpec, outcome: BallOutcome) -> Point2 {
    match outcome {
        BallOutcome::InPlay(c) => field.center_of(c),
        BallOutcome::OutOfField { reentry } => field.center_of(reentry),
        BallOutcome::GoalFor => field.opponent_goal_center(),
        BallOutcome::GoalAgainst => field.own_goal_center(),
    }
}

/// Travel cost from the previous ball cell to the next ball position
/// under the canonical offline assumption: the robot stands at the old
/// ball position already facing the new one.
pub(crate) fn canonical_step_cost(
    field: &FieldSpec,
    from: CellId,
    target: Point2,
    model: &ApproachModel,
) -> f64 {
    field.center_of(from).distance(target) / model.walk_speed_mps + model.placement_overhead_s
}

/// Offline cost charged on one transition outcome, excluding the value
/// continuation: canonical travel to the next kick position plus
/// boundary penalties. Goals are terminal, so no approach walk is
/// charged; scoring costs nothing and conceding costs its penalty.
pub(crate) fn offline_entry_cost(
    field: &FieldSpec,
    s: CellId,
    outcome: BallOutcome,
    approach: &ApproachModel,
    reward: &RewardParams,
) -> f64 {
    match outcome {
        BallOutcome::InPlay(_) => {
            canonical_step_cost(field, s, outcome_point(field, outcome), approach)
        }
        BallOutcome::OutOfField { .. } => {
            canonical_step_cost(field, s, outcome_point(field, outcome), approach)
                + reward.out_penalty_s
        }
        BallOutcome::GoalFor => 0.0,
        BallOutcome::GoalAgainst => reward.forbidden_goal_penalty_s,
    }
}

/// Value continuation of an outcome: goals terminate with 0, the ball
/// otherwise continues in play (out-of-field continues at re-entry).
pub(crate) fn continuation_value(v: &ValueFunction, outcome: BallOutcome) -> f64 {
    match outcome {
        BallOutcome::InPlay(c) => v.get(c),
        BallOutcome::OutOfField { reentry } => v.get(reentry),
        BallOutcome::GoalFor | BallOutcome::GoalAgainst => 0.0,
    }
}

/// Game-context shaping cost of one outcome, in seconds.
///
/// Sums the forbidden-direct-goal penalty, the out-of-field penalty,
/// the teammate handover term (time for the best-placed robot to reach
/// the continuation point minus the kicker's own time; negative when a
/// teammate is better placed) and the opponent corridor penalty. The
/// teammate term is omitted for terminal outcomes.
pub fn shaped_cost(
    s: CellId,
    outcome: BallOutcome,
    ctx: &GameContext,
    field: &FieldSpec,
    approach: &ApproachModel,
    reward: &RewardParams,
) -> f64 {
    let target = outcome_point(field, outcome);
    let mut cost = 0.0;
    match outcome {
        BallOutcome::GoalFor => {
            if ctx.restart_state.forbids_direct_goal() {
                cost += reward.forbidden_goal_penalty_s;
            }
        }
        BallOutcome::GoalAgainst => {}
        BallOutcome::InPlay(_) | BallOutcome::OutOfField { .. } => {
            if matches!(outcome, BallOutcome::OutOfField { .. }) {
                cost += reward.out_penalty_s;
            }
            let t_kicker = time_to_point(ctx.kicker_pose, target, approach);
            let t_closest = ctx
                .teammate_poses
                .iter()
                .map(|p| time_to_point(*p, target, approach))
                .fold(t_kicker, f64::min);
            cost += t_closest - t_kicker;
        }
    }
    if let Some(opponents) = &ctx.opponent_positions {
        let origin = field.center_of(s);
        let half_corridor = reward.opponent_corridor_width_m / 2.0;
        if opponents
            .iter()
            .any(|o| point_segment_distance(*o, origin, target) < half_corridor)
        {
            cost += reward.opponent_penalty_s;
        }
    }
    cost
}

/// Shaped per-outcome cost used by the online policy: the offline
/// travel term plus the game-context shaping. The out-of-field penalty
/// lives in the shaping term, the own-goal penalty in the base, so
/// that with an empty context this equals [`offline_entry_cost`]
/// exactly.
fn online_entry_cost(
    field: &FieldSpec,
    s: CellId,
    outcome: BallOutcome,
    ctx: &GameContext,
    approach: &ApproachModel,
    reward: &RewardParams,
) -> f64 {
    let base = match outcome {
        BallOutcome::GoalFor => 0.0,
        BallOutcome::GoalAgainst => reward.forbidden_goal_penalty_s,
        BallOutcome::InPlay(_) | BallOutcome::OutOfField { .. } => {
            canonical_step_cost(field, s, outcome_point(field, outcome), approach)
        }
    };
    base + shaped_cost(s, outcome, ctx, field, approach, reward)
}

/// Expected cost of one action from `ball`, depth one against `v`.
/// `ctx = None` gives the offline objective (used by the greedy
/// policy); `Some` adds the game-context shaping.
#[allow(clippy::too_many_arguments)]
fn expected_action_cost(
    ball: CellId,
    action: &KickAction,
    ctx: Option<&GameContext>,
    v: &ValueFunction,
    field: &FieldSpec,
    approach: &ApproachModel,
    reward: &RewardParams,
    quadrature_points: usize,
) -> Result<f64, PlannerError> {
    let trans = transition_distribution(ball, action, field, quadrature_points)?;
    let mut cost = action.kick.execution_time_s;
    for &(outcome, p) in trans.entries() {
        let entry = match ctx {
            Some(ctx) => online_entry_cost(field, ball, outcome, ctx, approach, reward),
            None => offline_entry_cost(field, ball, outcome, approach, reward),
        };
        cost += p * (entry + continuation_value(v, outcome));
    }
    Ok(cost)
}

/// Expected cost of one action, exposed for diagnostics.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ActionScore {
    pub kick_index: usize,
    pub kick_name: String,
    pub orientation_index: u32,
    pub aim_rad: f64,
    pub expected_cost_s: f64,
}

/// The chosen action together with every candidate's expected cost.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub action: KickAction,
    pub scores: Vec<ActionScore>,
}

#[allow(clippy::too_many_arguments)]
fn decide(
    ball: CellId,
    ctx: Option<&GameContext>,
    v: &ValueFunction,
    field: &FieldSpec,
    actions: &ActionSet,
    approach: &ApproachModel,
    reward: &RewardParams,
    quadrature_points: usize,
) -> Result<Decision, PlannerError> {
    actions.validate()?;
    if !v.matches_grid(field) {
        return Err(PlannerError::GridMismatch {
            expected: (field.cols(), field.rows()),
            got: (v.cols(), v.rows()),
        });
    }
    let mut scores = Vec::with_capacity(actions.len());
    for action in actions.actions() {
        let expected_cost_s = expected_action_cost(
            ball,
            &action,
            ctx,
            v,
            field,
            approach,
            reward,
            quadrature_points,
        )?;
        scores.push(ActionScore {
            kick_index: action.kick_index,
            kick_name: action.kick.name.clone(),
            orientation_index: action.orientation_index,
            aim_rad: action.aim_rad(),
            expected_cost_s,
        });
    }
    let best = scores
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            a.expected_cost_s
                .total_cmp(&b.expected_cost_s)
                .then(a.orientation_index.cmp(&b.orientation_index))
                .then(a.kick_name.cmp(&b.kick_name))
        })
        .map(|(i, _)| i)
        .expect("validated action set is non-empty");
    let action = actions.action(scores[best].kick_index, scores[best].orientation_index);
    Ok(Decision { action, scores })
}

/// Online depth-one policy: picks the action minimizing the expected
/// shaped cost plus value continuation. Ties break toward the smallest
/// orientation index, then kick name.
#[allow(clippy::too_many_arguments)]
pub fn choose_action(
    ball: CellId,
    ctx: &GameContext,
    v: &ValueFunction,
    field: &FieldSpec,
    actions: &ActionSet,
    approach: &ApproachModel,
    reward: &RewardParams,
    quadrature_points: usize,
) -> Result<Decision, PlannerError> {
    debug_assert!(ctx.validate(field).is_ok());
    decide(ball, Some(ctx), v, field, actions, approach, reward, quadrature_points)
}

/// Greedy policy of the offline objective at one cell; what
/// [`choose_action`] degenerates to without game context.
#[allow(clippy::too_many_arguments)]
pub fn greedy_action(
    ball: CellId,
    v: &ValueFunction,
    field: &FieldSpec,
    actions: &ActionSet,
    approach: &ApproachModel,
    reward: &RewardParams,
    quadrature_points: usize,
) -> Result<Decision, PlannerError> {
    decide(ball, None, v, field, actions, approach, reward, quadrature_points)
}
