//! Field geometry: dimensions, grid discretization, landmark catalog and
//! classification of ball trajectories against the field boundary.

use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::geom::Point2;

/// Tolerance used when checking that the grid resolution divides the
/// field dimensions.
const DIVISIBILITY_EPS: f64 = 1e-9;

/// Errors produced by field construction and position lookups.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FieldError {
    /// A dimension was non-positive, non-finite, or inconsistent
    /// (goal wider than the field, circle larger than the field).
    InvalidSpec(&'static str),
    /// The grid resolution does not evenly divide length and width.
    ResolutionMismatch,
    /// A queried position lies beyond the field plus its out margin.
    PositionOutOfDomain { x: f64, y: f64 },
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::InvalidSpec(what) => write!(f, "invalid field spec: {what}"),
            FieldError::ResolutionMismatch => {
                write!(f, "grid resolution must evenly divide field length and width")
            }
            FieldError::PositionOutOfDomain { x, y } => {
                write!(f, "position ({x:.3}, {y:.3}) is outside the field domain")
            }
        }
    }
}

impl core::error::Error for FieldError {}

/// Grid cell address: `col` indexes along x (toward the opponent goal),
/// `row` along y. Cell (0, 0) is the corner at (-length/2, -width/2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CellId {
    pub col: u32,
    pub row: u32,
}

impl CellId {
    pub const fn new(col: u32, row: u32) -> Self {
        Self { col, row }
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.col, self.row)
    }
}

/// Result of a ball displacement, classified against the field boundary.
///
/// The variant order defines the sort order used by transition
/// distributions: in-play cells first, then terminal outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BallOutcome {
    /// Ball came to rest inside the field, in this cell.
    InPlay(CellId),
    /// Ball fully crossed the opponent goal line between the posts.
    GoalFor,
    /// Ball fully crossed our own goal line between the posts.
    GoalAgainst,
    /// Ball left the field elsewhere; play restarts at the cell nearest
    /// to the exit point.
    OutOfField { reentry: CellId },
}

/// Classes of point landmarks the localizer can observe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LandmarkClass {
    GoalPostBase,
    FieldCorner,
    TCrossing,
}

/// A point landmark at a known field position.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Landmark {
    pub class: LandmarkClass,
    pub position: Point2,
}

/// Field dimensions and grid discretization.
///
/// All lengths are metres. The field frame is centred on the centre
/// mark with `+x` toward the opponent goal. Use [`FieldSpec::new`] to
/// build a validated spec; the `Default` impl gives the kid-size
/// dimensions (9 m by 6 m, 0.25 m grid).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSpec {
    length_m: f64,
    width_m: f64,
    goal_width_m: f64,
    center_circle_radius_m: f64,
    grid_resolution_m: f64,
    out_margin_m: f64,
    cols: u32,
    rows: u32,
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::new(9.0, 6.0, 2.6, 0.75, 0.25, 0.7)
            .expect("default field dimensions are consistent")
    }
}

impl FieldSpec {
    pub fn new(
        length_m: f64,
        width_m: f64,
        goal_width_m: f64,
        center_circle_radius_m: f64,
        grid_resolution_m: f64,
        out_margin_m: f64,
    ) -> Result<Self, FieldError> {
        let dims = [
            length_m,
            width_m,
            goal_width_m,
            center_circle_radius_m,
            grid_resolution_m,
            out_margin_m,
        ];
        if dims.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(FieldError::InvalidSpec("all dimensions must be positive"));
        }
        if goal_width_m >= width_m {
            return Err(FieldError::InvalidSpec("goal must be narrower than the field"));
        }
        if center_circle_radius_m >= width_m / 2.0 || center_circle_radius_m >= length_m / 2.0 {
            return Err(FieldError::InvalidSpec("centre circle must fit inside the field"));
        }
        let cols = length_m / grid_resolution_m;
        let rows = width_m / grid_resolution_m;
        if (cols - cols.round()).abs() > DIVISIBILITY_EPS * cols.max(1.0)
            || (rows - rows.round()).abs() > DIVISIBILITY_EPS * rows.max(1.0)
        {
            return Err(FieldError::ResolutionMismatch);
        }
        let cols = cols.round() as u32;
        let rows = rows.round() as u32;
        if cols == 0 || rows == 0 {
            return Err(FieldError::InvalidSpec("grid must have at least one cell"));
        }
        Ok(Self {
            length_m,
            width_m,
            goal_width_m,
            center_circle_radius_m,
            grid_resolution_m,
            out_margin_m,
            cols,
            rows,
        })
    }

    pub fn length_m(&self) -> f64 {
        self.length_m
    }

    pub fn width_m(&self) -> f64 {
        self.width_m
    }

    pub fn goal_width_m(&self) -> f64 {
        self.goal_width_m
    }

    pub fn center_circle_radius_m(&self) -> f64 {
        self.center_circle_radius_m
    }

    pub fn grid_resolution_m(&self) -> f64 {
        self.grid_resolution_m
    }

    pub fn out_margin_m(&self) -> f64 {
        self.out_margin_m
    }

    pub fn half_length(&self) -> f64 {
        self.length_m / 2.0
    }

    pub fn half_width(&self) -> f64 {
        self.width_m / 2.0
    }

    /// Grid columns (along x).
    pub fn cols(&self) -> u32 {
        self.cols
    }

    /// Grid rows (along y).
    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cell_count(&self) -> usize {
        self.cols as usize * self.rows as usize
    }

    /// Row-major flat index of a cell.
    pub fn cell_index(&self, cell: CellId) -> usize {
        debug_assert!(cell.col < self.cols && cell.row < self.rows);
        cell.row as usize * self.cols as usize + cell.col as usize
    }

    /// Centre point of the opponent goal mouth.
    pub fn opponent_goal_center(&self) -> Point2 {
        Point2::new(self.half_length(), 0.0)
    }

    /// Centre point of our own goal mouth.
    pub fn own_goal_center(&self) -> Point2 {
        Point2::new(-self.half_length(), 0.0)
    }

    /// True when `p` lies inside the field rectangle (boundary included).
    pub fn contains(&self, p: Point2) -> bool {
        p.x.abs() <= self.half_length() && p.y.abs() <= self.half_width()
    }

    /// True when `p` lies inside the field or within the out margin.
    pub fn in_domain(&self, p: Point2) -> bool {
        p.x.abs() <= self.half_length() + self.out_margin_m
            && p.y.abs() <= self.half_width() + self.out_margin_m
    }

    pub fn in_center_circle(&self, p: Point2) -> bool {
        p.norm() <= self.center_circle_radius_m
    }

    /// Cell containing `p`, for positions in the field or within the out
    /// margin; out-margin positions map to the nearest boundary cell.
    ///
    /// Positions exactly on an interior grid line belong to the cell
    /// with the lower index, so `cell_of` is total over the domain and
    /// `cell_of(center_of(c)) == c` for every cell.
    pub fn cell_of(&self, p: Point2) -> Result<CellId, FieldError> {
        if !self.in_domain(p) {
            return Err(FieldError::PositionOutOfDomain { x: p.x, y: p.y });
        }
        Ok(self.nearest_cell(p))
    }

    /// Cell nearest to an arbitrary point; clamps into the field first.
    /// Infallible companion of [`FieldSpec::cell_of`].
    pub fn nearest_cell(&self, p: Point2) -> CellId {
        let col = self.axis_cell(p.x + self.half_length(), self.cols);
        let row = self.axis_cell(p.y + self.half_width(), self.rows);
        CellId::new(col, row)
    }

    fn axis_cell(&self, offset: f64, n: u32) -> u32 {
        let u = offset / self.grid_resolution_m;
        let mut i = u.floor();
        // Grid-line ties go to the lower cell.
        if u == i && i > 0.0 {
            i -= 1.0;
        }
        if i < 0.0 {
            return 0;
        }
        (i as u32).min(n - 1)
    }

    /// Centre point of a cell.
    pub fn center_of(&self, cell: CellId) -> Point2 {
        debug_assert!(cell.col < self.cols && cell.row < self.rows);
        Point2::new(
            -self.half_length() + (cell.col as f64 + 0.5) * self.grid_resolution_m,
            -self.half_width() + (cell.row as f64 + 0.5) * self.grid_resolution_m,
        )
    }

    /// Classifies a straight ball displacement from `from` (which must
    /// be inside the field) to `to`.
    ///
    /// If `to` is still inside the field the ball is in play in its
    /// cell. Otherwise the first boundary crossing decides the outcome:
    /// strictly between the posts on a goal line it is a goal, anywhere
    /// else the ball is out and play resumes at the cell nearest the
    /// exit point.
    pub fn classify_ball_motion(&self, from: Point2, to: Point2) -> BallOutcome {
        debug_assert!(self.contains(from), "ball motion must start inside the field");
        if self.contains(to) {
            return BallOutcome::InPlay(self.nearest_cell(to));
        }
        let (_, outcome) = self.ray_exit(from, to - from);
        outcome
    }

    /// First boundary crossing of the ray `origin + t*dir`, `t > 0`.
    ///
    /// `origin` must be inside the field and `dir` non-zero. Returns
    /// the crossing parameter (metres when `dir` is unit length) and
    /// the outcome of a ball leaving there: a goal when strictly
    /// between the posts, otherwise out of field with its re-entry
    /// cell.
    pub fn ray_exit(&self, origin: Point2, dir: Point2) -> (f64, BallOutcome) {
        debug_assert!(self.contains(origin));
        debug_assert!(dir.x != 0.0 || dir.y != 0.0);
        let hl = self.half_length();
        let hw = self.half_width();
        let mut t_exit = f64::INFINITY;
        let mut exit_plane_x = false;
        let mut exit_sign = 0.0;
        if dir.x > 0.0 {
            let t = (hl - origin.x) / dir.x;
            if t < t_exit {
                t_exit = t;
                exit_plane_x = true;
                exit_sign = 1.0;
            }
        } else if dir.x < 0.0 {
            let t = (-hl - origin.x) / dir.x;
            if t < t_exit {
                t_exit = t;
                exit_plane_x = true;
                exit_sign = -1.0;
            }
        }
        if dir.y > 0.0 {
            let t = (hw - origin.y) / dir.y;
            if t < t_exit {
                t_exit = t;
                exit_plane_x = false;
                exit_sign = 1.0;
            }
        } else if dir.y < 0.0 {
            let t = (-hw - origin.y) / dir.y;
            if t < t_exit {
                t_exit = t;
                exit_plane_x = false;
                exit_sign = -1.0;
            }
        }
        debug_assert!(t_exit.is_finite());
        let exit = origin + dir * t_exit.max(0.0);
        let outcome = if exit_plane_x && exit.y.abs() < self.goal_width_m / 2.0 {
            if exit_sign > 0.0 {
                BallOutcome::GoalFor
            } else {
                BallOutcome::GoalAgainst
            }
        } else {
            BallOutcome::OutOfField {
                reentry: self.nearest_cell(exit),
            }
        };
        (t_exit, outcome)
    }

    /// Point landmarks visible on the field: the four goal post bases,
    /// the four corners and the two halfway-line T crossings.
    pub fn landmarks(&self) -> Vec<Landmark> {
        let hl = self.half_length();
        let hw = self.half_width();
        let hg = self.goal_width_m / 2.0;
        let mut out = Vec::with_capacity(10);
        for &x in &[-hl, hl] {
            for &y in &[-hg, hg] {
                out.push(Landmark {
                    class: LandmarkClass::GoalPostBase,
                    position: Point2::new(x, y),
                });
            }
        }
        for &x in &[-hl, hl] {
            for &y in &[-hw, hw] {
                out.push(Landmark {
                    class: LandmarkClass::FieldCorner,
                    position: Point2::new(x, y),
                });
            }
        }
        for &y in &[-hw, hw] {
            out.push(Landmark {
                class: LandmarkClass::TCrossing,
                position: Point2::new(0.0, y),
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kidsize() -> FieldSpec {
        FieldSpec::default()
    }

    #[test]
    fn default_grid_shape() {
        let f = kidsize();
        assert_eq!(f.cols(), 36);
        assert_eq!(f.rows(), 24);
        assert_eq!(f.cell_count(), 864);
    }

    #[test]
    fn rejects_inconsistent_specs() {
        assert!(matches!(
            FieldSpec::new(9.0, 6.0, 2.6, 0.75, 0.26, 0.7),
            Err(FieldError::ResolutionMismatch)
        ));
        assert!(FieldSpec::new(-9.0, 6.0, 2.6, 0.75, 0.25, 0.7).is_err());
        assert!(FieldSpec::new(9.0, 6.0, 6.5, 0.75, 0.25, 0.7).is_err());
        assert!(FieldSpec::new(9.0, 6.0, 2.6, 3.2, 0.25, 0.7).is_err());
    }

    #[test]
    fn center_maps_to_central_cell() {
        let f = kidsize();
        // The centre mark sits exactly on a grid line in both axes; ties
        // go to the lower-index cell.
        assert_eq!(f.cell_of(Point2::new(0.0, 0.0)).unwrap(), CellId::new(17, 11));
    }

    #[test]
    fn corner_maps_to_corner_cell() {
        let f = kidsize();
        let c = f.cell_of(Point2::new(-4.5, -3.0)).unwrap();
        assert_eq!(c, CellId::new(0, 0));
        let c = f.cell_of(Point2::new(4.5, 3.0)).unwrap();
        assert_eq!(c, CellId::new(35, 23));
    }

    #[test]
    fn margin_positions_clamp_to_boundary_cells() {
        let f = kidsize();
        let c = f.cell_of(Point2::new(4.9, 0.1)).unwrap();
        assert_eq!(c.col, 35);
        let c = f.cell_of(Point2::new(-4.9, -3.6)).unwrap();
        assert_eq!(c, CellId::new(0, 0));
        assert!(matches!(
            f.cell_of(Point2::new(5.3, 0.0)),
            Err(FieldError::PositionOutOfDomain { .. })
        ));
    }

    #[test]
    fn cell_roundtrip_identity() {
        let f = kidsize();
        for col in 0..f.cols() {
            for row in 0..f.rows() {
                let cell = CellId::new(col, row);
                assert_eq!(f.cell_of(f.center_of(cell)).unwrap(), cell);
            }
        }
    }

    #[test]
    fn straight_shot_between_posts_is_a_goal() {
        let f = kidsize();
        let from = Point2::new(3.0, 0.0);
        assert_eq!(
            f.classify_ball_motion(from, Point2::new(6.0, 0.0)),
            BallOutcome::GoalFor
        );
        assert_eq!(
            f.classify_ball_motion(from, Point2::new(-6.0, 0.0)),
            BallOutcome::GoalAgainst
        );
    }

    #[test]
    fn shot_wide_of_posts_is_out() {
        let f = kidsize();
        let from = Point2::new(3.0, 2.0);
        // Crosses x = 4.5 at y = 2.0, well outside the 1.3 m half goal.
        let out = f.classify_ball_motion(from, Point2::new(6.0, 2.0));
        match out {
            BallOutcome::OutOfField { reentry } => {
                assert_eq!(reentry, f.nearest_cell(Point2::new(4.5, 2.0)));
                assert_eq!(reentry.col, 35);
            }
            other => panic!("expected out of field, got {other:?}"),
        }
    }

    #[test]
    fn exactly_on_post_line_is_not_a_goal() {
        let f = kidsize();
        let from = Point2::new(4.0, 1.3);
        let out = f.classify_ball_motion(from, Point2::new(5.0, 1.3));
        assert!(matches!(out, BallOutcome::OutOfField { .. }));
    }

    #[test]
    fn landing_on_goal_line_stays_in_play() {
        let f = kidsize();
        let out = f.classify_ball_motion(Point2::new(4.0, 0.0), Point2::new(4.5, 0.0));
        assert_eq!(out, BallOutcome::InPlay(CellId::new(35, 11)));
    }

    #[test]
    fn first_crossing_decides_when_leaving_by_a_side_line() {
        let f = kidsize();
        // Leaves across y = 3 before reaching the goal line.
        let out = f.classify_ball_motion(Point2::new(3.0, 2.5), Point2::new(5.0, 4.5));
        match out {
            BallOutcome::OutOfField { reentry } => {
                // Exit at t = 0.25: (3.5, 3.0).
                assert_eq!(reentry, f.nearest_cell(Point2::new(3.5, 3.0)));
                assert_eq!(reentry.row, 23);
            }
            other => panic!("expected out of field, got {other:?}"),
        }
    }

    #[test]
    fn landmark_catalog_shape() {
        let f = kidsize();
        let marks = f.landmarks();
        assert_eq!(marks.len(), 10);
        let posts = marks
            .iter()
            .filter(|l| l.class == LandmarkClass::GoalPostBase)
            .count();
        let corners = marks
            .iter()
            .filter(|l| l.class == LandmarkClass::FieldCorner)
            .count();
        let ts = marks
            .iter()
            .filter(|l| l.class == LandmarkClass::TCrossing)
            .count();
        assert_eq!((posts, corners, ts), (4, 4, 2));
        for l in &marks {
            assert!(f.contains(l.position));
        }
    }

    proptest! {
        #[test]
        fn cell_of_total_over_domain(
            x in -5.2f64..5.2,
            y in -3.7f64..3.7,
        ) {
            let f = kidsize();
            let c = f.cell_of(Point2::new(x, y)).unwrap();
            prop_assert!(c.col < f.cols() && c.row < f.rows());
            // The cell centre is never farther than half a diagonal plus
            // the clamped margin.
            let center = f.center_of(c);
            let max_d = f.out_margin_m() + f.grid_resolution_m();
            prop_assert!((center.x - x).abs() <= max_d + 1e-12);
            prop_assert!((center.y - y).abs() <= max_d + 1e-12);
        }

        #[test]
        fn landmark_catalog_is_mirror_symmetric(
            seed in 0u64..1000,
        ) {
            let _ = seed;
            let f = kidsize();
            let marks = f.landmarks();
            for l in &marks {
                // For every landmark its x and y mirror images exist with
                // the same class.
                let mx = marks.iter().any(|m| {
                    m.class == l.class
                        && (m.position.x + l.position.x).abs() < 1e-12
                        && (m.position.y - l.position.y).abs() < 1e-12
                });
                let my = marks.iter().any(|m| {
                    m.class == l.class
                        && (m.position.x - l.position.x).abs() < 1e-12
                        && (m.position.y + l.position.y).abs() < 1e-12
                });
                prop_assert!(mx && my);
            }
        }

        #[test]
        fn classification_is_total_for_in_field_starts(
            fx in -4.4f64..4.4,
            fy in -2.9f64..2.9,
            tx in -12.0f64..12.0,
            ty in -9.0f64..9.0,
        ) {
            let f = kidsize();
            let out = f.classify_ball_motion(Point2::new(fx, fy), Point2::new(tx, ty));
            if let BallOutcome::OutOfField { reentry } | BallOutcome::InPlay(reentry) = out {
                prop_assert!(reentry.col < f.cols() && reentry.row < f.rows());
            }
        }
    }
}
