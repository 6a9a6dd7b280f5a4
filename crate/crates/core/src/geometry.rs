//! The 40x40 three-room arena.
//!
//! Two horizontal walls split the arena into three stacked rooms. Each wall
//! has one door, an open interval in x. Walls are closed segments, so a
//! motion that touches a door jamb is blocked.
//!
//! Positions always keep a clearance of [`WALL_CLEARANCE`] from every wall
//! segment. Motion is stopped at the boundary of each wall segment's
//! clearance box (the segment inflated by the clearance on every side), which
//! guarantees both that a wall is never crossed and that the stop point keeps
//! the clearance. For motion perpendicular to a wall the stop point is the
//! intersection pulled back by exactly the clearance.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

/// Side length of the square arena.
pub const ARENA_SIZE: f64 = 40.0;
/// Maximum displacement per step.
pub const MAX_STEP_LEN: f64 = 10.0;
/// Minimum distance kept between any position and any wall segment.
pub const WALL_CLEARANCE: f64 = 1e-6;

const MAX_START_ATTEMPTS: usize = 1000;

/// A position in the arena.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn offset(self, a: ActionVec, t: f64) -> Point {
        Point::new(self.x + t * a.dx, self.y + t * a.dy)
    }

    pub fn in_arena(self) -> bool {
        (0.0..=ARENA_SIZE).contains(&self.x) && (0.0..=ARENA_SIZE).contains(&self.y)
    }
}

/// A displacement. Constructed through [`clamp_action`] it never exceeds the
/// step length.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActionVec {
    pub dx: f64,
    pub dy: f64,
}

impl ActionVec {
    pub const ZERO: ActionVec = ActionVec { dx: 0.0, dy: 0.0 };

    pub const fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.dx, self.dy)
    }
}

/// Rescales `(dx, dy)` onto the disc of radius `max_len`, keeping direction.
pub fn clamp_action_to(dx: f64, dy: f64, max_len: f64) -> ActionVec {
    let norm = libm::hypot(dx, dy);
    if norm <= max_len {
        ActionVec::new(dx, dy)
    } else {
        ActionVec::new(dx * max_len / norm, dy * max_len / norm)
    }
}

/// [`clamp_action_to`] with the default step length of 10.
pub fn clamp_action(dx: f64, dy: f64) -> ActionVec {
    clamp_action_to(dx, dy, MAX_STEP_LEN)
}

/// Uniform draw from the disc of radius `max_len`.
pub fn random_action<R: Rng + ?Sized>(rng: &mut R, max_len: f64) -> ActionVec {
    let angle = 2.0 * PI * rng.gen::<f64>();
    let radius = max_len * libm::sqrt(rng.gen::<f64>());
    ActionVec::new(radius * libm::cos(angle), radius * libm::sin(angle))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RoomId {
    Bottom,
    Middle,
    Top,
}

/// How the first state of an episode is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartStrategy {
    UniformAnywhere,
    UniformBottomRoom,
}

/// A horizontal wall spanning the arena width with one door.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub y: f64,
    /// Open door interval `(lo, hi)` in x.
    pub door_lo: f64,
    pub door_hi: f64,
}

impl Wall {
    pub const fn new(y: f64, door_lo: f64, door_hi: f64) -> Self {
        Self { y, door_lo, door_hi }
    }

    /// The two closed solid pieces `[x0, x1]` on either side of the door.
    fn pieces(&self) -> [(f64, f64); 2] {
        [(0.0, self.door_lo), (self.door_hi, ARENA_SIZE)]
    }

    fn in_door(&self, x: f64) -> bool {
        x > self.door_lo && x < self.door_hi
    }

    /// Euclidean distance from `p` to the closed wall segments.
    pub fn distance(&self, p: Point) -> f64 {
        let dy = p.y - self.y;
        self.pieces()
            .iter()
            .map(|&(x0, x1)| {
                let dx = if p.x < x0 {
                    x0 - p.x
                } else if p.x > x1 {
                    p.x - x1
                } else {
                    0.0
                };
                libm::hypot(dx, dy)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Wall placement of the arena.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    walls: Vec<Wall>,
}

/// What happened during one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next: Point,
    pub collided: bool,
    pub crossed_door: bool,
}

impl Default for Layout {
    fn default() -> Self {
        Self::three_rooms()
    }
}

impl Layout {
    pub const DEFAULT_WALLS: [Wall; 2] = [
        Wall::new(ARENA_SIZE / 3.0, 8.0, 12.0),
        Wall::new(2.0 * ARENA_SIZE / 3.0, 28.0, 32.0),
    ];

    /// The standard arena: walls at y = 40/3 and 80/3 with doors (8, 12) and
    /// (28, 32).
    pub fn three_rooms() -> Self {
        Self {
            walls: Self::DEFAULT_WALLS.to_vec(),
        }
    }

    /// A three-room arena with custom wall placement.
    pub fn with_walls(lower: Wall, upper: Wall) -> Result<Self> {
        for w in [&lower, &upper] {
            let inside = |v: f64| v > 0.0 && v < ARENA_SIZE;
            if !(inside(w.y) && inside(w.door_lo) && inside(w.door_hi)) {
                return Err(Error::Config(alloc::format!(
                    "wall {w:?} must lie strictly inside the arena"
                )));
            }
            if w.door_hi - w.door_lo <= 2.0 * WALL_CLEARANCE {
                return Err(Error::Config(alloc::format!("door of wall {w:?} is empty")));
            }
        }
        if lower.y >= upper.y {
            return Err(Error::Config("lower wall must be below the upper wall".into()));
        }
        if lower.door_lo < upper.door_hi && upper.door_lo < lower.door_hi {
            return Err(Error::Config("door intervals must not overlap in x".into()));
        }
        Ok(Self {
            walls: alloc::vec![lower, upper],
        })
    }

    /// An arena without walls.
    pub fn empty() -> Self {
        Self { walls: Vec::new() }
    }

    pub fn walls(&self) -> &[Wall] {
        &self.walls
    }

    /// Room containing `p`: the number of walls at or below `p.y`. An empty
    /// layout puts everything in the bottom room.
    pub fn room_of(&self, p: Point) -> RoomId {
        match self.walls.iter().filter(|w| p.y >= w.y).count() {
            0 => RoomId::Bottom,
            1 => RoomId::Middle,
            _ => RoomId::Top,
        }
    }

    /// Distance from `p` to the nearest wall segment (infinite without walls).
    pub fn wall_distance(&self, p: Point) -> f64 {
        self.walls
            .iter()
            .map(|w| w.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether `p` lies inside a clearance box. Valid positions never do.
    pub fn near_wall(&self, p: Point) -> bool {
        self.walls.iter().any(|w| {
            p.y > w.y - WALL_CLEARANCE
                && p.y < w.y + WALL_CLEARANCE
                && w.pieces().iter().any(|&(x0, x1)| {
                    p.x > x0 - WALL_CLEARANCE && p.x < x1 + WALL_CLEARANCE
                })
        })
    }

    /// Draws a start state away from the walls.
    pub fn reset<R: Rng + ?Sized>(&self, strategy: StartStrategy, rng: &mut R) -> Result<Point> {
        let y_max = match strategy {
            StartStrategy::UniformAnywhere => ARENA_SIZE,
            StartStrategy::UniformBottomRoom => {
                self.walls.iter().map(|w| w.y).fold(ARENA_SIZE, f64::min)
            }
        };
        for _ in 0..MAX_START_ATTEMPTS {
            let p = Point::new(ARENA_SIZE * rng.gen::<f64>(), y_max * rng.gen::<f64>());
            if !self.near_wall(p) {
                return Ok(p);
            }
        }
        Err(Error::StartSampling(MAX_START_ATTEMPTS))
    }

    /// Smallest `t` in (0, 1] at which `p + t (q - p)` touches a closed wall
    /// segment.
    pub fn segment_wall_intersection(&self, p: Point, q: Point) -> Option<f64> {
        self.walls
            .iter()
            .filter_map(|w| first_hit(w, p, q))
            .reduce(f64::min)
    }

    /// Moves from `s` by `a`.
    ///
    /// The motion is first truncated at the arena boundary, then stopped at
    /// the first clearance box it would enter.
    pub fn step(&self, s: Point, a: ActionVec) -> StepOutcome {
        if a.dx == 0.0 && a.dy == 0.0 {
            return StepOutcome {
                next: s,
                collided: false,
                crossed_door: false,
            };
        }

        let (t_bound, snap_x, snap_y) = boundary_limit(s, a);
        let mut next = s.offset(a, t_bound);
        if let Some(x) = snap_x {
            next.x = x;
        }
        if let Some(y) = snap_y {
            next.y = y;
        }
        next.x = next.x.clamp(0.0, ARENA_SIZE);
        next.y = next.y.clamp(0.0, ARENA_SIZE);

        let stop = self
            .walls
            .iter()
            .filter_map(|w| self.wall_stop(w, s, a, t_bound))
            .min_by(|l, r| l.t.total_cmp(&r.t));
        let collided = stop.is_some();
        if let Some(stop) = stop {
            next = stop.point;
        }

        let crossed_door = self
            .walls
            .iter()
            .any(|w| (s.y >= w.y) != (next.y >= w.y));
        StepOutcome {
            next,
            collided,
            crossed_door,
        }
    }

    /// Where motion along `s + t a`, `t` in [0, t_max], must stop because of
    /// `wall`, if anywhere.
    fn wall_stop(&self, wall: &Wall, s: Point, a: ActionVec, t_max: f64) -> Option<Stop> {
        let c = WALL_CLEARANCE;
        let mut best: Option<Stop> = None;
        for (x0, x1) in wall.pieces() {
            let (bx0, bx1, by0, by1) = (x0 - c, x1 + c, wall.y - c, wall.y + c);
            let inside = s.x > bx0 && s.x < bx1 && s.y > by0 && s.y < by1;
            let stop = if inside {
                // Only reachable from a position that already violates the
                // clearance; fall back to stopping short of the segment.
                let q = s.offset(a, t_max);
                first_hit(wall, s, q).map(|t| {
                    let t = t_max * t;
                    let t = (t - c / a.norm()).max(0.0);
                    Stop {
                        t,
                        point: s.offset(a, t),
                    }
                })
            } else {
                box_entry(s, a, t_max, (bx0, bx1, by0, by1))
            };
            if let Some(stop) = stop {
                if best.is_none_or(|b| stop.t < b.t) {
                    best = Some(stop);
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy)]
struct Stop {
    t: f64,
    point: Point,
}

/// Largest `t` in [0, 1] keeping `s + t a` inside the arena, plus the exact
/// boundary coordinate to snap to when the boundary is what limits `t`.
fn boundary_limit(s: Point, a: ActionVec) -> (f64, Option<f64>, Option<f64>) {
    let limit = |pos: f64, d: f64| -> Option<(f64, f64)> {
        if d > 0.0 {
            Some(((ARENA_SIZE - pos) / d, ARENA_SIZE))
        } else if d < 0.0 {
            Some((pos / -d, 0.0))
        } else {
            None
        }
    };
    let mut t = 1.0;
    let mut snap_x = None;
    let mut snap_y = None;
    if let Some((tx, edge)) = limit(s.x, a.dx) {
        if tx <= t {
            t = tx.max(0.0);
            snap_x = Some(edge);
        }
    }
    if let Some((ty, edge)) = limit(s.y, a.dy) {
        if ty < t {
            t = ty.max(0.0);
            snap_x = None;
            snap_y = Some(edge);
        } else if ty == t {
            snap_y = Some(edge);
        }
    }
    (t, snap_x, snap_y)
}

/// Entry of the segment `s + t a`, `t` in [0, t_max], into the open box
/// `(x0, x1) x (y0, y1)`, with the entry coordinate snapped onto the box face.
fn box_entry(s: Point, a: ActionVec, t_max: f64, (x0, x1, y0, y1): (f64, f64, f64, f64)) -> Option<Stop> {
    // Per-axis open interval of t during which the coordinate is inside.
    let slab = |pos: f64, d: f64, lo: f64, hi: f64| -> Option<(f64, f64, f64)> {
        if d == 0.0 {
            if pos > lo && pos < hi {
                Some((f64::NEG_INFINITY, f64::INFINITY, pos))
            } else {
                None
            }
        } else if d > 0.0 {
            Some(((lo - pos) / d, (hi - pos) / d, lo))
        } else {
            Some(((hi - pos) / d, (lo - pos) / d, hi))
        }
    };
    let (tx_in, tx_out, face_x) = slab(s.x, a.dx, x0, x1)?;
    let (ty_in, ty_out, face_y) = slab(s.y, a.dy, y0, y1)?;
    let t_in = tx_in.max(ty_in);
    let t_out = tx_out.min(ty_out);
    if !(t_in < t_out && t_in < t_max && t_out > 0.0) {
        return None;
    }
    let t = t_in.max(0.0);
    let mut point = s.offset(a, t);
    if ty_in >= tx_in {
        point.y = face_y;
    } else {
        point.x = face_x;
    }
    Some(Stop { t, point })
}

/// Exact first contact parameter of `p -> q` with the closed segments of
/// `wall`.
fn first_hit(wall: &Wall, p: Point, q: Point) -> Option<f64> {
    let dy = q.y - p.y;
    let dx = q.x - p.x;
    if dy == 0.0 {
        if p.y != wall.y {
            return None;
        }
        // Motion along the wall line.
        if !wall.in_door(p.x) {
            return Some(0.0);
        }
        let edge = if dx > 0.0 && q.x >= wall.door_hi {
            wall.door_hi
        } else if dx < 0.0 && q.x <= wall.door_lo {
            wall.door_lo
        } else {
            return None;
        };
        return Some((edge - p.x) / dx);
    }
    let t = (wall.y - p.y) / dy;
    if t <= 0.0 || t > 1.0 {
        return None;
    }
    let x = p.x + t * dx;
    if wall.in_door(x) {
        None
    } else {
        Some(t)
    }
}
