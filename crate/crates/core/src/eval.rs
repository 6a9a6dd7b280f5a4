//! Measurements taken on trained models: validation error of the forward
//! model, top-room visits, greedy rollouts, and policy flow fields.

use alloc::vec::Vec;

use crate::ddpg::Actor;
use crate::geometry::{random_action, ActionVec, Layout, Point, RoomId, StartStrategy, ARENA_SIZE, WALL_CLEARANCE};
use crate::error::Result;
use crate::rng::{stream, Stream};

/// Per-coordinate mean squared error of `predict` against the environment
/// on `pool_size` random pairs: `s` uniform over the arena, `a` uniform on
/// the step disc. Units are arena units squared.
pub fn forward_mse_with<P>(layout: &Layout, max_step: f64, pool_size: usize, seed: u64, mut predict: P) -> Result<f64>
where
    P: FnMut(Point, ActionVec) -> Point,
{
    assert!(pool_size > 0, "validation pool must be nonempty");
    let mut rng = stream(seed, Stream::Evaluation);
    let mut total = 0.0;
    for _ in 0..pool_size {
        let s = layout.reset(StartStrategy::UniformAnywhere, &mut rng)?;
        let a = random_action(&mut rng, max_step);
        let truth = layout.step(s, a).next;
        let guess = predict(s, a);
        let (ex, ey) = (guess.x - truth.x, guess.y - truth.y);
        total += ex * ex + ey * ey;
    }
    Ok(total / (2 * pool_size) as f64)
}

/// [`forward_mse_with`] for a trained forward model.
pub fn eval_forward_mse(
    forward: &crate::world_model::ForwardModel,
    layout: &Layout,
    max_step: f64,
    pool_size: usize,
    seed: u64,
) -> Result<f64> {
    forward_mse_with(layout, max_step, pool_size, seed, |s, a| forward.predict(s, a))
}

/// Whether any state of an episode lies in the top room.
pub fn reached_top(layout: &Layout, states: &[Point]) -> bool {
    states.iter().any(|&p| layout.room_of(p) == RoomId::Top)
}

/// Cumulative count of episodes that reached the top room.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TopRoomCounter {
    total: u64,
}

impl TopRoomCounter {
    /// Records one episode trace; returns its flag.
    pub fn record(&mut self, layout: &Layout, states: &[Point]) -> bool {
        let hit = reached_top(layout, states);
        self.total += u64::from(hit);
        hit
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Runs the greedy policy for `steps` steps from `start`; returns the
/// `steps + 1` visited states.
pub fn greedy_rollout(layout: &Layout, actor: &Actor, start: Point, steps: u32) -> Vec<Point> {
    let mut states = Vec::with_capacity(steps as usize + 1);
    let mut s = start;
    states.push(s);
    for _ in 0..steps {
        s = layout.step(s, actor.policy_action(s)).next;
        states.push(s);
    }
    states
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowVector {
    pub x: f64,
    pub y: f64,
    pub dx: f64,
    pub dy: f64,
}

impl FlowVector {
    pub fn magnitude(&self) -> f64 {
        libm::hypot(self.dx, self.dy)
    }
}

/// Policy action at every grid node strictly inside the arena, skipping
/// nodes within the wall clearance. Rows run along x, bottom row first.
pub fn policy_flow_field(actor: &Actor, layout: &Layout, grid_step: f64) -> Vec<FlowVector> {
    assert!(grid_step > 0.0, "grid step must be positive");
    let nodes = (ARENA_SIZE / grid_step) as usize;
    let coords: Vec<f64> = (1..=nodes)
        .map(|i| i as f64 * grid_step)
        .filter(|&c| c > 0.0 && c < ARENA_SIZE)
        .collect();
    let mut out = Vec::with_capacity(coords.len() * coords.len());
    for &y in &coords {
        for &x in &coords {
            let p = Point::new(x, y);
            if layout.wall_distance(p) < WALL_CLEARANCE {
                continue;
            }
            let a = actor.policy_action(p);
            out.push(FlowVector { x, y, dx: a.dx, dy: a.dy });
        }
    }
    out
}

/// Mean action magnitude near the door centers versus over the whole field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSummary {
    pub near_door_mean: f64,
    pub near_door_nodes: usize,
    pub arena_mean: f64,
    pub arena_nodes: usize,
}

pub fn flow_summary(field: &[FlowVector], layout: &Layout, radius: f64) -> FlowSummary {
    let doors: Vec<Point> = layout
        .walls()
        .iter()
        .map(|w| Point::new(0.5 * (w.door_lo + w.door_hi), w.y))
        .collect();
    let mean = |it: &mut dyn Iterator<Item = f64>| {
        let (n, s) = it.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
        (if n == 0 { f64::NAN } else { s / n as f64 }, n)
    };
    let (near_door_mean, near_door_nodes) = mean(
        &mut field
            .iter()
            .filter(|v| doors.iter().any(|d| d.distance(Point::new(v.x, v.y)) <= radius))
            .map(FlowVector::magnitude),
    );
    let (arena_mean, arena_nodes) = mean(&mut field.iter().map(FlowVector::magnitude));
    FlowSummary {
        near_door_mean,
        near_door_nodes,
        arena_mean,
        arena_nodes,
    }
}
