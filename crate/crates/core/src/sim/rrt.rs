use super::config::RrtConfig;
use crate::geometry::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Planar configuration space queried by the planner.
pub trait FreeSpace {
    fn is_free(&self, p: Vec2) -> bool;
    /// Sampling bounds as (min, max).
    fn bounds(&self) -> (Vec2, Vec2);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPlan {
    pub waypoints: Vec<Vec2>,
    pub cost: f64,
    pub iterations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("start {0:?} is in collision")]
    StartBlocked(Vec2),
    #[error("goal {0:?} is in collision")]
    GoalBlocked(Vec2),
    #[error("no path found within {0} iterations")]
    Exhausted(usize),
}

/// Checks `a -> b` at spacing `res`, endpoints included.
pub fn segment_free(space: &dyn FreeSpace, a: Vec2, b: Vec2, res: f64) -> bool {
    let n = ((a.distance(&b) / res).ceil() as usize).max(1);
    (0..=n).all(|i| space.is_free(a.lerp(&b, i as f64 / n as f64)))
}

pub fn path_cost(points: &[Vec2]) -> f64 {
    points.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

struct Node {
    p: Vec2,
    parent: Option<usize>,
    cost: f64,
    children: Vec<usize>,
}

struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn nearest(&self, p: Vec2) -> usize {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.p.distance(&p);
            if d < bd {
                bd = d;
                best = i;
            }
        }
        best
    }

    fn near(&self, p: Vec2, r: f64) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].p.distance(&p) <= r).collect()
    }

    fn reparent(&mut self, child: usize, parent: usize) {
        if let Some(old) = self.nodes[child].parent {
            self.nodes[old].children.retain(|&c| c != child);
        }
        self.nodes[child].parent = Some(parent);
        self.nodes[parent].children.push(child);
        let mut stack = vec![child];
        while let Some(i) = stack.pop() {
            let par = self.nodes[i].parent.expect("non-root");
            self.nodes[i].cost = self.nodes[par].cost + self.nodes[par].p.distance(&self.nodes[i].p);
            stack.extend(self.nodes[i].children.iter().copied());
        }
    }
}

fn sample_ellipse(rng: &mut ChaCha8Rng, start: Vec2, goal: Vec2, c_best: f64) -> Vec2 {
    let c_min = start.distance(&goal);
    let a = c_best / 2.0;
    let b = (c_best * c_best - c_min * c_min).max(0.0).sqrt() / 2.0;
    let r: f64 = rng.gen::<f64>().sqrt();
    let th: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
    let (ux, uy) = (r * th.cos() * a, r * th.sin() * b);
    let dir = if c_min > 0.0 { (goal - start) * (1.0 / c_min) } else { Vec2::new(1.0, 0.0) };
    let center = start.lerp(&goal, 0.5);
    Vec2::new(center.x + dir.x * ux - dir.y * uy, center.y + dir.y * ux + dir.x * uy)
}

/// Informed RRT*: uniform sampling until a first solution, then sampling
/// inside the ellipse bounding all shorter paths. Always spends the whole
/// iteration budget and is deterministic in `seed`.
pub fn plan_path(
    space: &dyn FreeSpace,
    start: Vec2,
    goal: Vec2,
    seed: u64,
    cfg: &RrtConfig,
    res: f64,
) -> Result<PathPlan, PlanError> {
    if !space.is_free(start) {
        return Err(PlanError::StartBlocked(start));
    }
    if !space.is_free(goal) {
        return Err(PlanError::GoalBlocked(goal));
    }
    if cfg.direct_shortcut && segment_free(space, start, goal, res) {
        return Ok(PathPlan { waypoints: vec![start, goal], cost: start.distance(&goal), iterations: 0, seed });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = space.bounds();
    let mut tree = Tree { nodes: vec![Node { p: start, parent: None, cost: 0.0, children: vec![] }] };
    // Nodes with a free straight connection to the goal.
    let mut goal_links: Vec<(usize, f64)> = Vec::new();
    let best = |tree: &Tree, links: &[(usize, f64)]| -> Option<(usize, f64)> {
        links
            .iter()
            .map(|&(i, d)| (i, tree.nodes[i].cost + d))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    };

    if start.distance(&goal) <= cfg.goal_tolerance {
        goal_links.push((0, start.distance(&goal)));
    }

    for _ in 0..cfg.budget {
        let incumbent = best(&tree, &goal_links);
        let sample = match incumbent {
            Some((_, c)) => sample_ellipse(&mut rng, start, goal, c),
            None if rng.gen::<f64>() < cfg.goal_bias => goal,
            None => Vec2::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y)),
        };
        let ni = tree.nearest(sample);
        let np = tree.nodes[ni].p;
        let d = np.distance(&sample);
        if d < 1e-12 {
            continue;
        }
        let new = if d > cfg.step { np.lerp(&sample, cfg.step / d) } else { sample };
        if !segment_free(space, np, new, res) {
            continue;
        }

        let near = tree.near(new, cfg.neighbor_radius);
        let mut parent = ni;
        let mut cost = tree.nodes[ni].cost + np.distance(&new);
        for &j in &near {
            let c = tree.nodes[j].cost + tree.nodes[j].p.distance(&new);
            if c < cost - 1e-12 && segment_free(space, tree.nodes[j].p, new, res) {
                parent = j;
                cost = c;
            }
        }
        let id = tree.nodes.len();
        tree.nodes.push(Node { p: new, parent: Some(parent), cost, children: vec![] });
        tree.nodes[parent].children.push(id);

        for &j in &near {
            if j == parent {
                continue;
            }
            let c = cost + new.distance(&tree.nodes[j].p);
            if c < tree.nodes[j].cost - 1e-12 && segment_free(space, new, tree.nodes[j].p, res) {
                tree.reparent(j, id);
            }
        }

        let dg = new.distance(&goal);
        if dg <= cfg.goal_tolerance || (dg <= cfg.neighbor_radius && segment_free(space, new, goal, res)) {
            goal_links.push((id, dg));
        }
    }

    let (last, _) = best(&tree, &goal_links).ok_or(PlanError::Exhausted(cfg.budget))?;
    let mut pts = vec![goal];
    let mut cur = Some(last);
    while let Some(i) = cur {
        if pts.last().is_some_and(|p: &Vec2| p.distance(&tree.nodes[i].p) < 1e-12) {
            cur = tree.nodes[i].parent;
            continue;
        }
        pts.push(tree.nodes[i].p);
        cur = tree.nodes[i].parent;
    }
    pts.reverse();
    if pts[0] != start {
        pts.insert(0, start);
    }
    Ok(PathPlan { cost: path_cost(&pts), waypoints: pts, iterations: cfg.budget, seed })
}
