use super::rrt::{plan_path, segment_free, FreeSpace};
use super::{SkillError, SkillErrorKind, World};
use crate::geometry::{wrap_angle, Obb2, Vec2, Vec3};
use crate::scene::{Embodiment, MechanismKind, GROUND};
use std::collections::BTreeSet;

#[derive(Debug, Clone)]
struct Surface {
    name: String,
    rect: Obb2,
    top: f64,
}

/// Walkable regions at their heights plus inflated obstacles.
#[derive(Debug, Clone)]
pub struct WalkSpace {
    regions: Vec<(Obb2, f64)>,
    obstacles: Vec<(String, Obb2, f64)>,
    bounds: (Vec2, Vec2),
    height_tol: f64,
}

impl WalkSpace {
    pub fn height_at(&self, p: Vec2) -> Option<f64> {
        self.regions.iter().filter(|(r, _)| r.contains(p)).map(|(_, h)| *h).reduce(f64::max)
    }

    pub fn without(&self, names: &[String]) -> WalkSpace {
        let mut s = self.clone();
        s.obstacles.retain(|(n, _, _)| !names.contains(n));
        s
    }
}

impl FreeSpace for WalkSpace {
    fn is_free(&self, p: Vec2) -> bool {
        let Some(h) = self.height_at(p) else { return false };
        !self.obstacles.iter().any(|(_, o, top)| *top > h + self.height_tol + 1e-6 && o.contains(p))
    }

    fn bounds(&self) -> (Vec2, Vec2) {
        self.bounds
    }
}

fn gap_between(a: &Obb2, b: &Obb2) -> f64 {
    let (ba, bb) = (a.aabb(), b.aabb());
    let dx = (bb.min.x - ba.max.x).max(ba.min.x - bb.max.x).max(0.0);
    let dy = (bb.min.y - ba.max.y).max(ba.min.y - bb.max.y).max(0.0);
    dx.hypot(dy)
}

/// Rectangle filling the straight gap between two axis-separated surfaces.
fn gap_strip(a: &Obb2, b: &Obb2) -> Option<Obb2> {
    let (ba, bb) = (a.aabb(), b.aabb());
    let (ylo, yhi) = (ba.min.y.max(bb.min.y), ba.max.y.min(bb.max.y));
    let (xlo, xhi) = (ba.min.x.max(bb.min.x), ba.max.x.min(bb.max.x));
    if yhi > ylo {
        let (x0, x1) = if ba.max.x <= bb.min.x { (ba.max.x, bb.min.x) } else { (bb.max.x, ba.min.x) };
        let lo = Vec2::new(x0 - 1e-6, ylo);
        let hi = Vec2::new(x1 + 1e-6, yhi);
        return Some(Obb2::new(lo.lerp(&hi, 0.5), hi - lo, 0.0));
    }
    if xhi > xlo {
        let (y0, y1) = if ba.max.y <= bb.min.y { (ba.max.y, bb.min.y) } else { (bb.max.y, ba.min.y) };
        let lo = Vec2::new(xlo, y0 - 1e-6);
        let hi = Vec2::new(xhi, y1 + 1e-6);
        return Some(Obb2::new(lo.lerp(&hi, 0.5), hi - lo, 0.0));
    }
    None
}

enum Link {
    Open,
    TooWide(f64),
    None,
}

impl World {
    fn require_quadruped(&self) -> Result<(), SkillError> {
        if self.scene.robot.embodiment != Embodiment::Quadruped {
            return Err(SkillError::new(SkillErrorKind::InvalidTarget, "locomotion skills need the quadruped"));
        }
        Ok(())
    }

    fn half_width(&self) -> f64 {
        self.scene.robot.half_width.unwrap_or(0.0)
    }

    fn surfaces(&self) -> Vec<Surface> {
        let fe = self.scene.floor_extent;
        let mut out = vec![Surface {
            name: GROUND.to_string(),
            rect: Obb2::new(fe.min.lerp(&fe.max, 0.5), fe.max - fe.min, 0.0),
            top: 0.0,
        }];
        for o in &self.state.objects {
            if o.is_support_surface {
                out.push(Surface { name: o.name.clone(), rect: o.footprint(), top: o.top() });
            }
        }
        out
    }

    fn bridged(&self, a: &str, b: &str) -> bool {
        let Some(bridge) = &self.state.flags.gap_spanned_by else { return false };
        self.scene.mechanisms.iter().any(|m| {
            m.kind == MechanismKind::Bridge
                && m.role("bridge") == Some(bridge.as_str())
                && matches!((m.role("edge_a"), m.role("edge_b")), (Some(x), Some(y)) if (x == a && y == b) || (x == b && y == a))
        })
    }

    fn link(&self, a: &Surface, b: &Surface) -> Link {
        if (a.top - b.top).abs() > self.config.height_tolerance + 1e-6 {
            return Link::None;
        }
        if a.name == GROUND || b.name == GROUND {
            return Link::Open;
        }
        let gap = gap_between(&a.rect, &b.rect);
        let limit = self.scene.robot.gap_limit.unwrap_or(0.0);
        if gap <= limit + 1e-9 || self.bridged(&a.name, &b.name) {
            Link::Open
        } else {
            Link::TooWide(gap)
        }
    }

    /// Surfaces reachable from the current support without climbing.
    fn component(&self, surfaces: &[Surface], from: &str, ignore_gaps: bool) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let Some(start) = surfaces.iter().position(|s| s.name == from) else { return seen };
        let mut stack = vec![start];
        seen.insert(start);
        while let Some(i) = stack.pop() {
            for j in 0..surfaces.len() {
                if seen.contains(&j) {
                    continue;
                }
                let ok = match self.link(&surfaces[i], &surfaces[j]) {
                    Link::Open => true,
                    Link::TooWide(_) => ignore_gaps,
                    Link::None => false,
                };
                if ok {
                    seen.insert(j);
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// Walkable space on the robot's current level.
    pub fn walk_space(&self) -> WalkSpace {
        let surfaces = self.surfaces();
        let comp = self.component(&surfaces, &self.state.robot.support, false);
        let mut regions: Vec<(Obb2, f64)> = comp.iter().map(|&i| (surfaces[i].rect, surfaces[i].top)).collect();
        let ids: Vec<usize> = comp.iter().copied().collect();
        for (k, &i) in ids.iter().enumerate() {
            for &j in &ids[k + 1..] {
                let (a, b) = (&surfaces[i], &surfaces[j]);
                if a.name == GROUND || b.name == GROUND {
                    continue;
                }
                let gap = gap_between(&a.rect, &b.rect);
                if gap > 0.0 && gap <= self.scene.robot.gap_limit.unwrap_or(0.0) + 1e-9 {
                    if let Some(strip) = gap_strip(&a.rect, &b.rect) {
                        regions.push((strip, a.top.min(b.top)));
                    }
                }
            }
        }
        let hw = self.half_width();
        let obstacles =
            self.state.objects.iter().map(|o| (o.name.clone(), o.footprint().inflate(hw), o.top())).collect();
        let fe = self.scene.floor_extent;
        WalkSpace { regions, obstacles, bounds: (fe.min, fe.max), height_tol: self.config.height_tolerance }
    }

    /// Highest standable surface containing `p` at or below `z` (with slack).
    fn surface_at(&self, p: Vec2, z: f64) -> Option<Surface> {
        self.surfaces()
            .into_iter()
            .filter(|s| s.rect.contains(p) && s.top <= z + 0.05)
            .max_by(|a, b| a.top.total_cmp(&b.top))
    }

    fn walk_path(&mut self, space: &WalkSpace, goal: Vec2) -> Result<super::PathPlan, SkillError> {
        let start = self.state.robot.position.xy();
        let seed = self.next_seed();
        plan_path(space, start, goal, seed, &self.config.rrt, self.config.sample_resolution).map_err(|e| {
            SkillError::new(SkillErrorKind::PathNotFound, e.to_string())
                .with("goal_x", goal.x)
                .with("goal_y", goal.y)
        })
    }

    pub fn walk_to_position(&mut self, target: Vec3) -> Result<Vec<String>, SkillError> {
        self.require_quadruped()?;
        if !target.is_finite() || !self.scene.floor_extent.contains(target.xy()) {
            return Err(SkillError::new(SkillErrorKind::InvalidTarget, "target is not on the floor area"));
        }
        let surfaces = self.surfaces();
        let Some(dest) = self.surface_at(target.xy(), target.z) else {
            return Err(SkillError::new(SkillErrorKind::InvalidTarget, "no surface under the target"));
        };
        let support = self.state.robot.support.clone();
        let reach = self.component(&surfaces, &support, false);
        let dest_idx = surfaces.iter().position(|s| s.name == dest.name).expect("listed surface");
        if !reach.contains(&dest_idx) {
            if self.component(&surfaces, &support, true).contains(&dest_idx) {
                let limit = self.scene.robot.gap_limit.unwrap_or(0.0);
                let gap = reach
                    .iter()
                    .flat_map(|&i| surfaces.iter().map(move |s| (i, s)))
                    .filter_map(|(i, s)| match self.link(&surfaces[i], s) {
                        Link::TooWide(g) => Some(g),
                        _ => None,
                    })
                    .fold(f64::INFINITY, f64::min);
                return Err(SkillError::new(
                    SkillErrorKind::GapTooWide,
                    format!("gap of {gap:.3} m exceeds the walking limit of {limit:.3} m"),
                )
                .with("gap", gap)
                .with("limit", limit));
            }
            return Err(SkillError::new(
                SkillErrorKind::PathNotFound,
                format!("{} is not reachable from {support} by walking", dest.name),
            ));
        }
        let space = self.walk_space();
        let plan = self.walk_path(&space, target.xy())?;
        let h = space.height_at(target.xy()).unwrap_or(dest.top);
        let on = surfaces
            .iter()
            .enumerate()
            .filter(|(i, s)| reach.contains(i) && s.rect.contains(target.xy()) && (s.top - h).abs() < 1e-9)
            .map(|(_, s)| s.name.clone())
            .next_back()
            .unwrap_or(dest.name);
        self.state.robot.position = Vec3::new(target.x, target.y, h);
        self.state.robot.support = on;
        Ok(vec![format!("walk: {} waypoints, {:.3} m", plan.waypoints.len(), plan.cost)])
    }

    /// Height profile under `p`: top of the highest object containing it.
    fn ground_height(&self, p: Vec2) -> (f64, String) {
        self.surface_under(p, &[])
    }

    pub fn climb_to_position(&mut self, target: Vec3) -> Result<Vec<String>, SkillError> {
        self.require_quadruped()?;
        if !target.is_finite() || !self.scene.floor_extent.contains(target.xy()) {
            return Err(SkillError::new(SkillErrorKind::InvalidTarget, "target is not on the floor area"));
        }
        let (h_goal, on) = self.ground_height(target.xy());
        if on != GROUND && !self.state.object(&on).is_some_and(|o| o.is_support_surface) {
            return Err(SkillError::new(SkillErrorKind::InvalidTarget, format!("{on} cannot be stood on")));
        }
        let limit = self.scene.robot.climb_step_limit.unwrap_or(0.0);
        let start = self.state.robot.position.xy();
        let goal = target.xy();
        let n = ((start.distance(&goal) / self.config.sample_resolution).ceil() as usize).max(1);
        let mut prev = self.state.robot.position.z;
        for i in 1..=n {
            let p = start.lerp(&goal, i as f64 / n as f64);
            let (h, what) = self.ground_height(p);
            let rise = h - prev;
            if rise > limit + 1e-9 {
                return Err(SkillError::new(
                    SkillErrorKind::StepTooHigh,
                    format!("rise of {rise:.3} m onto {what} exceeds the climbing limit of {limit:.3} m"),
                )
                .with("rise", rise)
                .with("limit", limit));
            }
            prev = h;
        }
        self.state.robot.position = Vec3::new(target.x, target.y, h_goal);
        self.state.robot.support = on.clone();
        Ok(vec![format!("climb onto {on} at height {h_goal:.3} m")])
    }

    /// Standing point behind the face of `rect` opposite to direction `dir`.
    fn push_pose(&self, rect: &Obb2, dir: Vec2) -> Vec2 {
        let h = rect.inflate(self.half_width()).aabb_half();
        let reach = h.x * dir.x.abs() + h.y * dir.y.abs() + self.config.push_margin;
        rect.center - dir * reach
    }

    fn approach(&mut self, pose: Vec2) -> Result<(), SkillError> {
        let space = self.walk_space();
        if self.state.robot.position.xy().distance(&pose) > 1e-9 {
            self.walk_path(&space, pose)?;
        }
        let h = space.height_at(pose).unwrap_or(self.state.robot.position.z);
        self.state.robot.position = Vec3::new(pose.x, pose.y, h);
        Ok(())
    }

    /// Translates `body` with the robot behind it by `d`, checking that the
    /// swept object and robot stay clear.
    fn push_segment(&mut self, name: &str, d: Vec2) -> Result<(), SkillError> {
        let group = self.state.group_of(name);
        let mut body = group.clone();
        body.extend(self.riders(&group));
        let o = self.state.object(name).expect("pushed object exists").clone();
        let fp = o.footprint();
        let a0 = fp.aabb();
        let swept_min = Vec2::new(a0.min.x.min(a0.min.x + d.x), a0.min.y.min(a0.min.y + d.y));
        let swept_max = Vec2::new(a0.max.x.max(a0.max.x + d.x), a0.max.y.max(a0.max.y + d.y));
        let swept = Obb2::new(swept_min.lerp(&swept_max, 0.5), swept_max - swept_min, 0.0);
        for other in &self.state.objects {
            if body.contains(&other.name) {
                continue;
            }
            let vertical = o.top().min(other.top()) - o.bottom().max(other.bottom());
            if vertical > 1e-3 && swept.penetration(&other.footprint()) > 1e-3 {
                return Err(SkillError::new(
                    SkillErrorKind::PathNotFound,
                    format!("pushing {name} would collide with {}", other.name),
                ));
            }
        }
        let space = self.walk_space().without(&body);
        let r0 = self.state.robot.position.xy();
        if !segment_free(&space, r0, r0 + d, self.config.sample_resolution) {
            return Err(SkillError::new(SkillErrorKind::PathNotFound, format!("no room to walk behind {name}")));
        }
        let d3 = Vec3::new(d.x, d.y, 0.0);
        self.translate(&body, d3);
        self.state.robot.position = self.state.robot.position + d3;
        Ok(())
    }

    pub fn push_to_position(&mut self, name: &str, target: Vec3, yaw: f64) -> Result<Vec<String>, SkillError> {
        self.require_quadruped()?;
        let o = self.object(name)?.clone();
        let limit = self.scene.robot.push_mass_limit.unwrap_or(0.0);
        let group = self.state.group_of(name);
        let mass: f64 = group.iter().filter_map(|m| self.state.object(m)).map(|m| m.mass).sum();
        if mass > limit + 1e-9 {
            return Err(SkillError::new(
                SkillErrorKind::OverMassLimit,
                format!("{name} weighs {mass:.2} kg, the pushing limit is {limit:.2} kg"),
            )
            .with("mass", mass)
            .with("limit", limit));
        }
        if o.has_tag("fixed") {
            return Err(SkillError::new(SkillErrorKind::InvalidTarget, format!("{name} is fixed in place")));
        }
        if !target.is_finite() || !yaw.is_finite() || !self.scene.floor_extent.contains(target.xy()) {
            return Err(SkillError::new(SkillErrorKind::InvalidTarget, "push target is not on the floor area"));
        }
        let mut phases = Vec::new();

        let dyaw = wrap_angle(yaw - o.yaw);
        if dyaw.abs() > 1e-9 {
            let rect = o.footprint();
            let pose = [Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(0.0, -1.0)]
                .into_iter()
                .map(|dir| (dir, self.push_pose(&rect, dir)))
                .find(|(_, p)| self.walk_space().is_free(*p));
            let Some((dir, pose)) = pose else {
                return Err(SkillError::new(SkillErrorKind::PathNotFound, format!("no free pose beside {name} to rotate it")));
            };
            self.approach(pose)?;
            let i = self.state.index(name).unwrap();
            let old_yaw = self.state.objects[i].yaw;
            self.state.objects[i].yaw = wrap_angle(old_yaw + dyaw);
            let turned = self.state.objects[i].clone();
            let blocker = self.state.objects.iter().find(|other| {
                other.name != name
                    && turned.top().min(other.top()) - turned.bottom().max(other.bottom()) > 1e-3
                    && turned.footprint().penetration(&other.footprint()) > 1e-3
            });
            if let Some(b) = blocker {
                let b = b.name.clone();
                self.state.objects[i].yaw = old_yaw;
                return Err(SkillError::new(SkillErrorKind::PathNotFound, format!("{name} cannot turn without hitting {b}")));
            }
            let fp = turned.footprint();
            if fp.inflate(self.half_width()).contains(self.state.robot.position.xy()) {
                let back = self.push_pose(&fp, dir);
                self.state.robot.position = Vec3::new(back.x, back.y, self.state.robot.position.z);
            }
            phases.push(format!("rotate: {dyaw:.4} rad"));
        } else {
            phases.push("rotate: none".into());
        }

        for (label, axis) in [("push_y", 1usize), ("push_x", 0usize)] {
            let cur = self.state.object(name).unwrap().position;
            let delta = if axis == 0 { target.x - cur.x } else { target.y - cur.y };
            if delta.abs() <= 1e-9 {
                phases.push(format!("{label}: none"));
                continue;
            }
            let dir = if axis == 0 { Vec2::new(delta.signum(), 0.0) } else { Vec2::new(0.0, delta.signum()) };
            let rect = self.state.object(name).unwrap().footprint();
            self.approach(self.push_pose(&rect, dir))?;
            self.push_segment(name, dir * delta.abs())?;
            phases.push(format!("{label}: {delta:.4} m"));
        }
        self.settle(&group);
        Ok(phases)
    }
}
