use super::World;
use crate::geometry::{wrap_angle, Aabb3, Obb2, Vec2, Vec3};
use crate::scene::{MechanismKind, MechanismRule};

impl World {
    /// Evaluates every mechanism trigger against the current state and
    /// applies its effect. Flags are only ever set, never cleared.
    pub fn apply_mechanisms(&mut self) {
        let rules = self.scene.mechanisms.clone();
        for rule in &rules {
            match rule.kind {
                MechanismKind::MagneticAttach => self.magnetic(rule),
                MechanismKind::Bridge => {
                    if self.state.flags.gap_spanned_by.is_none() && self.bridge_spans(rule) {
                        self.state.flags.gap_spanned_by = rule.role("bridge").map(str::to_string);
                    }
                }
                MechanismKind::Lever => {
                    if !self.state.flags.cube_lifted && self.lever_fires(rule) {
                        self.state.flags.cube_lifted = true;
                    }
                }
                MechanismKind::Button => {
                    if !self.state.flags.button_pressed && self.button_touched(rule) {
                        self.state.flags.button_pressed = true;
                    }
                }
            }
        }
    }

    fn magnetic(&mut self, rule: &MechanismRule) {
        let max_gap = rule.param("max_gap", 0.01);
        let max_angle = rule.param("max_angle_deg", 10.0).to_radians();
        let blocks: Vec<String> = rule.roles("block").into_iter().map(str::to_string).collect();
        for i in 0..blocks.len() {
            for j in i + 1..blocks.len() {
                let (na, nb) = (&blocks[i], &blocks[j]);
                if self.state.group_of(na).contains(nb) || self.state.is_held(na) || self.state.is_held(nb) {
                    continue;
                }
                let (Some(a), Some(b)) = (self.state.object(na), self.state.object(nb)) else { continue };
                let mut dyaw = wrap_angle(b.yaw - a.yaw).abs();
                if dyaw > std::f64::consts::FRAC_PI_2 {
                    dyaw = std::f64::consts::PI - dyaw;
                }
                if dyaw > max_angle || (a.position.z - b.position.z).abs() > max_gap {
                    continue;
                }
                let u = Vec2::new(a.yaw.cos(), a.yaw.sin());
                let d = b.position.xy() - a.position.xy();
                let along = d.dot(&u);
                let lateral = d.dot(&Vec2::new(-u.y, u.x));
                if lateral.abs() > (a.size.y.min(b.size.y)) / 2.0 {
                    continue;
                }
                let gap = along.abs() - (a.size.x + b.size.x) / 2.0;
                if !(-1e-3..=max_gap).contains(&gap) {
                    continue;
                }
                let shift = u * (-along.signum() * gap);
                let moved = self.state.group_of(nb);
                self.translate(&moved, Vec3::new(shift.x, shift.y, 0.0));
                let mut merged = self.state.group_of(na);
                merged.extend(moved);
                merged.sort();
                merged.dedup();
                self.state.groups.retain(|g| !g.iter().any(|m| merged.contains(m)));
                self.state.groups.push(merged);
            }
        }
    }

    fn bridge_spans(&self, rule: &MechanismRule) -> bool {
        let min_overlap = rule.param("min_overlap", 0.05);
        let (Some(b), Some(ea), Some(eb)) = (
            rule.role("bridge").and_then(|n| self.state.object(n)),
            rule.role("edge_a").and_then(|n| self.state.object(n)),
            rule.role("edge_b").and_then(|n| self.state.object(n)),
        ) else {
            return false;
        };
        let rests = |e: &crate::scene::ObjectSpec| (b.bottom() - e.top()).abs() <= self.config.settle_tolerance;
        rests(ea)
            && rests(eb)
            && b.footprint().penetration(&ea.footprint()) >= min_overlap - 1e-9
            && b.footprint().penetration(&eb.footprint()) >= min_overlap - 1e-9
    }

    /// Footprint of the lever end away from the load.
    pub fn lever_far_end(&self, rule: &MechanismRule) -> Option<Obb2> {
        let lever = self.state.object(rule.role("lever")?)?;
        let load = self.state.object(rule.role("load")?)?;
        let len = rule.param("far_end_length", 0.4).min(lever.size.x);
        let u = Vec2::new(lever.yaw.cos(), lever.yaw.sin());
        let side = -(load.position.xy() - lever.position.xy()).dot(&u).signum();
        let center = lever.position.xy() + u * (side * (lever.size.x - len) / 2.0);
        Some(Obb2::new(center, Vec2::new(len, lever.size.y), lever.yaw))
    }

    fn lever_fires(&self, rule: &MechanismRule) -> bool {
        let (Some(far), Some(lever), Some(support)) = (
            self.lever_far_end(rule),
            rule.role("lever"),
            rule.role("support").and_then(|n| self.state.object(n)),
        ) else {
            return false;
        };
        let support_gone = support.footprint().penetration(&far) <= 1e-9;
        let robot = &self.state.robot;
        support_gone && robot.support == lever && far.contains(robot.position.xy())
    }

    fn button_touched(&self, rule: &MechanismRule) -> bool {
        let Some(button) = rule.role("button").and_then(|n| self.state.object(n)) else { return false };
        let Some(g) = &self.state.gripper else { return false };
        let reach = rule.param("press_distance", 0.01);
        let bb = button.aabb();
        let h = self.config.gripper_half;
        let mut boxes = vec![Aabb3::from_center_half(g.position, Vec3::new(h, h, h))];
        boxes.extend(g.held.iter().filter_map(|a| self.state.object(&a.object)).map(|o| o.aabb()));
        boxes.iter().any(|b| b.distance(&bb) <= reach + 1e-9)
    }
}
