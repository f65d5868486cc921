use super::{Attachment, SkillError, SkillErrorKind, World};
use crate::geometry::{Aabb3, Vec3};
use crate::scene::Embodiment;

impl World {
    fn require_arm(&self) -> Result<(), SkillError> {
        if self.scene.robot.embodiment != Embodiment::Arm {
            return Err(SkillError::new(SkillErrorKind::InvalidTarget, "gripper skills need the arm"));
        }
        Ok(())
    }

    pub fn open_gripper(&mut self) -> Result<Vec<String>, SkillError> {
        self.require_arm()?;
        let g = self.state.gripper.as_mut().expect("arm has a gripper");
        let released: Vec<String> = g.held.drain(..).map(|a| a.object).collect();
        g.closed = false;
        if !released.is_empty() {
            self.settle(&released);
        }
        Ok(released.into_iter().map(|n| format!("released {n}")).collect())
    }

    /// Grasps the object whose graspable point is nearest the end effector
    /// within the grasp radius; closes empty otherwise.
    pub fn close_gripper(&mut self) -> Result<Vec<String>, SkillError> {
        self.require_arm()?;
        let g = self.state.gripper.as_ref().expect("arm has a gripper");
        if g.closed {
            return Ok(vec![]);
        }
        let ee = g.position;
        let target = self
            .state
            .objects
            .iter()
            .filter(|o| !o.has_tag("fixed"))
            .map(|o| (o.graspable_point().distance(&ee), o.name.clone()))
            .filter(|(d, _)| *d <= self.config.grasp_radius)
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let mut held = Vec::new();
        if let Some((_, name)) = &target {
            for m in self.state.group_of(name) {
                let p = self.state.object(&m).expect("group member").position;
                held.push(Attachment { object: m, offset: p - ee });
            }
        }
        let g = self.state.gripper.as_mut().expect("arm has a gripper");
        g.closed = true;
        g.held = held;
        Ok(match target {
            Some((_, n)) => vec![format!("grasped {n}")],
            None => vec!["closed empty".into()],
        })
    }

    fn gripper_box(&self, at: Vec3) -> Aabb3 {
        let h = self.config.gripper_half;
        Aabb3::from_center_half(at, Vec3::new(h, h, h))
    }

    /// Moves the end effector, axis by axis in the configured order. Held
    /// objects and anything resting on them follow rigidly; free objects hit
    /// by the swept gripper or held objects are carried by the remainder of
    /// the horizontal displacement after first contact.
    pub fn move_to_position(&mut self, target: Vec3) -> Result<Vec<String>, SkillError> {
        self.require_arm()?;
        if !target.is_finite() {
            return Err(SkillError::new(SkillErrorKind::InvalidTarget, "target is not finite"));
        }
        let (center, radius) = self.scene.robot.workspace().expect("validated arm has a workspace");
        let dist = target.distance(&center);
        if dist > radius + 1e-9 {
            return Err(SkillError::new(
                SkillErrorKind::OutOfWorkspace,
                format!("target is {dist:.3} m from the workspace center, radius is {radius:.3} m"),
            )
            .with("distance", dist)
            .with("radius", radius));
        }
        let start = self.state.gripper.as_ref().expect("arm has a gripper").position;
        let held = self.state.held_names();
        if (target.z - start.z).abs() > 1e-9 {
            if let Some(n) = held.iter().find(|n| self.state.object(n).is_some_and(|o| o.has_tag("cannot_lift"))) {
                return Err(SkillError::new(
                    SkillErrorKind::InvalidTarget,
                    format!("{n} cannot be lifted; only horizontal moves are possible while holding it"),
                ));
            }
        }

        let segments: Vec<Vec3> = match self.scene.robot.motion_order.axes() {
            None => vec![target - start],
            Some(order) => {
                let d = (target - start).to_array();
                order
                    .iter()
                    .map(|&k| {
                        let mut v = [0.0; 3];
                        v[k] = d[k];
                        Vec3::from_array(v)
                    })
                    .collect()
            }
        };
        let mut notes = Vec::new();
        for d in segments {
            if d.norm() < 1e-12 {
                continue;
            }
            notes.extend(self.sweep(d));
        }
        Ok(notes)
    }

    fn sweep(&mut self, d: Vec3) -> Vec<String> {
        let ee = self.state.gripper.as_ref().unwrap().position;
        let held = self.state.held_names();
        let carried = self.riders(&held);
        let mut movers: Vec<Aabb3> = vec![self.gripper_box(ee)];
        for n in held.iter().chain(carried.iter()) {
            movers.push(self.state.object(n).unwrap().aabb());
        }
        let horizontal = d.horizontal();
        let mut pushed: Vec<(Vec<String>, f64)> = Vec::new();
        if horizontal.norm() > 0.0 {
            let mut seen: Vec<String> = held.iter().chain(carried.iter()).cloned().collect();
            for o in &self.state.objects {
                if seen.contains(&o.name) || o.has_tag("fixed") {
                    continue;
                }
                let group = self.state.group_of(&o.name);
                let bbox = self.group_aabb(&o.name);
                let t0 = movers
                    .iter()
                    .filter_map(|m| m.time_of_impact(d, &bbox, crate::geometry::CONTACT_EPS))
                    .fold(f64::INFINITY, f64::min);
                if t0 < 1.0 {
                    seen.extend(group.iter().cloned());
                    pushed.push((group, t0));
                }
            }
        }

        let mut all: Vec<String> = held.clone();
        all.extend(carried);
        self.translate(&all, d);
        self.state.gripper.as_mut().unwrap().position = ee + d;

        let mut notes = Vec::new();
        for (group, t0) in pushed {
            let shift = horizontal * (1.0 - t0);
            let mut body = group.clone();
            body.extend(self.riders(&group));
            self.translate(&body, shift);
            self.settle(&group);
            notes.push(format!("pushed {} by [{:.3}, {:.3}]", group.join("+"), shift.x, shift.y));
        }
        notes
    }
}
