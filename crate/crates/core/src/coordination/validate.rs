use serde::{Deserialize, Serialize};

use crate::coverage::stream_joint;
use crate::world::{traversable, Scenario};

use super::conflict::detect_first_conflict;
use super::PlanResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }

    fn push(&mut self, name: &str, outcome: std::result::Result<String, String>) {
        let (status, detail) = match outcome {
            Ok(d) => (CheckStatus::Pass, d),
            Err(d) => (CheckStatus::Fail, d),
        };
        self.checks.push(Check {
            name: name.into(),
            status,
            detail,
        });
    }

    fn skip(&mut self, name: &str, why: &str) {
        self.checks.push(Check {
            name: name.into(),
            status: CheckStatus::Skipped,
            detail: why.into(),
        });
    }
}

const CHECKS: [&str; 6] = [
    "conflict_free",
    "constraints",
    "traversability",
    "continuity",
    "objective",
    "marginals",
];

/// Re-checks a plan against its scenario. Never errors; problems are
/// reported as failed checks.
pub fn validate(result: &PlanResult, scenario: &Scenario) -> ValidationReport {
    let mut report = ValidationReport { checks: Vec::new() };
    if !result.is_success() {
        report.push(
            "status",
            Err(result.failure.clone().unwrap_or_else(|| "planner failed".into())),
        );
        for name in CHECKS {
            report.skip(name, "no plan");
        }
        return report;
    }
    report.push("status", Ok("success".into()));

    let shape = shape_check(result, scenario);
    let ok_shape = shape.is_ok();
    report.push("shape", shape);
    if !ok_shape {
        for name in CHECKS {
            report.skip(name, "malformed trajectories");
        }
        return report;
    }
    let paths = result.paths();

    if result.planner.avoids_collisions() {
        report.push(
            "conflict_free",
            match detect_first_conflict(&paths) {
                Ok(None) => Ok("no conflicts".into()),
                Ok(Some(c)) => Err(format!(
                    "{:?} conflict between robots {} and {} at t={} ({}, {})",
                    c.kind, c.robot_i, c.robot_j, c.t, c.v_i.x, c.v_i.y
                )),
                Err(e) => Err(e.to_string()),
            },
        );
    } else {
        report.skip("conflict_free", "not required for this planner");
    }

    let broken: Vec<String> = result
        .constraints
        .iter()
        .filter(|c| paths.get(c.robot).is_none_or(|p| c.violated_by(p)))
        .map(|c| format!("{c:?}"))
        .collect();
    report.push(
        "constraints",
        if broken.is_empty() {
            Ok(format!("{} constraints satisfied", result.constraints.len()))
        } else {
            Err(format!("violated: {}", broken.join("; ")))
        },
    );

    let mut blocked = Vec::new();
    for (i, p) in paths.iter().enumerate() {
        for &v in p {
            if !traversable(v, &scenario.heightmap, &scenario.motion).unwrap_or(false) {
                blocked.push(format!("robot {i} at ({}, {}, {})", v.x, v.y, v.t));
            }
        }
    }
    report.push(
        "traversability",
        if blocked.is_empty() {
            Ok("all vertices traversable".into())
        } else {
            Err(blocked.join("; "))
        },
    );

    let mut jumps = Vec::new();
    for (i, p) in paths.iter().enumerate() {
        if p[0].cell() != scenario.robots[i] {
            jumps.push(format!("robot {i} does not start at its start cell"));
        }
        for w in p.windows(2) {
            if !scenario.motion.allows_step(w[0].cell(), w[1].cell()) {
                jumps.push(format!("robot {i} jumps at t={}", w[0].t));
            }
        }
    }
    report.push(
        "continuity",
        if jumps.is_empty() {
            Ok("every step within the motion model".into())
        } else {
            Err(jumps.join("; "))
        },
    );

    match stream_joint(&paths, scenario) {
        Ok((ledger, marginals)) => {
            let g = ledger.value();
            let diff = (g - result.total_reward).abs();
            report.push(
                "objective",
                if diff <= 1e-9 {
                    Ok(format!("g = {g}"))
                } else {
                    Err(format!("stored g {} but recomputed {g}", result.total_reward))
                },
            );
            let sum: f64 = result.marginals.iter().sum();
            let close = result.marginals.len() == marginals.len()
                && result
                    .marginals
                    .iter()
                    .zip(&marginals)
                    .all(|(a, b)| (a - b).abs() <= 1e-9);
            report.push(
                "marginals",
                if close && (sum - g).abs() <= 1e-6 {
                    Ok(format!("{} timesteps, sum {sum}", marginals.len()))
                } else {
                    Err(format!(
                        "stored marginals {:?} but recomputed {marginals:?}",
                        result.marginals
                    ))
                },
            );
        }
        Err(e) => {
            report.push("objective", Err(e.to_string()));
            report.skip("marginals", "objective failed");
        }
    }
    report
}

fn shape_check(result: &PlanResult, scenario: &Scenario) -> std::result::Result<String, String> {
    if result.trajectories.len() != scenario.robots.len() {
        return Err(format!(
            "{} trajectories for {} robots",
            result.trajectories.len(),
            scenario.robots.len()
        ));
    }
    for (i, p) in result.trajectories.iter().enumerate() {
        if p.len() != scenario.horizon + 1 {
            return Err(format!(
                "robot {i} has {} vertices, expected {}",
                p.len(),
                scenario.horizon + 1
            ));
        }
        if let Some(c) = p.iter().find(|c| scenario.heightmap.check(**c).is_err()) {
            return Err(format!("robot {i} leaves the map at ({}, {})", c.x, c.y));
        }
    }
    Ok(format!(
        "{} robots x {} timesteps",
        scenario.robots.len(),
        scenario.horizon + 1
    ))
}
