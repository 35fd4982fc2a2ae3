use crate::coverage::{marginal_gain, observe, CoverageLedger};
use crate::error::{Error, Result};
use crate::world::{actor_faces_at, Cell, FaceGeometry, GridVertex, Scenario, FACES_PER_ACTOR};

/// Source of Markovian state rewards for the single-robot solvers.
pub trait RewardModel {
    /// Reward for occupying `v`, before any motion penalty. Must be `>= 0`.
    fn state_reward(&mut self, v: GridVertex) -> Result<f64>;

    /// An upper bound on `state_reward` over every cell within Chebyshev
    /// distance `radius` of `center` at time `t`.
    fn reward_bound(&mut self, center: Cell, radius: usize, t: usize) -> Result<f64>;
}

/// `covm` against a frozen ledger, evaluated lazily and memoized per state.
pub struct CoverageReward<'a> {
    scenario: &'a Scenario,
    frozen: &'a CoverageLedger,
    /// Dense `(t, y, x)` table, NaN until evaluated.
    memo: Vec<f64>,
    evaluations: usize,
    /// Face geometry per timestep, per actor.
    faces: Vec<Vec<[FaceGeometry; FACES_PER_ACTOR]>>,
    /// `covp` of the frozen ledger per actor face.
    prior: Vec<[f64; FACES_PER_ACTOR]>,
}

impl<'a> CoverageReward<'a> {
    pub fn new(scenario: &'a Scenario, frozen: &'a CoverageLedger) -> Result<Self> {
        let hm = &scenario.heightmap;
        let faces = (0..=scenario.horizon)
            .map(|t| scenario.actors.iter().map(|a| actor_faces_at(a, t)).collect())
            .collect::<Result<_>>()?;
        Ok(CoverageReward {
            scenario,
            frozen,
            memo: vec![f64::NAN; hm.width() * hm.height() * (scenario.horizon + 1)],
            evaluations: 0,
            faces,
            prior: (0..scenario.actors.len())
                .map(|j| std::array::from_fn(|f| frozen.covp(j, f)))
                .collect(),
        })
    }

    /// Distinct states whose reward has been computed.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }
}

impl RewardModel for CoverageReward<'_> {
    fn state_reward(&mut self, v: GridVertex) -> Result<f64> {
        let hm = &self.scenario.heightmap;
        hm.check(v.cell())?;
        let slot = (v.t * hm.height() + v.y) * hm.width() + v.x;
        let cached = *self.memo.get(slot).ok_or(Error::Horizon {
            t: v.t,
            horizon: self.scenario.horizon,
        })?;
        if !cached.is_nan() {
            return Ok(cached);
        }
        let r = marginal_gain(&observe(v, self.scenario)?, self.frozen);
        self.memo[slot] = r;
        self.evaluations += 1;
        Ok(r)
    }

    fn reward_bound(&mut self, center: Cell, radius: usize, t: usize) -> Result<f64> {
        let s = self.scenario;
        let hm = &s.heightmap;
        let lo = hm.cell_center(Cell::new(
            center.x.saturating_sub(radius),
            center.y.saturating_sub(radius),
        ));
        let hi = hm.cell_center(Cell::new(
            (center.x + radius).min(hm.width() - 1),
            (center.y + radius).min(hm.height() - 1),
        ));
        let focal_sq = s.camera.focal_px * s.camera.focal_px;
        let mut bound = 0.0;
        let faces = self.faces.get(t).ok_or(Error::Horizon { t, horizon: s.horizon })?;
        for (actor_faces, prior) in faces.iter().zip(&self.prior) {
            let mut gain = [0.0; FACES_PER_ACTOR];
            for (f, face) in actor_faces.iter().enumerate() {
                let peak = density_peak(
                    [lo.x, lo.y, hi.x, hi.y],
                    [face.center.x, face.center.y],
                    [face.normal.x, face.normal.y],
                    s.motion.flight_altitude - face.center.z,
                );
                if peak > 0.0 {
                    // nudged up so rounding never makes the bound inadmissible
                    let density = focal_sq * peak * (1.0 + 1e-9);
                    gain[f] = (density + prior[f]).sqrt() - prior[f].sqrt();
                }
            }
            // opposite faces of a box never both face the camera
            bound += gain[0].max(gain[2]) + gain[1].max(gain[3]);
        }
        Ok(bound * (1.0 + 1e-9))
    }
}

/// Supremum of `u / (u^2 + v^2 + dz^2)^(3/2)` over camera positions in the
/// rectangle `[x0, x1] x [y0, y1]`, with `u` the camera's offset along the
/// face normal and `v` its offset across it. This is `cos(theta) / d^2` for a
/// vertical face; visibility and field of view are ignored.
fn density_peak(rect: [f64; 4], center: [f64; 2], normal: [f64; 2], dz: f64) -> f64 {
    let [x0, y0, x1, y1] = rect;
    let u_max = [(x0, y0), (x0, y1), (x1, y0), (x1, y1)]
        .iter()
        .map(|&(x, y)| normal[0] * (x - center[0]) + normal[1] * (y - center[1]))
        .fold(f64::NEG_INFINITY, f64::max);
    if u_max <= 0.0 {
        return 0.0;
    }
    let gx = (x0 - center[0]).max(0.0).max(center[0] - x1);
    let gy = (y0 - center[1]).max(0.0).max(center[1] - y1);
    let d_min = (gx * gx + gy * gy).sqrt();
    let dz2 = dz * dz;
    let (u, rho) = if u_max < d_min {
        (u_max, d_min)
    } else {
        let rho = (dz / std::f64::consts::SQRT_2).min(u_max).max(d_min);
        (rho, rho)
    };
    let d2 = rho * rho + dz2;
    u / (d2 * d2.sqrt())
}

/// Step reward for robot `i` entering `x` from `from`: `covm` against the
/// frozen ledger minus the motion penalty, clamped at zero.
pub fn step_reward(
    from: Cell,
    x: GridVertex,
    frozen: &CoverageLedger,
    scenario: &Scenario,
    lambda_motion: f64,
) -> Result<f64> {
    let gain = marginal_gain(&observe(x, scenario)?, frozen);
    Ok((gain - lambda_motion * from.step_length(x.cell())).max(0.0))
}
