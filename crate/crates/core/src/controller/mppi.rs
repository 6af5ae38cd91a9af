use super::{rollout_cost, ControlInput, ControllerError, CostContext, MppiConfig};
use crate::exec::Execution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerOutput {
    /// First input of the optimized sequence.
    pub control: ControlInput,
    /// Optimized sequence shifted by one step, last input repeated.
    pub nominal_sequence: Vec<ControlInput>,
    /// Softmax-weighted mean of the sampled rollout costs.
    pub expected_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MppiDiagnostics {
    pub costs: Vec<f64>,
    pub weights: Vec<f64>,
    /// Sampled sequences, row-major `num_samples x horizon_steps`.
    pub samples: Vec<ControlInput>,
    /// Weighted average before the warm-start shift.
    pub optimized: Vec<ControlInput>,
    pub best_index: usize,
}

impl MppiDiagnostics {
    pub fn sample(&self, m: usize) -> &[ControlInput] {
        let k = self.optimized.len();
        &self.samples[m * k..(m + 1) * k]
    }

    pub fn mean_cost(&self) -> f64 {
        self.costs.iter().sum::<f64>() / self.costs.len() as f64
    }
}

/// Perturbed control sequence for rollout `m`. Each rollout draws from its own
/// ChaCha stream keyed by `(seed, m)`, so samples do not depend on evaluation order.
fn sample_sequence(nominal: &[ControlInput], cfg: &MppiConfig, m: usize, noise: (Normal<f64>, Normal<f64>)) -> Vec<ControlInput> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(m as u64);
    nominal
        .iter()
        .map(|u| {
            ControlInput::new(u.v + noise.0.sample(&mut rng), u.w + noise.1.sample(&mut rng)).clamped(cfg)
        })
        .collect()
}

pub fn mppi_solve(
    ctx: &CostContext<'_>,
    cfg: &MppiConfig,
    warm_start: Option<&[ControlInput]>,
) -> Result<PlannerOutput, ControllerError> {
    mppi_solve_with(ctx, cfg, warm_start, Execution::default()).map(|(out, _)| out)
}

/// One MPPI iteration: sample, roll out, softmax-weight and average.
///
/// A warm start of the wrong length is ignored in favour of a zero sequence.
pub fn mppi_solve_with(
    ctx: &CostContext<'_>,
    cfg: &MppiConfig,
    warm_start: Option<&[ControlInput]>,
    exec: Execution,
) -> Result<(PlannerOutput, MppiDiagnostics), ControllerError> {
    cfg.validate()?;
    let k = cfg.horizon_steps;
    let m = cfg.num_samples;
    let nominal: Vec<ControlInput> = match warm_start {
        Some(ws) if ws.len() == k => ws.iter().map(|u| u.clamped(cfg)).collect(),
        _ => vec![ControlInput::default().clamped(cfg); k],
    };
    let noise = (
        Normal::new(0.0, cfg.sigma_v).expect("validated sigma"),
        Normal::new(0.0, cfg.sigma_w).expect("validated sigma"),
    );

    let rollouts: Vec<(Vec<ControlInput>, f64)> = exec.map_indexed(m, |i| {
        let seq = sample_sequence(&nominal, cfg, i, noise);
        let cost = rollout_cost(&seq, ctx, cfg);
        (seq, cost)
    });

    let costs: Vec<f64> = rollouts.iter().map(|r| r.1).collect();
    let (best_index, s_min) = costs
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, c)| if c < acc.1 { (i, c) } else { acc });
    let raw: Vec<f64> = costs.iter().map(|&c| (-(c - s_min) / cfg.lambda).exp()).collect();
    let z: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / z).collect();

    let mut optimized = vec![ControlInput::default(); k];
    for (w, (seq, _)) in weights.iter().zip(&rollouts) {
        if *w == 0.0 {
            continue;
        }
        for (acc, u) in optimized.iter_mut().zip(seq) {
            acc.v += w * u.v;
            acc.w += w * u.w;
        }
    }
    for u in optimized.iter_mut() {
        *u = u.clamped(cfg);
    }
    let expected_cost = weights.iter().zip(&costs).map(|(w, c)| w * c).sum();

    let mut nominal_sequence = optimized[1..].to_vec();
    nominal_sequence.push(*optimized.last().expect("horizon >= 1"));

    let out = PlannerOutput {
        control: optimized[0],
        nominal_sequence,
        expected_cost,
    };
    let diag = MppiDiagnostics {
        costs,
        weights,
        samples: rollouts.into_iter().flat_map(|r| r.0).collect(),
        optimized,
        best_index,
    };
    Ok((out, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CameraModel, GroundPoint, PixelPoint};

    fn setup() -> CameraModel {
        CameraModel::default()
    }

    #[test]
    fn equal_costs_give_uniform_weights() {
        let cam = setup();
        // zero weights everywhere: every rollout costs exactly 0
        let cfg = MppiConfig { w_obst: 0.0, w_sg: 0.0, q_ctrl: [0.0, 0.0], num_samples: 16, ..Default::default() };
        let ctx = CostContext { cam: &cam, subgoal: PixelPoint::new(160.0, 200.0), obstacles: &[] };
        let (_, d) = mppi_solve_with(&ctx, &cfg, None, Execution::Sequential).unwrap();
        for w in &d.weights {
            assert_eq!(*w, 1.0 / 16.0);
        }
    }

    #[test]
    fn execution_modes_are_identical() {
        let cam = setup();
        let obs = [GroundPoint::new(2.0, 0.3), GroundPoint::new(1.5, -0.4)];
        let ctx = CostContext { cam: &cam, subgoal: PixelPoint::new(150.0, 180.0), obstacles: &obs };
        let cfg = MppiConfig { rng_seed: 99, ..Default::default() };
        let a = mppi_solve_with(&ctx, &cfg, None, Execution::Sequential).unwrap();
        let b = mppi_solve_with(&ctx, &cfg, None, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn outputs_respect_bounds_and_shift() {
        let cam = setup();
        let ctx = CostContext { cam: &cam, subgoal: PixelPoint::new(10.0, 130.0), obstacles: &[] };
        let cfg = MppiConfig { sigma_v: 5.0, sigma_w: 5.0, rng_seed: 3, ..Default::default() };
        let (out, d) = mppi_solve_with(&ctx, &cfg, None, Execution::default()).unwrap();
        for u in d.samples.iter().chain(&d.optimized).chain(&out.nominal_sequence) {
            assert!(u.v >= cfg.v_min && u.v <= cfg.v_max && u.w.abs() <= cfg.w_max);
        }
        assert_eq!(out.control, d.optimized[0]);
        assert_eq!(&out.nominal_sequence[..cfg.horizon_steps - 1], &d.optimized[1..]);
        assert_eq!(out.nominal_sequence.last(), d.optimized.last());
        assert!(out.expected_cost <= d.mean_cost());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cam = setup();
        let ctx = CostContext { cam: &cam, subgoal: PixelPoint::new(160.0, 200.0), obstacles: &[] };
        let cfg = MppiConfig { lambda: -1.0, ..Default::default() };
        assert!(matches!(mppi_solve(&ctx, &cfg, None), Err(ControllerError::InvalidConfig { field: "lambda", .. })));
    }
}
