//! Monte-Carlo oracle for laser amplitude noise: averages realizations of
//! the stochastic Bloch precession driven by delta-correlated noise on the
//! two Rabi quadratures.
//!
//! Discretization is a Stratonovich-consistent implicit midpoint rule: the
//! noises are frozen over each step as independent Gaussians of variance
//! 1/h, and the linear midpoint system is solved exactly. The averaged
//! trajectory converges (in 1/sqrt(n_traj)) to the deterministic Bloch
//! solution with the corresponding laser-noise dissipation tensor.
//!
//! The microscopic Ito-vs-Stratonovich convention is not fixed by the
//! averaged master equation alone; this implementation validates against the
//! averaged equation, which is the actual contract.
//!
//! Trajectories use per-index RNG streams and are combined by pairwise
//! summation in fixed index order, so the result is bitwise reproducible for
//! a given seed regardless of scheduling.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::geometry::{DissipationTensor, RealVec3, TimeGrid};
use crate::rng::Xoshiro256;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type TensorFn = Arc<dyn Fn(f64) -> DissipationTensor + Send + Sync>;

/// Two-quadrature drive with multiplicative amplitude noise of relative
/// strength `lambda`, plus an optional deterministic damping tensor applied
/// inside every realization.
#[derive(Clone)]
pub struct NoisyDriveSystem {
    omega_r: ScalarFn,
    omega_i: ScalarFn,
    delta: ScalarFn,
    lambda: f64,
    static_tensor: Option<TensorFn>,
}

impl NoisyDriveSystem {
    pub fn new<FR, FI, FD>(omega_r: FR, omega_i: FI, delta: FD, lambda: f64) -> Self
    where
        FR: Fn(f64) -> f64 + Send + Sync + 'static,
        FI: Fn(f64) -> f64 + Send + Sync + 'static,
        FD: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        NoisyDriveSystem {
            omega_r: Arc::new(omega_r),
            omega_i: Arc::new(omega_i),
            delta: Arc::new(delta),
            lambda,
            static_tensor: None,
        }
    }

    /// Fold a deterministic damping tensor into every realization.
    pub fn with_static_tensor<F>(mut self, tensor: F) -> Self
    where
        F: Fn(f64) -> DissipationTensor + Send + Sync + 'static,
    {
        self.static_tensor = Some(Arc::new(tensor));
        self
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Noise-averaged dissipation tensor of the drive at time t:
    /// (lambda^2 / 2) [W_I^2 xx + W_R^2 yy + (W_I^2 + W_R^2) zz].
    pub fn laser_tensor(&self, t: f64) -> DissipationTensor {
        laser_noise_tensor((self.omega_r)(t), (self.omega_i)(t), self.lambda)
    }

    /// Deterministic field (no noise) at time t.
    pub fn field(&self, t: f64) -> RealVec3 {
        RealVec3::new((self.omega_r)(t), (self.omega_i)(t), (self.delta)(t))
    }

    fn static_at(&self, t: f64) -> DissipationTensor {
        self.static_tensor
            .as_ref()
            .map(|f| f(t))
            .unwrap_or(DissipationTensor::ZERO)
    }
}

/// Dissipation tensor equivalent to amplitude noise of strength `lambda` on
/// the two quadratures (W_R, W_I).
pub fn laser_noise_tensor(omega_r: f64, omega_i: f64, lambda: f64) -> DissipationTensor {
    let c = 0.5 * lambda * lambda;
    DissipationTensor::diagonal(
        c * omega_i * omega_i,
        c * omega_r * omega_r,
        c * (omega_i * omega_i + omega_r * omega_r),
    )
    .expect("squares are non-negative")
}

/// Mean Bloch trajectory over `n_traj` noise realizations, with the
/// per-component standard error of the mean.
#[derive(Clone, Debug)]
pub struct McAverage {
    pub times: Vec<f64>,
    pub mean: Vec<RealVec3>,
    pub sem: Vec<RealVec3>,
    pub n_traj: usize,
}

/// Averages `n_traj` midpoint realizations of the noisy precession from
/// `s_init` on `grid`. Per-trajectory streams derive from (seed, index).
pub fn stochastic_bloch_oracle(
    system: &NoisyDriveSystem,
    s_init: RealVec3,
    seed: u64,
    n_traj: usize,
    grid: &TimeGrid,
) -> Result<McAverage> {
    if n_traj == 0 {
        return Err(CoreError::Domain("n_traj must be >= 1".into()));
    }
    let n_nodes = grid.n_steps() + 1;
    let mut acc = PairwiseAccumulator::new(n_nodes);
    let mut traj = vec![RealVec3::ZERO; n_nodes];
    for index in 0..n_traj {
        let mut rng = Xoshiro256::stream(seed, index as u64);
        integrate_realization(system, s_init, grid, &mut rng, &mut traj)?;
        acc.push(&traj);
    }
    let (sum, sumsq) = acc.finish();
    let n = n_traj as f64;
    let mean: Vec<RealVec3> = sum.iter().map(|s| *s * (1.0 / n)).collect();
    let sem = if n_traj > 1 {
        sumsq
            .iter()
            .zip(mean.iter())
            .map(|(sq, m)| {
                let var = |s2: f64, mu: f64| ((s2 / n - mu * mu).max(0.0) / (n - 1.0)).sqrt();
                RealVec3::new(var(sq.x, m.x), var(sq.y, m.y), var(sq.z, m.z))
            })
            .collect()
    } else {
        vec![RealVec3::ZERO; n_nodes]
    };
    Ok(McAverage {
        times: grid.nodes().collect(),
        mean,
        sem,
        n_traj,
    })
}

/// One midpoint realization written into `out`.
fn integrate_realization(
    system: &NoisyDriveSystem,
    s_init: RealVec3,
    grid: &TimeGrid,
    rng: &mut Xoshiro256,
    out: &mut [RealVec3],
) -> Result<()> {
    let h = grid.step();
    let sqrt_inv_h = (1.0 / h).sqrt();
    let lambda = system.lambda;
    let mut s = s_init;
    out[0] = s;
    for step in 0..grid.n_steps() {
        let t_mid = grid.node(step) + 0.5 * h;
        let (g1, g2) = rng.normal_pair();
        let (eta1, eta2) = (g1 * sqrt_inv_h, g2 * sqrt_inv_h);
        let wr = (system.omega_r)(t_mid);
        let wi = (system.omega_i)(t_mid);
        let field = RealVec3::new(
            wr * (1.0 + lambda * eta1),
            wi * (1.0 + lambda * eta2),
            (system.delta)(t_mid),
        );
        let tensor = system.static_at(t_mid);
        // A = [field x] - tensor, implicit midpoint: (I - h/2 A) s' = (I + h/2 A) s
        let a = cross_minus_tensor(&field, &tensor);
        let rhs = apply_scaled(&a, &s, 0.5 * h, true);
        s = solve_midpoint(&a, &rhs, 0.5 * h)?;
        if !s.is_finite() {
            return Err(CoreError::NumericalOverflow { step });
        }
        out[step + 1] = s;
    }
    Ok(())
}

fn cross_minus_tensor(b: &RealVec3, tensor: &DissipationTensor) -> [[f64; 3]; 3] {
    // [b x] v = b x v
    [
        [
            -tensor.entry(0, 0),
            -b.z - tensor.entry(0, 1),
            b.y - tensor.entry(0, 2),
        ],
        [
            b.z - tensor.entry(1, 0),
            -tensor.entry(1, 1),
            -b.x - tensor.entry(1, 2),
        ],
        [
            -b.y - tensor.entry(2, 0),
            b.x - tensor.entry(2, 1),
            -tensor.entry(2, 2),
        ],
    ]
}

/// (I +/- c A) v
fn apply_scaled(a: &[[f64; 3]; 3], v: &RealVec3, c: f64, plus: bool) -> RealVec3 {
    let sign = if plus { c } else { -c };
    let r = [v.x, v.y, v.z];
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = r[i] + sign * (a[i][0] * r[0] + a[i][1] * r[1] + a[i][2] * r[2]);
    }
    RealVec3::new(out[0], out[1], out[2])
}

/// Solve (I - c A) x = rhs by Cramer's rule.
fn solve_midpoint(a: &[[f64; 3]; 3], rhs: &RealVec3, c: f64) -> Result<RealVec3> {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = if i == j { 1.0 } else { 0.0 } - c * a[i][j];
        }
    }
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-300 || !det.is_finite() {
        return Err(CoreError::NumericalOverflow { step: 0 });
    }
    let b = [rhs.x, rhs.y, rhs.z];
    let col = |k: usize| {
        let mut mm = m;
        for (i, row) in mm.iter_mut().enumerate() {
            row[k] = b[i];
        }
        (mm[0][0] * (mm[1][1] * mm[2][2] - mm[1][2] * mm[2][1])
            - mm[0][1] * (mm[1][0] * mm[2][2] - mm[1][2] * mm[2][0])
            + mm[0][2] * (mm[1][0] * mm[2][1] - mm[1][1] * mm[2][0]))
            / det
    };
    Ok(RealVec3::new(col(0), col(1), col(2)))
}

/// Streaming pairwise summation over trajectories in index order; carries
/// both the sum and the componentwise sum of squares.
struct PairwiseAccumulator {
    levels: Vec<Option<(Vec<RealVec3>, Vec<RealVec3>)>>,
    n_nodes: usize,
}

impl PairwiseAccumulator {
    fn new(n_nodes: usize) -> Self {
        PairwiseAccumulator { levels: Vec::new(), n_nodes }
    }

    fn push(&mut self, traj: &[RealVec3]) {
        let sq: Vec<RealVec3> = traj
            .iter()
            .map(|s| RealVec3::new(s.x * s.x, s.y * s.y, s.z * s.z))
            .collect();
        let mut carry = (traj.to_vec(), sq);
        let mut level = 0;
        loop {
            if level == self.levels.len() {
                self.levels.push(Some(carry));
                return;
            }
            match self.levels[level].take() {
                None => {
                    self.levels[level] = Some(carry);
                    return;
                }
                Some((sum, sumsq)) => {
                    for (c, s) in carry.0.iter_mut().zip(sum.iter()) {
                        *c = *c + *s;
                    }
                    for (c, s) in carry.1.iter_mut().zip(sumsq.iter()) {
                        *c = *c + *s;
                    }
                    level += 1;
                }
            }
        }
    }

    fn finish(self) -> (Vec<RealVec3>, Vec<RealVec3>) {
        let mut sum = vec![RealVec3::ZERO; self.n_nodes];
        let mut sumsq = vec![RealVec3::ZERO; self.n_nodes];
        for level in self.levels.into_iter().flatten() {
            for (acc, v) in sum.iter_mut().zip(level.0.iter()) {
                *acc = *acc + *v;
            }
            for (acc, v) in sumsq.iter_mut().zip(level.1.iter()) {
                *acc = *acc + *v;
            }
        }
        (sum, sumsq)
    }
}
