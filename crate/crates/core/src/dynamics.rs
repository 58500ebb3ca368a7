//! Fixed-step fourth-order Runge-Kutta integrators for the damped Bloch
//! equation and the non-Hermitian Schroedinger equation (dimension 2 or 3).
//!
//! Fixed stepping keeps every run deterministic and reproducible; the step
//! count is a knob with default 4000 per scenario duration. hbar = 1.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::geometry::{
    ComplexMatrix, ComplexState, DissipationTensor, RealVec3, TimeGrid, Tolerances,
};

/// Default integration steps per scenario duration.
pub const DEFAULT_STEPS: usize = 4000;

/// State types a fixed-step integrator can advance.
pub trait OdeState: Copy {
    fn add_scaled(&self, k: &Self, c: f64) -> Self;
    fn is_finite(&self) -> bool;
}

impl OdeState for RealVec3 {
    fn add_scaled(&self, k: &Self, c: f64) -> Self {
        *self + *k * c
    }
    fn is_finite(&self) -> bool {
        RealVec3::is_finite(self)
    }
}

impl OdeState for ComplexState {
    fn add_scaled(&self, k: &Self, c: f64) -> Self {
        ComplexState::add_scaled(self, k, c)
    }
    fn is_finite(&self) -> bool {
        ComplexState::is_finite(self)
    }
}

impl<const N: usize> OdeState for [f64; N] {
    fn add_scaled(&self, k: &Self, c: f64) -> Self {
        let mut out = *self;
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += ki * c;
        }
        out
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

/// Sampled solution on the grid nodes (length n_steps + 1).
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
}

impl<S: Copy> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> S {
        *self.states.last().expect("trajectory is never empty")
    }
}

pub type BlochTrajectory = Trajectory<RealVec3>;
pub type StateTrajectory = Trajectory<ComplexState>;

/// Classical RK4 with fixed step. Fails with the step index if the state
/// leaves the finite range.
pub fn rk4<S, F>(rhs: F, init: S, grid: &TimeGrid) -> Result<Trajectory<S>>
where
    S: OdeState,
    F: Fn(f64, &S) -> S,
{
    let h = grid.step();
    let n = grid.n_steps();
    let mut states = Vec::with_capacity(n + 1);
    let mut times = Vec::with_capacity(n + 1);
    let mut y = init;
    states.push(y);
    times.push(grid.t_start());
    for step in 0..n {
        let t = grid.node(step);
        let k1 = rhs(t, &y);
        let k2 = rhs(t + 0.5 * h, &y.add_scaled(&k1, 0.5 * h));
        let k3 = rhs(t + 0.5 * h, &y.add_scaled(&k2, 0.5 * h));
        let k4 = rhs(t + h, &y.add_scaled(&k3, h));
        y = y
            .add_scaled(&k1, h / 6.0)
            .add_scaled(&k2, h / 3.0)
            .add_scaled(&k3, h / 3.0)
            .add_scaled(&k4, h / 6.0);
        if !y.is_finite() {
            return Err(CoreError::NumericalOverflow { step });
        }
        states.push(y);
        times.push(grid.node(step + 1));
    }
    Ok(Trajectory { times, states })
}

type FieldFn = Arc<dyn Fn(f64) -> RealVec3 + Send + Sync>;
type TensorFn = Arc<dyn Fn(f64) -> DissipationTensor + Send + Sync>;

/// Time-dependent control field: callable components plus the sampling grid
/// it was designed for.
#[derive(Clone)]
pub struct FieldProtocol {
    f: FieldFn,
    grid: TimeGrid,
}

impl FieldProtocol {
    pub fn new<F>(f: F, grid: TimeGrid) -> Self
    where
        F: Fn(f64) -> RealVec3 + Send + Sync + 'static,
    {
        FieldProtocol { f: Arc::new(f), grid }
    }

    pub fn constant(b: RealVec3, grid: TimeGrid) -> Self {
        Self::new(move |_| b, grid)
    }

    pub fn eval(&self, t: f64) -> RealVec3 {
        (self.f)(t)
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }
}

/// dS/dt = gyro * B(t) x S - L(t) S + drift(t).
#[derive(Clone)]
pub struct BlochSystem {
    field: FieldProtocol,
    tensor: TensorFn,
    drift: Option<FieldFn>,
    gyro: f64,
}

impl BlochSystem {
    pub fn new(field: FieldProtocol, tensor: DissipationTensor, gyro: f64) -> Self {
        BlochSystem {
            field,
            tensor: Arc::new(move |_| tensor),
            drift: None,
            gyro,
        }
    }

    pub fn with_time_dependent_tensor<F>(field: FieldProtocol, tensor: F, gyro: f64) -> Self
    where
        F: Fn(f64) -> DissipationTensor + Send + Sync + 'static,
    {
        BlochSystem { field, tensor: Arc::new(tensor), drift: None, gyro }
    }

    pub fn with_drift<F>(mut self, drift: F) -> Self
    where
        F: Fn(f64) -> RealVec3 + Send + Sync + 'static,
    {
        self.drift = Some(Arc::new(drift));
        self
    }

    pub fn gyro(&self) -> f64 {
        self.gyro
    }

    pub fn field(&self) -> &FieldProtocol {
        &self.field
    }

    pub fn rhs(&self, t: f64, s: &RealVec3) -> RealVec3 {
        let mut out = self.field.eval(t).cross(s) * self.gyro - (self.tensor)(t).apply(s);
        if let Some(d) = &self.drift {
            out = out + d(t);
        }
        out
    }
}

/// Deterministic Bloch integration on the grid.
pub fn integrate_bloch(
    system: &BlochSystem,
    s_init: RealVec3,
    grid: &TimeGrid,
) -> Result<BlochTrajectory> {
    rk4(|t, s| system.rhs(t, s), s_init, grid)
}

type HamiltonianFn = Arc<dyn Fn(f64) -> ComplexMatrix + Send + Sync>;

/// Non-Hermitian system: Hermitian drive H0(t) plus a constant anti-Hermitian
/// decay part. i * H_decay must be Hermitian PSD.
#[derive(Clone)]
pub struct NonHermitianSystem {
    h0: HamiltonianFn,
    decay: ComplexMatrix,
    dim: usize,
}

impl NonHermitianSystem {
    pub fn new<F>(dim: usize, h0: F, decay: ComplexMatrix) -> Result<Self>
    where
        F: Fn(f64) -> ComplexMatrix + Send + Sync + 'static,
    {
        if !(dim == 2 || dim == 3) || decay.dim() != dim {
            return Err(CoreError::Domain("system dimension must be 2 or 3".into()));
        }
        let tol = Tolerances::default().algebraic;
        // i * decay must be Hermitian with non-negative rates
        let mut i_decay = ComplexMatrix::zero(dim);
        for i in 0..dim {
            for j in 0..dim {
                i_decay.set(i, j, C64::i() * decay.get(i, j));
            }
        }
        if i_decay.hermiticity_defect() > tol {
            return Err(CoreError::Domain(
                "decay part is not anti-Hermitian: i H_decay must be Hermitian".into(),
            ));
        }
        if hermitian_psd_minor_defect(&i_decay) < -tol {
            let min = hermitian_min_eigenvalue(&i_decay);
            return Err(CoreError::Domain(format!(
                "decay rates must be non-negative (min eigenvalue {min:.3e})"
            )));
        }
        Ok(NonHermitianSystem { h0: Arc::new(h0), decay, dim })
    }

    /// No decay at all.
    pub fn hermitian<F>(dim: usize, h0: F) -> Result<Self>
    where
        F: Fn(f64) -> ComplexMatrix + Send + Sync + 'static,
    {
        Self::new(dim, h0, ComplexMatrix::zero(dim))
    }

    /// Decay -i * rate |k><k| on a single level.
    pub fn decay_on_level(dim: usize, k: usize, rate: f64) -> ComplexMatrix {
        let mut m = ComplexMatrix::zero(dim);
        m.set(k, k, C64::new(0.0, -rate));
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self, t: f64) -> ComplexMatrix {
        (self.h0)(t)
    }

    fn rhs(&self, t: f64, psi: &ComplexState) -> ComplexState {
        // d psi / dt = -i (H0 + H_decay) psi
        let h = (self.h0)(t) + self.decay;
        let hpsi = h.apply(psi);
        let mut amps = [C64::new(0.0, 0.0); 3];
        for (a, hp) in amps.iter_mut().zip(hpsi.amps().iter()) {
            *a = -C64::i() * hp;
        }
        ComplexState::new(&amps[..self.dim]).expect("dimension preserved")
    }
}

/// RK4 on i d psi / dt = (H0(t) + H_decay) psi. The Hermitian part is
/// validated on the grid nodes as integration proceeds.
pub fn integrate_schrodinger(
    system: &NonHermitianSystem,
    psi_init: &ComplexState,
    grid: &TimeGrid,
) -> Result<StateTrajectory> {
    if psi_init.dim() != system.dim() {
        return Err(CoreError::Domain(format!(
            "state dimension {} does not match system dimension {}",
            psi_init.dim(),
            system.dim()
        )));
    }
    let tol = Tolerances::default().algebraic;
    let defect = system.hamiltonian(grid.t_start()).hermiticity_defect();
    if defect > tol {
        return Err(CoreError::Domain(format!(
            "drive Hamiltonian is not Hermitian (defect {defect:.3e})"
        )));
    }
    rk4(|t, psi| system.rhs(t, psi), *psi_init, grid)
}

/// Most negative scale-normalized principal minor of a Hermitian matrix;
/// non-negative exactly when the matrix is PSD. More robust than the
/// analytic eigenvalues near degenerate spectra.
fn hermitian_psd_minor_defect(m: &ComplexMatrix) -> f64 {
    let d = m.dim();
    let mut scale = 1.0f64;
    for i in 0..d {
        for j in 0..d {
            scale = scale.max(m.get(i, j).norm());
        }
    }
    let mut worst = f64::INFINITY;
    for i in 0..d {
        worst = worst.min(m.get(i, i).re / scale);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let minor = m.get(i, i).re * m.get(j, j).re - m.get(i, j).norm_sqr();
            worst = worst.min(minor / (scale * scale));
        }
    }
    if d == 3 {
        let det = (m.get(0, 0) * (m.get(1, 1) * m.get(2, 2) - m.get(1, 2) * m.get(2, 1))
            - m.get(0, 1) * (m.get(1, 0) * m.get(2, 2) - m.get(1, 2) * m.get(2, 0))
            + m.get(0, 2) * (m.get(1, 0) * m.get(2, 1) - m.get(1, 1) * m.get(2, 0)))
            .re;
        worst = worst.min(det / (scale * scale * scale));
    }
    worst
}

/// Smallest eigenvalue of a Hermitian 2x2 or 3x3 matrix (analytic).
fn hermitian_min_eigenvalue(m: &ComplexMatrix) -> f64 {
    let d = m.dim();
    if d == 2 {
        let a = m.get(0, 0).re;
        let c = m.get(1, 1).re;
        let b2 = m.get(0, 1).norm_sqr();
        let mid = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b2).sqrt();
        return mid - rad;
    }
    let tr = (m.get(0, 0) + m.get(1, 1) + m.get(2, 2)).re;
    let q = tr / 3.0;
    let p1 = m.get(0, 1).norm_sqr() + m.get(0, 2).norm_sqr() + m.get(1, 2).norm_sqr();
    let p2 = (m.get(0, 0).re - q).powi(2)
        + (m.get(1, 1).re - q).powi(2)
        + (m.get(2, 2).re - q).powi(2)
        + 2.0 * p1;
    if p2 <= 0.0 {
        return q;
    }
    let p = (p2 / 6.0).sqrt();
    let b = |i: usize, j: usize| (m.get(i, j) - if i == j { C64::new(q, 0.0) } else { C64::new(0.0, 0.0) }) / p;
    let detb = (b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
        - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
        + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0)))
        .re;
    let r = (detb / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    // smallest root of the shifted characteristic polynomial
    q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{assert_close, assert_close_rel, DetRng};
    use std::f64::consts::PI;

    fn grid(t_end: f64, n: usize) -> TimeGrid {
        TimeGrid::new(0.0, t_end, n).unwrap()
    }

    #[test]
    fn pure_precession_about_z() {
        let b0 = 1.7;
        let gyro = 1.0;
        let t_end = 0.5 * PI / b0; // gyro B0 t = pi/2
        let g = grid(t_end, 4000);
        let sys = BlochSystem::new(
            FieldProtocol::constant(RealVec3::Z * b0, g),
            DissipationTensor::ZERO,
            gyro,
        );
        let traj = integrate_bloch(&sys, RealVec3::X, &g).unwrap();
        let s = traj.last();
        assert!(s.x.abs() < 1e-9, "x component {}", s.x);
        assert_close(s.z, 0.0, 1e-12);
        // norm conserved without damping
        for s in &traj.states {
            assert_close_rel(s.norm(), 1.0, 1e-10);
        }
    }

    #[test]
    fn tilted_2pi_pulse_with_transverse_damping() {
        // constant field at 45 degrees, damping 0.7 * (gyro B0)
        let b0 = 1.0;
        let t_end = 2.0 * PI / b0;
        let g = grid(t_end, 4000);
        let field = RealVec3::new(-b0 / 2f64.sqrt(), 0.0, b0 / 2f64.sqrt());
        let s0 = RealVec3::new(1.0, 0.0, 1.0) * (1.0 / 2f64.sqrt());
        let sys = BlochSystem::new(
            FieldProtocol::constant(field, g),
            DissipationTensor::transverse(0.7 * b0).unwrap(),
            1.0,
        );
        let traj = integrate_bloch(&sys, s0, &g).unwrap();
        let s = traj.last();
        assert!(s.norm() < 1.0, "damping must shrink the norm");
        let angle = s.angle_to(&s0);
        assert!(angle > 1e-3, "direction must be distorted, got {angle}");
    }

    #[test]
    fn rk4_order_between_12_and_20() {
        let t_end = 2.0;
        let field = |t: f64| RealVec3::new((1.3 * t).sin(), 0.4, (0.7 * t).cos());
        let run = |n: usize| {
            let g = grid(t_end, n);
            let sys = BlochSystem::new(
                FieldProtocol::new(field, g),
                DissipationTensor::axial(0.3, 0.1).unwrap(),
                1.0,
            );
            integrate_bloch(&sys, RealVec3::Z, &g).unwrap()
        };
        let reference = run(3200);
        let err = |traj: &BlochTrajectory| {
            let stride = reference.states.len() / traj.states.len().saturating_sub(1);
            traj.states
                .iter()
                .enumerate()
                .map(|(i, s)| (*s - reference.states[i * stride.max(1)]).norm())
                .fold(0.0f64, f64::max)
        };
        let e1 = err(&run(200));
        let e2 = err(&run(400));
        let ratio = e1 / e2;
        assert!(
            (12.0..=20.0).contains(&ratio),
            "error ratio {ratio} outside RK4 band"
        );
    }

    #[test]
    fn bare_decay_of_level_two() {
        let rate = 0.8;
        let g = grid(2.0, 2000);
        let decay = NonHermitianSystem::decay_on_level(3, 1, rate);
        let sys = NonHermitianSystem::new(3, move |_| ComplexMatrix::zero(3), decay).unwrap();
        let psi0 = ComplexState::basis(3, 1).unwrap();
        let traj = integrate_schrodinger(&sys, &psi0, &g).unwrap();
        for (t, psi) in traj.times.iter().zip(traj.states.iter()) {
            assert_close(psi.amp(1).norm(), (-rate * t).exp(), 1e-9);
        }
        // level 1 is dark to this decay
        let psi0 = ComplexState::basis(3, 0).unwrap();
        let traj = integrate_schrodinger(&sys, &psi0, &g).unwrap();
        let last = traj.last();
        assert_close(last.amp(0).norm(), 1.0, 1e-12);
    }

    #[test]
    fn schrodinger_norm_conserved_without_decay() {
        let g = grid(3.0, 4000);
        let sys = NonHermitianSystem::hermitian(2, |t: f64| {
            let w = 0.9 + 0.3 * (2.0 * t).sin();
            ComplexMatrix::from_rows(&[
                &[C64::new(0.2, 0.0), C64::new(w, 0.1)],
                &[C64::new(w, -0.1), C64::new(-0.2, 0.0)],
            ])
            .unwrap()
        })
        .unwrap();
        let psi0 = ComplexState::new(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let traj = integrate_schrodinger(&sys, &psi0, &g).unwrap();
        for psi in &traj.states {
            assert_close_rel(psi.norm(), 1.0, 1e-10);
        }
    }

    #[test]
    fn norm_monotone_with_psd_decay() {
        let g = grid(4.0, 2000);
        let decay = NonHermitianSystem::decay_on_level(2, 1, 0.5);
        let sys = NonHermitianSystem::new(2, |t: f64| {
            let w = (0.8 * t).cos();
            ComplexMatrix::from_rows(&[
                &[C64::new(0.0, 0.0), C64::new(w, 0.0)],
                &[C64::new(w, 0.0), C64::new(0.0, 0.0)],
            ])
            .unwrap()
        }, decay)
        .unwrap();
        let psi0 = ComplexState::basis(2, 0).unwrap();
        let traj = integrate_schrodinger(&sys, &psi0, &g).unwrap();
        let mut prev = f64::INFINITY;
        for psi in &traj.states {
            let n = psi.norm();
            assert!(n <= prev + 1e-12, "norm increased: {n} > {prev}");
            assert!(n > 0.0);
            prev = n;
        }
    }

    #[test]
    fn rejects_invalid_inputs() {
        let g = grid(1.0, 10);
        // decay with positive imaginary part = gain, rejected
        let mut gain = ComplexMatrix::zero(2);
        gain.set(0, 0, C64::new(0.0, 0.4));
        assert!(NonHermitianSystem::new(2, |_| ComplexMatrix::zero(2), gain).is_err());

        // dimension mismatch
        let sys = NonHermitianSystem::hermitian(3, |_| ComplexMatrix::zero(3)).unwrap();
        let psi = ComplexState::basis(2, 0).unwrap();
        assert!(integrate_schrodinger(&sys, &psi, &g).is_err());

        // non-Hermitian drive
        let sys = NonHermitianSystem::hermitian(2, |_| {
            ComplexMatrix::from_rows(&[
                &[C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
                &[C64::new(2.0, 0.0), C64::new(0.0, 0.0)],
            ])
            .unwrap()
        })
        .unwrap();
        let psi = ComplexState::basis(2, 0).unwrap();
        assert!(matches!(
            integrate_schrodinger(&sys, &psi, &g),
            Err(CoreError::Domain(_))
        ));
    }

    #[test]
    fn constant_drift_integrates_linearly() {
        let g = grid(2.0, 1000);
        let d = RealVec3::new(0.3, -0.1, 0.7);
        let sys = BlochSystem::new(
            FieldProtocol::constant(RealVec3::ZERO, g),
            DissipationTensor::ZERO,
            1.0,
        )
        .with_drift(move |_| d);
        let traj = integrate_bloch(&sys, RealVec3::Z, &g).unwrap();
        for (s, t) in traj.states.iter().zip(g.nodes()) {
            assert!((*s - (RealVec3::Z + d * t)).norm() < 1e-12);
        }
    }

    #[test]
    fn overflow_reports_step_index() {
        // field * gyro overflows f64, so the first RK stage is already infinite
        let g = grid(1.0, 2);
        let sys = BlochSystem::new(
            FieldProtocol::constant(RealVec3::X * 1e200, g),
            DissipationTensor::ZERO,
            1e200,
        );
        match integrate_bloch(&sys, RealVec3::Z, &g) {
            Err(CoreError::NumericalOverflow { .. }) => {}
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn hermitian_min_eigenvalue_agrees_with_bounds() {
        let mut rng = DetRng::new(0xD1_0001);
        for _ in 0..200 {
            // random Hermitian via M = A + A^dagger
            let mut m = ComplexMatrix::zero(3);
            for i in 0..3 {
                for j in 0..3 {
                    let v = C64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
                    m.set(i, j, m.get(i, j) + v);
                    m.set(j, i, m.get(j, i) + v.conj());
                }
            }
            let min = hermitian_min_eigenvalue(&m);
            // Rayleigh quotient of random states must not go below min
            for _ in 0..20 {
                let amps = [
                    C64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                    C64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                    C64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                ];
                let v = ComplexState::new(&amps).unwrap();
                let q = v.inner(&m.apply(&v)).re / v.norm_sq();
                assert!(q >= min - 1e-9, "Rayleigh {q} below min eig {min}");
            }
        }
    }
}
