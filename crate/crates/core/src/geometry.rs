//! Real and complex linear algebra on dimensions 2 and 3, spherical frames,
//! and analytic trajectory representations shared by every other module.
//!
//! Angles are radians everywhere. Trajectories are closures over time, not
//! pre-sampled arrays; sampling happens only at integration time.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};

/// Central tolerance configuration.
///
/// `algebraic` guards exact identities (orthonormality, symmetry checks);
/// `ode_relative` guards quantities obtained by integration.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Tolerances {
    pub algebraic: f64,
    pub ode_relative: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { algebraic: 1e-12, ode_relative: 1e-6 }
    }
}

/// Real 3-vector: spin directions, magnetic fields, drift vectors.
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct RealVec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl RealVec3 {
    pub const ZERO: Self = RealVec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Self = RealVec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Self = RealVec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Self = RealVec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        RealVec3 { x, y, z }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Self) -> Self {
        RealVec3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Unit vector along `self`; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| *self * (1.0 / n))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Unsigned angle to `other` in [0, pi], stable near 0 and pi.
    pub fn angle_to(&self, other: &Self) -> f64 {
        self.cross(other).norm().atan2(self.dot(other))
    }
}

impl Add for RealVec3 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        RealVec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for RealVec3 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        RealVec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for RealVec3 {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        RealVec3::new(self.x * c, self.y * c, self.z * c)
    }
}

impl Neg for RealVec3 {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

/// Symmetric positive-semidefinite 3x3 damping tensor (rate units).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DissipationTensor {
    m: [[f64; 3]; 3],
}

impl DissipationTensor {
    pub const ZERO: Self = DissipationTensor { m: [[0.0; 3]; 3] };

    /// Validates symmetry to 1e-12 and eigenvalues >= -1e-12.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self> {
        let tol = Tolerances::default();
        let dev = (m[0][1] - m[1][0])
            .abs()
            .max((m[0][2] - m[2][0]).abs())
            .max((m[1][2] - m[2][1]).abs());
        // scale-aware symmetry check
        let scale = m.iter().flatten().fold(0.0f64, |a, &v| a.max(v.abs())).max(1.0);
        if dev > tol.algebraic * scale {
            return Err(CoreError::TensorAsymmetric { deviation: dev });
        }
        let sym = DissipationTensor { m };
        // PSD iff every principal minor is non-negative; minors are exact
        // polynomials of the entries, unlike eigenvalues near degeneracies.
        if sym.psd_minor_defect() < -tol.algebraic {
            let min_eig = sym.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
            return Err(CoreError::TensorNotPsd { min_eigenvalue: min_eig });
        }
        Ok(sym)
    }

    /// Most negative principal minor, each normalized by scale^order; zero
    /// or positive for a PSD matrix.
    fn psd_minor_defect(&self) -> f64 {
        let a = &self.m;
        let scale = a.iter().flatten().fold(0.0f64, |acc, &v| acc.max(v.abs())).max(1.0);
        let m2 = |i: usize, j: usize| a[i][i] * a[j][j] - a[i][j] * a[j][i];
        let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        let mut worst = f64::INFINITY;
        for (i, row) in a.iter().enumerate() {
            worst = worst.min(row[i] / scale);
        }
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            worst = worst.min(m2(i, j) / (scale * scale));
        }
        worst.min(det / (scale * scale * scale))
    }

    pub fn diagonal(xx: f64, yy: f64, zz: f64) -> Result<Self> {
        let tol = Tolerances::default().algebraic;
        let min = xx.min(yy).min(zz);
        if min < -tol * xx.abs().max(yy.abs()).max(zz.abs()).max(1.0) {
            return Err(CoreError::TensorNotPsd { min_eigenvalue: min });
        }
        Ok(DissipationTensor {
            m: [[xx, 0.0, 0.0], [0.0, yy, 0.0], [0.0, 0.0, zz]],
        })
    }

    /// Transverse relaxation only: Gamma_perp (xx + yy).
    pub fn transverse(gamma_perp: f64) -> Result<Self> {
        Self::diagonal(gamma_perp, gamma_perp, 0.0)
    }

    /// Transverse and longitudinal relaxation: diag(G_perp, G_perp, G_z).
    pub fn axial(gamma_perp: f64, gamma_z: f64) -> Result<Self> {
        Self::diagonal(gamma_perp, gamma_perp, gamma_z)
    }

    pub fn isotropic(rate: f64) -> Result<Self> {
        Self::diagonal(rate, rate, rate)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn apply(&self, v: &RealVec3) -> RealVec3 {
        let r = [v.x, v.y, v.z];
        let mut out = [0.0; 3];
        for (row, o) in self.m.iter().zip(out.iter_mut()) {
            *o = row[0] * r[0] + row[1] * r[1] + row[2] * r[2];
        }
        RealVec3::new(out[0], out[1], out[2])
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    /// Eigenvalues of the symmetric matrix, analytic (no iteration), in
    /// descending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let a = &self.m;
        let p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        if p1 == 0.0 {
            let mut d = [a[0][0], a[1][1], a[2][2]];
            d.sort_by(|x, y| y.partial_cmp(x).unwrap());
            return d;
        }
        let q = self.trace() / 3.0;
        let p2 = (a[0][0] - q).powi(2)
            + (a[1][1] - q).powi(2)
            + (a[2][2] - q).powi(2)
            + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let b = |i: usize, j: usize| (a[i][j] - if i == j { q } else { 0.0 }) / p;
        let detb = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
            - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
            + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
        let r = (detb / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
        let e2 = 3.0 * q - e1 - e3;
        [e1, e2, e3]
    }
}

impl Add for DissipationTensor {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut m = self.m;
        for (row, r2) in m.iter_mut().zip(rhs.m.iter()) {
            for (v, w) in row.iter_mut().zip(r2.iter()) {
                *v += w;
            }
        }
        DissipationTensor { m }
    }
}

impl Mul<f64> for DissipationTensor {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        let mut m = self.m;
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v *= c;
            }
        }
        DissipationTensor { m }
    }
}

/// Quadratic form v^T L v of a dissipation tensor; the instantaneous
/// norm-decay rate when v is the unit spin direction.
pub fn quadratic_form(tensor: &DissipationTensor, v: &RealVec3) -> f64 {
    v.dot(&tensor.apply(v))
}

/// Right-handed orthonormal spherical triad (radial, theta-hat, phi-hat).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SphericalFrame {
    pub radial: RealVec3,
    pub theta_hat: RealVec3,
    pub phi_hat: RealVec3,
}

/// Spherical frame at polar angle `theta`, azimuth `phi`:
/// radial = (sin t cos p, sin t sin p, cos t),
/// theta-hat = (cos t cos p, cos t sin p, -sin t),
/// phi-hat = (-sin p, cos p, 0).
///
/// The formulas continue smoothly to negative polar angles; no clamping.
pub fn spherical_frame_at(theta: f64, phi: f64) -> SphericalFrame {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    SphericalFrame {
        radial: RealVec3::new(st * cp, st * sp, ct),
        theta_hat: RealVec3::new(ct * cp, ct * sp, -st),
        phi_hat: RealVec3::new(-sp, cp, 0.0),
    }
}

/// Polynomial in a dimensionless variable (usually tau = t/T), coefficients
/// in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    /// Derivative with respect to the polynomial variable.
    pub fn derivative(&self) -> Polynomial {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        Polynomial { coeffs }
    }
}

type AngleFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Time-parameterized pair of angles with analytic first derivatives,
/// defining a trajectory on the Bloch sphere over [0, T].
#[derive(Clone)]
pub struct AngularPath {
    theta: AngleFn,
    theta_dot: AngleFn,
    phi: AngleFn,
    phi_dot: AngleFn,
    duration: f64,
}

impl AngularPath {
    pub fn from_closures<F1, F2, F3, F4>(
        theta: F1,
        theta_dot: F2,
        phi: F3,
        phi_dot: F4,
        duration: f64,
    ) -> Self
    where
        F1: Fn(f64) -> f64 + Send + Sync + 'static,
        F2: Fn(f64) -> f64 + Send + Sync + 'static,
        F3: Fn(f64) -> f64 + Send + Sync + 'static,
        F4: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        AngularPath {
            theta: Arc::new(theta),
            theta_dot: Arc::new(theta_dot),
            phi: Arc::new(phi),
            phi_dot: Arc::new(phi_dot),
            duration,
        }
    }

    /// Both angles given as polynomials in tau = t/T; time derivatives pick
    /// up the 1/T factor.
    pub fn from_polynomials(theta: Polynomial, phi: Polynomial, duration: f64) -> Self {
        let dtheta = theta.derivative();
        let dphi = phi.derivative();
        let t_end = duration;
        AngularPath {
            theta: Arc::new(move |t| theta.eval(t / t_end)),
            theta_dot: Arc::new(move |t| dtheta.eval(t / t_end) / t_end),
            phi: Arc::new(move |t| phi.eval(t / t_end)),
            phi_dot: Arc::new(move |t| dphi.eval(t / t_end) / t_end),
            duration,
        }
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn theta(&self, t: f64) -> f64 {
        (self.theta)(t)
    }

    pub fn theta_dot(&self, t: f64) -> f64 {
        (self.theta_dot)(t)
    }

    pub fn phi(&self, t: f64) -> f64 {
        (self.phi)(t)
    }

    pub fn phi_dot(&self, t: f64) -> f64 {
        (self.phi_dot)(t)
    }

    pub fn frame(&self, t: f64) -> SphericalFrame {
        spherical_frame_at(self.theta(t), self.phi(t))
    }

    /// Unit spin direction at time t.
    pub fn direction(&self, t: f64) -> RealVec3 {
        self.frame(t).radial
    }

    /// Time derivative of the direction:
    /// theta-dot * theta-hat + phi-dot * sin(theta) * phi-hat.
    pub fn velocity(&self, t: f64) -> RealVec3 {
        let f = self.frame(t);
        f.theta_hat * self.theta_dot(t) + f.phi_hat * (self.phi_dot(t) * self.theta(t).sin())
    }

    /// Precession vector omega(t) = S0 x dS0/dt; the dissipationless field
    /// driving this path is omega / gyro.
    pub fn precession_vector(&self, t: f64) -> RealVec3 {
        self.direction(t).cross(&self.velocity(t))
    }
}

impl std::fmt::Debug for AngularPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AngularPath")
            .field("duration", &self.duration)
            .finish_non_exhaustive()
    }
}

/// Uniform time grid on [t_start, t_end] with n_steps integration steps
/// (n_steps + 1 nodes).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(CoreError::Domain("n_steps must be >= 1".into()));
        }
        if !(t_end - t_start).is_finite() || t_end <= t_start {
            return Err(CoreError::Domain(format!(
                "time grid must satisfy t_end > t_start, got [{t_start}, {t_end}]"
            )));
        }
        Ok(TimeGrid { t_start, t_end, n_steps })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.t_start + self.step() * i as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(move |i| self.node(i))
    }
}

/// Complex amplitude vector of dimension 2 or 3 under non-Hermitian
/// evolution. Fixed storage; the inactive tail stays zero.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ComplexState {
    amps: [C64; 3],
    dim: usize,
}

impl ComplexState {
    pub fn new(amps: &[C64]) -> Result<Self> {
        if !(amps.len() == 2 || amps.len() == 3) {
            return Err(CoreError::Domain(format!(
                "state dimension must be 2 or 3, got {}",
                amps.len()
            )));
        }
        let mut a = [C64::new(0.0, 0.0); 3];
        a[..amps.len()].copy_from_slice(amps);
        Ok(ComplexState { amps: a, dim: amps.len() })
    }

    /// Basis state |k> of the given dimension.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(CoreError::Domain(format!("basis index {k} out of range for dim {dim}")));
        }
        let mut a = [C64::new(0.0, 0.0); 3];
        a[k] = C64::new(1.0, 0.0);
        Self::new(&a[..dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amp(&self, k: usize) -> C64 {
        self.amps[k]
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps[..self.dim]
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps().iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| {
            let mut s = *self;
            for a in s.amps.iter_mut() {
                *a /= n;
            }
            s
        })
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amps()
            .iter()
            .zip(other.amps())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.amps().iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    pub(crate) fn add_scaled(&self, other: &Self, c: f64) -> Self {
        let mut s = *self;
        for (a, b) in s.amps.iter_mut().zip(other.amps.iter()) {
            *a += b * c;
        }
        s
    }
}

/// Complex square matrix of dimension 2 or 3.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    m: [[C64; 3]; 3],
    dim: usize,
}

impl ComplexMatrix {
    pub fn zero(dim: usize) -> Self {
        ComplexMatrix { m: [[C64::new(0.0, 0.0); 3]; 3], dim }
    }

    pub fn from_rows(rows: &[&[C64]]) -> Result<Self> {
        let dim = rows.len();
        if !(dim == 2 || dim == 3) || rows.iter().any(|r| r.len() != dim) {
            return Err(CoreError::Domain("matrix dimension must be 2 or 3, square".into()));
        }
        let mut m = Self::zero(dim);
        for (i, row) in rows.iter().enumerate() {
            m.m[i][..dim].copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.m[i][j] = v;
    }

    pub fn apply(&self, v: &ComplexState) -> ComplexState {
        let mut out = [C64::new(0.0, 0.0); 3];
        for (o, row) in out.iter_mut().zip(self.m.iter()).take(self.dim) {
            *o = row[..self.dim]
                .iter()
                .zip(v.amps())
                .map(|(m, a)| m * a)
                .sum();
        }
        ComplexState { amps: out, dim: self.dim }
    }

    /// Max |M - M^dagger| entry.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut dev = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                dev = dev.max((self.m[i][j] - self.m[j][i].conj()).norm());
            }
        }
        dev
    }
}

impl Add for ComplexMatrix {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut m = self;
        for i in 0..m.dim {
            for j in 0..m.dim {
                m.m[i][j] += rhs.m[i][j];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{DetRng, assert_close};

    #[test]
    fn frame_at_pole_and_equator() {
        let f = spherical_frame_at(0.0, 0.0);
        assert_close(f.radial.z, 1.0, 1e-15);
        assert_close(f.theta_hat.x, 1.0, 1e-15);
        assert_close(f.phi_hat.y, 1.0, 1e-15);

        let f = spherical_frame_at(PI / 2.0, 0.0);
        assert!((f.radial - RealVec3::X).norm() < 1e-15);
    }

    #[test]
    fn frame_at_oblique_angle() {
        // direct substitution: theta = phi = pi/4
        let f = spherical_frame_at(PI / 4.0, PI / 4.0);
        assert_close(f.radial.x, 0.5, 1e-15);
        assert_close(f.radial.y, 0.5, 1e-15);
        assert_close(f.radial.z, std::f64::consts::FRAC_1_SQRT_2, 1e-15);
    }

    #[test]
    fn frames_orthonormal_right_handed() {
        let mut rng = DetRng::new(0x5EED_0001);
        for _ in 0..1000 {
            let theta = rng.uniform(-PI, 2.0 * PI);
            let phi = rng.uniform(-PI, PI);
            let f = spherical_frame_at(theta, phi);
            for (a, b) in [
                (f.radial, f.theta_hat),
                (f.radial, f.phi_hat),
                (f.theta_hat, f.phi_hat),
            ] {
                assert!(a.dot(&b).abs() <= 1e-12);
                assert!((a.norm() - 1.0).abs() <= 1e-12);
            }
            assert!((f.radial.cross(&f.theta_hat) - f.phi_hat).norm() <= 1e-12);
        }
    }

    #[test]
    fn quadratic_form_examples() {
        // zero eigenvector
        let t = DissipationTensor::transverse(1.3).unwrap();
        assert_close(quadratic_form(&t, &RealVec3::Z), 0.0, 1e-15);

        // isotropic: any unit vector gives the rate itself
        let t = DissipationTensor::isotropic(0.7).unwrap();
        let v = RealVec3::new(1.0, 2.0, -2.0).normalized().unwrap();
        assert_close(quadratic_form(&t, &v), 0.7, 1e-14);

        // axial tensor at polar angle theta
        let (gp, gz) = (0.9, 0.2);
        let t = DissipationTensor::axial(gp, gz).unwrap();
        let th: f64 = 1.1;
        let v = spherical_frame_at(th, 0.4).radial;
        assert_close(
            quadratic_form(&t, &v),
            gp * th.sin().powi(2) + gz * th.cos().powi(2),
            1e-14,
        );
    }

    #[test]
    fn quadratic_form_parity_and_linearity() {
        let mut rng = DetRng::new(0x5EED_0002);
        for _ in 0..200 {
            let t1 = rng.random_psd_tensor(1.0);
            let t2 = rng.random_psd_tensor(1.0);
            let v = rng.random_unit_vec();
            let q1 = quadratic_form(&t1, &v);
            assert_close(quadratic_form(&t1, &(-v)), q1, 1e-13);
            let (a, b) = (rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0));
            let combo = t1 * a + t2 * b;
            assert_close(
                quadratic_form(&combo, &v),
                a * q1 + b * quadratic_form(&t2, &v),
                1e-12,
            );
        }
    }

    #[test]
    fn tensor_validation() {
        assert!(matches!(
            DissipationTensor::from_matrix([[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
            Err(CoreError::TensorAsymmetric { .. })
        ));
        assert!(matches!(
            DissipationTensor::diagonal(1.0, -0.5, 0.0),
            Err(CoreError::TensorNotPsd { .. })
        ));
        // A^T A is PSD for any A
        let mut rng = DetRng::new(0x5EED_0003);
        for _ in 0..100 {
            let t = rng.random_psd_tensor(3.0);
            let min = t.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-12);
        }
    }

    #[test]
    fn eigenvalues_match_characteristic_polynomial() {
        let mut rng = DetRng::new(0x5EED_0004);
        for _ in 0..100 {
            let t = rng.random_psd_tensor(2.0);
            for lam in t.eigenvalues() {
                // det(T - lam I) = 0
                let d = [
                    [t.entry(0, 0) - lam, t.entry(0, 1), t.entry(0, 2)],
                    [t.entry(1, 0), t.entry(1, 1) - lam, t.entry(1, 2)],
                    [t.entry(2, 0), t.entry(2, 1), t.entry(2, 2) - lam],
                ];
                let det = d[0][0] * (d[1][1] * d[2][2] - d[1][2] * d[2][1])
                    - d[0][1] * (d[1][0] * d[2][2] - d[1][2] * d[2][0])
                    + d[0][2] * (d[1][0] * d[2][1] - d[1][1] * d[2][0]);
                assert!(det.abs() < 1e-9, "det residual {det}");
            }
        }
    }

    #[test]
    fn polynomial_eval_and_derivative() {
        let p = Polynomial::new(vec![1.0, -2.0, 3.0]); // 1 - 2u + 3u^2
        assert_close(p.eval(2.0), 9.0, 1e-15);
        let d = p.derivative();
        assert_eq!(d.coeffs(), &[-2.0, 6.0]);
    }

    #[test]
    fn angular_path_derivative_consistency() {
        let path = AngularPath::from_polynomials(
            Polynomial::new(vec![0.0, 0.0, 3.0 * PI / 2.0, -PI]),
            Polynomial::new(vec![0.3, 0.7]),
            2.5,
        );
        crate::testutil::assert_path_derivatives(&path);
    }

    #[test]
    fn complex_state_basics() {
        let s = ComplexState::basis(3, 1).unwrap();
        assert_close(s.norm(), 1.0, 1e-15);
        assert_eq!(s.dim(), 3);
        assert!(ComplexState::new(&[C64::new(1.0, 0.0)]).is_err());
        let t = ComplexState::new(&[C64::new(0.0, 0.0), C64::new(3.0, 4.0)]).unwrap();
        assert_close(t.norm(), 5.0, 1e-15);
        assert_close(t.normalized().unwrap().norm(), 1.0, 1e-15);
    }
}
