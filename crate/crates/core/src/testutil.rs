//! Support code for unit, property, and acceptance tests: a deterministic
//! RNG with domain-specific samplers, plus assertion helpers.

use crate::geometry::{AngularPath, DissipationTensor, RealVec3};
use crate::rng::Xoshiro256;

pub struct DetRng(Xoshiro256);

impl DetRng {
    pub fn new(seed: u64) -> Self {
        DetRng(Xoshiro256::new(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.uniform(lo, hi)
    }

    pub fn random_unit_vec(&mut self) -> RealVec3 {
        loop {
            let v = RealVec3::new(
                self.uniform(-1.0, 1.0),
                self.uniform(-1.0, 1.0),
                self.uniform(-1.0, 1.0),
            );
            let n = v.norm();
            if n > 1e-3 && n <= 1.0 {
                return v * (1.0 / n);
            }
        }
    }

    /// Random PSD tensor A^T A with spectral scale around `scale`.
    pub fn random_psd_tensor(&mut self, scale: f64) -> DissipationTensor {
        let a: Vec<f64> = (0..9).map(|_| self.uniform(-1.0, 1.0)).collect();
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| a[k * 3 + i] * a[k * 3 + j]).sum::<f64>() * scale / 3.0;
            }
        }
        DissipationTensor::from_matrix(m).expect("A^T A is symmetric PSD")
    }

    /// Smooth random path over [0, duration]: cubic polynomial plus one
    /// bounded sine harmonic per angle, with analytic derivatives.
    pub fn random_smooth_path(&mut self, duration: f64) -> AngularPath {
        let coef = |rng: &mut Self| {
            [
                rng.uniform(-1.5, 1.5),
                rng.uniform(-2.0, 2.0),
                rng.uniform(-2.0, 2.0),
                rng.uniform(-1.0, 1.0),
            ]
        };
        let (ct, cp) = (coef(self), coef(self));
        let (at, ap) = (self.uniform(-0.5, 0.5), self.uniform(-0.5, 0.5));
        let kt = self.uniform(1.0, 3.0).round();
        let kp = self.uniform(1.0, 3.0).round();
        let t_end = duration;
        let angle = move |c: [f64; 4], a: f64, k: f64| {
            move |t: f64| {
                let u = t / t_end;
                c[0] + c[1] * u + c[2] * u * u + c[3] * u * u * u
                    + a * (k * std::f64::consts::TAU * u).sin()
            }
        };
        let angle_dot = move |c: [f64; 4], a: f64, k: f64| {
            move |t: f64| {
                let u = t / t_end;
                (c[1] + 2.0 * c[2] * u + 3.0 * c[3] * u * u
                    + a * k * std::f64::consts::TAU * (k * std::f64::consts::TAU * u).cos())
                    / t_end
            }
        };
        AngularPath::from_closures(
            angle(ct, at, kt),
            angle_dot(ct, at, kt),
            angle(cp, ap, kp),
            angle_dot(cp, ap, kp),
            duration,
        )
    }
}

pub fn assert_close(actual: f64, expected: f64, tol: f64) {
    assert!(
        (actual - expected).abs() <= tol,
        "expected {expected}, got {actual} (tol {tol})"
    );
}

pub fn assert_close_rel(actual: f64, expected: f64, rel: f64) {
    let scale = expected.abs().max(f64::MIN_POSITIVE);
    assert!(
        (actual - expected).abs() <= rel * scale,
        "expected {expected}, got {actual} (rel tol {rel})"
    );
}

/// Analytic derivatives must match centered finite differences to relative
/// error 1e-6 at step 1e-6 T, checked on 100 interior points.
pub fn assert_path_derivatives(path: &AngularPath) {
    let t_end = path.duration();
    let h = 1e-6 * t_end;
    for i in 1..=100 {
        let t = t_end * i as f64 / 101.0;
        for (f, df, name) in [
            (path.theta(t + h), path.theta_dot(t), "theta"),
            (path.phi(t + h), path.phi_dot(t), "phi"),
        ] {
            let fm = match name {
                "theta" => path.theta(t - h),
                _ => path.phi(t - h),
            };
            let fd = (f - fm) / (2.0 * h);
            let scale = df.abs().max(1.0 / t_end);
            assert!(
                (fd - df).abs() <= 1e-6 * scale,
                "{name} derivative mismatch at t={t}: analytic {df}, fd {fd}"
            );
        }
    }
}
