//! Complete second-order problems `u'' = A u + C u'` in the overdamped
//! regime: the reduction matrix `[[0, I], [A, C]]`, exact-exponential
//! propagation, and the sampled-ray resolvent probe for analyticity.

use crate::error::{Error, Result};
use crate::funcalc;
use crate::linalg::{self, ColVec, Mat};
use crate::space::GradedSpace;

/// Elastic operator, damping generator, and their reduction matrix.
#[derive(Clone, Debug)]
pub struct CompleteProblem {
    pub a: Mat,
    pub c: Mat,
    pub v_space: GradedSpace,
    pub x_space: GradedSpace,
    /// `[[0, I], [A, C]]`.
    pub reduction: Mat,
    /// Reported `op_norm(A, V -> X)`; finiteness is the boundedness
    /// hypothesis of the overdamped generation theorem.
    pub a_norm_v_to_x: f64,
}

/// Assemble the reduction matrix and record the elastic-operator norm.
pub fn reduction_complete(
    a: &Mat,
    c: &Mat,
    v_space: &GradedSpace,
    x_space: &GradedSpace,
) -> Result<CompleteProblem> {
    linalg::ensure_square(a, "A")?;
    linalg::ensure_square(c, "C")?;
    let n = a.nrows();
    if c.nrows() != n {
        return Err(Error::dim(format!(
            "A and C must have equal dims, got {n} vs {}",
            c.nrows()
        )));
    }
    if v_space.dim() != n || x_space.dim() != n {
        return Err(Error::dim("spaces must match the operator dimension"));
    }
    let reduction = linalg::block_2x2(&Mat::zeros(n, n), &Mat::identity(n, n), a, c)?;
    let a_norm_v_to_x = funcalc::op_norm(a, v_space, x_space)?;
    Ok(CompleteProblem {
        a: a.clone(),
        c: c.clone(),
        v_space: v_space.clone(),
        x_space: x_space.clone(),
        reduction,
        a_norm_v_to_x,
    })
}

/// Sampled solution of the damped problem.
#[derive(Clone, Debug)]
pub struct DampedTrajectory {
    pub times: Vec<f64>,
    pub u: Vec<ColVec>,
    pub u_dot: Vec<ColVec>,
}

impl DampedTrajectory {
    /// `(||u||_V^2 + ||u_dot||_X^2)` per sample.
    pub fn energies(&self, p: &CompleteProblem) -> Result<Vec<f64>> {
        self.u
            .iter()
            .zip(&self.u_dot)
            .map(|(u, v)| Ok(p.v_space.norm(u)?.powi(2) + p.x_space.norm(v)?.powi(2)))
            .collect()
    }
}

/// `(u(t), u'(t)) = exp(t [[0,I],[A,C]]) (f, g)` sampled exactly at each
/// output time (no stepping error accumulation).
pub fn overdamped_simulate(
    p: &CompleteProblem,
    f: &ColVec,
    g: &ColVec,
    t_final: f64,
    samples: usize,
) -> Result<DampedTrajectory> {
    let n = p.a.nrows();
    if f.len() != n || g.len() != n {
        return Err(Error::dim(format!("initial data must have dim {n}")));
    }
    if !(t_final > 0.0) {
        return Err(Error::Domain("final time must be positive".into()));
    }
    if samples < 2 {
        return Err(Error::Domain("need at least 2 samples".into()));
    }
    let mut z0 = ColVec::zeros(2 * n);
    z0.rows_mut(0, n).copy_from(f);
    z0.rows_mut(n, n).copy_from(g);
    let mut traj = DampedTrajectory {
        times: Vec::with_capacity(samples),
        u: Vec::with_capacity(samples),
        u_dot: Vec::with_capacity(samples),
    };
    for k in 0..samples {
        let t = t_final * k as f64 / (samples - 1) as f64;
        let e = funcalc::expm(&p.reduction, t)?;
        let z = e * &z0;
        traj.times.push(t);
        traj.u.push(z.rows(0, n).into_owned());
        traj.u_dot.push(z.rows(n, n).into_owned());
    }
    Ok(traj)
}

/// One resolvent sample along a ray.
#[derive(Clone, Copy, Debug)]
pub struct SectorSample {
    pub theta: f64,
    pub r: f64,
    /// `||(lambda - M)^{-1}|| * |lambda - omega|` at `lambda = omega + r e^{i theta}`.
    pub value: f64,
    /// Set when `lambda` hits the spectrum (resolvent numerically singular).
    pub skipped: bool,
}

/// Resolvent growth table over a grid of rays through `omega`.
#[derive(Clone, Debug)]
pub struct SectorTable {
    pub omega: f64,
    pub samples: Vec<SectorSample>,
    /// Largest value over non-skipped samples with `|theta| <= pi - 0.1`.
    pub bound: f64,
    /// Bounded by `SECTOR_BOUND` on the tested sector, with no spectrum hits.
    pub pass: bool,
}

/// Uniform-boundedness threshold for the sector probe.
pub const SECTOR_BOUND: f64 = 1e3;
const SECTOR_ANGLE_MARGIN: f64 = 0.1;

/// Default angle grid: symmetric, includes `pi/2` exactly and reaches
/// `pi - 0.1`.
pub fn default_angles() -> Vec<f64> {
    use std::f64::consts::PI;
    let base = [
        0.0,
        PI / 6.0,
        PI / 3.0,
        PI / 2.0,
        2.0 * PI / 3.0,
        5.0 * PI / 6.0,
        PI - SECTOR_ANGLE_MARGIN,
    ];
    let mut out = Vec::new();
    for a in base {
        out.push(a);
        if a != 0.0 {
            out.push(-a);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Default radius grid: three decades on each side of 1, plus points just
/// off the unit circle to expose spectrum at unit distance from the shift.
pub fn default_radii() -> Vec<f64> {
    let mut out: Vec<f64> = (-6..=6).map(|k| 10f64.powf(k as f64 / 2.0)).collect();
    out.push(1.0 - 1e-4);
    out.push(1.0 + 1e-4);
    out.sort_by(f64::total_cmp);
    out
}

/// Probe `||(lambda - M)^{-1}|| |lambda - omega|` for
/// `lambda = omega + r e^{i theta}` on the given grid. Needs
/// `Re spec(M) < omega`. PASS when the table stays below [`SECTOR_BOUND`]
/// for `|theta| <= pi - 0.1` with no spectrum hits inside that sector.
pub fn sector_probe(m: &Mat, omega: f64, angles: &[f64], radii: &[f64]) -> Result<SectorTable> {
    linalg::ensure_square(m, "M")?;
    let eigs = linalg::general_eigenvalues(m)?;
    let max_re = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if max_re > omega {
        return Err(Error::Domain(format!(
            "shift omega = {omega} must not be below max Re spec(M) = {max_re:.6e}"
        )));
    }
    if angles.iter().any(|t| t.abs() >= std::f64::consts::PI) {
        return Err(Error::Domain("angles must lie in (-pi, pi)".into()));
    }
    let n = m.nrows();
    let scale = linalg::norm_max(m).max(1.0);
    let mut samples = Vec::with_capacity(angles.len() * radii.len());
    let mut bound = 0.0f64;
    let mut pass = true;
    for &theta in angles {
        for &r in radii {
            if !(r > 0.0) {
                return Err(Error::Domain("radii must be positive".into()));
            }
            let lam_re = omega + r * theta.cos();
            let lam_im = r * theta.sin();
            let re = Mat::identity(n, n) * lam_re - m;
            let im = Mat::identity(n, n) * lam_im;
            let smin = linalg::sigma_min_complex(&re, &im)?;
            let in_sector = theta.abs() <= std::f64::consts::PI - SECTOR_ANGLE_MARGIN;
            if smin <= 1e-13 * scale {
                samples.push(SectorSample {
                    theta,
                    r,
                    value: f64::INFINITY,
                    skipped: true,
                });
                if in_sector {
                    pass = false;
                }
                continue;
            }
            let value = r / smin;
            samples.push(SectorSample {
                theta,
                r,
                value,
                skipped: false,
            });
            if in_sector {
                bound = bound.max(value);
                if value > SECTOR_BOUND {
                    pass = false;
                }
            }
        }
    }
    Ok(SectorTable {
        omega,
        samples,
        bound,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockops;
    use crate::ensemble;
    use approx::assert_relative_eq;

    #[test]
    fn zero_operators_give_the_nilpotent_flow() {
        let z = Mat::zeros(3, 3);
        let e3 = GradedSpace::euclidean("E", 3);
        let p = reduction_complete(&z, &z, &e3, &e3).unwrap();
        let t = 1.7;
        let e = funcalc::expm(&p.reduction, t).unwrap();
        let mut expected = Mat::identity(6, 6);
        for i in 0..3 {
            expected[(i, i + 3)] = t;
        }
        assert!(linalg::norm_max(&(&e - &expected)) < 1e-13);
    }

    #[test]
    fn scalar_reduction_has_the_characteristic_roots() {
        let a = Mat::from_element(1, 1, -1.0);
        let c = Mat::from_element(1, 1, -3.0);
        let e1 = GradedSpace::euclidean("E", 1);
        let p = reduction_complete(&a, &c, &e1, &e1).unwrap();
        let mut eigs = linalg::general_eigenvalues(&p.reduction).unwrap();
        eigs.sort_by(|x, y| x.re.total_cmp(&y.re));
        // roots of mu^2 + 3 mu + 1 = 0
        let mu_minus = (-3.0 - 5.0f64.sqrt()) / 2.0;
        let mu_plus = (-3.0 + 5.0f64.sqrt()) / 2.0;
        assert_relative_eq!(eigs[0].re, mu_minus, max_relative = 1e-12);
        assert_relative_eq!(eigs[1].re, mu_plus, max_relative = 1e-12);
        assert!(eigs[0].im.abs() < 1e-14 && eigs[1].im.abs() < 1e-14);
    }

    #[test]
    fn scalar_closed_form_solution() {
        // u(t) = (mu+ e^{mu- t} - mu- e^{mu+ t}) / (mu+ - mu-), f = 1, g = 0.
        let a = Mat::from_element(1, 1, -1.0);
        let c = Mat::from_element(1, 1, -3.0);
        let e1 = GradedSpace::euclidean("E", 1);
        let p = reduction_complete(&a, &c, &e1, &e1).unwrap();
        let f = ColVec::from_element(1, 1.0);
        let g = ColVec::zeros(1);
        let traj = overdamped_simulate(&p, &f, &g, 2.0, 9).unwrap();
        let mu_m = (-3.0 - 5.0f64.sqrt()) / 2.0;
        let mu_p = (-3.0 + 5.0f64.sqrt()) / 2.0;
        for (k, &t) in traj.times.iter().enumerate() {
            let exact = (mu_p * (mu_m * t).exp() - mu_m * (mu_p * t).exp()) / (mu_p - mu_m);
            assert_relative_eq!(traj.u[k][0], exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_data_zero_trajectory() {
        let a = Mat::from_element(1, 1, -1.0);
        let c = Mat::from_element(1, 1, -2.0);
        let e1 = GradedSpace::euclidean("E", 1);
        let p = reduction_complete(&a, &c, &e1, &e1).unwrap();
        let z = ColVec::zeros(1);
        let traj = overdamped_simulate(&p, &z, &z, 1.0, 4).unwrap();
        assert!(traj.u.iter().all(|u| u.amax() == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = Mat::zeros(2, 2);
        let c = Mat::zeros(3, 3);
        let e2 = GradedSpace::euclidean("E", 2);
        assert!(matches!(
            reduction_complete(&a, &c, &e2, &e2),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn second_order_residual_by_finite_differences() {
        let mut r = ensemble::rng(43);
        let a = ensemble::random_snd(&mut r, 4, 0.5, 4.0);
        let c = ensemble::random_snd(&mut r, 4, 1.0, 6.0);
        let e4 = GradedSpace::euclidean("E", 4);
        let p = reduction_complete(&a, &c, &e4, &e4).unwrap();
        let f = ensemble::random_vector(&mut r, 4, 1.0);
        let g = ensemble::random_vector(&mut r, 4, 1.0);
        // u'' - A u - C u' at t = 0.5 via centered differences of the flow
        let state = |t: f64| {
            let e = funcalc::expm(&p.reduction, t).unwrap();
            let mut z0 = ColVec::zeros(8);
            z0.rows_mut(0, 4).copy_from(&f);
            z0.rows_mut(4, 4).copy_from(&g);
            e * z0
        };
        let resid = |h: f64| {
            let zp = state(0.5 + h);
            let z0 = state(0.5);
            let zm = state(0.5 - h);
            let upp = (zp.rows(0, 4) + zm.rows(0, 4) - z0.rows(0, 4) * 2.0) / (h * h);
            (upp - &a * z0.rows(0, 4) - &c * z0.rows(4, 4)).amax()
        };
        let e2 = resid(1e-2);
        let e3 = resid(1e-3);
        assert!((e2 / e3).log10() > 1.9, "residual not O(h^2): {e2:.3e} vs {e3:.3e}");
    }

    #[test]
    fn duhamel_route_from_the_damping_semigroup() {
        // exp(t R) = exp(t R0) + int_0^t exp((t-s) R0) P exp(s R) ds with
        // R0 = [[0,0],[0,C]] and bounded P = [[0,I],[A,0]].
        let mut r = ensemble::rng(47);
        let n = 3;
        let a = ensemble::random_snd(&mut r, n, 0.5, 3.0);
        let c = ensemble::random_snd(&mut r, n, 1.0, 5.0);
        let en = GradedSpace::euclidean("E", n);
        let p = reduction_complete(&a, &c, &en, &en).unwrap();
        let t = 0.9;
        let direct = funcalc::expm(&p.reduction, t).unwrap();

        let r0 = linalg::block_grid(&[
            vec![Some(&Mat::zeros(n, n)), None],
            vec![None, Some(&c)],
        ])
        .unwrap();
        let pert = linalg::block_2x2(&Mat::zeros(n, n), &Mat::identity(n, n), &a, &Mat::zeros(n, n))
            .unwrap();
        let (nodes, weights) = blockops::gauss_legendre(8);
        let panels = 12;
        let dt = t / panels as f64;
        let mut duhamel = funcalc::expm(&r0, t).unwrap();
        for pnl in 0..panels {
            let s0 = pnl as f64 * dt;
            for (x, w) in nodes.iter().zip(&weights) {
                let s = s0 + 0.5 * dt * (x + 1.0);
                let wq = 0.5 * dt * w;
                let left = funcalc::expm(&r0, t - s).unwrap();
                let right = funcalc::expm(&p.reduction, s).unwrap();
                duhamel += left * &pert * right * wq;
            }
        }
        let scale = linalg::norm_max(&direct).max(1.0);
        assert!(
            linalg::norm_max(&(&duhamel - &direct)) < 1e-8 * scale,
            "Duhamel mismatch {:.3e}",
            linalg::norm_max(&(&duhamel - &direct))
        );
    }

    #[test]
    fn scalar_resolvent_probe_stays_below_one() {
        let m = Mat::from_element(1, 1, -1.0);
        let table = sector_probe(&m, 0.0, &default_angles(), &default_radii()).unwrap();
        assert!(table.pass);
        for s in &table.samples {
            if s.theta.abs() <= std::f64::consts::FRAC_PI_2 && !s.skipped {
                // |lambda| / |lambda + 1| <= 1 on Re lambda >= 0
                assert!(s.value <= 1.0 + 1e-9, "value {} at ({}, {})", s.value, s.theta, s.r);
            }
        }
    }

    #[test]
    fn rotation_control_fails_near_the_imaginary_axis() {
        let rot = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let table = sector_probe(&rot, 0.0, &default_angles(), &default_radii()).unwrap();
        assert!(!table.pass);
        // the blow-up is at theta = +-pi/2, r near 1
        let worst = table
            .samples
            .iter()
            .filter(|s| !s.skipped && s.value > SECTOR_BOUND)
            .map(|s| (s.theta, s.r))
            .next();
        let (theta, r) = worst.expect("some sample must exceed the bound");
        assert!((theta.abs() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((r - 1.0).abs() < 1e-2);
    }

    #[test]
    fn probe_rejects_bad_shift() {
        let m = Mat::from_element(1, 1, 2.0);
        assert!(matches!(
            sector_probe(&m, 1.0, &default_angles(), &default_radii()),
            Err(Error::Domain(_))
        ));
    }
}
