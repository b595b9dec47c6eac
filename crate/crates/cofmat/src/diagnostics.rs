//! Verification instruments: spectral parabola fits, energy traces, mesh
//! refinement probes, functional-equation residuals, and resolvent decay
//! profiles. All instruments take their inputs by shared reference and never
//! mutate them.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::funcalc::{self, CofMethod, DEFAULT_TOL};
use crate::linalg::{self, ColVec, Mat};
use crate::space::GradedSpace;

/// Least-enclosing parabola `Re z <= omega - c (Im z)^2` around a spectrum.
#[derive(Clone, Debug)]
pub struct ParabolaFit {
    /// Vertex abscissa.
    pub omega: f64,
    /// Curvature coefficient (`>= 0`; `0` for an essentially real spectrum,
    /// where the parabola degenerates to a half-plane and `c` is free).
    pub c: f64,
    /// Worst signed slack `max(Re z + c (Im z)^2) - omega`; `<= 0` on PASS.
    pub margin: f64,
    pub pass: bool,
    pub eigenvalues: Vec<Complex64>,
}

fn enclosing_omega(eigs: &[Complex64], c: f64) -> f64 {
    eigs.iter()
        .map(|z| z.re + c * z.im * z.im)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Fit the tightest-on-average enclosing parabola opening along the negative
/// real axis: for each curvature `c` the vertex `omega(c) = max(Re + c Im^2)`
/// is closed-form, and `c` minimizes the total slack
/// `sum_z [omega(c) - Re z - c (Im z)^2]`, a convex piecewise-linear function,
/// by golden-section search. The construction is exactly equivariant under
/// scaling of the imaginary parts (`c ~ sigma^{-2}`).
pub fn parabola_fit(eigs: &[Complex64]) -> Result<ParabolaFit> {
    if eigs.is_empty() {
        return Err(Error::Domain("parabola_fit: empty spectrum".into()));
    }
    if eigs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Domain("parabola_fit: non-finite eigenvalue".into()));
    }
    let scale = eigs
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let max_im2 = eigs.iter().map(|z| z.im * z.im).fold(0.0f64, f64::max);

    let c = if max_im2 <= (1e-12 * scale).powi(2) {
        0.0 // real spectrum: any parabola fits, report the half-plane
    } else {
        let re_max = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let re_min = eigs.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let spread = (re_max - re_min).max(1e-12 * scale);
        let sum_im2: f64 = eigs.iter().map(|z| z.im * z.im).sum();
        let n = eigs.len() as f64;
        let objective =
            |c: f64| n * enclosing_omega(eigs, c) - c * sum_im2;
        let mut lo = 0.0f64;
        let mut hi = 2.0 * spread / max_im2;
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = objective(x1);
        let mut f2 = objective(x2);
        for _ in 0..200 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = objective(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = objective(x2);
            }
        }
        0.5 * (lo + hi)
    };
    let omega = enclosing_omega(eigs, c);
    let margin = eigs
        .iter()
        .map(|z| z.re + c * z.im * z.im - omega)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ParabolaFit {
        omega,
        c,
        margin,
        pass: margin <= 1e-10 * scale,
        eigenvalues: eigs.to_vec(),
    })
}

/// Phase-space energy `E(t) = 1/2 (||u_dot||_X^2 + ||u||_V^2)` per sample.
pub fn energy_trace(
    u: &[ColVec],
    u_dot: &[ColVec],
    v_space: &GradedSpace,
    x_space: &GradedSpace,
) -> Result<Vec<f64>> {
    if u.len() != u_dot.len() {
        return Err(Error::dim("energy_trace: sample counts differ"));
    }
    u.iter()
        .zip(u_dot)
        .map(|(ui, vi)| {
            Ok(0.5 * (x_space.norm(vi)?.powi(2) + v_space.norm(ui)?.powi(2)))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Uniform,
    Growing,
}

#[derive(Clone, Debug)]
pub struct RefinementRow {
    pub n: usize,
    pub h: f64,
    pub norm: f64,
}

/// Operator norms of a mesh-indexed family with a boundedness verdict.
#[derive(Clone, Debug)]
pub struct RefinementTable {
    pub rows: Vec<RefinementRow>,
    pub verdict: Verdict,
    /// Estimated growth rate in `h^{-1}` (log-log slope; ~0 when uniform).
    pub rate: f64,
}

/// Ratio above which a norm family counts as growing rather than uniform.
pub const UNIFORM_RATIO: f64 = 10.0;

/// Log-log slope in `h^{-1}` above which a family counts as growing even
/// when the raw ratio stays under [`UNIFORM_RATIO`]. An `O(h^{-1})` family
/// only reaches a ratio of ~7 between `n = 8` and `n = 64`, so the slope is
/// what actually separates `O(1)` from `O(h^{-1})` on short mesh ranges.
pub const GROWING_RATE: f64 = 0.5;

/// Probe `op_norm` of `family(n)` over the given interior sizes.
pub fn refinement_probe<F>(family: F, meshes: &[usize]) -> Result<RefinementTable>
where
    F: Fn(usize) -> Result<(Mat, GradedSpace, GradedSpace)>,
{
    if meshes.len() < 2 {
        return Err(Error::Domain("refinement_probe needs at least 2 meshes".into()));
    }
    let mut rows = Vec::with_capacity(meshes.len());
    for &n in meshes {
        let (m, from, to) = family(n)?;
        let norm = funcalc::op_norm(&m, &from, &to)?;
        rows.push(RefinementRow {
            n,
            h: 1.0 / (n + 1) as f64,
            norm,
        });
    }
    let max = rows.iter().map(|r| r.norm).fold(0.0f64, f64::max);
    let min = rows.iter().map(|r| r.norm).fold(f64::INFINITY, f64::min);
    let mut slopes = Vec::new();
    for w in rows.windows(2) {
        let dlog_norm = (w[1].norm / w[0].norm.max(f64::MIN_POSITIVE)).ln();
        let dlog_invh = (w[0].h / w[1].h).ln();
        slopes.push(dlog_norm / dlog_invh);
    }
    let rate = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let verdict = if max > UNIFORM_RATIO * min.max(f64::MIN_POSITIVE) || rate > GROWING_RATE {
        Verdict::Growing
    } else {
        Verdict::Uniform
    };
    Ok(RefinementTable { rows, verdict, rate })
}

/// Max d'Alembert residual `||C(t+s) + C(t-s) - 2 C(t) C(s)||` over a grid.
pub fn functional_equation_residual(a: &Mat, grid: &[(f64, f64)]) -> Result<f64> {
    linalg::ensure_square(a, "generator")?;
    let mut worst = 0.0f64;
    for &(t, s) in grid {
        let c_plus = funcalc::cof_eval(a, t + s, CofMethod::Series, DEFAULT_TOL)?;
        let c_minus = funcalc::cof_eval(a, t - s, CofMethod::Series, DEFAULT_TOL)?;
        let ct = funcalc::cof_eval(a, t, CofMethod::Series, DEFAULT_TOL)?;
        let cs = funcalc::cof_eval(a, s, CofMethod::Series, DEFAULT_TOL)?;
        let resid = linalg::norm_max(&(c_plus + c_minus - ct * cs * 2.0));
        worst = worst.max(resid);
    }
    Ok(worst)
}

/// Uniform grid of `(t, s)` pairs in `[0, tmax]^2`.
pub fn ts_grid(points_per_axis: usize, tmax: f64) -> Vec<(f64, f64)> {
    let mut grid = Vec::with_capacity(points_per_axis * points_per_axis);
    for i in 0..points_per_axis {
        for j in 0..points_per_axis {
            let t = tmax * (i + 1) as f64 / points_per_axis as f64;
            let s = tmax * (j + 1) as f64 / points_per_axis as f64;
            grid.push((t, s));
        }
    }
    grid
}

/// Sorted singular values of the resolvent at a point, with a flatness flag.
#[derive(Clone, Debug)]
pub struct CompactnessProfile {
    /// Singular values of `(lambda - M)^{-1}`, descending.
    pub singular_values: Vec<f64>,
    /// `sigma_max / sigma_min`.
    pub decay_ratio: f64,
    /// Flat profile (ratio below 10): the finite-dimensional shadow of a
    /// non-compact resolvent.
    pub non_compact_like: bool,
    pub mesh_tag: String,
}

/// Resolvent singular-value profile of `M` at a real `lambda`.
pub fn compactness_proxy(m: &Mat, lambda: f64, mesh_tag: &str) -> Result<CompactnessProfile> {
    linalg::ensure_square(m, "M")?;
    let eigs = linalg::general_eigenvalues(m)?;
    let scale = linalg::norm_max(m).max(1.0);
    let mut nearest = f64::INFINITY;
    let mut nearest_re = f64::NAN;
    for z in &eigs {
        let d = ((z.re - lambda).powi(2) + z.im.powi(2)).sqrt();
        if d < nearest {
            nearest = d;
            nearest_re = z.re;
        }
    }
    if nearest <= 1e-12 * scale {
        return Err(Error::Resolvent {
            lambda,
            nearest: nearest_re,
        });
    }
    let n = m.nrows();
    let shifted = Mat::identity(n, n) * lambda - m;
    let inv = linalg::inverse(&shifted)?;
    let singular_values = linalg::singular_values(&inv);
    let decay_ratio = singular_values[0] / singular_values[n - 1].max(f64::MIN_POSITIVE);
    Ok(CompactnessProfile {
        non_compact_like: decay_ratio < 10.0,
        decay_ratio,
        singular_values,
        mesh_tag: mesh_tag.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::{self, Bc, Mesh};
    use crate::ensemble;
    use approx::assert_relative_eq;

    #[test]
    fn real_spectrum_fits_with_free_curvature() {
        let eigs = vec![Complex64::new(-1.0, 0.0), Complex64::new(-4.0, 0.0)];
        let fit = parabola_fit(&eigs).unwrap();
        assert!(fit.pass);
        assert_relative_eq!(fit.omega, -1.0, max_relative = 1e-12);
        assert_eq!(fit.c, 0.0);
        assert!(fit.margin <= 0.0 + 1e-12);
    }

    #[test]
    fn conjugate_pair_is_enclosed_on_the_boundary() {
        let eigs = vec![Complex64::new(-1.0, 2.0), Complex64::new(-1.0, -2.0)];
        let fit = parabola_fit(&eigs).unwrap();
        assert!(fit.pass);
        // the fitted parabola passes through the pair: omega - 4c = -1
        assert_relative_eq!(fit.omega - 4.0 * fit.c, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn empty_spectrum_is_a_domain_error() {
        assert!(matches!(parabola_fit(&[]), Err(Error::Domain(_))));
    }

    #[test]
    fn fit_is_scale_consistent_in_the_imaginary_parts() {
        let mut rng = ensemble::rng(53);
        let mut eigs = Vec::new();
        for _ in 0..12 {
            use rand::Rng;
            let re = rng.gen_range(-8.0..-0.1);
            let im = rng.gen_range(0.1..3.0);
            eigs.push(Complex64::new(re, im));
            eigs.push(Complex64::new(re, -im));
        }
        let fit1 = parabola_fit(&eigs).unwrap();
        let sigma = 3.7;
        let scaled: Vec<Complex64> = eigs
            .iter()
            .map(|z| Complex64::new(z.re, sigma * z.im))
            .collect();
        let fit2 = parabola_fit(&scaled).unwrap();
        assert_relative_eq!(fit2.c, fit1.c / (sigma * sigma), max_relative = 1e-6);
        assert_relative_eq!(fit2.omega, fit1.omega, max_relative = 1e-6);
    }

    #[test]
    fn parabola_fit_does_not_mutate_its_input() {
        let eigs = vec![Complex64::new(-2.0, 1.0), Complex64::new(-2.0, -1.0)];
        let before = eigs.clone();
        let _ = parabola_fit(&eigs).unwrap();
        assert_eq!(eigs, before);
    }

    #[test]
    fn harmonic_oscillator_energy_is_one_half() {
        // u'' = -u with (f, g) = (1, 0): u = cos t, u' = -sin t, E = 1/2.
        let v = GradedSpace::euclidean("V", 1);
        let x = GradedSpace::euclidean("X", 1);
        let mut us = Vec::new();
        let mut uds = Vec::new();
        for k in 0..20 {
            let t = 0.4 * k as f64;
            us.push(ColVec::from_element(1, t.cos()));
            uds.push(ColVec::from_element(1, -t.sin()));
        }
        let e = energy_trace(&us, &uds, &v, &x).unwrap();
        for ek in e {
            assert_relative_eq!(ek, 0.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_trajectory_has_zero_energy() {
        let v = GradedSpace::euclidean("V", 2);
        let x = GradedSpace::euclidean("X", 2);
        let us = vec![ColVec::zeros(2); 4];
        let e = energy_trace(&us, &us.clone(), &v, &x).unwrap();
        assert!(e.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn weighted_skew_propagation_conserves_energy() {
        // Reduction [[0, I], [A, 0]] of a symmetric negative definite A is
        // skew in the (V, X) = (-A, I) weighted inner product.
        let mesh = Mesh::interval(12).unwrap();
        let lap = discrete::laplacian(&mesh, Bc::Dirichlet).unwrap();
        let a = lap.matrix.clone();
        let n = 12;
        let red = linalg::block_2x2(
            &Mat::zeros(n, n),
            &Mat::identity(n, n),
            &a,
            &Mat::zeros(n, n),
        )
        .unwrap();
        let v = GradedSpace::new("V", (-&a) * mesh.h()).unwrap();
        let x = discrete::l2_space(&mesh);
        let mut r = ensemble::rng(59);
        let f = ensemble::random_vector(&mut r, n, 1.0);
        let g = ensemble::random_vector(&mut r, n, 1.0);
        let mut us = Vec::new();
        let mut uds = Vec::new();
        for k in 0..11 {
            let t = k as f64;
            let e = funcalc::expm(&red, t).unwrap();
            let mut z0 = ColVec::zeros(2 * n);
            z0.rows_mut(0, n).copy_from(&f);
            z0.rows_mut(n, n).copy_from(&g);
            let z = e * z0;
            us.push(z.rows(0, n).into_owned());
            uds.push(z.rows(n, n).into_owned());
        }
        let e = energy_trace(&us, &uds, &v, &x).unwrap();
        for k in 1..11 {
            assert_relative_eq!(e[k], e[0], max_relative = 1e-9);
        }
    }

    #[test]
    fn identity_family_is_uniform() {
        let table = refinement_probe(
            |n| {
                Ok((
                    Mat::identity(n, n),
                    GradedSpace::euclidean("E", n),
                    GradedSpace::euclidean("E", n),
                ))
            },
            &[8, 16, 32],
        )
        .unwrap();
        assert_eq!(table.verdict, Verdict::Uniform);
        for row in &table.rows {
            assert_relative_eq!(row.norm, 1.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn gradient_probes_uniform_vs_growing() {
        let h1_family = |n: usize| {
            let mesh = Mesh::interval(n)?;
            let (grad, _) = discrete::grad_div(&mesh)?;
            Ok((grad.matrix, discrete::h1_space(&mesh)?, discrete::face_l2_space(&mesh)))
        };
        let l2_family = |n: usize| {
            let mesh = Mesh::interval(n)?;
            let (grad, _) = discrete::grad_div(&mesh)?;
            Ok((grad.matrix, discrete::l2_space(&mesh), discrete::face_l2_space(&mesh)))
        };
        let uniform = refinement_probe(h1_family, &[8, 16, 32]).unwrap();
        assert_eq!(uniform.verdict, Verdict::Uniform);
        let growing = refinement_probe(l2_family, &[8, 16, 32]).unwrap();
        assert_eq!(growing.verdict, Verdict::Growing);
        assert!(
            (growing.rate - 1.0).abs() < 0.2,
            "expected ~h^-1 growth, rate {}",
            growing.rate
        );
    }

    #[test]
    fn dalembert_residual_scalar_cases() {
        let zero = Mat::zeros(1, 1);
        let grid = ts_grid(5, 2.0);
        assert_eq!(functional_equation_residual(&zero, &grid).unwrap(), 0.0);
        let osc = Mat::from_element(1, 1, -4.0);
        assert!(functional_equation_residual(&osc, &grid).unwrap() < 1e-12);
    }

    #[test]
    fn dalembert_residual_random_snd() {
        let mut r = ensemble::rng(61);
        let a = ensemble::random_snd(&mut r, 8, 0.5, 10.0);
        let grid = ts_grid(7, 2.0);
        let resid = functional_equation_residual(&a, &grid).unwrap();
        assert!(resid < 1e-9, "residual {resid:.3e}");
    }

    #[test]
    fn compactness_diagonal_case() {
        let n = 12;
        let m = Mat::from_diagonal(&ColVec::from_iterator(n, (1..=n).map(|k| -(k as f64))));
        let prof = compactness_proxy(&m, 0.0, "diag").unwrap();
        for (k, s) in prof.singular_values.iter().enumerate() {
            assert_relative_eq!(*s, 1.0 / (k + 1) as f64, max_relative = 1e-10);
        }
        assert!(!prof.non_compact_like);
    }

    #[test]
    fn compactness_flat_profile_for_bounded_block() {
        let m = Mat::zeros(6, 6);
        let prof = compactness_proxy(&m, 2.0, "bounded").unwrap();
        assert!(prof.non_compact_like);
        assert_relative_eq!(prof.decay_ratio, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn compactness_dirichlet_decay_is_mesh_stable() {
        // singular values ~ 1/|eig_k| ~ (k pi)^{-2}: profile stable across meshes
        let mut profiles = Vec::new();
        for &n in &[16usize, 32] {
            let mesh = Mesh::interval(n).unwrap();
            let lap = discrete::laplacian(&mesh, Bc::Dirichlet).unwrap();
            profiles.push(compactness_proxy(&lap.matrix, 0.0, "lap").unwrap());
        }
        // leading singular values agree across meshes (discrete eigenvalues
        // carry O((k pi h)^2) consistency error, so compare the smooth end)
        for k in 0..6 {
            let a = profiles[0].singular_values[k];
            let b = profiles[1].singular_values[k];
            assert!(
                (a - b).abs() <= 0.10 * a.abs(),
                "decay profile drifts at k={k}: {a} vs {b}"
            );
        }
        // and the decay follows k^{-2}
        let s = &profiles[1].singular_values;
        let slope = ((s[0] / s[7]) as f64).ln() / (8.0f64).ln();
        assert!((slope - 2.0).abs() < 0.15, "decay slope {slope}");
    }

    #[test]
    fn compactness_rejects_spectral_lambda() {
        let m = Mat::from_diagonal(&ColVec::from_vec(vec![-1.0, -2.0]));
        assert!(matches!(
            compactness_proxy(&m, -1.0, "hit"),
            Err(Error::Resolvent { .. })
        ));
    }
}
