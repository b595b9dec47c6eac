//! Operator matrices with diagonal domain: triangular cosine/sine block
//! formulas, their 4x4 first-order reduction, and assembly of coupled systems
//! (including the fluid-dynamics block operator on the square).

use std::collections::BTreeMap;

use crate::discrete::{self, Bc, Mesh};
use crate::error::{Error, Result};
use crate::funcalc::{self, CofMethod, DEFAULT_TOL};
use crate::linalg::{self, Mat};
use crate::space::GradedSpace;

/// Composite Gauss-Legendre rule for the convolution integrals.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureSpec {
    pub nodes_per_panel: usize,
    pub max_panel_width: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        // Panel width also capped at t/4, see `panels`.
        QuadratureSpec {
            nodes_per_panel: 8,
            max_panel_width: 0.1,
        }
    }
}

impl QuadratureSpec {
    pub fn halved(&self) -> Self {
        QuadratureSpec {
            nodes_per_panel: self.nodes_per_panel,
            max_panel_width: self.max_panel_width / 2.0,
        }
    }

    fn panels(&self, t: f64) -> usize {
        let width = self.max_panel_width.min(t / 4.0);
        (t / width).ceil() as usize
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let mut p0 = 1.0;
        let mut p1 = x;
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Which family enters a convolution factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Cos,
    Sin,
}

/// All four convolutions sharing one quadrature pass:
/// `int_0^t F(t-s, A) H G(s, D) ds` for `F, G in {C, S}`.
#[derive(Clone, Debug)]
pub struct ConvolutionBlocks {
    pub cc: Mat,
    pub cs: Mat,
    pub sc: Mat,
    pub ss: Mat,
}

pub fn convolution_all(
    a: &Mat,
    h: &Mat,
    d: &Mat,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<ConvolutionBlocks> {
    linalg::ensure_square(a, "A")?;
    linalg::ensure_square(d, "D")?;
    if h.nrows() != a.nrows() || h.ncols() != d.nrows() {
        return Err(Error::dim(format!(
            "coupling H must be {}x{}, got {}x{}",
            a.nrows(),
            d.nrows(),
            h.nrows(),
            h.ncols()
        )));
    }
    if t < 0.0 {
        return Err(Error::Domain(
            "convolution needs t >= 0; reduce negative t by evenness/oddness first".into(),
        ));
    }
    let (na, nd) = (a.nrows(), d.nrows());
    let mut blocks = ConvolutionBlocks {
        cc: Mat::zeros(na, nd),
        cs: Mat::zeros(na, nd),
        sc: Mat::zeros(na, nd),
        ss: Mat::zeros(na, nd),
    };
    if t == 0.0 {
        return Ok(blocks);
    }
    let panels = quad.panels(t);
    let (nodes, weights) = gauss_legendre(quad.nodes_per_panel);
    let dt = t / panels as f64;
    for p in 0..panels {
        let s0 = p as f64 * dt;
        for (x, w) in nodes.iter().zip(&weights) {
            let s = s0 + 0.5 * dt * (x + 1.0);
            let wq = 0.5 * dt * w;
            let (ca, sa) = funcalc::cof_sof_eval(a, t - s, CofMethod::Series, DEFAULT_TOL)?;
            let (cd, sd) = funcalc::cof_sof_eval(d, s, CofMethod::Series, DEFAULT_TOL)?;
            let ch = &ca * h;
            let sh = &sa * h;
            blocks.cc += &ch * &cd * wq;
            blocks.cs += &ch * &sd * wq;
            blocks.sc += &sh * &cd * wq;
            blocks.ss += &sh * &sd * wq;
        }
    }
    Ok(blocks)
}

/// One convolution `int_0^t F_left(t-s, A) H F_right(s, D) ds`.
pub fn convolution(
    a: &Mat,
    h: &Mat,
    d: &Mat,
    t: f64,
    left: Family,
    right: Family,
    quad: &QuadratureSpec,
) -> Result<Mat> {
    let all = convolution_all(a, h, d, t, quad)?;
    Ok(match (left, right) {
        (Family::Cos, Family::Cos) => all.cc,
        (Family::Cos, Family::Sin) => all.cs,
        (Family::Sin, Family::Cos) => all.sc,
        (Family::Sin, Family::Sin) => all.ss,
    })
}

/// The coupling block of the triangular cosine formula:
/// `int_0^t C(t-s, A) H S(s, D) ds`.
pub fn convolution_block(a: &Mat, h: &Mat, d: &Mat, t: f64, quad: &QuadratureSpec) -> Result<Mat> {
    convolution(a, h, d, t, Family::Cos, Family::Sin, quad)
}

/// Cosine and sine families of the triangular block matrix `[[A, H], [0, D]]`:
/// `C = [[C(t,A), int C(t-s,A) H S(s,D) ds], [0, C(t,D)]]` and the same shape
/// with sines on the left for `S`.
pub fn triangular_propagator(a: &Mat, h: &Mat, d: &Mat, t: f64) -> Result<(Mat, Mat)> {
    if t < 0.0 {
        let (c, s) = triangular_propagator(a, h, d, -t)?;
        return Ok((c, -s));
    }
    let quad = QuadratureSpec::default();
    let conv = convolution_all(a, h, d, t, &quad)?;
    let (ca, sa) = funcalc::cof_sof_eval(a, t, CofMethod::Series, DEFAULT_TOL)?;
    let (cd, sd) = funcalc::cof_sof_eval(d, t, CofMethod::Series, DEFAULT_TOL)?;
    let zero = Mat::zeros(d.nrows(), a.ncols());
    let cos_m = linalg::block_2x2(&ca, &conv.cs, &zero, &cd)?;
    let sin_m = linalg::block_2x2(&sa, &conv.ss, &zero, &sd)?;
    Ok((cos_m, sin_m))
}

/// The 4x4-block semigroup matrix of the first-order reduction of
/// `[[A, H], [0, D]]` on `(V x W) x (X x Y)`, assembled entry by entry.
pub fn reduction_4x4(a: &Mat, h: &Mat, d: &Mat, t: f64) -> Result<Mat> {
    if t < 0.0 {
        return Err(Error::Domain("reduction_4x4 needs t >= 0".into()));
    }
    let quad = QuadratureSpec::default();
    let conv = convolution_all(a, h, d, t, &quad)?;
    let (ca, sa) = funcalc::cof_sof_eval(a, t, CofMethod::Series, DEFAULT_TOL)?;
    let (cd, sd) = funcalc::cof_sof_eval(d, t, CofMethod::Series, DEFAULT_TOL)?;
    let asa = a * &sa;
    let dsd = d * &sd;
    linalg::block_grid(&[
        vec![Some(&ca), Some(&conv.sc), Some(&sa), Some(&conv.ss)],
        vec![None, Some(&cd), None, Some(&sd)],
        vec![Some(&asa), Some(&conv.cc), Some(&ca), Some(&conv.cs)],
        vec![None, Some(&dsd), None, Some(&cd)],
    ])
}

/// Block permutation mapping `(V x W) x (X x Y)` order to `(V x X) x (W x Y)`
/// order: `(v, w, x, y) -> (v, x, w, y)`.
pub fn permutation_u(nv: usize, nw: usize, nx: usize, ny: usize) -> Mat {
    let total = nv + nw + nx + ny;
    let mut u = Mat::zeros(total, total);
    let mut row = 0;
    for k in 0..nv {
        u[(row, k)] = 1.0;
        row += 1;
    }
    for k in 0..nx {
        u[(row, nv + nw + k)] = 1.0;
        row += 1;
    }
    for k in 0..nw {
        u[(row, nv + k)] = 1.0;
        row += 1;
    }
    for k in 0..ny {
        u[(row, nv + nw + nx + k)] = 1.0;
        row += 1;
    }
    u
}

/// Phase space of a second-order system: the Kisynski product space over the
/// base product space, both with block-diagonal weights.
#[derive(Clone, Debug)]
pub struct PhaseSpace {
    pub kisynski: GradedSpace,
    pub base: GradedSpace,
}

impl PhaseSpace {
    pub fn new(kisynski: GradedSpace, base: GradedSpace) -> Result<Self> {
        if kisynski.dim() != base.dim() {
            return Err(Error::dim(format!(
                "phase space factors disagree: {} vs {}",
                kisynski.dim(),
                base.dim()
            )));
        }
        Ok(PhaseSpace { kisynski, base })
    }
}

/// A reported operator norm, e.g. a coupling-boundedness certificate.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub name: String,
    pub value: f64,
}

/// An assembled operator matrix with named blocks and its phase space.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub blocks: BTreeMap<(usize, usize), Mat>,
    pub row_dims: Vec<usize>,
    pub col_dims: Vec<usize>,
    pub assembled: Mat,
    pub phase: PhaseSpace,
    pub certificates: Vec<Certificate>,
}

impl BlockSystem {
    pub fn assemble(
        blocks: BTreeMap<(usize, usize), Mat>,
        row_dims: Vec<usize>,
        col_dims: Vec<usize>,
        phase: PhaseSpace,
        certificates: Vec<Certificate>,
    ) -> Result<Self> {
        let total_r: usize = row_dims.iter().sum();
        let total_c: usize = col_dims.iter().sum();
        if phase.base.dim() != total_r || total_r != total_c {
            return Err(Error::dim("block system dims inconsistent with phase space"));
        }
        let mut assembled = Mat::zeros(total_r, total_c);
        let row_off: Vec<usize> = std::iter::once(0)
            .chain(row_dims.iter().scan(0, |acc, d| {
                *acc += d;
                Some(*acc)
            }))
            .collect();
        let col_off: Vec<usize> = std::iter::once(0)
            .chain(col_dims.iter().scan(0, |acc, d| {
                *acc += d;
                Some(*acc)
            }))
            .collect();
        for (&(i, j), m) in &blocks {
            if i >= row_dims.len() || j >= col_dims.len() {
                return Err(Error::dim(format!("block index ({i},{j}) out of range")));
            }
            if m.nrows() != row_dims[i] || m.ncols() != col_dims[j] {
                return Err(Error::dim(format!(
                    "block ({i},{j}) is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    row_dims[i],
                    col_dims[j]
                )));
            }
            assembled
                .view_mut((row_off[i], col_off[j]), (row_dims[i], col_dims[j]))
                .copy_from(m);
        }
        Ok(BlockSystem {
            blocks,
            row_dims,
            col_dims,
            assembled,
            phase,
            certificates,
        })
    }

    pub fn dim(&self) -> usize {
        self.assembled.nrows()
    }
}

/// Assemble `[[A, H], [K, D]]` with its product phase space and report the
/// boundedness certificates for both alternative routes of each coupling
/// (graph space to Kisynski factor, and Kisynski factor to base factor).
/// Boundedness across meshes is reported, not enforced.
#[allow(clippy::too_many_arguments)]
pub fn assemble_full(
    a: &Mat,
    h: &Mat,
    k: &Mat,
    d: &Mat,
    v: &GradedSpace,
    w: &GradedSpace,
    x: &GradedSpace,
    y: &GradedSpace,
) -> Result<BlockSystem> {
    let n = a.nrows();
    let m = d.nrows();
    linalg::ensure_square(a, "A")?;
    linalg::ensure_square(d, "D")?;
    if h.shape() != (n, m) || k.shape() != (m, n) {
        return Err(Error::dim("assemble_full: coupling shapes"));
    }
    if v.dim() != n || x.dim() != n || w.dim() != m || y.dim() != m {
        return Err(Error::dim("assemble_full: space dims"));
    }
    let graph_d = GradedSpace::graph_space("[D(D)]", y, d, y, None)?;
    let graph_a = GradedSpace::graph_space("[D(A)]", x, a, x, None)?;
    let certificates = vec![
        Certificate {
            name: "H: [D(D)] -> V".into(),
            value: funcalc::op_norm(h, &graph_d, v)?,
        },
        Certificate {
            name: "H: W -> X".into(),
            value: funcalc::op_norm(h, w, x)?,
        },
        Certificate {
            name: "K: [D(A)] -> W".into(),
            value: funcalc::op_norm(k, &graph_a, w)?,
        },
        Certificate {
            name: "K: V -> Y".into(),
            value: funcalc::op_norm(k, v, y)?,
        },
    ];
    let phase = PhaseSpace::new(
        GradedSpace::product("V x W", &[v, w])?,
        GradedSpace::product("X x Y", &[x, y])?,
    )?;
    let mut blocks = BTreeMap::new();
    blocks.insert((0, 0), a.clone());
    blocks.insert((0, 1), h.clone());
    blocks.insert((1, 0), k.clone());
    blocks.insert((1, 1), d.clone());
    BlockSystem::assemble(blocks, vec![n, m], vec![n, m], phase, certificates)
}

/// Boundary condition for the scalar heat-like block of the fluid system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StromBc {
    Robin(f64),
    Dirichlet,
}

/// The 3x3 block operator from linearized compressible flow on the unit
/// square:
/// `[[A1, p1 grad, p2 grad], [p3 div, A2, 0], [p4 div, 0, 0]]`
/// with `A1 = mu1 Delta + mu2 grad.div` on Dirichlet vector fields and
/// `A2 = mu3 Delta` under the chosen boundary condition. The third factor
/// carries the discrete H^1 weight.
pub fn strom_assemble(
    n: usize,
    mu: (f64, f64, f64),
    p: (f64, f64, f64, f64),
    bc2: StromBc,
) -> Result<BlockSystem> {
    let (mu1, mu2, mu3) = mu;
    if mu1 < 0.0 || mu2 < 0.0 || (mu1 == 0.0 && mu2 == 0.0) {
        return Err(Error::Domain(format!(
            "need mu1, mu2 >= 0 and not both zero, got ({mu1}, {mu2})"
        )));
    }
    if mu3 <= 0.0 {
        return Err(Error::Domain(format!("need mu3 > 0, got {mu3}")));
    }
    if n < 4 {
        return Err(Error::Domain(format!("strom needs n >= 4, got {n}")));
    }
    let mesh = Mesh::square(n)?;
    let a1 = discrete::lame_operator(&mesh, mu1, mu2)?;
    let lap2 = match bc2 {
        StromBc::Robin(alpha) => discrete::laplacian(&mesh, Bc::Robin(alpha))?,
        StromBc::Dirichlet => discrete::laplacian(&mesh, Bc::Dirichlet)?,
    };
    let a2 = &lap2.matrix * mu3;
    let (grad, div) = discrete::grad_div(&mesh)?;
    let (p1, p2, p3, p4) = p;

    let nf = mesh.face_count();
    let ns = mesh.interior_count();
    let x1 = discrete::face_l2_space(&mesh);
    let x2 = discrete::l2_space(&mesh);
    let x3 = discrete::h1_space(&mesh)?;
    let v1 = discrete::face_h1_space(&mesh)?;
    let v2 = discrete::h1_space(&mesh)?;
    let v3 = x3.clone();

    let graph_a1 = GradedSpace::graph_space("[D(A1)]", &x1, &a1.matrix, &x1, None)?;
    let b12 = &grad.matrix * p1;
    let b13 = &grad.matrix * p2;
    let c21 = &div.matrix * p3;
    let c31 = &div.matrix * p4;
    let certificates = vec![
        Certificate {
            name: "B12 = p1 grad: V2 -> X1".into(),
            value: funcalc::op_norm(&b12, &v2, &x1)?,
        },
        Certificate {
            name: "B13 = p2 grad: V3 -> X1".into(),
            value: funcalc::op_norm(&b13, &v3, &x1)?,
        },
        Certificate {
            name: "C21 = p3 div: V1 -> X2".into(),
            value: funcalc::op_norm(&c21, &v1, &x2)?,
        },
        Certificate {
            name: "C31 = p4 div: [D(A1)] -> V3".into(),
            value: funcalc::op_norm(&c31, &graph_a1, &v3)?,
        },
    ];

    let phase = PhaseSpace::new(
        GradedSpace::product("V1 x V2 x V3", &[&v1, &v2, &v3])?,
        GradedSpace::product("X1 x X2 x X3", &[&x1, &x2, &x3])?,
    )?;
    let mut blocks = BTreeMap::new();
    blocks.insert((0, 0), a1.matrix);
    blocks.insert((0, 1), b12);
    blocks.insert((0, 2), b13);
    blocks.insert((1, 0), c21);
    blocks.insert((1, 1), a2);
    blocks.insert((2, 0), c31);
    blocks.insert((2, 2), Mat::zeros(ns, ns));
    BlockSystem::assemble(
        blocks,
        vec![nf, ns, ns],
        vec![nf, ns, ns],
        phase,
        certificates,
    )
}

/// Coupled two-oscillator system `[[A1, gamma I], [gamma I, A2]]` with both
/// diagonal blocks the 1D Dirichlet Laplacian; symmetric for any `gamma`.
pub fn cs2_assemble(n: usize, gamma: f64) -> Result<BlockSystem> {
    let mesh = Mesh::interval(n)?;
    let lap = discrete::laplacian(&mesh, Bc::Dirichlet)?;
    let a = lap.matrix;
    let eye = Mat::identity(n, n) * gamma;
    let x = discrete::l2_space(&mesh);
    let (_, v) = funcalc::sqrt_neg_half(&a)?;
    assemble_full(&a, &eye, &eye, &a, &v, &v, &x, &x)
}
