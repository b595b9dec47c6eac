//! Finite-difference model operators on the unit interval and unit square.
//!
//! Scalar unknowns live on interior nodes `(i+1)h`, `h = 1/(n+1)`; vector
//! fields live on staggered faces so that `div = -grad^T` under the discrete
//! L^2 pairings and `div . grad` is exactly the Dirichlet stencil. Neumann
//! operators live on the extended grid (boundary nodes included) with
//! trapezoid L^2 weights, which makes them self-adjoint in the weighted inner
//! product; Robin operators stay on the interior grid with second-order
//! one-sided elimination of the boundary values.

use crate::error::{Error, Result};
use crate::linalg::{ColVec, Mat};
use crate::space::GradedSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshDim {
    One,
    Two,
}

/// Uniform mesh on the unit interval or square, `n` interior points per axis.
#[derive(Clone, Copy, Debug)]
pub struct Mesh {
    dimension: MeshDim,
    n: usize,
    h: f64,
}

impl Mesh {
    pub fn new(dimension: MeshDim, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("mesh needs n >= 2, got {n}")));
        }
        Ok(Mesh {
            dimension,
            n,
            h: 1.0 / (n + 1) as f64,
        })
    }

    pub fn interval(n: usize) -> Result<Self> {
        Mesh::new(MeshDim::One, n)
    }

    pub fn square(n: usize) -> Result<Self> {
        Mesh::new(MeshDim::Two, n)
    }

    pub fn dimension(&self) -> MeshDim {
        self.dimension
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of interior nodes.
    pub fn interior_count(&self) -> usize {
        match self.dimension {
            MeshDim::One => self.n,
            MeshDim::Two => self.n * self.n,
        }
    }

    /// Number of boundary nodes carried by traces (corners excluded in 2D;
    /// the five-point stencil never references them).
    pub fn boundary_count(&self) -> usize {
        match self.dimension {
            MeshDim::One => 2,
            MeshDim::Two => 4 * self.n,
        }
    }

    /// Interior plus boundary nodes.
    pub fn full_count(&self) -> usize {
        self.interior_count() + self.boundary_count()
    }

    /// Number of staggered faces carrying vector components.
    pub fn face_count(&self) -> usize {
        match self.dimension {
            MeshDim::One => self.n + 1,
            MeshDim::Two => 2 * self.n * (self.n + 1),
        }
    }

    fn cell(&self) -> f64 {
        match self.dimension {
            MeshDim::One => self.h,
            MeshDim::Two => self.h * self.h,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bc {
    Dirichlet,
    Neumann,
    Robin(f64),
    Hinged,
    None,
}

/// Default Robin parameter when a configuration does not specify one.
pub const DEFAULT_ROBIN_ALPHA: f64 = 1.0;

/// A matrix together with the weighted spaces it maps between.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub matrix: Mat,
    pub domain_space: GradedSpace,
    pub codomain_space: GradedSpace,
    pub bc: Bc,
}

// ---------------------------------------------------------------- spaces

/// Discrete L^2 on interior nodes: weight `h^d I`.
pub fn l2_space(mesh: &Mesh) -> GradedSpace {
    GradedSpace::scaled("L2", mesh.interior_count(), mesh.cell()).expect("positive cell weight")
}

/// Discrete H^1 on interior nodes: `||u||_L2^2 + ||grad u||_L2^2`.
pub fn h1_space(mesh: &Mesh) -> Result<GradedSpace> {
    let g = grad_matrix(mesh);
    let n = mesh.interior_count();
    let w = (Mat::identity(n, n) + g.transpose() * &g) * mesh.cell();
    GradedSpace::new("H1", w)
}

/// Discrete L^2 on staggered faces.
pub fn face_l2_space(mesh: &Mesh) -> GradedSpace {
    GradedSpace::scaled("L2 faces", mesh.face_count(), mesh.cell()).expect("positive cell weight")
}

/// Discrete H^1 on staggered faces (componentwise zero-padded gradients).
pub fn face_h1_space(mesh: &Mesh) -> Result<GradedSpace> {
    let s = face_stiffness(mesh);
    let n = mesh.face_count();
    GradedSpace::new("H1 faces", (Mat::identity(n, n) + s / (mesh.h * mesh.h)) * mesh.cell())
}

/// Trapezoid-weighted L^2 over interior plus boundary nodes.
pub fn full_grid_space(mesh: &Mesh) -> GradedSpace {
    let n_int = mesh.interior_count();
    let n_bnd = mesh.boundary_count();
    let cell = mesh.cell();
    let mut w = ColVec::from_element(n_int + n_bnd, cell);
    for k in 0..n_bnd {
        w[n_int + k] = cell / 2.0;
    }
    GradedSpace::new("L2 closure", Mat::from_diagonal(&w)).expect("positive trapezoid weight")
}

/// Boundary space: counting measure in 1D, `h`-weighted in 2D.
pub fn boundary_space(mesh: &Mesh) -> GradedSpace {
    match mesh.dimension {
        MeshDim::One => GradedSpace::euclidean("dX", 2),
        MeshDim::Two => {
            GradedSpace::scaled("dX", mesh.boundary_count(), mesh.h).expect("positive weight")
        }
    }
}

/// Discrete H^1 on the boundary: counting in 1D (the boundary is two points),
/// periodic first differences along the boundary loop in 2D.
pub fn boundary_h1_space(mesh: &Mesh) -> Result<GradedSpace> {
    match mesh.dimension {
        MeshDim::One => Ok(GradedSpace::euclidean("dY", 2)),
        MeshDim::Two => {
            let b = boundary_beltrami(mesh)?;
            let nb = mesh.boundary_count();
            GradedSpace::new("dY", (Mat::identity(nb, nb) - b) * mesh.h)
        }
    }
}

// ------------------------------------------------------------- stencils

/// Zero-padded second-difference matrix on a 1D chain of `n` points.
fn chain_dirichlet(n: usize, h: f64) -> Mat {
    let mut m = Mat::zeros(n, n);
    let s = 1.0 / (h * h);
    for i in 0..n {
        m[(i, i)] = -2.0 * s;
        if i > 0 {
            m[(i, i - 1)] = s;
        }
        if i + 1 < n {
            m[(i, i + 1)] = s;
        }
    }
    m
}

/// Neumann second difference on the extended chain of `n + 2` nodes
/// (mirror ghosts, self-adjoint under the trapezoid weight).
fn chain_neumann(n: usize, h: f64) -> Mat {
    let m = n + 2;
    let s = 1.0 / (h * h);
    let mut a = Mat::zeros(m, m);
    for i in 0..m {
        if i == 0 {
            a[(0, 0)] = -2.0 * s;
            a[(0, 1)] = 2.0 * s;
        } else if i == m - 1 {
            a[(m - 1, m - 1)] = -2.0 * s;
            a[(m - 1, m - 2)] = 2.0 * s;
        } else {
            a[(i, i)] = -2.0 * s;
            a[(i, i - 1)] = s;
            a[(i, i + 1)] = s;
        }
    }
    a
}

/// Robin second difference on interior nodes, boundary values eliminated by
/// the second-order one-sided condition `du/dnu + alpha u = 0`.
fn chain_robin(n: usize, h: f64, alpha: f64) -> Mat {
    let mut a = chain_dirichlet(n, h);
    let s = 1.0 / (h * h);
    // u_b = (4 u_1 - u_2) / (3 + 2 alpha h) at either end.
    let den = 3.0 + 2.0 * alpha * h;
    a[(0, 0)] += 4.0 * s / den;
    a[(0, 1)] -= s / den;
    a[(n - 1, n - 1)] += 4.0 * s / den;
    a[(n - 1, n - 2)] -= s / den;
    a
}

fn kron_sum(a: &Mat, b: &Mat) -> Mat {
    // A (x) I + I (x) B on the grid ordered x-fastest.
    let na = a.nrows();
    let nb = b.nrows();
    let mut m = Mat::zeros(na * nb, na * nb);
    for j in 0..nb {
        for i in 0..na {
            let row = i + na * j;
            for k in 0..na {
                m[(row, k + na * j)] += a[(i, k)];
            }
            for k in 0..nb {
                m[(row, i + na * k)] += b[(j, k)];
            }
        }
    }
    m
}

/// Five-point (three-point in 1D) zero-padded Laplacian on an `nx * ny`
/// lattice, `x` fastest.
pub fn lattice_dirichlet(nx: usize, ny: usize, h: f64) -> Mat {
    if ny == 1 {
        chain_dirichlet(nx, h)
    } else {
        kron_sum(&chain_dirichlet(nx, h), &chain_dirichlet(ny, h))
    }
}

/// Zero-padded lattice stiffness `sum_axis D^T D`, i.e. `-lattice_dirichlet`
/// scaled by `h^2` (kept separate for the H^1 weights).
fn lattice_stiffness(nx: usize, ny: usize) -> Mat {
    -lattice_dirichlet(nx, ny, 1.0)
}

fn face_stiffness(mesh: &Mesh) -> Mat {
    match mesh.dimension {
        MeshDim::One => lattice_stiffness(mesh.n + 1, 1),
        MeshDim::Two => {
            let n = mesh.n;
            let sx = lattice_stiffness(n + 1, n);
            let sy = lattice_stiffness(n, n + 1);
            let nfx = (n + 1) * n;
            let nfy = n * (n + 1);
            let mut s = Mat::zeros(nfx + nfy, nfx + nfy);
            s.view_mut((0, 0), (nfx, nfx)).copy_from(&sx);
            s.view_mut((nfx, nfx), (nfy, nfy)).copy_from(&sy);
            s
        }
    }
}

/// Staggered gradient matrix (interior scalars, zero Dirichlet padding).
fn grad_matrix(mesh: &Mesh) -> Mat {
    let h = mesh.h;
    match mesh.dimension {
        MeshDim::One => {
            let n = mesh.n;
            let mut g = Mat::zeros(n + 1, n);
            for k in 0..=n {
                if k < n {
                    g[(k, k)] = 1.0 / h;
                }
                if k > 0 {
                    g[(k, k - 1)] = -1.0 / h;
                }
            }
            g
        }
        MeshDim::Two => {
            let n = mesh.n;
            let nfx = (n + 1) * n;
            let nfy = n * (n + 1);
            let mut g = Mat::zeros(nfx + nfy, n * n);
            let node = |i: usize, j: usize| i + n * j;
            for j in 0..n {
                for k in 0..=n {
                    let row = k + (n + 1) * j;
                    if k < n {
                        g[(row, node(k, j))] = 1.0 / h;
                    }
                    if k > 0 {
                        g[(row, node(k - 1, j))] = -1.0 / h;
                    }
                }
            }
            for k in 0..=n {
                for i in 0..n {
                    let row = nfx + i + n * k;
                    if k < n {
                        g[(row, node(i, k))] = 1.0 / h;
                    }
                    if k > 0 {
                        g[(row, node(i, k - 1))] = -1.0 / h;
                    }
                }
            }
            g
        }
    }
}

// ------------------------------------------------------------ operators

/// Second-order Laplacian with the requested boundary condition.
pub fn laplacian(mesh: &Mesh, bc: Bc) -> Result<DiscreteOperator> {
    match bc {
        Bc::Dirichlet => {
            let m = match mesh.dimension {
                MeshDim::One => chain_dirichlet(mesh.n, mesh.h),
                MeshDim::Two => lattice_dirichlet(mesh.n, mesh.n, mesh.h),
            };
            Ok(DiscreteOperator {
                matrix: m,
                domain_space: l2_space(mesh),
                codomain_space: l2_space(mesh),
                bc,
            })
        }
        Bc::Neumann => {
            let c = chain_neumann(mesh.n, mesh.h);
            let m = match mesh.dimension {
                MeshDim::One => c,
                MeshDim::Two => kron_sum(&c.clone(), &c),
            };
            let dim = m.nrows();
            let w1 = trapezoid_weights(mesh.n + 2, mesh.h);
            let w = match mesh.dimension {
                MeshDim::One => w1.clone(),
                MeshDim::Two => {
                    ColVec::from_fn(dim, |k, _| w1[k % (mesh.n + 2)] * w1[k / (mesh.n + 2)])
                }
            };
            let space = GradedSpace::new("L2 trapezoid", Mat::from_diagonal(&w))?;
            Ok(DiscreteOperator {
                matrix: m,
                domain_space: space.clone(),
                codomain_space: space,
                bc,
            })
        }
        Bc::Robin(alpha) => {
            if alpha < 0.0 {
                return Err(Error::Domain(format!("Robin parameter must be >= 0, got {alpha}")));
            }
            let c = chain_robin(mesh.n, mesh.h, alpha);
            let m = match mesh.dimension {
                MeshDim::One => c,
                MeshDim::Two => kron_sum(&c.clone(), &c),
            };
            Ok(DiscreteOperator {
                matrix: m,
                domain_space: l2_space(mesh),
                codomain_space: l2_space(mesh),
                bc,
            })
        }
        Bc::Hinged | Bc::None => Err(Error::Domain(format!("laplacian: unsupported bc {bc:?}"))),
    }
}

fn trapezoid_weights(m: usize, h: f64) -> ColVec {
    let mut w = ColVec::from_element(m, h);
    w[0] = h / 2.0;
    w[m - 1] = h / 2.0;
    w
}

/// Staggered `(grad, div)` with `div = -grad^T` and `div . grad` equal to the
/// Dirichlet stencil, both exactly.
pub fn grad_div(mesh: &Mesh) -> Result<(DiscreteOperator, DiscreteOperator)> {
    let g = grad_matrix(mesh);
    let d = -g.transpose();
    let grad = DiscreteOperator {
        matrix: g,
        domain_space: h1_space(mesh)?,
        codomain_space: face_l2_space(mesh),
        bc: Bc::Dirichlet,
    };
    let div = DiscreteOperator {
        matrix: d,
        domain_space: face_h1_space(mesh)?,
        codomain_space: l2_space(mesh),
        bc: Bc::None,
    };
    Ok((grad, div))
}

/// The elastic block `mu1 Delta + mu2 grad . div` on staggered vector fields,
/// assembled from the quadratic form
/// `a(f,f) = mu1 ||componentwise grad f||^2 + mu2 ||div f||^2`.
pub fn lame_operator(mesh: &Mesh, mu1: f64, mu2: f64) -> Result<DiscreteOperator> {
    if mesh.dimension != MeshDim::Two {
        return Err(Error::Domain("lame_operator needs a 2D mesh".into()));
    }
    if mu1 < 0.0 || mu2 < 0.0 || (mu1 == 0.0 && mu2 == 0.0) {
        return Err(Error::Domain(format!(
            "need mu1, mu2 >= 0, not both zero; got ({mu1}, {mu2})"
        )));
    }
    let h2 = mesh.h * mesh.h;
    let stiff = face_stiffness(mesh) / h2;
    let g = grad_matrix(mesh);
    let div = -g.transpose();
    let m = -(stiff * mu1) - div.transpose() * div * mu2;
    Ok(DiscreteOperator {
        matrix: m,
        domain_space: face_l2_space(mesh),
        codomain_space: face_l2_space(mesh),
        bc: Bc::Dirichlet,
    })
}

/// `-(Dirichlet Laplacian)^2`: the hinged plate operator, boundary values
/// `u = Delta u = 0`.
pub fn bilaplacian_hinged(mesh: &Mesh) -> Result<DiscreteOperator> {
    let lap = laplacian(mesh, Bc::Dirichlet)?;
    let m = -(&lap.matrix * &lap.matrix);
    Ok(DiscreteOperator {
        matrix: m,
        domain_space: lap.domain_space.clone(),
        codomain_space: lap.codomain_space,
        bc: Bc::Hinged,
    })
}

// ------------------------------------------------------------ full grid

/// Index maps on the extended grid: interior nodes first, then boundary nodes
/// (1D: left, right; 2D: bottom, top, left, right edges, no corners).
pub fn interior_selector(mesh: &Mesh) -> Mat {
    let n_int = mesh.interior_count();
    let mut e = Mat::zeros(n_int, mesh.full_count());
    for i in 0..n_int {
        e[(i, i)] = 1.0;
    }
    e
}

/// Rows of the second-difference stencil at interior nodes of the extended
/// grid: the maximal operator (no boundary condition imposed).
pub fn maximal_laplacian(mesh: &Mesh) -> Mat {
    let s = 1.0 / (mesh.h * mesh.h);
    match mesh.dimension {
        MeshDim::One => {
            let n = mesh.n;
            // full ordering: interior 0..n, then boundary n (left), n+1 (right)
            let mut a = Mat::zeros(n, n + 2);
            for i in 0..n {
                a[(i, i)] = -2.0 * s;
                if i > 0 {
                    a[(i, i - 1)] = s;
                } else {
                    a[(0, n)] = s;
                }
                if i + 1 < n {
                    a[(i, i + 1)] = s;
                } else {
                    a[(n - 1, n + 1)] = s;
                }
            }
            a
        }
        MeshDim::Two => {
            let n = mesh.n;
            let n_int = n * n;
            let node = |i: usize, j: usize| i + n * j;
            let bottom = |i: usize| n_int + i;
            let top = |i: usize| n_int + n + i;
            let left = |j: usize| n_int + 2 * n + j;
            let right = |j: usize| n_int + 3 * n + j;
            let mut a = Mat::zeros(n_int, mesh.full_count());
            for j in 0..n {
                for i in 0..n {
                    let r = node(i, j);
                    a[(r, r)] = -4.0 * s;
                    if i > 0 {
                        a[(r, node(i - 1, j))] = s;
                    } else {
                        a[(r, left(j))] = s;
                    }
                    if i + 1 < n {
                        a[(r, node(i + 1, j))] = s;
                    } else {
                        a[(r, right(j))] = s;
                    }
                    if j > 0 {
                        a[(r, node(i, j - 1))] = s;
                    } else {
                        a[(r, bottom(i))] = s;
                    }
                    if j + 1 < n {
                        a[(r, node(i, j + 1))] = s;
                    } else {
                        a[(r, top(i))] = s;
                    }
                }
            }
            a
        }
    }
}

/// `(dirichlet_trace, neumann_trace)` on the extended grid. The Dirichlet
/// trace reads boundary values; the Neumann trace is the second-order
/// one-sided normal derivative.
pub fn traces(mesh: &Mesh) -> Result<(DiscreteOperator, DiscreteOperator)> {
    let n_int = mesh.interior_count();
    let n_bnd = mesh.boundary_count();
    let n_full = mesh.full_count();
    let h = mesh.h;

    let mut dir = Mat::zeros(n_bnd, n_full);
    for k in 0..n_bnd {
        dir[(k, n_int + k)] = 1.0;
    }

    let mut neu = Mat::zeros(n_bnd, n_full);
    match mesh.dimension {
        MeshDim::One => {
            let n = mesh.n;
            // d/dnu at 0: -u'(0) ~ (3 u_b - 4 u_1 + u_2) / (2h)
            neu[(0, n)] = 3.0 / (2.0 * h);
            neu[(0, 0)] = -4.0 / (2.0 * h);
            neu[(0, 1)] = 1.0 / (2.0 * h);
            // d/dnu at 1: u'(1) ~ (3 u_b - 4 u_n + u_{n-1}) / (2h)
            neu[(1, n + 1)] = 3.0 / (2.0 * h);
            neu[(1, n - 1)] = -4.0 / (2.0 * h);
            neu[(1, n - 2)] = 1.0 / (2.0 * h);
        }
        MeshDim::Two => {
            let n = mesh.n;
            let node = |i: usize, j: usize| i + n * j;
            let c = 1.0 / (2.0 * h);
            for i in 0..n {
                let kb = i; // bottom edge, inward is +y
                neu[(kb, n_int + kb)] = 3.0 * c;
                neu[(kb, node(i, 0))] = -4.0 * c;
                neu[(kb, node(i, 1))] = c;
                let kt = n + i; // top edge, inward is -y
                neu[(kt, n_int + kt)] = 3.0 * c;
                neu[(kt, node(i, n - 1))] = -4.0 * c;
                neu[(kt, node(i, n - 2))] = c;
            }
            for j in 0..n {
                let kl = 2 * n + j; // left edge, inward is +x
                neu[(kl, n_int + kl)] = 3.0 * c;
                neu[(kl, node(0, j))] = -4.0 * c;
                neu[(kl, node(1, j))] = c;
                let kr = 3 * n + j; // right edge, inward is -x
                neu[(kr, n_int + kr)] = 3.0 * c;
                neu[(kr, node(n - 1, j))] = -4.0 * c;
                neu[(kr, node(n - 2, j))] = c;
            }
        }
    }

    let dom = full_grid_space(mesh);
    let cod = boundary_space(mesh);
    Ok((
        DiscreteOperator {
            matrix: dir,
            domain_space: dom.clone(),
            codomain_space: cod.clone(),
            bc: Bc::Dirichlet,
        },
        DiscreteOperator {
            matrix: neu,
            domain_space: dom,
            codomain_space: cod,
            bc: Bc::Neumann,
        },
    ))
}

/// Periodic second difference along the boundary loop of the square
/// (bandwise reduction of the Laplace-Beltrami operator); boundary nodes are
/// taken in loop order bottom, right, top reversed, left reversed.
pub fn boundary_beltrami(mesh: &Mesh) -> Result<Mat> {
    if mesh.dimension != MeshDim::Two {
        return Err(Error::Domain("boundary_beltrami needs a 2D mesh".into()));
    }
    let n = mesh.n;
    let nb = 4 * n;
    let s = 1.0 / (mesh.h * mesh.h);
    // loop order -> storage order (bottom, top, left, right)
    let mut loop_idx = Vec::with_capacity(nb);
    loop_idx.extend(0..n); // bottom, left to right
    loop_idx.extend((0..n).map(|j| 3 * n + j)); // right, bottom to top
    loop_idx.extend((0..n).rev().map(|i| n + i)); // top, right to left
    loop_idx.extend((0..n).rev().map(|j| 2 * n + j)); // left, top to bottom
    let mut b = Mat::zeros(nb, nb);
    for k in 0..nb {
        let prev = loop_idx[(k + nb - 1) % nb];
        let cur = loop_idx[k];
        let next = loop_idx[(k + 1) % nb];
        b[(cur, cur)] += -2.0 * s;
        b[(cur, prev)] += s;
        b[(cur, next)] += s;
    }
    Ok(b)
}
