//! Graph-shaped boundaries, the flattening shear map and the transformed
//! difference operators on the flattened grid.
//!
//! The map `x1 = y1 + M(y')`, `x' = y'` sends the half-space `y1 > 0` onto
//! the domain above the graph. Cartesian derivatives pull back through the
//! lower-triangular matrix `A(y')` whose first column is `(1, -grad M)`, so
//! `grad_x f = A grad_y f`. The Jacobian determinant is one, which keeps
//! volume integrals unchanged.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::PhysicalParams;

/// How the boundary graph `M(x')` is specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShapeKind {
    Flat,
    /// `amplitude * exp(-|x'|^2 / width^2)`, periodised over the cell.
    GaussianBump { amplitude: f64, width: f64 },
    /// `slope . x'`. Not periodic; only for pointwise geometry queries.
    Inclined { slope: [f64; 2] },
    /// Samples of `M` on the uniform periodic cell grid, `n2 * n3` values with
    /// `x2` fastest. Evaluated by trigonometric interpolation.
    Tabulated {
        n2: usize,
        n3: usize,
        samples: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
struct Fourier {
    n: [usize; 2],
    // coefficient (re, im) for wavenumber pair, row-major in (k3, k2)
    coef: Vec<(f64, f64)>,
    waves: [Vec<f64>; 2],
}

/// Boundary graph over a periodic tangential cell centred at the origin.
#[derive(Debug, Clone)]
pub struct BoundaryShape {
    pub dim: usize,
    pub kind: ShapeKind,
    /// Periodic cell lengths per tangential axis (second entry unused in 2-D).
    pub cell: [f64; 2],
    fourier: Option<Fourier>,
}

impl BoundaryShape {
    pub fn new(dim: usize, kind: ShapeKind, cell: [f64; 2]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Validation(format!("dimension must be 2 or 3, got {dim}")));
        }
        let ntan = dim - 1;
        if cell[..ntan].iter().any(|&c| !(c > 0.0)) {
            return Err(Error::Validation("tangential cell lengths must be positive".into()));
        }
        let fourier = match &kind {
            ShapeKind::GaussianBump { width, .. } if !(*width > 0.0) => {
                return Err(Error::Validation("bump width must be positive".into()));
            }
            ShapeKind::Tabulated { n2, n3, samples } => {
                let n3 = if dim == 2 { 1 } else { *n3 };
                if samples.len() != n2 * n3 || *n2 < 2 || (dim == 3 && n3 < 2) {
                    return Err(Error::Validation(format!(
                        "tabulated shape needs {} x {} samples, got {}",
                        n2,
                        n3,
                        samples.len()
                    )));
                }
                Some(Fourier::new(samples, [*n2, n3], cell))
            }
            _ => None,
        };
        Ok(Self {
            dim,
            kind,
            cell,
            fourier,
        })
    }

    pub fn flat(dim: usize, cell: [f64; 2]) -> Self {
        Self::new(dim, ShapeKind::Flat, cell).expect("flat shape is always valid")
    }

    pub fn gaussian(dim: usize, amplitude: f64, width: f64, cell: [f64; 2]) -> Result<Self> {
        Self::new(dim, ShapeKind::GaussianBump { amplitude, width }, cell)
    }

    pub fn is_flat(&self) -> bool {
        match &self.kind {
            ShapeKind::Flat => true,
            ShapeKind::GaussianBump { amplitude, .. } => *amplitude == 0.0,
            ShapeKind::Inclined { slope } => slope.iter().all(|&s| s == 0.0),
            ShapeKind::Tabulated { samples, .. } => samples.iter().all(|&s| s == 0.0),
        }
    }

    fn ntan(&self) -> usize {
        self.dim - 1
    }

    /// `(M, grad M, hess M)` at a tangential point.
    pub fn eval(&self, xp: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let nt = self.ntan();
        match &self.kind {
            ShapeKind::Flat => (0.0, [0.0; 2], [[0.0; 2]; 2]),
            ShapeKind::Inclined { slope } => {
                let mut g = [0.0; 2];
                let mut v = 0.0;
                for t in 0..nt {
                    g[t] = slope[t];
                    v += slope[t] * xp[t];
                }
                (v, g, [[0.0; 2]; 2])
            }
            ShapeKind::GaussianBump { amplitude, width } => {
                let w2 = width * width;
                let mut v = 0.0;
                let mut g = [0.0; 2];
                let mut hm = [[0.0; 2]; 2];
                let mut base = [0.0; 2];
                for t in 0..nt {
                    base[t] = wrap(xp[t], self.cell[t]);
                }
                let images: &[i32] = &[-1, 0, 1];
                let i3s: &[i32] = if nt == 2 { images } else { &[0] };
                for &k2 in images {
                    for &k3 in i3s {
                        let d = [
                            base[0] - k2 as f64 * self.cell[0],
                            if nt == 2 { base[1] - k3 as f64 * self.cell[1] } else { 0.0 },
                        ];
                        let r2 = d[0] * d[0] + d[1] * d[1];
                        let e = amplitude * (-r2 / w2).exp();
                        v += e;
                        for s in 0..nt {
                            g[s] += -2.0 * d[s] / w2 * e;
                            for t in 0..nt {
                                let delta = if s == t { 1.0 } else { 0.0 };
                                hm[s][t] += e * (4.0 * d[s] * d[t] / (w2 * w2) - 2.0 * delta / w2);
                            }
                        }
                    }
                }
                (v, g, hm)
            }
            ShapeKind::Tabulated { .. } => self.fourier.as_ref().unwrap().eval(xp, self.cell, nt),
        }
    }

    pub fn height(&self, xp: [f64; 2]) -> f64 {
        self.eval(xp).0
    }

    pub fn gradient(&self, xp: [f64; 2]) -> [f64; 2] {
        self.eval(xp).1
    }

    pub fn hessian(&self, xp: [f64; 2]) -> [[f64; 2]; 2] {
        self.eval(xp).2
    }
}

fn wrap(x: f64, period: f64) -> f64 {
    let half = 0.5 * period;
    (x + half).rem_euclid(period) - half
}

impl Fourier {
    fn new(samples: &[f64], n: [usize; 2], cell: [f64; 2]) -> Self {
        let [n2, n3] = n;
        let waves = [wavenumbers(n2), wavenumbers(n3)];
        let mut coef = vec![(0.0, 0.0); n2 * n3];
        let norm = (n2 * n3) as f64;
        for (q3, &k3) in waves[1].iter().enumerate() {
            for (q2, &k2) in waves[0].iter().enumerate() {
                let mut re = 0.0;
                let mut im = 0.0;
                for j3 in 0..n3 {
                    for j2 in 0..n2 {
                        let ph = -2.0 * std::f64::consts::PI
                            * (k2 * j2 as f64 / n2 as f64 + k3 * j3 as f64 / n3 as f64);
                        let s = samples[j2 + n2 * j3];
                        re += s * ph.cos();
                        im += s * ph.sin();
                    }
                }
                let mut scale = 1.0 / norm;
                // split Nyquist modes symmetrically so the interpolant is real
                if n2 % 2 == 0 && q2 == n2 / 2 {
                    scale *= 0.5;
                }
                if n3 % 2 == 0 && n3 > 1 && q3 == n3 / 2 {
                    scale *= 0.5;
                }
                coef[q2 + n2 * q3] = (re * scale, im * scale);
            }
        }
        let _ = cell;
        Self { n, coef, waves }
    }

    fn eval(&self, xp: [f64; 2], cell: [f64; 2], nt: usize) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let [n2, n3] = self.n;
        let tau = 2.0 * std::f64::consts::PI;
        let s = [
            (xp[0] + 0.5 * cell[0]) / cell[0],
            if nt == 2 { (xp[1] + 0.5 * cell[1]) / cell[1] } else { 0.0 },
        ];
        let mut v = 0.0;
        let mut g = [0.0; 2];
        let mut hm = [[0.0; 2]; 2];
        let mut add = |k2: f64, k3: f64, c: (f64, f64)| {
            let ph = tau * (k2 * s[0] + k3 * s[1]);
            let (sn, cs) = ph.sin_cos();
            // Re(c e^{i ph}) and derivative factors i*omega
            let re = c.0 * cs - c.1 * sn;
            let im = c.0 * sn + c.1 * cs;
            let w = [tau * k2 / cell[0], if nt == 2 { tau * k3 / cell[1] } else { 0.0 }];
            v += re;
            for a in 0..nt {
                g[a] += -w[a] * im;
                for b in 0..nt {
                    hm[a][b] += -w[a] * w[b] * re;
                }
            }
        };
        for (q3, &k3) in self.waves[1].iter().enumerate() {
            for (q2, &k2) in self.waves[0].iter().enumerate() {
                let c = self.coef[q2 + n2 * q3];
                add(k2, k3, c);
                let nyq2 = n2 % 2 == 0 && q2 == n2 / 2;
                let nyq3 = n3 % 2 == 0 && n3 > 1 && q3 == n3 / 2;
                if nyq2 {
                    add(-k2, k3, c);
                }
                if nyq3 {
                    add(k2, -k3, c);
                }
                if nyq2 && nyq3 {
                    add(-k2, -k3, c);
                }
            }
        }
        (v, g, hm)
    }
}

fn wavenumbers(n: usize) -> Vec<f64> {
    (0..n)
        .map(|q| if q <= n / 2 { q as f64 } else { q as f64 - n as f64 })
        .collect()
}

/// Unit outer normal `(-1, grad M) / sqrt(1 + |grad M|^2)`.
pub fn normal_from_gradient(grad: [f64; 2]) -> [f64; 3] {
    let s = (1.0 + grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
    [-1.0 / s, grad[0] / s, grad[1] / s]
}

pub fn normal_vector(shape: &BoundaryShape, xp: [f64; 2]) -> [f64; 3] {
    normal_from_gradient(shape.gradient(xp))
}

/// Flattened coordinates to physical ones: `x1 = y1 + M(y')`.
pub fn map_forward(shape: &BoundaryShape, y: [f64; 3]) -> Result<[f64; 3]> {
    if !(y[0] >= 0.0) {
        return Err(Error::OutsideDomain(format!("y1 = {} < 0", y[0])));
    }
    let m = shape.height([y[1], y[2]]);
    Ok([y[0] + m, y[1], y[2]])
}

/// Physical coordinates to flattened ones: `y1 = x1 - M(x')`.
pub fn map_inverse(shape: &BoundaryShape, x: [f64; 3]) -> Result<[f64; 3]> {
    let m = shape.height([x[1], x[2]]);
    if !(x[0] >= m) {
        return Err(Error::OutsideDomain(format!("x1 = {} below the boundary {}", x[0], m)));
    }
    Ok([x[0] - m, x[1], x[2]])
}

/// Grid index triple `(i1, i2, i3)`; `i3 = 0` in two dimensions.
pub type Ix = [usize; 3];

/// Uniform flattened grid: `y1 in [0, length]` with `n[0]` nodes including
/// both ends, periodic tangential axes with `n[1]` (and `n[2]`) nodes.
#[derive(Debug, Clone)]
pub struct MappedGrid {
    pub dim: usize,
    pub n: [usize; 3],
    pub h: [f64; 3],
    pub length: f64,
    pub origin: [f64; 2],
    pub shape: BoundaryShape,
    height: Vec<f64>,
    grad: Vec<[f64; 2]>,
    hess: Vec<[[f64; 2]; 2]>,
}

impl MappedGrid {
    pub fn new(shape: BoundaryShape, n_normal: usize, n_tangential: [usize; 2], length: f64) -> Result<Self> {
        let dim = shape.dim;
        let n = [n_normal, n_tangential[0], if dim == 3 { n_tangential[1] } else { 1 }];
        for (axis, &count) in n.iter().enumerate().take(dim) {
            if count < 4 {
                return Err(Error::ResolutionTooCoarse(format!(
                    "axis {axis} has {count} nodes, need at least 4"
                )));
            }
        }
        if !(length > 0.0) {
            return Err(Error::Validation("normal extent must be positive".into()));
        }
        let h = [
            length / (n_normal - 1) as f64,
            shape.cell[0] / n[1] as f64,
            if dim == 3 { shape.cell[1] / n[2] as f64 } else { 1.0 },
        ];
        let origin = [-0.5 * shape.cell[0], if dim == 3 { -0.5 * shape.cell[1] } else { 0.0 }];
        let mut grid = Self {
            dim,
            n,
            h,
            length,
            origin,
            shape,
            height: Vec::new(),
            grad: Vec::new(),
            hess: Vec::new(),
        };
        let nt = grid.n_tangential();
        let mut height = Vec::with_capacity(nt);
        let mut grad = Vec::with_capacity(nt);
        let mut hess = Vec::with_capacity(nt);
        for t in 0..nt {
            let (m, g, hm) = grid.shape.eval(grid.tangential_coord(t));
            height.push(m);
            grad.push(g);
            hess.push(hm);
        }
        grid.height = height;
        grid.grad = grad;
        grid.hess = hess;
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_tangential(&self) -> usize {
        self.n[1] * self.n[2]
    }

    #[inline]
    pub fn index(&self, i: Ix) -> usize {
        i[0] + self.n[0] * (i[1] + self.n[1] * i[2])
    }

    #[inline]
    pub fn ix(&self, idx: usize) -> Ix {
        let i1 = idx % self.n[0];
        let t = idx / self.n[0];
        [i1, t % self.n[1], t / self.n[1]]
    }

    #[inline]
    pub fn tangential_index(&self, i: Ix) -> usize {
        i[1] + self.n[1] * i[2]
    }

    pub fn tangential_coord(&self, t: usize) -> [f64; 2] {
        let i2 = t % self.n[1];
        let i3 = t / self.n[1];
        [
            self.origin[0] + i2 as f64 * self.h[1],
            if self.dim == 3 { self.origin[1] + i3 as f64 * self.h[2] } else { 0.0 },
        ]
    }

    pub fn y1(&self, i1: usize) -> f64 {
        i1 as f64 * self.h[0]
    }

    /// Flattened coordinates of a node.
    pub fn y(&self, i: Ix) -> [f64; 3] {
        let tp = self.tangential_coord(self.tangential_index(i));
        [self.y1(i[0]), tp[0], tp[1]]
    }

    /// Physical coordinates of a node.
    pub fn x(&self, i: Ix) -> [f64; 3] {
        let y = self.y(i);
        [y[0] + self.height[self.tangential_index(i)], y[1], y[2]]
    }

    pub fn height_at(&self, t: usize) -> f64 {
        self.height[t]
    }

    pub fn grad_m(&self, t: usize) -> [f64; 2] {
        self.grad[t]
    }

    pub fn hess_m(&self, t: usize) -> [[f64; 2]; 2] {
        self.hess[t]
    }

    /// Largest `|grad M|^2` over the tangential nodes.
    pub fn max_slope_sq(&self) -> f64 {
        self.grad
            .iter()
            .map(|g| g[0] * g[0] + g[1] * g[1])
            .fold(0.0, f64::max)
    }

    /// First column of `A`: `(1, -dM/dy2, -dM/dy3)`.
    #[inline]
    pub fn normal_column(&self, t: usize) -> [f64; 3] {
        let g = self.grad[t];
        [1.0, -g[0], -g[1]]
    }

    /// The matrix `A(y')` with `grad_x = A grad_y`.
    pub fn a_matrix(&self, t: usize) -> [[f64; 3]; 3] {
        let g = self.grad[t];
        [[1.0, 0.0, 0.0], [-g[0], 1.0, 0.0], [-g[1], 0.0, 1.0]]
    }

    /// Tangential cell measure (boundary area in 3-D, length in 2-D).
    pub fn cell_measure(&self) -> f64 {
        if self.dim == 3 {
            self.shape.cell[0] * self.shape.cell[1]
        } else {
            self.shape.cell[0]
        }
    }

    /// Quadrature weight of a node: trapezoid in `y1`, rectangle tangentially.
    /// The flattening map preserves volume so this is also the physical weight.
    #[inline]
    pub fn weight(&self, i: Ix) -> f64 {
        let mut w = self.h[0] * self.h[1];
        if self.dim == 3 {
            w *= self.h[2];
        }
        if i[0] == 0 || i[0] == self.n[0] - 1 {
            w *= 0.5;
        }
        w
    }

    pub fn boundary_weight(&self) -> f64 {
        if self.dim == 3 {
            self.h[1] * self.h[2]
        } else {
            self.h[1]
        }
    }

    /// Evaluates `f` at every node in parallel; output order is node order.
    pub fn map_nodes<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(Ix) -> f64 + Sync,
    {
        (0..self.len()).into_par_iter().map(|k| f(self.ix(k))).collect()
    }

    pub fn check_len(&self, f: &[f64], what: &str) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::GridMismatch(format!(
                "{what} has {} samples, grid has {}",
                f.len(),
                self.len()
            )));
        }
        Ok(())
    }

    #[inline]
    fn shifted(&self, i: Ix, axis: usize, delta: isize) -> usize {
        let mut j = i;
        if axis == 0 {
            j[0] = (i[0] as isize + delta) as usize;
        } else {
            let n = self.n[axis] as isize;
            j[axis] = (i[axis] as isize + delta).rem_euclid(n) as usize;
        }
        self.index(j)
    }

    #[inline]
    fn at(&self, f: &[f64], i: Ix, axis: usize, delta: isize) -> f64 {
        f[self.shifted(i, axis, delta)]
    }

    /// Second-order first derivative along a flattened axis; one-sided at the
    /// `y1` faces, periodic tangentially.
    #[inline]
    pub fn d1(&self, f: &[f64], i: Ix, axis: usize) -> f64 {
        let h = self.h[axis];
        if axis == 0 {
            let last = self.n[0] - 1;
            if i[0] == 0 {
                return (-3.0 * f[self.index(i)] + 4.0 * self.at(f, i, 0, 1) - self.at(f, i, 0, 2)) / (2.0 * h);
            }
            if i[0] == last {
                return (3.0 * f[self.index(i)] - 4.0 * self.at(f, i, 0, -1) + self.at(f, i, 0, -2)) / (2.0 * h);
            }
        }
        (self.at(f, i, axis, 1) - self.at(f, i, axis, -1)) / (2.0 * h)
    }

    /// Second-order second derivative `d^2 f / dy_a dy_b`.
    #[inline]
    pub fn d2(&self, f: &[f64], i: Ix, a: usize, b: usize) -> f64 {
        if a == b {
            let h2 = self.h[a] * self.h[a];
            let c = f[self.index(i)];
            if a == 0 {
                let last = self.n[0] - 1;
                if i[0] == 0 {
                    return (2.0 * c - 5.0 * self.at(f, i, 0, 1) + 4.0 * self.at(f, i, 0, 2)
                        - self.at(f, i, 0, 3))
                        / h2;
                }
                if i[0] == last {
                    return (2.0 * c - 5.0 * self.at(f, i, 0, -1) + 4.0 * self.at(f, i, 0, -2)
                        - self.at(f, i, 0, -3))
                        / h2;
                }
            }
            return (self.at(f, i, a, 1) - 2.0 * c + self.at(f, i, a, -1)) / h2;
        }
        let (a, b) = if b == 0 { (b, a) } else { (a, b) };
        // a may be the normal axis; b is tangential and periodic.
        let mut ip = i;
        let mut im = i;
        ip[b] = (i[b] + 1) % self.n[b];
        im[b] = (i[b] + self.n[b] - 1) % self.n[b];
        (self.d1(f, ip, a) - self.d1(f, im, a)) / (2.0 * self.h[b])
    }

    /// Upwind derivative for transport with coefficient `c` along `axis`.
    /// `order` 2 uses the three-point upwind stencil where it fits and falls
    /// back to the centred/one-sided second-order stencil near the `y1` faces.
    #[inline]
    pub fn d1_upwind(&self, f: &[f64], i: Ix, axis: usize, c: f64, order: u8) -> f64 {
        let h = self.h[axis];
        let fi = f[self.index(i)];
        let periodic = axis != 0;
        let last = self.n[0] - 1;
        if order == 1 {
            if c > 0.0 && (periodic || i[0] >= 1) {
                return (fi - self.at(f, i, axis, -1)) / h;
            }
            if c <= 0.0 && (periodic || i[0] < last) {
                return (self.at(f, i, axis, 1) - fi) / h;
            }
            return self.d1(f, i, axis);
        }
        if c > 0.0 && (periodic || i[0] >= 2) {
            return (3.0 * fi - 4.0 * self.at(f, i, axis, -1) + self.at(f, i, axis, -2)) / (2.0 * h);
        }
        if c <= 0.0 && (periodic || i[0] + 2 <= last) {
            return (-3.0 * fi + 4.0 * self.at(f, i, axis, 1) - self.at(f, i, axis, 2)) / (2.0 * h);
        }
        self.d1(f, i, axis)
    }

    /// Flattened-coordinate gradient `grad_y f`.
    #[inline]
    pub fn grad_y(&self, f: &[f64], i: Ix) -> [f64; 3] {
        let mut g = [0.0; 3];
        for (axis, gv) in g.iter_mut().enumerate().take(self.dim) {
            *gv = self.d1(f, i, axis);
        }
        g
    }

    #[inline]
    pub fn hess_y(&self, f: &[f64], i: Ix) -> [[f64; 3]; 3] {
        let mut hm = [[0.0; 3]; 3];
        for a in 0..self.dim {
            for b in a..self.dim {
                let v = self.d2(f, i, a, b);
                hm[a][b] = v;
                hm[b][a] = v;
            }
        }
        hm
    }

    /// Pulls a flattened gradient back to Cartesian components: `A g`.
    #[inline]
    pub fn to_cartesian(&self, t: usize, g: [f64; 3]) -> [f64; 3] {
        let gm = self.grad[t];
        let mut out = [g[0], 0.0, 0.0];
        for k in 1..self.dim {
            out[k] = g[k] - gm[k - 1] * g[0];
        }
        out
    }

    /// Transformed gradient `A grad_y f` at one node.
    #[inline]
    pub fn hat_grad_at(&self, f: &[f64], i: Ix) -> [f64; 3] {
        self.to_cartesian(self.tangential_index(i), self.grad_y(f, i))
    }

    /// Transformed Laplacian `sum_k (A grad_y)_k (A grad_y)_k f` at one node.
    pub fn hat_laplacian_at(&self, f: &[f64], i: Ix) -> f64 {
        let t = self.tangential_index(i);
        let g = self.grad_y(f, i);
        let hm = self.hess_y(f, i);
        self.second_order_combination(t, &hm, g, None)
    }

    /// Transformed `grad div` of a vector field at one node.
    pub fn hat_grad_div_at(&self, v: &[Vec<f64>], i: Ix) -> [f64; 3] {
        let t = self.tangential_index(i);
        let mut out = [0.0; 3];
        for (l, comp) in v.iter().enumerate().take(self.dim) {
            let g = self.grad_y(comp, i);
            let hm = self.hess_y(comp, i);
            for (k, o) in out.iter_mut().enumerate().take(self.dim) {
                *o += self.second_order_combination(t, &hm, g, Some((k, l)));
            }
        }
        out
    }

    /// With `D_k = sum_j A_kj d_j`, returns `sum_k D_k D_k f` when `pair` is
    /// `None` and `D_k D_l f` for `pair = Some((k, l))`, given the flattened
    /// gradient and Hessian of `f`.
    #[inline]
    fn second_order_combination(
        &self,
        t: usize,
        hm: &[[f64; 3]; 3],
        g: [f64; 3],
        pair: Option<(usize, usize)>,
    ) -> f64 {
        let a = self.a_matrix(t);
        let hmm = self.hess[t];
        // d_j A_{l,0} = -d_j d_l M for tangential j, l; zero otherwise.
        let da = |j: usize, l: usize| -> f64 {
            if j == 0 || l == 0 {
                0.0
            } else {
                -hmm[j - 1][l - 1]
            }
        };
        let d = self.dim;
        let term = |k: usize, l: usize| -> f64 {
            let mut s = 0.0;
            for j in 0..d {
                for m in 0..d {
                    s += a[k][j] * a[l][m] * hm[j][m];
                }
                s += a[k][j] * da(j, l) * g[0];
            }
            s
        };
        match pair {
            Some((k, l)) => term(k, l),
            None => (0..d).map(|k| term(k, k)).sum(),
        }
    }

    /// Transformed divergence at one node.
    #[inline]
    pub fn hat_div_at(&self, v: &[Vec<f64>], i: Ix) -> f64 {
        let t = self.tangential_index(i);
        let mut s = 0.0;
        for (k, comp) in v.iter().enumerate().take(self.dim) {
            let g = self.grad_y(comp, i);
            s += self.to_cartesian(t, g)[k];
        }
        s
    }
}

fn check_resolution(grid: &MappedGrid) -> Result<()> {
    for axis in 0..grid.dim {
        if grid.n[axis] < 4 {
            return Err(Error::ResolutionTooCoarse(format!("axis {axis} has {} nodes", grid.n[axis])));
        }
    }
    Ok(())
}

/// `grad f` in Cartesian components, one field per component.
pub fn hat_gradient(grid: &MappedGrid, f: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_resolution(grid)?;
    grid.check_len(f, "field")?;
    Ok((0..grid.dim)
        .map(|k| grid.map_nodes(|i| grid.hat_grad_at(f, i)[k]))
        .collect())
}

/// `div v` of a Cartesian-component vector field.
pub fn hat_divergence(grid: &MappedGrid, v: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_resolution(grid)?;
    check_vector(grid, v)?;
    Ok(grid.map_nodes(|i| grid.hat_div_at(v, i)))
}

/// Componentwise Laplacian of a vector field.
pub fn hat_laplacian(grid: &MappedGrid, v: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    check_resolution(grid)?;
    check_vector(grid, v)?;
    Ok(v.iter().map(|c| grid.map_nodes(|i| grid.hat_laplacian_at(c, i))).collect())
}

pub(crate) fn check_vector(grid: &MappedGrid, v: &[Vec<f64>]) -> Result<()> {
    if v.len() != grid.dim {
        return Err(Error::GridMismatch(format!(
            "vector field has {} components, grid dimension is {}",
            v.len(),
            grid.dim
        )));
    }
    for c in v {
        grid.check_len(c, "vector component")?;
    }
    Ok(())
}

/// Weights that remove the second normal derivative from the combined
/// continuity/momentum expression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CancellationCoeffs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a1_tilde: f64,
}

pub fn cancellation_coeffs_from_gradient(params: &PhysicalParams, grad: [f64; 2]) -> CancellationCoeffs {
    let g2 = grad[0] * grad[0] + grad[1] * grad[1];
    let mu1 = params.mu1;
    let mu12 = params.mu1 + params.mu2;
    let a1 = params.mu() / (mu1 * (1.0 + g2) + mu12);
    let factor = (params.mu() - mu12 * a1) / (mu1 * (1.0 + g2));
    let a2 = -grad[0] * factor;
    let a3 = -grad[1] * factor;
    CancellationCoeffs {
        a1,
        a2,
        a3,
        a1_tilde: a1 - a2 * grad[0] - a3 * grad[1],
    }
}

pub fn cancellation_coeffs(params: &PhysicalParams, shape: &BoundaryShape, xp: [f64; 2]) -> CancellationCoeffs {
    cancellation_coeffs_from_gradient(params, shape.gradient(xp))
}

/// Coefficients of `d^2/dy1^2 psi_j` (j = 1..3) in
/// `mu rho d1 div psi - mu1 rho sum_j A_j Lap psi_j - (mu1+mu2) rho sum_j A_j d_j div psi`
/// per unit density, assembled from the principal parts of the transformed
/// operators. Vanishes identically for the cancellation weights.
pub fn normal_second_derivative_coefficients_from_gradient(
    params: &PhysicalParams,
    grad: [f64; 2],
) -> [f64; 3] {
    let c = cancellation_coeffs_from_gradient(params, grad);
    let weights = [c.a1, c.a2, c.a3];
    // A_{k,0}: coefficient of d/dy1 in D_k.
    let col = [1.0, -grad[0], -grad[1]];
    let mu = params.mu();
    let mut out = [0.0; 3];
    for (j, o) in out.iter_mut().enumerate() {
        // d1 div psi: div psi = sum_k D_k psi_k, so d1 d1 coefficient on psi_j is col[j].
        let first = mu * col[j];
        // Lap psi_j = sum_k D_k D_k psi_j carries sum_k col[k]^2 on d1 d1.
        let lap: f64 = col.iter().map(|a| a * a).sum();
        let second = -params.mu1 * weights[j] * lap;
        // d_i div psi has a d1 d1 part only for i = normal direction.
        let third = -(params.mu1 + params.mu2) * weights[0] * col[j];
        *o = first + second + third;
    }
    out
}

pub fn normal_second_derivative_coefficients(
    params: &PhysicalParams,
    shape: &BoundaryShape,
    xp: [f64; 2],
) -> [f64; 3] {
    normal_second_derivative_coefficients_from_gradient(params, shape.gradient(xp))
}
