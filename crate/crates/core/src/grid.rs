//! Vertex-centered finite-difference grids on an interval or a rectangle with
//! homogeneous Neumann boundary conditions.
//!
//! Nodes include the boundary, so an axis of length `L` with `n` nodes has
//! spacing `h = L / (n - 1)`. The Laplacian uses mirror ghost nodes, which
//! makes it annihilate constants and be self-adjoint with respect to the
//! trapezoid weights. All integrals use the same trapezoid rule, and the
//! discrete Dirichlet energy [`Grid::grad_sq_integral`] is exactly
//! `-∫ f Δf` under that rule.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{positive, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    lengths: [f64; 2],
    nodes: [usize; 2],
}

impl Grid {
    /// Interval `[0, length]` with `nodes` vertices.
    pub fn line(length: f64, nodes: usize) -> Result<Self> {
        positive("length", length)?;
        check_nodes(nodes)?;
        Ok(Self {
            dim: 1,
            lengths: [length, 1.0],
            nodes: [nodes, 1],
        })
    }

    /// Rectangle `[0, lx] × [0, ly]`; node `(i, j)` is stored at `i + nx * j`.
    pub fn rect(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        positive("lx", lx)?;
        positive("ly", ly)?;
        check_nodes(nx)?;
        check_nodes(ny)?;
        Ok(Self {
            dim: 2,
            lengths: [lx, ly],
            nodes: [nx, ny],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.nodes[0] * self.nodes[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self, axis: usize) -> usize {
        self.nodes[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / (self.nodes[axis] - 1) as f64
    }

    /// |Ω|.
    pub fn volume(&self) -> f64 {
        match self.dim {
            1 => self.lengths[0],
            _ => self.lengths[0] * self.lengths[1],
        }
    }

    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let i = idx % self.nodes[0];
        let x = i as f64 * self.spacing(0);
        if self.dim == 1 {
            (x, 0.0)
        } else {
            let j = idx / self.nodes[0];
            (x, j as f64 * self.spacing(1))
        }
    }

    fn axis_weight(&self, axis: usize, i: usize) -> f64 {
        let h = self.spacing(axis);
        if i == 0 || i + 1 == self.nodes[axis] {
            0.5 * h
        } else {
            h
        }
    }

    /// Trapezoid weight of node `idx`; the weights sum to |Ω|.
    pub fn weight(&self, idx: usize) -> f64 {
        let wx = self.axis_weight(0, idx % self.nodes[0]);
        if self.dim == 1 {
            wx
        } else {
            wx * self.axis_weight(1, idx / self.nodes[0])
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    pub fn check(&self, f: &Field) -> Result<()> {
        if f.len() == self.len() {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected: self.len(),
                found: f.len(),
            })
        }
    }

    /// Discrete Neumann Laplacian of `f`.
    pub fn apply_laplacian(&self, f: &Field) -> Result<Field> {
        self.check(f)?;
        let mut out = vec![0.0; self.len()];
        self.laplacian_into(f.values(), &mut out);
        Ok(Field(out))
    }

    /// Unchecked kernel of [`Grid::apply_laplacian`]; slices must have
    /// `self.len()` entries.
    pub fn laplacian_into(&self, f: &[f64], out: &mut [f64]) {
        let nx = self.nodes[0];
        let ny = self.nodes[1];
        let inv_hx2 = 1.0 / (self.spacing(0) * self.spacing(0));
        for j in 0..ny {
            let row = &f[j * nx..(j + 1) * nx];
            for i in 0..nx {
                let left = if i == 0 { row[1] } else { row[i - 1] };
                let right = if i + 1 == nx { row[nx - 2] } else { row[i + 1] };
                out[j * nx + i] = (left - 2.0 * row[i] + right) * inv_hx2;
            }
        }
        if self.dim == 2 {
            let inv_hy2 = 1.0 / (self.spacing(1) * self.spacing(1));
            for j in 0..ny {
                let down = if j == 0 { 1 } else { j - 1 };
                let up = if j + 1 == ny { ny - 2 } else { j + 1 };
                for i in 0..nx {
                    let c = f[j * nx + i];
                    out[j * nx + i] += (f[down * nx + i] - 2.0 * c + f[up * nx + i]) * inv_hy2;
                }
            }
        }
    }

    /// `j`-th eigenvalue (1-based, ascending, with multiplicity) of the
    /// continuum Neumann operator `-Δ` on the interval or rectangle.
    pub fn neumann_eigenvalue(&self, j: usize) -> f64 {
        assert!(j >= 1, "eigenvalue index is 1-based");
        let wx = PI / self.lengths[0];
        if self.dim == 1 {
            let p = (j - 1) as f64 * wx;
            return p * p;
        }
        let wy = PI / self.lengths[1];
        let sq = |x: f64| x * x;
        sorted_pick(j, |p| sq(p as f64 * wx), |q| sq(q as f64 * wy), j, j)
    }

    /// `j`-th eigenvalue (1-based, ascending) of the discrete operator `-Δʰ`.
    ///
    /// Per axis the spectrum is `(2/h²)(1 − cos(kπ/(n−1)))`, `k = 0..n−1`; in
    /// 2D the eigenvalues are all pairwise sums.
    pub fn discrete_eigenvalue(&self, j: usize) -> f64 {
        assert!(j >= 1 && j <= self.len(), "eigenvalue index out of range");
        let axis = |axis: usize, k: usize| {
            let h = self.spacing(axis);
            let n = self.nodes[axis];
            2.0 / (h * h) * (1.0 - libm::cos(k as f64 * PI / (n - 1) as f64))
        };
        if self.dim == 1 {
            return axis(0, j - 1);
        }
        let kx = self.nodes[0].min(j);
        let ky = self.nodes[1].min(j);
        sorted_pick(j, |p| axis(0, p), |q| axis(1, q), kx, ky)
    }

    /// ∫_Ω f by the trapezoid rule.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().enumerate().map(|(i, v)| self.weight(i) * v).sum()
    }

    /// Unnormalized inner product ∫_Ω f g.
    pub fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter()
            .zip(g)
            .enumerate()
            .map(|(i, (a, b))| self.weight(i) * a * b)
            .sum()
    }

    /// |Ω|-normalized inner product (1/|Ω|) ∫_Ω f g.
    pub fn inner(&self, f: &Field, g: &Field) -> f64 {
        self.dot(f.values(), g.values()) / self.volume()
    }

    pub fn mean(&self, f: &Field) -> f64 {
        self.integrate(f.values()) / self.volume()
    }

    /// `f − mean(f)`.
    pub fn deviation(&self, f: &Field) -> Field {
        let m = self.mean(f);
        Field(f.values().iter().map(|v| v - m).collect())
    }

    /// |Ω|-normalized L² norm.
    pub fn l2_norm(&self, f: &Field) -> f64 {
        libm::sqrt(self.dot(f.values(), f.values()) / self.volume())
    }

    pub fn linf_norm(&self, f: &Field) -> f64 {
        f.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// |Ω|-normalized ‖∇f‖₂ from forward differences.
    pub fn h1_seminorm(&self, f: &Field) -> f64 {
        libm::sqrt(self.grad_sq_integral(f.values()) / self.volume())
    }

    /// ∫_Ω |∇f|² with forward differences on every grid edge, weighted by the
    /// transverse trapezoid weights. Equals `-∫ f Δʰf` exactly.
    pub fn grad_sq_integral(&self, f: &[f64]) -> f64 {
        let nx = self.nodes[0];
        let ny = self.nodes[1];
        let hx = self.spacing(0);
        let mut acc = 0.0;
        for j in 0..ny {
            let wy = if self.dim == 2 {
                self.axis_weight(1, j)
            } else {
                1.0
            };
            let mut row = 0.0;
            for i in 0..nx - 1 {
                let d = f[j * nx + i + 1] - f[j * nx + i];
                row += d * d;
            }
            acc += wy * row / hx;
        }
        if self.dim == 2 {
            let hy = self.spacing(1);
            for i in 0..nx {
                let wx = self.axis_weight(0, i);
                let mut col = 0.0;
                for j in 0..ny - 1 {
                    let d = f[(j + 1) * nx + i] - f[j * nx + i];
                    col += d * d;
                }
                acc += wx * col / hy;
            }
        }
        acc
    }
}

fn check_nodes(n: usize) -> Result<()> {
    if n >= 3 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "nodes",
            value: n as f64,
            reason: "need at least 3 nodes per axis",
        })
    }
}

/// `j`-th smallest of `{ex(p) + ey(q) : p < px, q < py}`.
fn sorted_pick(
    j: usize,
    ex: impl Fn(usize) -> f64,
    ey: impl Fn(usize) -> f64,
    px: usize,
    py: usize,
) -> f64 {
    let mut all: Vec<f64> = Vec::with_capacity(px * py);
    for p in 0..px {
        for q in 0..py {
            all.push(ex(p) + ey(q));
        }
    }
    all.sort_by(|a, b| a.total_cmp(b));
    all[j - 1]
}

/// Nodal values on a [`Grid`]; one finite real per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "field" });
        }
        Ok(Self(values))
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self(vec![c; grid.len()])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self(
            (0..grid.len())
                .map(|i| {
                    let (x, y) = grid.coords(i);
                    f(x, y)
                })
                .collect(),
        )
    }

    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Pointwise `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Field {
        Field(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mirror_stencil_by_hand() {
        let g = Grid::line(2.0, 3).unwrap();
        let f = Field::new(&g, vec![0.0, 1.0, 0.0]).unwrap();
        let lap = g.apply_laplacian(&f).unwrap();
        assert_eq!(lap.values(), &[2.0, -2.0, 2.0]);
    }

    #[test]
    fn constants_are_annihilated() {
        for g in [
            Grid::line(3.7, 17).unwrap(),
            Grid::rect(1.0, 2.5, 9, 13).unwrap(),
        ] {
            let c = Field::constant(&g, 4.25);
            let lap = g.apply_laplacian(&c).unwrap();
            assert!(g.linf_norm(&lap) <= 1e-13 * 4.25);
            assert!((g.mean(&c) - 4.25).abs() <= 1e-15 * 4.25);
            assert_eq!(g.h1_seminorm(&c), 0.0);
            assert!(g.linf_norm(&g.deviation(&c)) < 1e-15);
        }
    }

    #[test]
    fn mismatch_is_rejected() {
        let g = Grid::line(1.0, 5).unwrap();
        let f = Field::constant(&Grid::line(1.0, 6).unwrap(), 1.0);
        assert_eq!(
            g.apply_laplacian(&f),
            Err(Error::GridMismatch {
                expected: 5,
                found: 6
            })
        );
        assert!(Field::new(&g, vec![0.0, 1.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        assert!(Grid::line(1.0, 2).is_err());
        assert!(Grid::line(0.0, 10).is_err());
        assert!(Grid::rect(1.0, -1.0, 4, 4).is_err());
    }

    #[test]
    fn continuum_eigenvalues() {
        let g = Grid::line(PI, 10).unwrap();
        assert_relative_eq!(g.neumann_eigenvalue(2), 1.0, max_relative = 1e-15);
        assert_eq!(Grid::line(1.0, 10).unwrap().neumann_eigenvalue(1), 0.0);
        let sq = Grid::rect(1.0, 1.0, 5, 5).unwrap();
        assert_relative_eq!(sq.neumann_eigenvalue(2), PI * PI, max_relative = 1e-15);
        assert_relative_eq!(sq.neumann_eigenvalue(3), PI * PI, max_relative = 1e-15);
        assert_relative_eq!(
            sq.neumann_eigenvalue(4),
            2.0 * PI * PI,
            max_relative = 1e-15
        );
        let r = Grid::rect(2.0, 1.0, 5, 5).unwrap();
        // (π/2)², then π² twice (p=2 and q=1)
        assert_relative_eq!(r.neumann_eigenvalue(2), PI * PI / 4.0, max_relative = 1e-15);
        assert_relative_eq!(r.neumann_eigenvalue(3), PI * PI, max_relative = 1e-15);
    }

    #[test]
    fn cosine_is_an_exact_discrete_eigenvector() {
        let g = Grid::line(1.3, 21).unwrap();
        let f = Field::from_fn(&g, |x, _| libm::cos(PI * x / 1.3));
        let lap = g.apply_laplacian(&f).unwrap();
        let mu = g.discrete_eigenvalue(2);
        for (l, v) in lap.values().iter().zip(f.values()) {
            assert!((l + mu * v).abs() < 1e-11);
        }
    }

    #[test]
    fn laplacian_of_cosine_converges_second_order() {
        let l = 2.0;
        let err = |n: usize| {
            let g = Grid::line(l, n).unwrap();
            let f = Field::from_fn(&g, |x, _| libm::cos(PI * x / l));
            let lap = g.apply_laplacian(&f).unwrap();
            let k2 = (PI / l) * (PI / l);
            lap.values()
                .iter()
                .zip(f.values())
                .map(|(a, v)| (a + k2 * v).abs())
                .fold(0.0, f64::max)
        };
        let e1 = err(33);
        let e2 = err(65);
        let order = libm::log2(e1 / e2);
        assert!((order - 2.0).abs() < 0.05, "order {order}");
    }

    #[test]
    fn mean_of_cosine_vanishes() {
        for n in [8, 33, 100] {
            let g = Grid::line(1.0, n).unwrap();
            let f = Field::from_fn(&g, |x, _| libm::cos(PI * x));
            assert!(g.mean(&f).abs() < 1e-14);
        }
    }

    #[test]
    fn dirichlet_energy_matches_summation_by_parts() {
        let g = Grid::rect(1.5, 0.7, 7, 5).unwrap();
        let f = Field::from_fn(&g, |x, y| libm::sin(3.0 * x + 1.0) * libm::exp(y) + x * y);
        let lap = g.apply_laplacian(&f).unwrap();
        let lhs = g.grad_sq_integral(f.values());
        let rhs = -g.dot(f.values(), lap.values());
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn weights_sum_to_volume() {
        let g = Grid::rect(1.5, 0.7, 7, 5).unwrap();
        assert_relative_eq!(g.weights().iter().sum::<f64>(), 1.05, max_relative = 1e-14);
    }
}
