//! Second-order forward-mode automatic differentiation in seven variables.
//!
//! A [`Jet2`] carries the value, the Euclidean gradient and the Euclidean
//! Hessian of a scalar quantity with respect to the seven group coordinates
//! `(t1, x1, y1, z1, x, y, z)`. Arithmetic on jets is truncated Taylor
//! arithmetic: every operation propagates first and second derivatives
//! exactly by the chain rule, so no finite differencing is involved.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::real::Real;

/// Number of coordinates of the group.
pub const DIM: usize = 7;
/// Number of independent Hessian entries (upper triangle of a 7x7 matrix).
pub const HESS_LEN: usize = DIM * (DIM + 1) / 2;

/// Position of entry `(i, j)` in the packed upper triangle.
#[inline]
pub const fn hidx(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * DIM - a * (a + 1) / 2 + b
}

/// Value, gradient and (packed, exactly symmetric) Hessian of a scalar at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; DIM],
    pub hess: [f64; HESS_LEN],
}

impl Jet2 {
    pub const fn constant(value: f64) -> Self {
        Self {
            value,
            grad: [0.0; DIM],
            hess: [0.0; HESS_LEN],
        }
    }

    /// The coordinate function `x_k` evaluated at `value`.
    pub fn variable(k: usize, value: f64) -> Self {
        let mut j = Self::constant(value);
        j.grad[k] = 1.0;
        j
    }

    /// Seeds all seven coordinates at a point.
    pub fn seed(coords: &[f64; DIM]) -> [Jet2; DIM] {
        std::array::from_fn(|k| Jet2::variable(k, coords[k]))
    }

    #[inline]
    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.hess[hidx(i, j)]
    }

    /// Full 7x7 Hessian.
    pub fn hessian_matrix(&self) -> [[f64; DIM]; DIM] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.h(i, j)))
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|v| v.is_finite())
            && self.hess.iter().all(|v| v.is_finite())
    }

    /// Applies a univariate function given its value and first two derivatives at `self.value`.
    #[inline]
    pub fn chain(&self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = Jet2::constant(f);
        for i in 0..DIM {
            out.grad[i] = df * self.grad[i];
        }
        for i in 0..DIM {
            for j in i..DIM {
                let k = hidx(i, j);
                out.hess[k] = df * self.hess[k] + d2f * self.grad[i] * self.grad[j];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.value *= s;
        out.grad.iter_mut().for_each(|g| *g *= s);
        out.hess.iter_mut().for_each(|h| *h *= s);
        out
    }

    /// Jet of `outer ∘ map` where `outer_at_image` is the jet of the outer
    /// field at `map(p)` (derivatives with respect to the image coordinates) and
    /// `map` holds the jets of the seven image coordinates at `p`.
    pub fn compose(outer_at_image: &Jet2, map: &[Jet2; DIM]) -> Jet2 {
        let o = outer_at_image;
        let mut out = Jet2::constant(o.value);
        // gradient: sum_k o_k dm_k/dx_i
        for i in 0..DIM {
            let mut acc = 0.0;
            for (k, m) in map.iter().enumerate() {
                acc += o.grad[k] * m.grad[i];
            }
            out.grad[i] = acc;
        }
        // hessian: J^T H J + sum_k o_k Hess(m_k)
        let mut hj = [[0.0; DIM]; DIM]; // hj[k][j] = sum_l o_kl dm_l/dx_j
        for (k, row) in hj.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (l, m) in map.iter().enumerate() {
                    acc += o.h(k, l) * m.grad[j];
                }
                *slot = acc;
            }
        }
        for i in 0..DIM {
            for j in i..DIM {
                let mut acc = 0.0;
                for (k, m) in map.iter().enumerate() {
                    acc += m.grad[i] * hj[k][j] + o.grad[k] * m.hess[hidx(i, j)];
                }
                out.hess[hidx(i, j)] = acc;
            }
        }
        out
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    #[inline]
    fn add(mut self, rhs: Jet2) -> Jet2 {
        self.value += rhs.value;
        for i in 0..DIM {
            self.grad[i] += rhs.grad[i];
        }
        for k in 0..HESS_LEN {
            self.hess[k] += rhs.hess[k];
        }
        self
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    #[inline]
    fn sub(mut self, rhs: Jet2) -> Jet2 {
        self.value -= rhs.value;
        for i in 0..DIM {
            self.grad[i] -= rhs.grad[i];
        }
        for k in 0..HESS_LEN {
            self.hess[k] -= rhs.hess[k];
        }
        self
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, rhs: Jet2) -> Jet2 {
        let (a, b) = (&self, &rhs);
        let mut out = Jet2::constant(a.value * b.value);
        for i in 0..DIM {
            out.grad[i] = a.value * b.grad[i] + b.value * a.grad[i];
        }
        for i in 0..DIM {
            for j in i..DIM {
                let k = hidx(i, j);
                out.hess[k] = a.value * b.hess[k]
                    + b.value * a.hess[k]
                    + a.grad[i] * b.grad[j]
                    + a.grad[j] * b.grad[i];
            }
        }
        out
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    #[inline]
    fn div(self, rhs: Jet2) -> Jet2 {
        self * rhs.recip()
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    #[inline]
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn add(mut self, rhs: f64) -> Jet2 {
        self.value += rhs;
        self
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn sub(mut self, rhs: f64) -> Jet2 {
        self.value -= rhs;
        self
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, rhs: f64) -> Jet2 {
        self.scale(rhs)
    }
}

impl Div<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn div(self, rhs: f64) -> Jet2 {
        self.scale(1.0 / rhs)
    }
}

impl Real for Jet2 {
    fn cst(v: f64) -> Self {
        Jet2::constant(v)
    }
    fn re(&self) -> f64 {
        self.value
    }
    fn recip(self) -> Self {
        let v = self.value;
        let r = 1.0 / v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }
    fn powf(self, e: f64) -> Self {
        let v = self.value;
        let p = v.powf(e);
        self.chain(p, e * v.powf(e - 1.0), e * (e - 1.0) * v.powf(e - 2.0))
    }
    fn powi(self, n: i32) -> Self {
        let v = self.value;
        let nf = n as f64;
        self.chain(v.powi(n), nf * v.powi(n - 1), nf * (nf - 1.0) * v.powi(n - 2))
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }
    fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_index_is_a_bijection_onto_upper_triangle() {
        let mut seen = [false; HESS_LEN];
        for i in 0..DIM {
            for j in i..DIM {
                let k = hidx(i, j);
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(hidx(j, i), k);
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn square_of_coordinate() {
        let x = Jet2::seed(&[0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let f = x[0] * x[0];
        assert_eq!(f.value, 0.09);
        assert_eq!(f.grad[0], 0.6);
        assert_eq!(f.h(0, 0), 2.0);
        assert_eq!(f.h(0, 1), 0.0);
    }

    #[test]
    fn exp_at_origin_is_all_ones() {
        let x = Jet2::seed(&[0.0; DIM]);
        let f = x[0].exp();
        assert_eq!((f.value, f.grad[0], f.h(0, 0)), (1.0, 1.0, 1.0));
    }

    #[test]
    fn product_rule_mixed_entry() {
        let x = Jet2::seed(&[2.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let f = x[0] * x[1] * x[1];
        // f = a b^2: f_ab = 2b, f_bb = 2a
        assert_eq!(f.h(0, 1), 6.0);
        assert_eq!(f.h(1, 1), 4.0);
        assert_eq!(f.grad[1], 12.0);
    }

    #[test]
    fn recip_and_powf_agree() {
        let x = Jet2::seed(&[1.7, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let g = x[0] * x[0] + x[1] * 3.0 + 1.0;
        let a = g.recip();
        let b = g.powf(-1.0);
        for k in 0..HESS_LEN {
            assert!((a.hess[k] - b.hess[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn compose_with_identity_map_is_noop() {
        let p = [0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7];
        let x = Jet2::seed(&p);
        let f = (x[0] * x[4] + x[2].sin()) * x[6].exp();
        let g = Jet2::compose(&f, &x);
        assert_eq!(f, g);
    }
}
