//! Chain of coupled Duffing oscillators with symmetric pairwise coupling.

use super::{check_call, VectorField};
use crate::error::{ensure_finite, Result};

/// `N` coupled Duffing oscillators, state `(q_1..q_N, v_1..v_N)`:
///
/// dq_i/dt = v_i
/// dv_i/dt = -a_i q_i - b_i q_i^3 - sum_j e_ij (q_i - q_j)
///
/// Parameters are laid out as the views `a` (N), `b` (N), and `e`
/// (N(N-1)/2 upper-triangle couplings, stored once per unordered pair so the
/// symmetry e_ij = e_ji holds structurally).
pub struct Duffing {
    n: usize,
}

impl Duffing {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one oscillator");
        Self { n }
    }

    pub fn oscillators(&self) -> usize {
        self.n
    }

    /// Flat index of the coupling e_ij for `i < j`.
    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    fn coupling_count(&self) -> usize {
        self.n * (self.n - 1) / 2
    }
}

impl VectorField for Duffing {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn param_count(&self) -> usize {
        2 * self.n + self.coupling_count()
    }

    fn param_views(&self) -> Vec<(String, std::ops::Range<usize>)> {
        let n = self.n;
        vec![
            ("a".to_string(), 0..n),
            ("b".to_string(), n..2 * n),
            ("e".to_string(), 2 * n..2 * n + self.coupling_count()),
        ]
    }

    fn eval(&self, z: &[f64], _t: f64, theta: &[f64], out: &mut [f64]) -> Result<()> {
        check_call(self, z, theta, out.len(), 2 * self.n)?;
        let n = self.n;
        let (q, v) = z.split_at(n);
        let a = &theta[..n];
        let b = &theta[n..2 * n];
        let e = &theta[2 * n..];
        out[..n].copy_from_slice(v);
        for i in 0..n {
            out[n + i] = -a[i] * q[i] - b[i] * q[i] * q[i] * q[i];
        }
        for i in 0..n {
            for j in i + 1..n {
                let force = e[self.pair_index(i, j)] * (q[i] - q[j]);
                out[n + i] -= force;
                out[n + j] += force;
            }
        }
        ensure_finite("duffing eval", out)
    }

    fn vjp_state(
        &self,
        z: &[f64],
        _t: f64,
        theta: &[f64],
        w: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        check_call(self, z, theta, out.len(), 2 * self.n)?;
        let n = self.n;
        let q = &z[..n];
        let a = &theta[..n];
        let b = &theta[n..2 * n];
        let e = &theta[2 * n..];
        let wv = &w[n..];
        // (J^T w)_q = (dvdot/dq)^T w_v with the symmetric coupling stencil
        for i in 0..n {
            out[i] = (-a[i] - 3.0 * b[i] * q[i] * q[i]) * wv[i];
        }
        for i in 0..n {
            for j in i + 1..n {
                let eij = e[self.pair_index(i, j)];
                out[i] += eij * (wv[j] - wv[i]);
                out[j] += eij * (wv[i] - wv[j]);
            }
        }
        out[n..].copy_from_slice(&w[..n]);
        ensure_finite("duffing vjp_state", out)
    }

    fn vjp_params(
        &self,
        z: &[f64],
        _t: f64,
        theta: &[f64],
        w: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        check_call(self, z, theta, out.len(), self.param_count())?;
        let n = self.n;
        let q = &z[..n];
        let wv = &w[n..];
        for i in 0..n {
            out[i] = -q[i] * wv[i];
            out[n + i] = -q[i] * q[i] * q[i] * wv[i];
        }
        for i in 0..n {
            for j in i + 1..n {
                out[2 * n + self.pair_index(i, j)] = -(q[i] - q[j]) * (wv[i] - wv[j]);
            }
        }
        ensure_finite("duffing vjp_params", out)
    }
}
