//! Two-oscillator field whose on-site and coupling forces are scalar networks.

use super::{check_call, Activation, MlpField, Params, VectorField};
use crate::error::{ensure_finite, Result};

/// Two coupled oscillators, state `(q1, q2, v1, v2)`, with every force term a
/// learnable scalar network `xi: R -> R`:
///
/// dv1/dt = -xi1(q1) - xi3(q1) - xi5(q1 - q2)
/// dv2/dt = -xi2(q2) - xi4(q2) - xi5(q2 - q1)
///
/// The shared coupling net `xi5` appears in both rows with mirrored argument,
/// so the field is equivariant under swapping the two oscillators whenever
/// xi1 = xi2 and xi3 = xi4. Parameters concatenate the five networks, views
/// `xi1..xi5`.
pub struct DuffingPotentialField {
    net: MlpField,
    per_net: usize,
}

impl DuffingPotentialField {
    /// Networks use the given hidden architecture, e.g. `&[1, 100, 100, 1]`.
    pub fn new(net_sizes: &[usize]) -> Self {
        assert_eq!(net_sizes.first(), Some(&1));
        assert_eq!(net_sizes.last(), Some(&1));
        let net = MlpField::new(net_sizes, Activation::Tanh);
        let per_net = net.param_count();
        Self { net, per_net }
    }

    /// The full-width architecture used by the identification experiment.
    pub fn paper_sized() -> Self {
        Self::new(&[1, 100, 100, 1])
    }

    /// Seeded initialization of all five networks.
    pub fn random_params(&self, seed: u64) -> Params {
        let mut values = Vec::with_capacity(self.param_count());
        for i in 0..5 {
            values.extend_from_slice(self.net.random_params(seed.wrapping_add(i)).values());
        }
        Params::new(values, self.param_views()).expect("net views tile the weight vector")
    }

    fn net_theta<'a>(&self, theta: &'a [f64], i: usize) -> &'a [f64] {
        &theta[i * self.per_net..(i + 1) * self.per_net]
    }

    /// Scalar network output.
    fn xi(&self, theta: &[f64], i: usize, x: f64) -> Result<f64> {
        let mut out = [0.0];
        self.net.eval(&[x], 0.0, self.net_theta(theta, i), &mut out)?;
        Ok(out[0])
    }

    /// Scalar network derivative d xi / dx.
    fn xi_prime(&self, theta: &[f64], i: usize, x: f64) -> Result<f64> {
        let mut out = [0.0];
        self.net
            .vjp_state(&[x], 0.0, self.net_theta(theta, i), &[1.0], &mut out)?;
        Ok(out[0])
    }
}

impl VectorField for DuffingPotentialField {
    fn dim(&self) -> usize {
        4
    }

    fn param_count(&self) -> usize {
        5 * self.per_net
    }

    fn param_views(&self) -> Vec<(String, std::ops::Range<usize>)> {
        (0..5)
            .map(|i| {
                (
                    format!("xi{}", i + 1),
                    i * self.per_net..(i + 1) * self.per_net,
                )
            })
            .collect()
    }

    fn eval(&self, z: &[f64], _t: f64, theta: &[f64], out: &mut [f64]) -> Result<()> {
        check_call(self, z, theta, out.len(), 4)?;
        let (q1, q2) = (z[0], z[1]);
        out[0] = z[2];
        out[1] = z[3];
        out[2] = -self.xi(theta, 0, q1)? - self.xi(theta, 2, q1)? - self.xi(theta, 4, q1 - q2)?;
        out[3] = -self.xi(theta, 1, q2)? - self.xi(theta, 3, q2)? - self.xi(theta, 4, q2 - q1)?;
        ensure_finite("potential-field eval", out)
    }

    fn vjp_state(
        &self,
        z: &[f64],
        _t: f64,
        theta: &[f64],
        w: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        check_call(self, z, theta, out.len(), 4)?;
        let (q1, q2) = (z[0], z[1]);
        let (wv1, wv2) = (w[2], w[3]);
        let d11 = -self.xi_prime(theta, 0, q1)? - self.xi_prime(theta, 2, q1)?;
        let c12 = self.xi_prime(theta, 4, q1 - q2)?;
        let d22 = -self.xi_prime(theta, 1, q2)? - self.xi_prime(theta, 3, q2)?;
        let c21 = self.xi_prime(theta, 4, q2 - q1)?;
        out[0] = (d11 - c12) * wv1 + c21 * wv2;
        out[1] = c12 * wv1 + (d22 - c21) * wv2;
        out[2] = w[0];
        out[3] = w[1];
        ensure_finite("potential-field vjp_state", out)
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
        let (q1, q2) = (z[0], z[1]);
        let (wv1, wv2) = (w[2], w[3]);
        let m = self.per_net;
        // on-site nets: each appears in exactly one row
        for (i, (x, wv)) in [(q1, wv1), (q2, wv2), (q1, wv1), (q2, wv2)]
            .into_iter()
            .enumerate()
        {
            self.net.vjp_params(
                &[x],
                0.0,
                self.net_theta(theta, i),
                &[-wv],
                &mut out[i * m..(i + 1) * m],
            )?;
        }
        // shared coupling net: both rows contribute
        let dst = &mut out[4 * m..5 * m];
        self.net
            .vjp_params(&[q1 - q2], 0.0, self.net_theta(theta, 4), &[-wv1], dst)?;
        let mut second = vec![0.0; m];
        self.net
            .vjp_params(&[q2 - q1], 0.0, self.net_theta(theta, 4), &[-wv2], &mut second)?;
        crate::vecops::axpy(1.0, &second, dst);
        ensure_finite("potential-field vjp_params", out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::field_test_util::check_vjps_against_fd;

    fn small() -> DuffingPotentialField {
        DuffingPotentialField::new(&[1, 6, 6, 1])
    }

    #[test]
    fn zero_networks_freeze_velocities() {
        let f = small();
        let theta = f.zero_params();
        let mut out = [0.0; 4];
        f.eval(&[0.3, -0.2, 0.5, 0.7], 0.0, theta.values(), &mut out).unwrap();
        assert_eq!(out, [0.5, 0.7, 0.0, 0.0]);
    }

    #[test]
    fn swap_equivariance_with_tied_networks() {
        let f = small();
        let m = f.per_net;
        let base = f.random_params(3);
        let mut theta = base.values().to_vec();
        // tie xi2 := xi1 and xi4 := xi3
        let xi1: Vec<f64> = theta[0..m].to_vec();
        theta[m..2 * m].copy_from_slice(&xi1);
        let xi3: Vec<f64> = theta[2 * m..3 * m].to_vec();
        theta[3 * m..4 * m].copy_from_slice(&xi3);

        let z = [0.4, -0.9, 0.2, 0.8];
        let swapped = [z[1], z[0], z[3], z[2]];
        let mut f1 = [0.0; 4];
        let mut f2 = [0.0; 4];
        f.eval(&z, 0.0, &theta, &mut f1).unwrap();
        f.eval(&swapped, 0.0, &theta, &mut f2).unwrap();
        for (a, b) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            assert!((f1[a] - f2[b]).abs() < 1e-14);
        }
    }

    #[test]
    fn full_width_parameter_count() {
        let f = DuffingPotentialField::paper_sized();
        assert_eq!(f.param_count(), 5 * (100 + 10_000 + 100));
        assert_eq!(f.param_views().len(), 5);
    }

    #[test]
    fn vjps_match_fd_probes() {
        let f = small();
        let theta = f.random_params(17);
        check_vjps_against_fd(
            &f,
            theta.values(),
            |rng| (0..4).map(|_| rand::Rng::gen_range(rng, -1.0..1.0)).collect(),
            53,
            100,
            1e-5,
        );
    }
}
