//! Method identifiers and composition coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integration method selector.
///
/// `Alf`, `Alf2`, and `Yoshida` are exactly reversible and drive the adjoint
/// machinery; `Rk45Reference` is the non-reversible comparison arm and is
/// only accepted by the reference driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Asynchronous leapfrog; one field evaluation per step.
    Alf,
    /// Two ALF half-steps; second order in both blocks.
    Alf2,
    /// Triple-jump composition of the given even order (>= 4).
    Yoshida(u32),
    /// Embedded Dormand-Prince 5(4) pair on the plain state.
    Rk45Reference,
}

impl Method {
    /// Validated Yoshida constructor: order must be even and at least 4.
    pub fn yoshida(order: u32) -> Result<Self> {
        if order >= 4 && order % 2 == 0 {
            Ok(Method::Yoshida(order))
        } else {
            Err(Error::Invalid(format!(
                "Yoshida order must be even and >= 4, got {order}"
            )))
        }
    }

    /// Convergence order used by the step-size controller.
    ///
    /// Bare ALF is controlled at order 2: its accepted steps are pairs of
    /// half-steps, and the even-step composition behaves second order.
    pub fn order(&self) -> u32 {
        match self {
            Method::Alf | Method::Alf2 => 2,
            Method::Yoshida(order) => *order,
            Method::Rk45Reference => 4,
        }
    }

    /// Whether the method's inverse is the method itself with `-h`.
    pub fn reversible(&self) -> bool {
        !matches!(self, Method::Rk45Reference)
    }

    /// Field evaluations of one step: 1, 2, then 2 * 3^(order/2 - 1).
    pub fn evals_per_step(&self) -> u64 {
        match self {
            Method::Alf => 1,
            Method::Alf2 => 2,
            Method::Yoshida(order) => 2 * 3u64.pow(order / 2 - 1),
            Method::Rk45Reference => 6,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Method::Alf => "alf".to_string(),
            Method::Alf2 => "alf2".to_string(),
            Method::Yoshida(order) => format!("yoshida{order}"),
            Method::Rk45Reference => "rk45".to_string(),
        }
    }

    /// Appends the elementary (single-evaluation) sub-step sizes of one step
    /// of size `h`, in execution order. The list is palindromic, which is
    /// what makes the composed step time-symmetric.
    pub fn push_substeps(&self, h: f64, out: &mut Vec<f64>) {
        match self {
            Method::Alf => out.push(h),
            Method::Alf2 => {
                out.push(0.5 * h);
                out.push(0.5 * h);
            }
            Method::Yoshida(order) => {
                let inner = if *order == 4 {
                    Method::Alf2
                } else {
                    Method::Yoshida(order - 2)
                };
                let (a, b) = yoshida_coefficients((order / 2 - 1) as usize);
                inner.push_substeps(a * h, out);
                inner.push_substeps(b * h, out);
                inner.push_substeps(a * h, out);
            }
            Method::Rk45Reference => panic!("rk45 has no reversible sub-step decomposition"),
        }
    }
}

/// Triple-jump coefficients `(a, b)` that raise a symmetric method of order
/// `2k` to order `2k + 2`:
///
/// a = 1 / (2 - 2^(1/(2k+1))),  b = 1 - 2a
///
/// `b` is negative; `2a + b = 1` and `2 a^(2k+1) + b^(2k+1) = 0` cancel the
/// leading error term.
pub fn yoshida_coefficients(k: usize) -> (f64, f64) {
    assert!(k >= 1, "composition level starts at k = 1");
    let root = 2f64.powf(1.0 / (2.0 * k as f64 + 1.0));
    let a = 1.0 / (2.0 - root);
    (a, 1.0 - 2.0 * a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_level_coefficients_match_references() {
        let (a, b) = yoshida_coefficients(1);
        assert!((a - 1.351_207_191_959_657_8).abs() < 1e-9);
        assert!((b + 1.702_414_383_919_315_3).abs() < 1e-9);
    }

    #[test]
    fn coefficient_identities_hold_to_machine_precision() {
        for k in 1..=4 {
            let (a, b) = yoshida_coefficients(k);
            assert!((2.0 * a + b - 1.0).abs() < 1e-13, "partition at k={k}");
            let p = (2 * k + 1) as i32;
            assert!(
                (2.0 * a.powi(p) + b.powi(p)).abs() < 1e-13,
                "cancellation at k={k}"
            );
            assert!(b < 0.0);
        }
    }

    #[test]
    fn substep_counts_match_the_formula() {
        let mut subs = Vec::new();
        for (m, n) in [
            (Method::Alf, 1usize),
            (Method::Alf2, 2),
            (Method::Yoshida(4), 6),
            (Method::Yoshida(6), 18),
            (Method::Yoshida(8), 54),
        ] {
            subs.clear();
            m.push_substeps(0.1, &mut subs);
            assert_eq!(subs.len(), n);
            assert_eq!(m.evals_per_step(), n as u64);
            // sub-steps partition the step
            let sum: f64 = subs.iter().sum();
            assert!((sum - 0.1).abs() < 1e-14);
        }
    }

    #[test]
    fn substep_lists_are_palindromic() {
        let mut subs = Vec::new();
        Method::Yoshida(6).push_substeps(0.3, &mut subs);
        let mut rev = subs.clone();
        rev.reverse();
        assert_eq!(subs, rev);
    }

    #[test]
    fn yoshida_constructor_validates() {
        assert!(Method::yoshida(4).is_ok());
        assert!(Method::yoshida(3).is_err());
        assert!(Method::yoshida(2).is_err());
        assert!(Method::yoshida(7).is_err());
    }
}
