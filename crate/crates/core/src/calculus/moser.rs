//! Exact bookkeeping of the Moser bootstrap
//! `k_{n+1}^{1/(1+beta)} <= Cbar 2^n b^{-1} k_n`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{LabError, Result};

/// State after `n` steps: `k_n^{1/(1+beta)} <= (Cbar/b)^{a_n} 2^{d_n} k_1^{e_n}`
/// with `e_n = (1+beta)^{n-2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MoserState {
    pub beta: BigRational,
    pub a: BigRational,
    pub dcoef: BigRational,
    /// Exponent of `k_1`.
    pub k1_exponent: BigRational,
    pub n: u32,
    /// `log k_n` (the bound itself overflows quickly).
    pub log_k: f64,
}

/// Exact rational from a ratio of integers.
pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn pow(base: &BigRational, e: u32) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * base)
}

impl MoserState {
    /// `n = 2`: `k_2^{1/(1+beta)} <= (Cbar/b) 2 k_1`.
    pub fn start(beta: BigRational, k1: f64, cbar: f64, b: f64) -> Result<Self> {
        if beta <= BigRational::zero() {
            return Err(LabError::InvalidArgument("beta must be positive".into()));
        }
        check_constants(cbar, b)?;
        if !(k1 > 0.0) {
            return Err(LabError::InvalidArgument("k_1 must be positive".into()));
        }
        let one_plus = 1.0 + beta.to_f64().unwrap_or(f64::NAN);
        let log_k = one_plus * ((cbar / b).ln() + 2f64.ln() + k1.ln());
        Ok(Self {
            beta,
            a: BigRational::one(),
            dcoef: BigRational::one(),
            k1_exponent: BigRational::one(),
            n: 2,
            log_k,
        })
    }

    pub fn one_plus_beta(&self) -> BigRational {
        BigRational::one() + &self.beta
    }

    /// `sum_{j=0}^{n-2} (1+beta)^j`.
    pub fn closed_a(&self) -> BigRational {
        let q = self.one_plus_beta();
        (0..=self.n - 2).fold(BigRational::zero(), |acc, j| acc + pow(&q, j))
    }

    /// `sum_{j=0}^{n-2} (j+1)(1+beta)^{n-2-j}`.
    pub fn closed_d(&self) -> BigRational {
        let q = self.one_plus_beta();
        (0..=self.n - 2).fold(BigRational::zero(), |acc, j| {
            acc + BigRational::from_integer(BigInt::from(j + 1)) * pow(&q, self.n - 2 - j)
        })
    }

    pub fn closed_k1_exponent(&self) -> BigRational {
        pow(&self.one_plus_beta(), self.n - 2)
    }

    /// Whether the iterated exponents equal the closed forms exactly.
    pub fn matches_closed_form(&self) -> bool {
        self.a == self.closed_a() && self.dcoef == self.closed_d() && self.k1_exponent == self.closed_k1_exponent()
    }

    /// `a_n / (1+beta)^{n-2}` and `d_n / (1+beta)^{n-2}`.
    pub fn normalised(&self) -> (f64, f64) {
        let e = self.closed_k1_exponent();
        (
            (&self.a / &e).to_f64().unwrap_or(f64::NAN),
            (&self.dcoef / &e).to_f64().unwrap_or(f64::NAN),
        )
    }

    /// Closed-form bound `log k_n = (1+beta)(a_n log(Cbar/b) + d_n log 2 + e_n log k_1)`.
    pub fn closed_log_k(&self, k1: f64, cbar: f64, b: f64) -> f64 {
        let f = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
        f(&self.one_plus_beta()) * (f(&self.a) * (cbar / b).ln() + f(&self.dcoef) * 2f64.ln() + f(&self.k1_exponent) * k1.ln())
    }
}

fn check_constants(cbar: f64, b: f64) -> Result<()> {
    if !(cbar > 0.0 && b > 0.0) {
        return Err(LabError::InvalidArgument("Cbar and b must be positive".into()));
    }
    Ok(())
}

/// One step of the bootstrap: the exponent triple advances by
/// `(a, d, e) -> (a (1+beta) + 1, d (1+beta) + n, e (1+beta))` and
/// `log k_{n+1} = (1+beta)(log(Cbar/b) + n log 2 + log k_n)`.
pub fn moser_advance(state: &MoserState, cbar: f64, b: f64) -> Result<MoserState> {
    check_constants(cbar, b)?;
    let q = state.one_plus_beta();
    let n_big = BigRational::from_integer(BigInt::from(state.n));
    let qf = q.to_f64().unwrap_or(f64::NAN);
    Ok(MoserState {
        beta: state.beta.clone(),
        a: &state.a * &q + BigRational::one(),
        dcoef: &state.dcoef * &q + n_big,
        k1_exponent: &state.k1_exponent * &q,
        n: state.n + 1,
        log_k: qf * ((cbar / b).ln() + state.n as f64 * 2f64.ln() + state.log_k),
    })
}

/// Runs the recursion from `n = 2` to `n_final`.
pub fn moser_iterate(beta: BigRational, n_final: u32, k1: f64, cbar: f64, b: f64) -> Result<MoserState> {
    let mut s = MoserState::start(beta, k1, cbar, b)?;
    while s.n < n_final {
        s = moser_advance(&s, cbar, b)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        let s = MoserState::start(rational(1, 1), 1.0, 1.0, 1.0).unwrap();
        assert_eq!(s.a, rational(1, 1));
        assert_eq!(s.dcoef, rational(1, 1));
        let s4 = moser_iterate(rational(1, 1), 4, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(s4.a, rational(7, 1));
        assert_eq!(s4.dcoef, rational(11, 1));
    }

    #[test]
    fn exact_closed_form() {
        for beta in [rational(1, 2), rational(1, 1), rational(2, 1)] {
            let mut s = MoserState::start(beta, 2.0, 3.0, 0.5).unwrap();
            while s.n <= 12 {
                assert!(s.matches_closed_form(), "n = {}", s.n);
                s = moser_advance(&s, 3.0, 0.5).unwrap();
            }
        }
    }

    #[test]
    fn log_bound_matches_closed_form() {
        let s = moser_iterate(rational(1, 2), 9, 2.0, 3.0, 0.5).unwrap();
        let closed = s.closed_log_k(2.0, 3.0, 0.5);
        assert!((s.log_k - closed).abs() <= 1e-10 * closed.abs());
    }

    #[test]
    fn limits() {
        let s = moser_iterate(rational(1, 1), 40, 1.0, 1.0, 1.0).unwrap();
        let (a, d) = s.normalised();
        assert!((a - 2.0).abs() < 1e-6);
        assert!((d - 4.0).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(MoserState::start(rational(0, 1), 1.0, 1.0, 1.0).is_err());
        let s = MoserState::start(rational(1, 1), 1.0, 1.0, 1.0).unwrap();
        assert!(moser_advance(&s, 1.0, 0.0).is_err());
    }
}
