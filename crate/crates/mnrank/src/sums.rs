//! The Mestre-Nagao sums S0(B) and S5(B) and the classifier feature rows
//! assembled from them.
//!
//! S0(B) = (1/ln B) * sum_{p<=B, p!|N} a_p ln p / p
//! S5(B) = sum_{p<=B, p!|N} ln((p+1-a_p)/p) + sum_{p<=B, p|N} ln(1.5 (p-1)/p)
//!
//! Sums run over ascending primes in double precision.

use thiserror::Error;

use crate::curve::{ApVector, CurveModel};
use crate::primes::PrimeTable;

/// The eight bounds used for the multi-value experiments.
pub const PAPER_BOUNDS: [u64; 8] = [1000, 5000, 10_000, 20_000, 30_000, 40_000, 50_000, 100_000];

#[derive(Debug, Error)]
pub enum SumError {
    #[error("bound {0} out of range (need 2 <= B <= ap prime limit {1})")]
    BoundOutOfRange(u64, u64),
    #[error("bounds must be ascending")]
    BoundsNotAscending,
    #[error("bound {0} not present in features")]
    MissingBound(u64),
    #[error("non-positive log argument at p={p} (a_p={ap}); a_p data corrupt")]
    CorruptAp { p: u64, ap: i64 },
    #[error("ap vector length {0} does not match prime table length {1}")]
    LengthMismatch(usize, usize),
}

/// S0/S5 values at a set of bounds plus log10 of the conductor: one
/// classifier input row.
#[derive(Debug, Clone, PartialEq)]
pub struct SumFeatures {
    pub log10_conductor: f64,
    pub bounds: Vec<u64>,
    pub s0: Vec<f64>,
    pub s5: Vec<f64>,
}

impl SumFeatures {
    pub fn s0_at(&self, bound: u64) -> Result<f64, SumError> {
        self.bounds
            .iter()
            .position(|&b| b == bound)
            .map(|i| self.s0[i])
            .ok_or(SumError::MissingBound(bound))
    }

    pub fn s5_at(&self, bound: u64) -> Result<f64, SumError> {
        self.bounds
            .iter()
            .position(|&b| b == bound)
            .map(|i| self.s5[i])
            .ok_or(SumError::MissingBound(bound))
    }
}

fn check_bound(bound: u64, ap: &ApVector) -> Result<(), SumError> {
    if bound < 2 || bound > ap.prime_limit {
        return Err(SumError::BoundOutOfRange(bound, ap.prime_limit));
    }
    Ok(())
}

/// S0(B) for one curve.
pub fn s0(
    ap: &ApVector,
    curve: &CurveModel,
    table: &PrimeTable,
    bound: u64,
) -> Result<f64, SumError> {
    check_bound(bound, ap)?;
    let f = features(ap, curve, table, &[bound])?;
    Ok(f.s0[0])
}

/// S5(B) for one curve.
pub fn s5(
    ap: &ApVector,
    curve: &CurveModel,
    table: &PrimeTable,
    bound: u64,
) -> Result<f64, SumError> {
    check_bound(bound, ap)?;
    let f = features(ap, curve, table, &[bound])?;
    Ok(f.s5[0])
}

/// Evaluate S0 and S5 at every requested bound in a single ascending
/// pass over the primes, plus log10(N).
pub fn features(
    ap: &ApVector,
    curve: &CurveModel,
    table: &PrimeTable,
    bounds: &[u64],
) -> Result<SumFeatures, SumError> {
    if ap.values.len() != table.len() {
        return Err(SumError::LengthMismatch(ap.values.len(), table.len()));
    }
    if bounds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SumError::BoundsNotAscending);
    }
    for &b in bounds {
        check_bound(b, ap)?;
    }
    let mut s0_acc = 0.0f64; // running sum a_p ln p / p over good primes
    let mut s5_acc = 0.0f64;
    let mut s0_out = Vec::with_capacity(bounds.len());
    let mut s5_out = Vec::with_capacity(bounds.len());
    let mut next = bounds.iter().copied().peekable();
    for (i, &p) in table.primes().iter().enumerate() {
        let p = p as u64;
        while next.peek().is_some_and(|&b| b < p) {
            let b = next.next().unwrap();
            s0_out.push(s0_acc / (b as f64).ln());
            s5_out.push(s5_acc);
        }
        if next.peek().is_none() {
            break;
        }
        let apv = ap.values[i] as i64;
        let pf = p as f64;
        if curve.conductor % p == 0 {
            s5_acc += (1.5 * (pf - 1.0) / pf).ln();
        } else {
            s0_acc += apv as f64 * pf.ln() / pf;
            let num = p as i64 + 1 - apv;
            if num <= 0 {
                return Err(SumError::CorruptAp { p, ap: apv });
            }
            s5_acc += (num as f64 / pf).ln();
        }
    }
    for b in next {
        s0_out.push(s0_acc / (b as f64).ln());
        s5_out.push(s5_acc);
    }
    Ok(SumFeatures {
        log10_conductor: (curve.conductor as f64).log10(),
        bounds: bounds.to_vec(),
        s0: s0_out,
        s5: s5_out,
    })
}

/// Heuristic rank estimate from the growth of S5 between two bounds:
/// S5(B) ~ log C_E + r log log B, so the slope in log log B estimates r.
/// Diagnostic only.
pub fn estimate_rank_slope(f: &SumFeatures, b1: u64, b2: u64) -> Result<f64, SumError> {
    if b1 >= b2 {
        return Err(SumError::BoundsNotAscending);
    }
    let s1 = f.s5_at(b1)?;
    let s2 = f.s5_at(b2)?;
    let ll1 = (b1 as f64).ln().ln();
    let ll2 = (b2 as f64).ln().ln();
    Ok((s2 - s1) / (ll2 - ll1))
}
