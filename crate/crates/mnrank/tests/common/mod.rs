//! Shared helpers for the integration suites: an exhaustive
//! point-counting oracle that works directly on the long Weierstrass
//! coefficients (no short-form transform, no shared code with the
//! library's counting paths), and a generator for small valid curves.

use std::collections::HashSet;

use mnrank::curve::CurveModel;
use mnrank::rng::SplitMix64;

/// Reduces a signed coefficient mod p into [0, p).
fn md(a: i64, p: u64) -> u64 {
    a.rem_euclid(p as i64) as u64
}

/// Right-hand side x³ + a2x² + a4x + a6 mod p.
fn rhs(c: &CurveModel, x: u64, p: u64) -> u64 {
    let x = x % p;
    let mut v = (x * x % p) * x % p;
    v = (v + md(c.a2, p) * (x * x % p)) % p;
    v = (v + md(c.a4, p) * x) % p;
    (v + md(c.a6, p)) % p
}

/// Number of projective points on the (possibly singular) curve over
/// F_p, counting every affine solution plus the point at infinity.
/// For odd p this completes the square per x and consults a squares
/// set built by direct enumeration; p = 2 enumerates (x, y) pairs.
pub fn count_points_oracle(c: &CurveModel, p: u64) -> u64 {
    if p == 2 {
        let mut n = 1;
        for x in 0..2u64 {
            for y in 0..2u64 {
                let lhs = (y * y + md(c.a1, p) * x % p * y + md(c.a3, p) * y) % p;
                if lhs == rhs(c, x, p) {
                    n += 1;
                }
            }
        }
        return n;
    }
    let squares: HashSet<u64> = (1..p).map(|y| y * y % p).collect();
    let mut n = 1;
    for x in 0..p {
        // (2y + a1x + a3)² = (a1x + a3)² + 4·rhs(x)
        let lin = (md(c.a1, p) * x + md(c.a3, p)) % p;
        let disc = (lin * lin % p + 4 * rhs(c, x, p)) % p;
        n += if disc == 0 {
            1
        } else if squares.contains(&disc) {
            2
        } else {
            0
        };
    }
    n
}

/// Counts nonsingular affine points of a singular reduction by brute
/// (x, y) enumeration, excluding the point where both partials vanish.
pub fn count_smooth_points_oracle(c: &CurveModel, p: u64) -> u64 {
    let mut n = 0;
    for x in 0..p {
        for y in 0..p {
            let lhs = (y * y % p + md(c.a1, p) * x % p * y % p + md(c.a3, p) * y) % p;
            if lhs != rhs(c, x, p) {
                continue;
            }
            // ∂/∂y = 2y + a1x + a3; ∂/∂x = a1y − 3x² − 2a2x − a4.
            let fy = (2 * y + md(c.a1, p) * x + md(c.a3, p)) % p;
            let fx = (md(c.a1, p) * y % p
                + 3 * (p - 1) % p * (x * x % p) % p
                + 2 * (p - md(c.a2, p) % p) % p * x % p
                + (p - md(c.a4, p) % p))
                % p;
            if fy != 0 || fx != 0 {
                n += 1;
            }
        }
    }
    n
}

/// Oracle Frobenius trace at any prime, good or bad. At bad primes
/// a_p = p − #E_ns(F_p), where the nonsingular count includes the
/// point at infinity.
pub fn ap_oracle(c: &CurveModel, p: u64) -> i64 {
    if c.conductor % p == 0 {
        p as i64 - (count_smooth_points_oracle(c, p) as i64 + 1)
    } else {
        p as i64 + 1 - count_points_oracle(c, p) as i64
    }
}

fn is_squarefree(mut n: u64) -> bool {
    if n == 0 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            n /= d;
            if n % d == 0 {
                return false;
            }
        }
        d += 1;
    }
    true
}

/// Random small-coefficient curves with squarefree discriminant, so
/// the model is minimal and semistable with conductor |Δ|.
pub fn random_semistable_curves(count: usize, seed: u64) -> Vec<CurveModel> {
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let coeffs = [
            rng.next_below(2) as i64,
            rng.next_below(3) as i64 - 1,
            rng.next_below(2) as i64,
            rng.next_below(41) as i64 - 20,
            rng.next_below(41) as i64 - 20,
        ];
        let probe = CurveModel::new(coeffs, 1, 0);
        let disc = probe.discriminant();
        if disc == 0 || disc.unsigned_abs() > u64::MAX as u128 {
            continue;
        }
        let n = disc.unsigned_abs() as u64;
        if !is_squarefree(n) {
            continue;
        }
        out.push(CurveModel::new(coeffs, n, 0));
    }
    out
}
