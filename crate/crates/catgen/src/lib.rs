//! Builds labeled curve catalogs for mnrank's tests and demos.
//!
//! Curves are enumerated over small Weierstrass coefficients and kept
//! when the discriminant is squarefree with |Δ| below a bound: such
//! models are globally minimal and semistable, so the conductor is
//! exactly |Δ|. Ranks are analytic ranks derived from the functional
//! equation: the root number fixes the parity, and truncated values of
//! L(1) (even parity) or L′(1) (odd parity) decide between the two
//! smallest ranks of that parity.

use mnrank::curve::{ap_bad_prime, ap_good_prime, CurveModel};
use mnrank::primes::PrimeTable;
use mnrank::rng::SplitMix64;

/// Truncated L-values this close to zero are treated as vanishing.
pub const VANISHING_THRESHOLD: f64 = 1e-3;

/// Euler–Mascheroni constant for the E₁ series.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral E₁(x) for x > 0: power series below 1, a
/// modified Lentz continued fraction above.
pub fn exp_int_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 requires x > 0");
    if x <= 1.0 {
        // E₁(x) = −γ − ln x + Σ_{k≥1} (−1)^{k+1} xᵏ / (k·k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..64 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // E₁(x) = e^{−x} · 1/(x+1− 1²/(x+3− 2²/(x+5−⋯)))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for k in 1..200 {
            let a = -(k as f64) * (k as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let delta = c * d;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-x).exp() * h
    }
}

/// True when n has no repeated prime factor.
pub fn is_squarefree(mut n: u64) -> bool {
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

/// Dirichlet coefficients a₁..a_n_max from the prime traces, using the
/// Hecke recursions: multiplicativity across coprime arguments,
/// a_{p^{k}} = a_p·a_{p^{k−1}} − p·a_{p^{k−2}} at good p, and
/// a_{p^k} = a_pᵏ at bad p.
pub fn dirichlet_coefficients(
    curve: &CurveModel,
    table: &PrimeTable,
    n_max: usize,
) -> Result<Vec<f64>, mnrank::curve::CurveError> {
    let mut a = vec![0.0f64; n_max + 1];
    a[1] = 1.0;
    for &p in table.primes() {
        let p = p as u64;
        if p as usize > n_max {
            break;
        }
        let ap = if curve.conductor % p == 0 {
            ap_bad_prime(curve, p)?
        } else {
            ap_good_prime(curve, p)?
        } as f64;
        let good = curve.conductor % p != 0;

        // a at prime powers within range.
        let mut powers = vec![1.0, ap];
        let mut pk = p;
        while pk * p <= n_max as u64 {
            pk *= p;
            let k = powers.len();
            let next = if good {
                ap * powers[k - 1] - p as f64 * powers[k - 2]
            } else {
                ap * powers[k - 1]
            };
            powers.push(next);
        }

        // Spread multiplicatively: iterate m coprime to p.
        let mut pk = p as usize;
        for k in 1..powers.len() {
            let mut m = 1usize;
            while m * pk <= n_max {
                if m % p as usize != 0 && a[m] != 0.0 {
                    a[m * pk] = a[m] * powers[k];
                }
                m += 1;
            }
            pk *= p as usize;
        }
    }
    Ok(a)
}

/// Global root number of a semistable curve: −1 from the infinite
/// place times −aₚ at every multiplicative prime.
pub fn root_number(
    curve: &CurveModel,
    table: &PrimeTable,
) -> Result<i8, mnrank::curve::CurveError> {
    let mut w = -1i8;
    for &p in table.primes() {
        let p = p as u64;
        if p > curve.conductor {
            break;
        }
        if curve.conductor % p == 0 {
            w *= -(ap_bad_prime(curve, p)? as i8);
        }
    }
    Ok(w)
}

/// Truncated L(1) = 2·Σ (a_n/n)·e^{−2πn/√N}.
pub fn l_value_at_1(a: &[f64], conductor: u64) -> f64 {
    let scale = 2.0 * std::f64::consts::PI / (conductor as f64).sqrt();
    let mut sum = 0.0;
    for (n, &an) in a.iter().enumerate().skip(1) {
        if an != 0.0 {
            sum += an / n as f64 * (-scale * n as f64).exp();
        }
    }
    2.0 * sum
}

/// Truncated L′(1) = 2·Σ (a_n/n)·E₁(2πn/√N), valid when w = −1.
pub fn l_derivative_at_1(a: &[f64], conductor: u64) -> f64 {
    let scale = 2.0 * std::f64::consts::PI / (conductor as f64).sqrt();
    let mut sum = 0.0;
    for (n, &an) in a.iter().enumerate().skip(1) {
        if an != 0.0 {
            sum += an / n as f64 * exp_int_e1(scale * n as f64);
        }
    }
    2.0 * sum
}

/// Analytic rank of a semistable curve, labeled 0–3: parity from the
/// root number, then rank 0 vs 2 by whether L(1) clears the vanishing
/// threshold (resp. 1 vs 3 with L′(1)).
pub fn analytic_rank(
    curve: &CurveModel,
    table: &PrimeTable,
) -> Result<u8, mnrank::curve::CurveError> {
    let n_max = (3.0 * (curve.conductor as f64).sqrt()).ceil() as usize;
    let n_max = n_max.max(16);
    let a = dirichlet_coefficients(curve, table, n_max)?;
    Ok(if root_number(curve, table)? == 1 {
        if l_value_at_1(&a, curve.conductor) > VANISHING_THRESHOLD {
            0
        } else {
            2
        }
    } else if l_derivative_at_1(&a, curve.conductor) > VANISHING_THRESHOLD {
        1
    } else {
        3
    })
}

/// Enumerates curves over small coefficients, keeps squarefree
/// discriminants below `max_conductor`, dedupes by (c₄, c₆, Δ), and
/// labels each with its analytic rank.
pub fn generate_catalog(
    max_conductor: u64,
    a4_range: i64,
    a6_range: i64,
    table: &PrimeTable,
) -> Result<Vec<CurveModel>, mnrank::curve::CurveError> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for a1 in 0..=1i64 {
        for a2 in -1..=1i64 {
            for a3 in 0..=1i64 {
                for a4 in -a4_range..=a4_range {
                    for a6 in -a6_range..=a6_range {
                        let probe = CurveModel::new([a1, a2, a3, a4, a6], 1, 0);
                        let disc = probe.discriminant();
                        if disc == 0 || disc.unsigned_abs() >= max_conductor as u128 {
                            continue;
                        }
                        let n = disc.unsigned_abs() as u64;
                        if !is_squarefree(n) {
                            continue;
                        }
                        let (c4, c6) = probe.c_invariants();
                        if !seen.insert((c4, c6, disc)) {
                            continue;
                        }
                        let mut curve = CurveModel::new([a1, a2, a3, a4, a6], n, 0);
                        curve.rank = analytic_rank(&curve, table)?;
                        curve.label = Some(format!("c{}.{}", n, out.len()));
                        out.push(curve);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Seeded subsample without replacement, preserving catalog order.
pub fn subsample(curves: &[CurveModel], n: usize, seed: u64) -> Vec<CurveModel> {
    let mut idx: Vec<usize> = (0..curves.len()).collect();
    let mut rng = SplitMix64::new(seed);
    rng.shuffle(&mut idx);
    idx.truncate(n.min(curves.len()));
    idx.sort_unstable();
    idx.into_iter().map(|i| curves[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use mnrank::primes::sieve_primes;

    fn table() -> PrimeTable {
        sieve_primes(20_000).unwrap()
    }

    #[test]
    fn e1_reference_values() {
        // Abramowitz & Stegun table values.
        assert!((exp_int_e1(0.5) - 0.559_773_594_8).abs() < 1e-9);
        assert!((exp_int_e1(1.0) - 0.219_383_934_4).abs() < 1e-9);
        assert!((exp_int_e1(2.0) - 0.048_900_510_7).abs() < 1e-9);
        assert!((exp_int_e1(10.0) - 4.156_968_93e-6).abs() < 1e-12);
    }

    #[test]
    fn squarefree_basics() {
        assert!(is_squarefree(1));
        assert!(is_squarefree(37));
        assert!(is_squarefree(389));
        assert!(!is_squarefree(4));
        assert!(!is_squarefree(11 * 11 * 5));
        assert!(!is_squarefree(0));
    }

    #[test]
    fn dirichlet_coefficients_of_11a1() {
        // 11a1: y² + y = x³ − x² − 10x − 20, N = 11.
        let curve = CurveModel::new([0, -1, 1, -10, -20], 11, 0);
        let a = dirichlet_coefficients(&curve, &table(), 20).unwrap();
        // q-expansion of the weight-2 level-11 newform.
        let expected = [
            1.0, -2.0, -1.0, 2.0, 1.0, 2.0, -2.0, 0.0, -2.0, -2.0, 1.0, -2.0, 4.0, 4.0, -1.0,
            -4.0, -2.0, 4.0, 0.0, 2.0,
        ];
        for (n, &e) in expected.iter().enumerate() {
            assert_eq!(a[n + 1], e, "a_{}", n + 1);
        }
    }

    #[test]
    fn root_numbers_of_known_curves() {
        let t = table();
        // Rank 0 and 2: even parity.
        let c11 = CurveModel::new([0, -1, 1, -10, -20], 11, 0);
        let c389 = CurveModel::new([0, 1, 1, -2, 0], 389, 2);
        assert_eq!(root_number(&c11, &t).unwrap(), 1);
        assert_eq!(root_number(&c389, &t).unwrap(), 1);
        // Rank 1 and 3: odd parity.
        let c37 = CurveModel::new([0, 0, 1, -1, 0], 37, 1);
        let c5077 = CurveModel::new([0, 0, 1, -7, 6], 5077, 3);
        assert_eq!(root_number(&c37, &t).unwrap(), -1);
        assert_eq!(root_number(&c5077, &t).unwrap(), -1);
    }

    #[test]
    fn l_values_match_known_curves() {
        let t = table();
        let n_max = |n: u64| ((3.0 * (n as f64).sqrt()).ceil() as usize).max(16);

        let c11 = CurveModel::new([0, -1, 1, -10, -20], 11, 0);
        let a = dirichlet_coefficients(&c11, &t, n_max(11)).unwrap();
        assert!((l_value_at_1(&a, 11) - 0.253_841_860_9).abs() < 1e-4);

        let c37 = CurveModel::new([0, 0, 1, -1, 0], 37, 1);
        let a = dirichlet_coefficients(&c37, &t, n_max(37)).unwrap();
        assert!((l_derivative_at_1(&a, 37) - 0.305_999_773_8).abs() < 1e-3);

        let c389 = CurveModel::new([0, 1, 1, -2, 0], 389, 2);
        let a = dirichlet_coefficients(&c389, &t, n_max(389)).unwrap();
        assert!(l_value_at_1(&a, 389).abs() < VANISHING_THRESHOLD);

        let c5077 = CurveModel::new([0, 0, 1, -7, 6], 5077, 3);
        let a = dirichlet_coefficients(&c5077, &t, n_max(5077)).unwrap();
        assert!(l_derivative_at_1(&a, 5077).abs() < VANISHING_THRESHOLD);
    }

    #[test]
    fn known_curves_get_their_ranks() {
        let t = table();
        let cases = [
            (CurveModel::new([0, -1, 1, -10, -20], 11, 0), 0u8),
            (CurveModel::new([0, 0, 1, -1, 0], 37, 1), 1),
            (CurveModel::new([0, 1, 1, -2, 0], 389, 2), 2),
            (CurveModel::new([0, 0, 1, -7, 6], 5077, 3), 3),
        ];
        for (curve, want) in cases {
            assert_eq!(analytic_rank(&curve, &t).unwrap(), want, "N={}", curve.conductor);
        }
    }

    #[test]
    fn generated_catalog_is_semistable_and_labeled() {
        let t = table();
        let curves = generate_catalog(10_000, 4, 8, &t).unwrap();
        assert!(curves.len() > 100, "only {} curves", curves.len());
        for c in &curves {
            assert_eq!(c.discriminant().unsigned_abs() as u64, c.conductor);
            assert!(is_squarefree(c.conductor));
            assert!(c.rank <= 3);
        }
        // Both parities must show up.
        assert!(curves.iter().any(|c| c.rank % 2 == 0));
        assert!(curves.iter().any(|c| c.rank % 2 == 1));
    }

    #[test]
    fn subsample_is_deterministic() {
        let t = table();
        let curves = generate_catalog(2_000, 3, 5, &t).unwrap();
        let a = subsample(&curves, 10, 1);
        let b = subsample(&curves, 10, 1);
        assert_eq!(a.len(), 10);
        assert_eq!(
            a.iter().map(|c| c.label.clone()).collect::<Vec<_>>(),
            b.iter().map(|c| c.label.clone()).collect::<Vec<_>>()
        );
    }
}
