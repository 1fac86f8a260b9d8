use nalgebra::DMatrix;

/// Fock matrix elements `<m|D(β)|n>` of the real displacement `D(β) = exp(β(a† - a))`
/// for `0 <= m, n <= n_ph_max`, exact (not the exponential of a truncated generator).
///
/// For `m >= n`: `e^{-β²/2} sqrt(n!/m!) β^{m-n} L_n^{(m-n)}(β²)`, and
/// `<m|D(β)|n> = <n|D(-β)|m>` otherwise. Each Laguerre column comes from the
/// upward recurrence in degree with running rescaling; prefactors are summed
/// in log space so no intermediate overflows.
pub fn displacement_elements(beta: f64, n_ph_max: usize) -> DMatrix<f64> {
    let dim = n_ph_max + 1;
    let x = beta * beta;
    let mut d = DMatrix::<f64>::zeros(dim, dim);
    if beta == 0.0 {
        d.fill_with_identity();
        return d;
    }
    let mut ln_fact = vec![0.0f64; dim + 1];
    for k in 1..=dim {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let ln_b = beta.abs().ln();
    for alpha in 0..dim {
        let a = alpha as f64;
        // L_k^alpha = value * exp(log_scale)
        let (mut prev, mut cur) = (0.0f64, 1.0f64);
        let mut log_scale = 0.0f64;
        for k in 0..dim - alpha {
            if k == 1 {
                prev = cur;
                cur = 1.0 + a - x;
            } else if k > 1 {
                let kf = (k - 1) as f64;
                let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
                prev = cur;
                cur = next;
            }
            if cur.abs() > 1e150 {
                prev *= 1e-150;
                cur *= 1e-150;
                log_scale += 150.0 * std::f64::consts::LN_10;
            }
            let (m, n) = (k + alpha, k);
            let ln_pref = -0.5 * x + 0.5 * (ln_fact[n] - ln_fact[m]) + a * ln_b + log_scale;
            let mag = if cur == 0.0 { 0.0 } else { (ln_pref + cur.abs().ln()).exp() };
            let sign_beta = if beta < 0.0 && alpha % 2 == 1 { -1.0 } else { 1.0 };
            let v = sign_beta * cur.signum() * mag;
            d[(m, n)] = v;
            if alpha > 0 {
                // <n|D(β)|m> = <m|D(-β)|n> = (-1)^alpha <m|D(β)|n>
                d[(n, m)] = if alpha % 2 == 1 { -v } else { v };
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Closed form via the associated Laguerre polynomial, evaluated with its
    /// explicit finite sum; adequate for small indices.
    fn closed_form(beta: f64, m: usize, n: usize) -> f64 {
        let (hi, lo) = (m.max(n), m.min(n));
        let alpha = hi - lo;
        let x = beta * beta;
        let lag: f64 = (0..=lo)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * factorial(lo + alpha) / (factorial(lo - i) * factorial(alpha + i) * factorial(i))
                    * x.powi(i as i32)
            })
            .sum();
        let val = (-x / 2.0).exp() * (factorial(lo) / factorial(hi)).sqrt() * beta.powi(alpha as i32) * lag;
        if m >= n {
            val
        } else if alpha % 2 == 0 {
            val
        } else {
            -val
        }
    }

    #[test]
    fn zero_displacement_is_identity() {
        let d = displacement_elements(0.0, 10);
        assert_eq!(d, DMatrix::identity(11, 11));
    }

    #[test]
    fn vacuum_overlap() {
        for beta in [0.3, 1.0, 2.5] {
            let d = displacement_elements(beta, 5);
            assert!((d[(0, 0)] - (-beta * beta / 2.0).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_laguerre_form() {
        for beta in [0.7, -1.3, 2.0] {
            let d = displacement_elements(beta, 12);
            for m in 0..=12 {
                for n in 0..=12 {
                    let c = closed_form(beta, m, n);
                    assert!((d[(m, n)] - c).abs() < 1e-10, "beta={beta} m={m} n={n}");
                }
            }
        }
    }

    #[test]
    fn inverse_on_low_block() {
        let beta = 2.0;
        let nmax = 128;
        let p = &displacement_elements(beta, nmax) * &displacement_elements(-beta, nmax);
        let half = nmax / 2;
        for m in 0..=half {
            for n in 0..=half {
                let target = if m == n { 1.0 } else { 0.0 };
                assert!((p[(m, n)] - target).abs() < 1e-8, "{m} {n} {}", p[(m, n)]);
            }
        }
    }

    #[test]
    fn matches_exponential_of_large_truncated_generator() {
        let big = 220;
        for beta in [0.9, -2.5, 4.0] {
            let mut gen = DMatrix::<f64>::zeros(big, big);
            for n in 1..big {
                let s = (n as f64).sqrt();
                gen[(n, n - 1)] = beta * s;
                gen[(n - 1, n)] = -beta * s;
            }
            let e = gen.exp();
            let d = displacement_elements(beta, 40);
            for m in 0..=40 {
                for n in 0..=40 {
                    assert!((d[(m, n)] - e[(m, n)]).abs() < 1e-10, "beta={beta} m={m} n={n}");
                }
            }
        }
    }

    #[test]
    fn reflection_symmetry() {
        let d = displacement_elements(1.7, 20);
        let dm = displacement_elements(-1.7, 20);
        for m in 0..=20 {
            for n in 0..=20 {
                let s = if (m + n) % 2 == 0 { 1.0 } else { -1.0 };
                assert!((d[(m, n)] - s * d[(n, m)]).abs() < 1e-12);
                assert!((dm[(m, n)] - d[(n, m)]).abs() < 1e-12);
            }
        }
    }
}
