use statrs::function::factorial::ln_binomial;

/// `P(X >= k)` for `X ~ Binomial(m, q)`.
///
/// Summation starts at the term nearest the mode and walks outward with the
/// ratio recurrence, so only one log-binomial coefficient is evaluated and all
/// summands are positive. Above the mode the upper tail is summed directly;
/// at or below it the (small) lower tail is summed and subtracted from one.
pub fn binom_upper_tail(m: u64, k: u64, q: f64) -> f64 {
    assert!(k <= m, "k = {k} exceeds m = {m}");
    assert!((0.0..=1.0).contains(&q), "q = {q} outside [0, 1]");
    if k == 0 {
        return 1.0;
    }
    if q == 0.0 {
        return 0.0;
    }
    if q == 1.0 {
        return 1.0;
    }
    let mode = (((m + 1) as f64) * q).floor().min(m as f64) as u64;
    let odds = q / (1.0 - q);
    let log_term = |j: u64| ln_binomial(m, j) + (j as f64) * q.ln() + ((m - j) as f64) * (-q).ln_1p();

    if k > mode {
        // terms strictly decrease for j >= k
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in k..m {
            term *= (m - j) as f64 / (j + 1) as f64 * odds;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        (log_term(k) + sum.ln()).exp()
    } else {
        // lower tail j in [0, k-1], terms strictly decrease as j falls
        let top = k - 1;
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in (1..=top).rev() {
            term *= j as f64 / (m - j + 1) as f64 / odds;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        let lower = (log_term(top) + sum.ln()).exp();
        (1.0 - lower).max(0.0)
    }
}
