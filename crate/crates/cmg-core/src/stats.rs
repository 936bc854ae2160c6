//! Paired significance tests used by the model comparison: paired t with an
//! incomplete-beta Student-t tail, and the Wilcoxon signed-rank test with an
//! exact small-sample branch.

use crate::error::{CmgError, Result};

/// Lanczos approximation (g = 7, 9 terms), accurate to ~1e-13 for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection keeps the small-argument range accurate.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut a = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-14;
    const FPMIN: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(CmgError::numerical("incomplete beta did not converge"))
}

/// Regularized incomplete beta I_x(a, b).
pub fn reg_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(CmgError::invalid("incomplete beta argument outside [0,1]"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let bt = (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + a * x.ln()
        + b * (1.0 - x).ln())
    .exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(bt * beta_cf(a, b, x)? / a)
    } else {
        Ok(1.0 - bt * beta_cf(b, a, 1.0 - x)? / b)
    }
}

/// Upper-tail probability P(T > t) for Student's t with df degrees of
/// freedom.
pub fn student_t_sf(t: f64, df: f64) -> Result<f64> {
    if !(df >= 1.0) {
        return Err(CmgError::invalid("degrees of freedom must be at least 1"));
    }
    if !t.is_finite() {
        return Err(CmgError::invalid("non-finite t statistic"));
    }
    if t == 0.0 {
        return Ok(0.5);
    }
    let x = df / (df + t * t);
    let tail = 0.5 * reg_incomplete_beta(0.5 * df, 0.5, x)?;
    Ok(if t > 0.0 { tail } else { 1.0 - tail })
}

/// Complementary error function, fractional accuracy ~1.2e-7.
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 { ans } else { 2.0 - ans }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Two-sided paired t-test on matched accuracy lists.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(CmgError::invalid("paired lists differ in length"));
    }
    let n = a.len();
    if n < 2 {
        return Err(CmgError::invalid("need at least 2 pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(CmgError::invalid("non-finite difference"));
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 {
        return Err(CmgError::degenerate("identical paired results"));
    }
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    let df = (n - 1) as f64;
    let p = 2.0 * student_t_sf(t.abs(), df)?;
    Ok(TTestResult { t, df, p: p.min(1.0) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    pub w: f64,
    pub p: f64,
    pub n_effective: usize,
}

/// Signed ranks of the nonzero differences: (doubled rank, sign). Ranks are
/// doubled so average ranks under ties stay integral.
pub(crate) fn signed_ranks(d: &[f64]) -> Vec<(u64, bool)> {
    let nz: Vec<f64> = d.iter().cloned().filter(|v| *v != 0.0).collect();
    let mut order: Vec<usize> = (0..nz.len()).collect();
    order.sort_by(|&i, &j| nz[i].abs().partial_cmp(&nz[j].abs()).unwrap());
    let mut out = vec![(0u64, false); nz.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && nz[order[j + 1]].abs() == nz[order[i]].abs() {
            j += 1;
        }
        // Average of ranks i+1..=j+1, doubled: (i+1 + j+1).
        let doubled = (i + j + 2) as u64;
        for &k in &order[i..=j] {
            out[k] = (doubled, nz[k] > 0.0);
        }
        i = j + 1;
    }
    out
}

/// Exact two-sided p: subset-sum distribution of W+ over all 2^n sign
/// assignments, evaluated at the observed min(W+, W-).
pub(crate) fn wilcoxon_exact_p(ranks: &[(u64, bool)], w_doubled: u64) -> f64 {
    let total: u64 = ranks.iter().map(|(r, _)| r).sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    for (r, _) in ranks {
        let r = *r as usize;
        for s in (r..counts.len()).rev() {
            counts[s] += counts[s - r];
        }
    }
    let le: u64 = counts[..=(w_doubled as usize).min(counts.len() - 1)]
        .iter()
        .sum();
    let p = 2.0 * le as f64 / 2f64.powi(ranks.len() as i32);
    p.min(1.0)
}

/// Normal approximation with continuity correction and tie-adjusted
/// variance.
pub(crate) fn wilcoxon_normal_p(ranks: &[(u64, bool)], w: f64) -> f64 {
    let n = ranks.len() as f64;
    let mu = n * (n + 1.0) / 4.0;
    let mut var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    let mut sorted: Vec<u64> = ranks.iter().map(|(r, _)| *r).collect();
    sorted.sort_unstable();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        var -= (t * t * t - t) / 48.0;
        i = j + 1;
    }
    let z = (w - mu + 0.5) / var.sqrt();
    (2.0 * normal_cdf(z)).min(1.0)
}

const WILCOXON_EXACT_MAX: usize = 25;

/// Two-sided Wilcoxon signed-rank test. Zero differences are dropped; ties
/// get average ranks; n <= 25 uses the exact distribution.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(CmgError::invalid("paired lists differ in length"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(CmgError::invalid("non-finite difference"));
    }
    let ranks = signed_ranks(&d);
    if ranks.is_empty() {
        return Err(CmgError::degenerate("all differences zero"));
    }
    let w_plus_doubled: u64 = ranks.iter().filter(|(_, pos)| *pos).map(|(r, _)| r).sum();
    let total: u64 = ranks.iter().map(|(r, _)| r).sum();
    let w_minus_doubled = total - w_plus_doubled;
    let w_doubled = w_plus_doubled.min(w_minus_doubled);
    let w = w_doubled as f64 / 2.0;
    let n = ranks.len();
    let p = if n <= WILCOXON_EXACT_MAX {
        wilcoxon_exact_p(&ranks, w_doubled)
    } else {
        wilcoxon_normal_p(&ranks, w)
    };
    Ok(WilcoxonResult { w, p, n_effective: n })
}
