//! Complexity and entropy measures.

use super::stats::{is_constant, population_std};
use crate::error::{Error, Result};

fn require(window: &[f64], n: usize) -> Result<()> {
    if window.len() < n {
        return Err(Error::TooShort { needed: n, got: window.len() });
    }
    Ok(())
}

fn diff(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

fn mobility(x: &[f64], dx: &[f64]) -> f64 {
    let sx = population_std(x);
    if sx == 0.0 {
        return 0.0;
    }
    population_std(dx) / sx
}

/// `std(Δx) / std(x)`.
pub fn hjorth_mobility(window: &[f64]) -> Result<f64> {
    require(window, 3)?;
    Ok(mobility(window, &diff(window)))
}

/// `mobility(Δx) / mobility(x)`.
pub fn hjorth_complexity(window: &[f64]) -> Result<f64> {
    require(window, 3)?;
    Ok(hjorth_pair(window).1)
}

pub(crate) fn hjorth_pair(window: &[f64]) -> (f64, f64) {
    let dx = diff(window);
    let mob = mobility(window, &dx);
    if mob == 0.0 {
        return (0.0, 0.0);
    }
    let ddx = diff(&dx);
    (mob, mobility(&dx, &ddx) / mob)
}

/// Petrosian fractal dimension: `log10(N) / (log10(N) + log10(N / (N + 0.4·NΔ)))`
/// where NΔ counts sign changes of the first difference (a zero difference
/// counts as non-negative).
pub fn petrosian_fd(window: &[f64]) -> Result<f64> {
    require(window, 3)?;
    let n = window.len() as f64;
    let mut n_delta = 0usize;
    let mut prev: Option<bool> = None;
    for w in window.windows(2) {
        let negative = (w[1] - w[0]).is_sign_negative() && w[1] != w[0];
        if let Some(p) = prev {
            if p != negative {
                n_delta += 1;
            }
        }
        prev = Some(negative);
    }
    let ln = n.log10();
    Ok(ln / (ln + (n / (n + 0.4 * n_delta as f64)).log10()))
}

/// Higuchi fractal dimension: slope of `log L(k)` against `log(1/k)` for
/// `k = 1..=kmax`, with `L(k)` the normalised curve length averaged over the
/// `k` start offsets.
pub fn higuchi_fd(window: &[f64], kmax: usize) -> Result<f64> {
    if kmax < 2 {
        return Err(Error::InvalidArgument(format!("higuchi kmax must be >= 2, got {kmax}")));
    }
    require(window, 2 * kmax)?;
    let n = window.len();
    let mut xs = Vec::with_capacity(kmax);
    let mut ys = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let mut lk = 0.0;
        for m in 0..k {
            let n_max = (n - m - 1) / k;
            let mut ll = 0.0;
            let mut prev = window[m];
            for j in 1..=n_max {
                let cur = window[m + j * k];
                ll += (cur - prev).abs();
                prev = cur;
            }
            ll /= k as f64;
            ll *= (n - 1) as f64 / (k * n_max) as f64;
            lk += ll;
        }
        lk /= k as f64;
        if lk <= 0.0 {
            return Ok(0.0);
        }
        xs.push((1.0 / k as f64).ln());
        ys.push(lk.ln());
    }
    Ok(least_squares_slope(&xs, &ys))
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Normalised permutation entropy: Shannon entropy (base 2) of the ordinal
/// patterns of `order`-length embedded vectors, divided by `log2(order!)`.
/// Equal values are ranked by position.
pub fn permutation_entropy(window: &[f64], order: usize, delay: usize) -> Result<f64> {
    if !(2..=8).contains(&order) || delay == 0 {
        return Err(Error::InvalidArgument(format!(
            "permutation entropy needs 2 <= order <= 8 and delay >= 1, got {order}/{delay}"
        )));
    }
    require(window, order * delay + 1)?;
    let n_vectors = window.len() - (order - 1) * delay;
    let mut counts = vec![0usize; factorial(order)];
    let mut idx = vec![0usize; order];
    let mut vals = vec![0.0; order];
    for start in 0..n_vectors {
        for (i, v) in vals.iter_mut().enumerate() {
            *v = window[start + i * delay];
        }
        // Stable insertion sort of positions by value.
        for i in 0..order {
            idx[i] = i;
        }
        for i in 1..order {
            let mut j = i;
            while j > 0 && vals[idx[j - 1]] > vals[idx[j]] {
                idx.swap(j - 1, j);
                j -= 1;
            }
        }
        counts[lehmer_code(&idx)] += 1;
    }
    let total = n_vectors as f64;
    let entropy: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum();
    Ok(entropy / (factorial(order) as f64).log2())
}

fn lehmer_code(perm: &[usize]) -> usize {
    let n = perm.len();
    let mut code = 0;
    for i in 0..n {
        let smaller = perm[i + 1..].iter().filter(|&&p| p < perm[i]).count();
        code = code * (n - i) + smaller;
    }
    code
}

/// Shannon entropy (natural log) of the histogram of `window` over
/// `n_bins` equal-width bins spanning its range. Probabilities are bin
/// counts over the window length.
pub fn binned_entropy(window: &[f64], n_bins: usize) -> Result<f64> {
    if n_bins < 1 {
        return Err(Error::InvalidArgument("binned entropy needs at least one bin".into()));
    }
    require(window, 1)?;
    if is_constant(window) {
        return Ok(0.0);
    }
    let (min, max) = window
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let width = max - min;
    let mut counts = vec![0usize; n_bins];
    for &x in window {
        let b = (((x - min) / width) * n_bins as f64).floor() as usize;
        counts[b.min(n_bins - 1)] += 1;
    }
    let n = window.len() as f64;
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum())
}
