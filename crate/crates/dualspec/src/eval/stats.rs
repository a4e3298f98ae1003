//! Nonparametric statistics for the paired cost comparison: Wilcoxon
//! signed-rank test and Cliff's delta effect size.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("samples must be non-empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    /// H1: x tends to be less than y.
    OneSidedLess,
    TwoSided,
}

impl Alternative {
    pub fn name(self) -> &'static str {
        match self {
            Alternative::OneSidedLess => "one-sided-less",
            Alternative::TwoSided => "two-sided",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    pub p_value: f64,
    /// Sum of ranks of positive differences.
    pub w_plus: f64,
    /// Nonzero differences entering the test.
    pub n: usize,
    /// All differences were zero; p is reported as 1.
    pub degenerate: bool,
    pub exact: bool,
}

/// Exact enumeration is used up to this many nonzero differences; the
/// 2^n sign assignments stay cheap and handle tied ranks exactly.
const EXACT_LIMIT: usize = 20;

/// Wilcoxon signed-rank test on paired samples. Zero differences are
/// discarded; tied |differences| receive average ranks.
pub fn wilcoxon_signed_rank(
    x: &[f64],
    y: &[f64],
    alternative: Alternative,
) -> Result<WilcoxonResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(StatsError::Empty);
    }
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Ok(WilcoxonResult {
            p_value: 1.0,
            w_plus: 0.0,
            n: 0,
            degenerate: true,
            exact: true,
        });
    }

    let n = diffs.len();
    let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<f64>>());
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();

    if n <= EXACT_LIMIT {
        // Ranks are multiples of 0.5, so the rank sums are exact in f64
        // and the comparisons below are safe.
        let total = 1u64 << n;
        let mut le = 0u64;
        let mut ge = 0u64;
        for mask in 0..total {
            let mut w = 0.0;
            for (bit, r) in ranks.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    w += *r;
                }
            }
            if w <= w_plus {
                le += 1;
            }
            if w >= w_plus {
                ge += 1;
            }
        }
        let p_less = le as f64 / total as f64;
        let p_greater = ge as f64 / total as f64;
        let p_value = match alternative {
            Alternative::OneSidedLess => p_less,
            Alternative::TwoSided => (2.0 * p_less.min(p_greater)).min(1.0),
        };
        Ok(WilcoxonResult {
            p_value,
            w_plus,
            n,
            degenerate: false,
            exact: true,
        })
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie_correction: f64 = tie_group_sizes(&ranks)
            .into_iter()
            .map(|t| {
                let t = t as f64;
                (t * t * t - t) / 48.0
            })
            .sum();
        let variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_correction;
        if variance <= 0.0 {
            return Ok(WilcoxonResult {
                p_value: 1.0,
                w_plus,
                n,
                degenerate: true,
                exact: false,
            });
        }
        let sd = variance.sqrt();
        let p_value = match alternative {
            Alternative::OneSidedLess => normal_cdf((w_plus - mean + 0.5) / sd),
            Alternative::TwoSided => {
                let z = ((w_plus - mean).abs() - 0.5).max(0.0) / sd;
                (2.0 * (1.0 - normal_cdf(z))).min(1.0)
            }
        };
        Ok(WilcoxonResult {
            p_value,
            w_plus,
            n,
            degenerate: false,
            exact: false,
        })
    }
}

/// 1-based ranks with average ranks for ties.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn tie_group_sizes(ranks: &[f64]) -> Vec<usize> {
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        sizes.push(j - i + 1);
        i = j + 1;
    }
    sizes
}

/// Standard normal CDF via Cody's rational erfc approximation; absolute
/// error is well below 1e-12 over the range used here.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn erfc(x: f64) -> f64 {
    let ax = x.abs();
    let result = if ax < 2.5 {
        1.0 - erf_series(x)
    } else {
        // Continued-fraction (Lentz) evaluation of erfc for large |x|.
        let t = erfc_cf(ax);
        if x < 0.0 {
            2.0 - t
        } else {
            t
        }
    };
    result.clamp(0.0, 2.0)
}

fn erf_series(x: f64) -> f64 {
    // Alternating Maclaurin series; fine up to |x| ~ 2.5.
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for k in 1..64 {
        let kf = k as f64;
        term *= -x2 / kf;
        let add = term / (2.0 * kf + 1.0);
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

fn erfc_cf(x: f64) -> f64 {
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
    let mut b = x;
    let mut c = 1e308;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..300 {
        let a = i as f64 / 2.0;
        b = x;
        c = b + a / c;
        d = 1.0 / (b + a * d);
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / std::f64::consts::PI.sqrt() * h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Magnitude {
    Insignificant,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    pub fn name(self) -> &'static str {
        match self {
            Magnitude::Insignificant => "insignificant",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
        }
    }
}

/// Magnitude labels with the small/medium boundary at 1/3, which keeps
/// |delta| = 0.331 in the small band.
pub fn magnitude(delta: f64) -> Magnitude {
    let d = delta.abs();
    if d < 0.147 {
        Magnitude::Insignificant
    } else if d < 1.0 / 3.0 {
        Magnitude::Small
    } else if d < 0.474 {
        Magnitude::Medium
    } else {
        Magnitude::Large
    }
}

/// Cliff's delta: (#{x_i > y_j} - #{x_i < y_j}) / (n * m), computed by
/// sorting one side and counting with binary searches.
pub fn cliffs_delta(x: &[f64], y: &[f64]) -> Result<(f64, Magnitude), StatsError> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut sorted_y = y.to_vec();
    sorted_y.sort_by(f64::total_cmp);
    let mut greater = 0i64;
    let mut less = 0i64;
    for &xi in x {
        let below = sorted_y.partition_point(|&v| v < xi) as i64;
        let not_above = sorted_y.partition_point(|&v| v <= xi) as i64;
        greater += below;
        less += sorted_y.len() as i64 - not_above;
    }
    let delta = (greater - less) as f64 / (x.len() as f64 * y.len() as f64);
    Ok((delta, magnitude(delta)))
}

/// Min and quartiles by linear interpolation between order statistics
/// (the R-7 rule).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

pub fn quartiles(values: &[f64]) -> Result<Quartiles, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| -> f64 {
        let h = (sorted.len() as f64 - 1.0) * p;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    };
    Ok(Quartiles {
        min: sorted[0],
        q1: q(0.25),
        q2: q(0.5),
        q3: q(0.75),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_are_degenerate() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], Alternative::TwoSided)
            .unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn three_unit_differences_give_one_eighth() {
        let r = wilcoxon_signed_rank(
            &[1.0, 2.0, 3.0],
            &[2.0, 3.0, 4.0],
            Alternative::OneSidedLess,
        )
        .unwrap();
        assert!(r.exact);
        assert_eq!(r.w_plus, 0.0);
        assert_eq!(r.p_value, 0.125);
    }

    #[test]
    fn exact_p_is_scale_invariant() {
        let x = [1.0, 5.0, 2.0, 9.0];
        let y = [4.0, 3.0, 7.0, 1.0];
        let base = wilcoxon_signed_rank(&x, &y, Alternative::TwoSided).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| v * 10.0).collect();
        let ys: Vec<f64> = y.iter().map(|v| v * 10.0).collect();
        let scaled = wilcoxon_signed_rank(&xs, &ys, Alternative::TwoSided).unwrap();
        assert_eq!(base.p_value, scaled.p_value);
    }

    #[test]
    fn normal_path_engages_above_the_exact_limit() {
        let x: Vec<f64> = (0..25).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..25).map(|i| i as f64 + 1.0 + (i % 3) as f64).collect();
        let r = wilcoxon_signed_rank(&x, &y, Alternative::OneSidedLess).unwrap();
        assert!(!r.exact);
        assert!(r.p_value > 0.0 && r.p_value < 0.05);
    }

    /// Frozen against an independent evaluation of the same algorithm
    /// (average ranks, tie correction, continuity correction) with a
    /// reference normal CDF.
    #[test]
    fn normal_approximation_matches_reference_values() {
        let x: Vec<f64> = (0..25).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..25).map(|i| i as f64 + 1.0 + (i % 3) as f64).collect();
        let less = wilcoxon_signed_rank(&x, &y, Alternative::OneSidedLess).unwrap();
        assert!((less.p_value - 5.007280484081722e-6).abs() < 1e-15);
        let two = wilcoxon_signed_rank(&x, &y, Alternative::TwoSided).unwrap();
        assert!((two.p_value - 1.0014560968052422e-5).abs() < 1e-15);

        // Heavily tied |differences|.
        let x2: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y2: Vec<f64> = (0..30)
            .map(|i| x2[i as usize] + if i % 2 == 0 { 1.0 } else { -2.0 })
            .collect();
        let less = wilcoxon_signed_rank(&x2, &y2, Alternative::OneSidedLess).unwrap();
        assert!((less.p_value - 0.9917185217955935).abs() < 1e-12);
        let two = wilcoxon_signed_rank(&x2, &y2, Alternative::TwoSided).unwrap();
        assert!((two.p_value - 0.017545979051391658).abs() < 1e-12);

        // Mixed signs with tied magnitudes.
        let diffs = [
            3.0, -3.0, 5.0, 5.0, -2.0, 7.0, -7.0, 1.0, 4.0, -4.0, 6.0, 2.0, -5.0, 3.0, 8.0, -1.0,
            2.0, -6.0, 9.0, 4.0, -8.0, 10.0,
        ];
        let y3 = vec![0.0; diffs.len()];
        let less = wilcoxon_signed_rank(&diffs, &y3, Alternative::OneSidedLess).unwrap();
        assert!((less.p_value - 0.8975709988235093).abs() < 1e-12);
        let two = wilcoxon_signed_rank(&diffs, &y3, Alternative::TwoSided).unwrap();
        assert!((two.p_value - 0.21671018706283007).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
        assert!((normal_cdf(-1.959963984540054) - 0.025).abs() < 1e-12);
        assert!((normal_cdf(3.0) - 0.9986501019683699).abs() < 1e-12);
        // Frozen from an independent double-precision implementation.
        for (z, want) in [
            (0.1234, 0.5491048214630145),
            (-0.75, 0.2266273523768682),
            (1.5, 0.9331927987311419),
            (-2.25, 0.012224472655044727),
            (3.5, 0.9997673709209645),
            (-4.2, 1.3345749015902797e-5),
            (5.5, 0.9999999810104375),
        ] {
            let got = normal_cdf(z);
            assert!(
                (got - want).abs() <= 1e-12 * want.max(1e-6),
                "cdf({z}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn cliffs_delta_extremes_and_identity() {
        let (d, m) = cliffs_delta(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(m, Magnitude::Insignificant);
        let (d, m) = cliffs_delta(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(d, -1.0);
        assert_eq!(m, Magnitude::Large);
    }

    #[test]
    fn magnitude_labels_have_fixed_boundaries() {
        assert_eq!(magnitude(0.032), Magnitude::Insignificant);
        assert_eq!(magnitude(0.331), Magnitude::Small);
        assert_eq!(magnitude(-0.4), Magnitude::Medium);
        assert_eq!(magnitude(0.6), Magnitude::Large);
    }

    #[test]
    fn cliffs_delta_is_antisymmetric() {
        let x = [1.0, 4.0, 4.0, 9.0];
        let y = [2.0, 4.0, 8.0];
        let (dxy, _) = cliffs_delta(&x, &y).unwrap();
        let (dyx, _) = cliffs_delta(&y, &x).unwrap();
        assert_eq!(dxy, -dyx);
    }

    #[test]
    fn quartiles_interpolate_linearly() {
        let q = quartiles(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(q.min, 1.0);
        assert_eq!(q.q1, 1.75);
        assert_eq!(q.q2, 2.5);
        assert_eq!(q.q3, 3.25);
        let single = quartiles(&[7.0]).unwrap();
        assert_eq!(single.q1, 7.0);
        assert_eq!(single.q3, 7.0);
    }
}
