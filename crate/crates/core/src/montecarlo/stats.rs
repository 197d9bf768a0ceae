use super::frame::{run_adjustment_frame, Scenario, TrialRecord};
use crate::dist::{ref_coherent, ref_conventional, GriddedPdf};
use crate::{Error, Execution, Result};

/// Sorted sample with its empirical CDF.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

/// One histogram cell, density normalised to unit area.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub density: f64,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Degenerate("empty sample"));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::Degenerate("sample contains NaN"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalDistribution { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    /// `F(x) = #{X ≤ x}/N`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.len() as f64
    }

    /// Fraction of the sample strictly above `x`.
    pub fn fraction_above(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Inverse empirical CDF at `p` percent: the smallest sample with
    /// `F ≥ p/100`.
    pub fn percentile(&self, p: f64) -> f64 {
        let n = self.len();
        let rank = ((p / 100.0) * n as f64).ceil() as usize;
        self.sorted[rank.clamp(1, n) - 1]
    }

    pub fn histogram(&self, lo: f64, hi: f64, bins: usize) -> Vec<HistogramBin> {
        let bins = bins.max(1);
        let w = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &x in &self.sorted {
            if x >= lo && x <= hi {
                let k = (((x - lo) / w) as usize).min(bins - 1);
                counts[k] += 1;
            }
        }
        let n = self.len() as f64;
        counts
            .iter()
            .enumerate()
            .map(|(k, &c)| HistogramBin {
                lo: lo + k as f64 * w,
                hi: lo + (k + 1) as f64 * w,
                density: c as f64 / (n * w),
            })
            .collect()
    }

    /// Kolmogorov-Smirnov distance to a gridded law.
    pub fn ks_against(&self, pdf: &GriddedPdf) -> f64 {
        pdf.ks_statistic(&self.sorted)
    }

    /// Two-sample Kolmogorov-Smirnov distance.
    pub fn ks_two_sample(&self, other: &EmpiricalDistribution) -> f64 {
        let (a, b) = (&self.sorted, &other.sorted);
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / na - j as f64 / nb).abs());
        }
        d
    }
}

/// Runs `trials` independent frames. Trial `t` always uses stream `t`.
pub fn simulate(s: &Scenario, trials: usize, seed: u64, exec: Execution) -> Result<Vec<TrialRecord>> {
    s.validate()?;
    exec.map(trials, |t| run_adjustment_frame(s, seed, t as u64)).into_iter().collect()
}

/// Empirical law of `α_M` and of `α̃_M = α_M/M`.
#[derive(Clone, Debug)]
pub struct AlphaEstimate {
    pub helpers: usize,
    pub alpha: EmpiricalDistribution,
}

impl AlphaEstimate {
    pub fn from_records(helpers: usize, records: &[TrialRecord]) -> Result<Self> {
        Ok(AlphaEstimate {
            helpers,
            alpha: EmpiricalDistribution::new(records.iter().map(TrialRecord::alpha_final).collect())?,
        })
    }

    /// Percentile of the normalised ratio `α̃_M`.
    pub fn normalised_percentile(&self, p: f64) -> f64 {
        self.alpha.percentile(p) / self.helpers as f64
    }

    pub fn p10(&self) -> f64 {
        self.normalised_percentile(10.0)
    }

    pub fn p50(&self) -> f64 {
        self.normalised_percentile(50.0)
    }

    /// Histogram of `α_M` over `[0, M]`.
    pub fn histogram(&self, bins: usize) -> Vec<HistogramBin> {
        self.alpha.histogram(0.0, self.helpers as f64, bins)
    }
}

pub fn estimate_alpha_distribution(s: &Scenario, trials: usize, seed: u64, exec: Execution) -> Result<AlphaEstimate> {
    AlphaEstimate::from_records(s.helpers, &simulate(s, trials, seed, exec)?)
}

/// Empirical CDF of `ζ_pa` with the coherent and conventional markers.
#[derive(Clone, Debug)]
pub struct RefCdf {
    pub helpers: usize,
    pub zeta: EmpiricalDistribution,
    /// `∛(2M)`.
    pub coherent: f64,
    /// `∛(M+1)`.
    pub conventional: f64,
}

impl RefCdf {
    pub fn from_records(helpers: usize, records: &[TrialRecord]) -> Result<Self> {
        Ok(RefCdf {
            helpers,
            zeta: EmpiricalDistribution::new(records.iter().map(TrialRecord::zeta).collect())?,
            coherent: ref_coherent(helpers),
            conventional: ref_conventional(helpers),
        })
    }

    pub fn fraction_exceeding_conventional(&self) -> f64 {
        self.zeta.fraction_above(self.conventional)
    }

    /// `(ζ, F(ζ))` on `points` equispaced abscissae over `[0, ζ_coh]`.
    pub fn table(&self, points: usize) -> Vec<(f64, f64)> {
        let points = points.max(2);
        (0..points)
            .map(|k| {
                let z = self.coherent * k as f64 / (points - 1) as f64;
                (z, self.zeta.cdf(z))
            })
            .collect()
    }
}

pub fn ref_cdf(s: &Scenario, trials: usize, seed: u64, exec: Execution) -> Result<RefCdf> {
    RefCdf::from_records(s.helpers, &simulate(s, trials, seed, exec)?)
}

/// Bisection for the boundary of a monotone predicate on `[lo, hi]`.
///
/// `pred` must be false at `lo` and true at `hi` (or the reverse, see
/// `rising`); returns the point where it switches, to relative `rtol` on a
/// logarithmic scale. `None` if the endpoints do not bracket a switch.
pub fn bisect_log<F>(lo: f64, hi: f64, rtol: f64, rising: bool, mut pred: F) -> Result<Option<f64>>
where
    F: FnMut(f64) -> Result<bool>,
{
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid("bisection bracket", format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    if pred(a)? == rising || pred(b)? != rising {
        return Ok(None);
    }
    while b / a - 1.0 > rtol {
        let mid = (a * b).sqrt();
        if pred(mid)? == rising {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(Some(if rising { b } else { a }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_cdf_and_percentiles() {
        let e = EmpiricalDistribution::new((1..=100).rev().map(|k| k as f64).collect()).unwrap();
        assert_eq!(e.cdf(0.5), 0.0);
        assert_eq!(e.cdf(10.0), 0.1);
        assert_eq!(e.cdf(100.0), 1.0);
        assert_eq!(e.percentile(10.0), 10.0);
        assert_eq!(e.percentile(50.0), 50.0);
        assert_eq!(e.percentile(0.0), 1.0);
        assert_eq!(e.percentile(100.0), 100.0);
        let h = e.histogram(0.0, 100.0, 10);
        let area: f64 = h.iter().map(|b| b.density * (b.hi - b.lo)).sum();
        assert!((area - 1.0).abs() < 1e-12);
        assert!(EmpiricalDistribution::new(vec![]).is_err());
    }

    #[test]
    fn two_sample_ks() {
        let a = EmpiricalDistribution::new((0..100).map(|k| k as f64).collect()).unwrap();
        assert_eq!(a.ks_two_sample(&a), 0.0);
        let b = EmpiricalDistribution::new((50..150).map(|k| k as f64).collect()).unwrap();
        assert!((a.ks_two_sample(&b) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn noise_free_percentiles_are_one() {
        let est = estimate_alpha_distribution(&Scenario::normalised(4, f64::INFINITY), 100, 1, Execution::Sequential)
            .unwrap();
        assert!((est.p10() - 1.0).abs() < 1e-12 && (est.p50() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bisection_finds_threshold() {
        let t = bisect_log(1e-3, 1e3, 1e-9, true, |x| Ok(x > 2.5)).unwrap().unwrap();
        assert!((t / 2.5 - 1.0).abs() < 1e-8);
        let t = bisect_log(1e-3, 1e3, 1e-9, false, |x| Ok(x < 2.5)).unwrap().unwrap();
        assert!((t / 2.5 - 1.0).abs() < 1e-8);
        assert!(bisect_log(1.0, 2.0, 1e-6, true, |_| Ok(true)).unwrap().is_none());
    }

    #[test]
    fn parallel_equals_sequential() {
        let s = Scenario::normalised(4, 1.0);
        let a = simulate(&s, 300, 5, Execution::Sequential).unwrap();
        let b = simulate(&s, 300, 5, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
