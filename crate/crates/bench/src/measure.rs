//! Wall-clock sampling and the small amount of statistics the reports need.

use std::time::Instant;

/// Milliseconds spent in `f`, plus its output.
pub fn time_ms<T>(f: impl FnOnce() -> T) -> (f64, T) {
    let start = Instant::now();
    let out = f();
    (start.elapsed().as_secs_f64() * 1e3, out)
}

/// Median of a non-empty sample (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

/// How many times a measured region runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampler {
    pub reps: usize,
    /// Untimed runs before the timed ones.
    pub warmup: usize,
}

impl Sampler {
    pub fn new(reps: usize, warmup: usize) -> Self {
        Self {
            reps: reps.max(1),
            warmup,
        }
    }

    /// A single reading is reported as is; anything fewer than this many
    /// runs is flagged in reports.
    pub const SMOOTHED_MIN: usize = 5;

    pub fn smoothed(&self) -> bool {
        self.reps >= Self::SMOOTHED_MIN
    }

    /// Runs `f` `warmup + reps` times and returns the timed readings together
    /// with the output of the last run.
    pub fn run<T>(&self, mut f: impl FnMut() -> T) -> (Vec<f64>, T) {
        for _ in 0..self.warmup {
            std::hint::black_box(f());
        }
        let mut readings = Vec::with_capacity(self.reps);
        let mut last = None;
        for _ in 0..self.reps {
            let (ms, out) = time_ms(&mut f);
            readings.push(ms);
            last = Some(out);
        }
        (readings, last.expect("at least one repetition"))
    }

    /// Like [`run`](Self::run) for two regions, alternating between them so
    /// slow drift in machine speed lands on both equally.
    pub fn run_pair<A, B>(
        &self,
        mut f: impl FnMut() -> A,
        mut g: impl FnMut() -> B,
    ) -> ((Vec<f64>, A), (Vec<f64>, B)) {
        for _ in 0..self.warmup {
            std::hint::black_box(f());
            std::hint::black_box(g());
        }
        let (mut fa, mut ga) = (Vec::with_capacity(self.reps), Vec::with_capacity(self.reps));
        let (mut last_f, mut last_g) = (None, None);
        for _ in 0..self.reps {
            let (ms, out) = time_ms(&mut f);
            fa.push(ms);
            last_f = Some(out);
            let (ms, out) = time_ms(&mut g);
            ga.push(ms);
            last_g = Some(out);
        }
        (
            (fa, last_f.expect("at least one repetition")),
            (ga, last_g.expect("at least one repetition")),
        )
    }
}

/// Ordinary least squares `y = slope * x + intercept` with the coefficient
/// of determination.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Some(LinearFit {
        slope,
        intercept,
        r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even_samples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&[7.0]), 7.0);
    }

    #[test]
    fn exact_line_has_unit_r2() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept + 1.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_against_hand_computed_values() {
        // x = 0..3, y = (1, 3, 2, 6): slope 1.4, intercept 0.9,
        // residuals (0.1, 0.7, -1.7, 0.9), SS_res = 4.2, SS_tot = 14.
        let fit = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 6.0]).unwrap();
        assert!((fit.slope - 1.4).abs() < 1e-12);
        assert!((fit.intercept - 0.9).abs() < 1e-12);
        assert!((fit.r2 - 0.7).abs() < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }

    #[test]
    fn sampler_discards_warmup() {
        let mut calls = 0;
        let (readings, last) = Sampler::new(3, 2).run(|| {
            calls += 1;
            calls
        });
        assert_eq!(readings.len(), 3);
        assert_eq!(last, 5);
        assert!(!Sampler::new(1, 0).smoothed());
        assert!(Sampler::new(5, 0).smoothed());
    }

    #[test]
    fn paired_runs_alternate() {
        let order = std::cell::RefCell::new(Vec::new());
        let ((a, _), (b, last_b)) = Sampler::new(2, 1).run_pair(
            || order.borrow_mut().push('f'),
            || {
                order.borrow_mut().push('g');
                order.borrow().len()
            },
        );
        assert_eq!((a.len(), b.len()), (2, 2));
        assert_eq!(last_b, 6);
        assert_eq!(order.into_inner(), ['f', 'g', 'f', 'g', 'f', 'g']);
    }
}
