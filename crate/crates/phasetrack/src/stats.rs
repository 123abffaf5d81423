//! Small sample-statistics toolbox shared by the Monte Carlo harness and
//! the test suites: moments, auto/cross correlation, an exponential
//! correlation-time fit, and a streaming Welch periodogram.

use rustfft::{num_complex::Complex, FftPlanner};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divides by n).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (divides by n - 1).
pub fn sample_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}

/// Biased sample autocovariance at the given lag.
pub fn autocovariance(xs: &[f64], lag: usize) -> f64 {
    let m = mean(xs);
    let n = xs.len();
    assert!(lag < n);
    let mut acc = 0.0;
    for k in 0..n - lag {
        acc += (xs[k] - m) * (xs[k + lag] - m);
    }
    acc / (n - lag) as f64
}

/// Normalized autocorrelation at the given lag.
pub fn autocorrelation(xs: &[f64], lag: usize) -> f64 {
    autocovariance(xs, lag) / autocovariance(xs, 0)
}

/// Correlation time of an exponentially decaying autocorrelation,
/// estimated by a log-linear least-squares fit over lags where the
/// empirical autocorrelation is still clearly positive.
///
/// Returns the fitted time constant in seconds.
pub fn exponential_correlation_time(xs: &[f64], dt: f64, max_lag: usize) -> f64 {
    let c0 = autocovariance(xs, 0);
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for lag in 1..=max_lag {
        let rho = autocovariance(xs, lag) / c0;
        if rho < 0.05 {
            break;
        }
        ts.push(lag as f64 * dt);
        ys.push(rho.ln());
    }
    if ts.len() < 2 {
        // decay faster than one lag: bound by dt
        return dt;
    }
    // fit ln rho = a + b t, return -1/b
    let tm = mean(&ts);
    let ym = mean(&ys);
    let sxy: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
    -sxx / sxy
}

/// Lag (in steps, possibly negative) at which the cross-correlation of
/// `a` against `b` peaks: positive lag means `b` trails `a`.
pub fn cross_correlation_peak_lag(a: &[f64], b: &[f64], max_lag: usize) -> i64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let ma = mean(a);
    let mb = mean(b);
    let mut best_lag = 0i64;
    let mut best = f64::NEG_INFINITY;
    for lag in -(max_lag as i64)..=(max_lag as i64) {
        let mut acc = 0.0;
        let mut cnt = 0usize;
        for k in 0..n {
            let j = k as i64 + lag;
            if j < 0 || j >= n as i64 {
                continue;
            }
            acc += (a[k] - ma) * (b[j as usize] - mb);
            cnt += 1;
        }
        let c = acc / cnt as f64;
        if c > best {
            best = c;
            best_lag = lag;
        }
    }
    best_lag
}

/// Streaming Welch periodogram over non-overlapping rectangular segments
/// of increment samples.
///
/// Input segments hold increments over steps of size `dt`; the estimate is
/// normalized so a white sequence with variance `dt` has unit PSD at all
/// frequencies. Frequencies are `omega_j = 2 pi j / (segment_len * dt)`.
pub struct WelchAccumulator {
    segment_len: usize,
    dt: f64,
    acc: Vec<f64>,
    count: usize,
    planner: FftPlanner<f64>,
}

impl WelchAccumulator {
    pub fn new(segment_len: usize, dt: f64) -> Self {
        Self {
            segment_len,
            dt,
            acc: vec![0.0; segment_len / 2 + 1],
            count: 0,
            planner: FftPlanner::new(),
        }
    }

    pub fn add_segment(&mut self, xs: &[f64]) {
        assert_eq!(xs.len(), self.segment_len);
        let fft = self.planner.plan_fft_forward(self.segment_len);
        let mut buf: Vec<Complex<f64>> = xs.iter().map(|&x| Complex::new(x, 0.0)).collect();
        fft.process(&mut buf);
        let norm = 1.0 / (self.segment_len as f64 * self.dt);
        for (j, a) in self.acc.iter_mut().enumerate() {
            *a += buf[j].norm_sqr() * norm;
        }
        self.count += 1;
    }

    /// Averaged PSD estimate; index `j` is angular frequency
    /// `2 pi j / (segment_len * dt)`.
    pub fn finalize(self) -> Vec<f64> {
        let c = self.count as f64;
        self.acc.iter().map(|a| a / c).collect()
    }

    pub fn omega(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / (self.segment_len as f64 * self.dt)
    }
}
