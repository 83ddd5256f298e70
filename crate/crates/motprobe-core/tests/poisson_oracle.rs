//! The SPCM sampler against a from-scratch re-implementation of its
//! documented algorithm, plus mean/variance checks across the rate range.

use motprobe_core::detector::{spcm_sample, SpcmSpec};
use motprobe_core::rng::SplitMix64;

/// Independent SplitMix64: same published constants, written fresh here.
struct OracleRng {
    state: u64,
}

impl OracleRng {
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / 9007199254740992.0 // 2^53
    }
}

/// The documented sampler: sequential-search inversion below mean 30,
/// rounded normal approximation at or above it.
fn oracle_poisson(mean: f64, rng: &mut OracleRng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 30.0 {
        let u = rng.unit();
        let mut k = 0u64;
        let mut pmf = (-mean).exp();
        let mut cdf = pmf;
        while u > cdf {
            k += 1;
            pmf *= mean / k as f64;
            cdf += pmf;
            if pmf == 0.0 {
                break;
            }
        }
        k
    } else {
        let u1 = rng.unit();
        let u2 = rng.unit();
        let z = (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        let v = (mean + z * mean.sqrt()).round();
        if v < 0.0 {
            0
        } else {
            v as u64
        }
    }
}

#[test]
fn sampler_matches_oracle_value_for_value_low_mean() {
    // mean 10 with a 1 s gate: the sequential-search branch
    let spec = SpcmSpec::<f64> {
        gate_time_s: 1.0,
        ..SpcmSpec::paper_default()
    };
    let mut lib_rng = SplitMix64::new(8675309);
    let mut oracle_rng = OracleRng { state: 8675309 };
    for draw in 0..100 {
        let got = spcm_sample(10.0, &spec, &mut lib_rng).unwrap();
        let want = oracle_poisson(10.0, &mut oracle_rng);
        assert_eq!(got, want, "draw {draw}");
    }
}

#[test]
fn sampler_matches_oracle_value_for_value_high_mean() {
    let spec = SpcmSpec::<f64> {
        gate_time_s: 1.0,
        ..SpcmSpec::paper_default()
    };
    let mut lib_rng = SplitMix64::new(424242);
    let mut oracle_rng = OracleRng { state: 424242 };
    for draw in 0..100 {
        let got = spcm_sample(6.1e4, &spec, &mut lib_rng).unwrap();
        let want = oracle_poisson(6.1e4, &mut oracle_rng);
        assert_eq!(got, want, "draw {draw}");
    }
}

#[test]
fn mean_and_variance_track_poisson_across_the_range() {
    let spec = SpcmSpec::<f64> {
        gate_time_s: 1.0,
        ..SpcmSpec::paper_default()
    };
    let n = 10_000usize;
    for (seed, mean) in [(1u64, 1.0), (2, 10.0), (3, 100.0), (4, 1.0e3), (5, 1.0e4), (6, 1.0e5)] {
        let mut rng = SplitMix64::new(seed);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let k = spcm_sample(mean, &spec, &mut rng).unwrap() as f64;
            sum += k;
            sum_sq += k * k;
        }
        let sample_mean = sum / n as f64;
        let sample_var = sum_sq / n as f64 - sample_mean * sample_mean;
        assert!(
            (sample_mean - mean).abs() / mean < 0.05,
            "mean {mean}: sample mean {sample_mean}"
        );
        assert!(
            (sample_var - mean).abs() / mean < 0.05,
            "mean {mean}: sample variance {sample_var}"
        );
    }
}

#[test]
fn counts_are_nonnegative_integers_by_construction() {
    // the return type is already integral; check the zero floor at high noise
    let spec = SpcmSpec::<f64> {
        gate_time_s: 1.0,
        ..SpcmSpec::paper_default()
    };
    let mut rng = SplitMix64::new(7);
    for _ in 0..10_000 {
        let _ = spcm_sample(30.0, &spec, &mut rng).unwrap(); // normal branch near zero
    }
}
