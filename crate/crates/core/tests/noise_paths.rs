use jumpsde::noise::{CompoundPoissonPath, NoiseError};
use jumpsde::{sample_path, AmplitudeDistribution};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

fn distributions() -> impl Strategy<Value = AmplitudeDistribution> {
    prop_oneof![
        Just(AmplitudeDistribution::default()),
        (-1.0f64..1.0, 0.1f64..3.0)
            .prop_map(|(mean, std)| AmplitudeDistribution::Normal { mean, std }),
        (-2.0f64..2.0).prop_map(AmplitudeDistribution::Constant),
        (0.5f64..4.0).prop_map(|rate| AmplitudeDistribution::Exponential { rate }),
        (-2.0f64..0.0, 0.1f64..2.0).prop_map(|(lo, hi)| AmplitudeDistribution::Uniform { lo, hi }),
    ]
}

proptest! {
    #[test]
    fn terminal_value_is_sum_of_amplitudes(seed: u64, intensity in 0.0f64..40.0, horizon in 0.1f64..3.0, dist in distributions()) {
        let p = sample_path(intensity, horizon, dist, seed).unwrap();
        let sum = p.amplitudes().iter().fold(0.0, |acc, r| acc + r);
        prop_assert_eq!(p.c_value(horizon).unwrap(), sum);
        prop_assert_eq!(p.c_value(0.0).unwrap(), 0.0);
    }

    #[test]
    fn c_is_piecewise_constant_and_right_continuous(seed: u64, dist in distributions(), frac in 0.0f64..1.0) {
        let p = sample_path(10.0, 1.0, dist, seed).unwrap();
        let times = p.jump_times();
        prop_assert!(times.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(times.iter().all(|&t| t > 0.0 && t < 1.0));
        for k in 0..times.len() {
            let next = times.get(k + 1).copied().unwrap_or(1.0);
            let between = times[k] + frac * (next - times[k]);
            prop_assert_eq!(p.c_value(between).unwrap(), p.c_value(times[k]).unwrap());
            prop_assert_eq!(p.increment(times[k]), p.amplitudes()[k]);
            prop_assert_eq!(
                p.c_value(times[k]).unwrap() - p.c_left_limit(times[k]).unwrap(),
                p.c_value(times[k]).unwrap() - p.c_value(if k == 0 { 0.0 } else { times[k - 1] }).unwrap()
            );
        }
        if !times.is_empty() {
            let before = times[0] * frac;
            prop_assert_eq!(p.c_value(before).unwrap(), 0.0);
        }
    }

    #[test]
    fn resampling_is_bit_identical(seed: u64, dist in distributions()) {
        let a = sample_path(10.0, 1.0, dist, seed).unwrap();
        let b = sample_path(10.0, 1.0, dist, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn csv_round_trip_replays_sampling(seed: u64, dist in distributions()) {
        let p = sample_path(10.0, 1.0, dist, seed).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let back = CompoundPoissonPath::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, p);
    }
}

#[test]
fn explicit_paths_round_trip_through_csv() {
    let p = CompoundPoissonPath::from_jumps(2.0, &[(0.3, 1.5), (0.7, -0.5), (2.0, 0.1)]).unwrap();
    let mut buf = Vec::new();
    p.write_csv(&mut buf).unwrap();
    assert_eq!(CompoundPoissonPath::read_csv(buf.as_slice()).unwrap(), p);
    assert_eq!(p.c_value(0.7).unwrap(), 1.0);
    assert!(matches!(
        p.c_value(2.5),
        Err(NoiseError::TimeOutOfRange { .. })
    ));
}

struct Moments {
    mean_count: f64,
    mean: f64,
    variance: f64,
    n: f64,
}

fn moments(samples: impl Iterator<Item = (usize, f64)>) -> Moments {
    let pairs: Vec<(usize, f64)> = samples.collect();
    let n = pairs.len() as f64;
    let mean_count = pairs.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let mean = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let variance = pairs.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Moments {
        mean_count,
        mean,
        variance,
        n,
    }
}

/// Independent sampler: exponential inter-arrival times from ChaCha8.
fn brute_force_c1(rng: &mut ChaCha8Rng, intensity: f64) -> (usize, f64) {
    let gaps = Exp::new(intensity).unwrap();
    let amp = Normal::new(0.0, 1.0).unwrap();
    let mut t: f64 = gaps.sample(rng);
    let (mut count, mut c) = (0, 0.0);
    while t <= 1.0 {
        count += 1;
        c += amp.sample(rng);
        t += gaps.sample(rng);
    }
    (count, c)
}

#[test]
fn compound_poisson_moments_agree_with_brute_force_sampling() {
    let n = 10_000;
    let ours = moments((0..n).map(|seed| {
        let p = sample_path(10.0, 1.0, AmplitudeDistribution::default(), seed).unwrap();
        (p.len(), p.c_value(1.0).unwrap())
    }));
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let oracle = moments((0..n).map(|_| brute_force_c1(&mut rng, 10.0)));

    for m in [&ours, &oracle] {
        assert!(
            (m.mean_count - 10.0).abs() <= 3.0 * (10.0 / m.n).sqrt(),
            "count {}",
            m.mean_count
        );
        assert!(m.mean.abs() <= 4.0 * (10.0 / m.n).sqrt(), "mean {}", m.mean);
        assert!((m.variance - 10.0).abs() <= 1.0, "variance {}", m.variance);
    }
    // Var(s²) ≈ (μ4 − σ⁴)/n with μ4 = λE[R⁴] + 3λ² = 330 for λ = 10.
    let se_diff = (2.0 * 230.0 / n as f64).sqrt();
    assert!((ours.variance - oracle.variance).abs() <= 4.0 * se_diff);
}
