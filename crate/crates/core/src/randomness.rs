//! Seeded sub-Gaussian ensembles, row selections and binary test signals.
//!
//! Every random draw comes from a ChaCha8 stream keyed by a base seed, a
//! purpose tag and a tuple of integer labels (typically `s`, `M` and the
//! trial index). Identical keys give identical streams on every platform;
//! distinct keys give unrelated streams, so trials can run in any order.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::signal::BinarySignal;

pub type StreamRng = ChaCha8Rng;

/// Law of the generator entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ensemble {
    /// `N(0, σ²)`
    Gaussian { sigma: f64 },
    /// `±a` with equal probability.
    Rademacher { amplitude: f64 },
    /// `0/1` with equal probability, split into bias `1/2` plus a centered
    /// Rademacher part of amplitude `1/2`.
    Bernoulli01,
}

impl Ensemble {
    /// Mean of the raw law (the part that is moved into the bias).
    pub fn mean(&self) -> f64 {
        match self {
            Ensemble::Gaussian { .. } | Ensemble::Rademacher { .. } => 0.0,
            Ensemble::Bernoulli01 => 0.5,
        }
    }

    /// Standard deviation of each entry.
    pub fn sigma(&self) -> f64 {
        match *self {
            Ensemble::Gaussian { sigma } => sigma,
            Ensemble::Rademacher { amplitude } => amplitude.abs(),
            Ensemble::Bernoulli01 => 0.5,
        }
    }

    /// Sub-Gaussian norm `sup_{p>=1} p^{-1/2} (E|X|^p)^{1/p}` of the
    /// centered part.
    ///
    /// For `|X| = a` almost surely the supremum is attained at `p = 1` and
    /// equals `a`. For `N(0, σ²)` the sequence decreases in `p`, so the
    /// supremum is `E|X| = σ·sqrt(2/π)`.
    pub fn subgauss_norm(&self) -> f64 {
        match *self {
            Ensemble::Gaussian { sigma } => sigma * (2.0 / PI).sqrt(),
            Ensemble::Rademacher { amplitude } => amplitude.abs(),
            Ensemble::Bernoulli01 => 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Ensemble::Gaussian { sigma } => sigma.is_finite() && sigma >= 0.0,
            Ensemble::Rademacher { amplitude } => amplitude.is_finite(),
            Ensemble::Bernoulli01 => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid ensemble parameters {self}")))
        }
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ensemble::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
            Ensemble::Rademacher { amplitude } => write!(f, "rademacher:{amplitude}"),
            Ensemble::Bernoulli01 => f.write_str("bernoulli01"),
        }
    }
}

impl FromStr for Ensemble {
    type Err = Error;

    /// Accepts `gaussian[:sigma]`, `rademacher[:amplitude]`, `bernoulli01`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let has_param = param.is_some();
        let param = |default: f64| -> Result<f64> {
            match param {
                None => Ok(default),
                Some(p) => p
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad ensemble parameter `{p}`"))),
            }
        };
        let e = match name {
            "gaussian" => Ensemble::Gaussian { sigma: param(1.0)? },
            "rademacher" => Ensemble::Rademacher {
                amplitude: param(1.0)?,
            },
            "bernoulli01" if !has_param => Ensemble::Bernoulli01,
            _ => return Err(Error::invalid(format!("unknown ensemble `{s}`"))),
        };
        e.validate()?;
        Ok(e)
    }
}

/// What a stream is used for; part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Generator,
    Selection,
    Signal,
    Noise,
    Other(u64),
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Generator => 0x6765_6e65_7261_746f,
            Stream::Selection => 0x7365_6c65_6374_696f,
            Stream::Signal => 0x7369_676e_616c_0000,
            Stream::Noise => 0x6e6f_6973_6500_0000,
            Stream::Other(t) => t.rotate_left(17) ^ 0x6f74_6865_7200_0000,
        }
    }
}

/// Base seed of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed {
    pub base: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Seed {
    pub fn new(base: u64) -> Self {
        Self { base }
    }

    /// Mixes the base seed with a purpose tag and labels into one key.
    pub fn key(&self, stream: Stream, labels: &[u64]) -> u64 {
        let mut h = splitmix64(self.base ^ splitmix64(stream.tag()));
        for (pos, &l) in labels.iter().enumerate() {
            h = splitmix64(h ^ splitmix64(l.wrapping_add((pos as u64 + 1) << 56)));
        }
        h
    }

    pub fn rng(&self, stream: Stream, labels: &[u64]) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.key(stream, labels))
    }
}

/// A generator draw: centered entries plus the mean that was split off.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSample {
    pub centered: Vec<f64>,
    pub bias: f64,
}

pub fn sample_generator(
    ensemble: &Ensemble,
    length: usize,
    rng: &mut impl Rng,
) -> Result<GeneratorSample> {
    if length == 0 {
        return Err(Error::EmptyGenerator);
    }
    ensemble.validate()?;
    let centered = match *ensemble {
        Ensemble::Gaussian { sigma } => (0..length)
            .map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, rng))
            .collect::<Vec<f64>>(),
        Ensemble::Rademacher { amplitude } => (0..length)
            .map(|_| if rng.random::<bool>() { amplitude } else { -amplitude })
            .collect(),
        Ensemble::Bernoulli01 => (0..length)
            .map(|_| if rng.random::<bool>() { 0.5 } else { -0.5 })
            .collect(),
    };
    Ok(GeneratorSample {
        centered,
        bias: ensemble.mean(),
    })
}

/// Uniform `m`-subset of `{0..n-1}` by a partial Fisher-Yates shuffle,
/// returned in ascending order.
pub fn sample_selection(n: usize, m: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
    if m > n {
        return Err(Error::invalid(format!("cannot select {m} of {n} rows")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.random_range(i..n);
        perm.swap(i, j);
    }
    perm.truncate(m);
    perm.sort_unstable();
    Ok(perm)
}

/// Binary vector with exactly `s` ones at a uniformly random support.
pub fn sample_binary_signal(n: usize, s: usize, rng: &mut impl Rng) -> Result<BinarySignal> {
    if s > n {
        return Err(Error::invalid(format!("sparsity {s} exceeds dimension {n}")));
    }
    BinarySignal::from_support(n, sample_selection(n, s, rng)?)
}

/// Gaussian direction rescaled to Euclidean norm exactly `eta`.
pub fn sample_noise(m: usize, eta: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::invalid(format!("noise level must be >= 0, got {eta}")));
    }
    if eta == 0.0 || m == 0 {
        return Ok(vec![0.0; m]);
    }
    loop {
        let v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        let norm = crate::linalg::norm2(&v);
        if norm > 0.0 {
            return Ok(v.into_iter().map(|x| x * eta / norm).collect());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rademacher_support() {
        let mut rng = Seed::new(7).rng(Stream::Generator, &[1]);
        let g = sample_generator(&Ensemble::Rademacher { amplitude: 1.0 }, 4, &mut rng).unwrap();
        assert!(g.centered.iter().all(|&v| v == 1.0 || v == -1.0));
        assert_eq!(g.bias, 0.0);
    }

    #[test]
    fn bernoulli_is_split() {
        let mut rng = Seed::new(7).rng(Stream::Generator, &[2]);
        let g = sample_generator(&Ensemble::Bernoulli01, 64, &mut rng).unwrap();
        assert_eq!(g.bias, 0.5);
        assert!(g.centered.iter().all(|&v| v == 0.5 || v == -0.5));
    }

    #[test]
    fn gaussian_moments() {
        let n = 100_000;
        let mut rng = Seed::new(11).rng(Stream::Generator, &[]);
        let g = sample_generator(&Ensemble::Gaussian { sigma: 1.0 }, n, &mut rng).unwrap();
        let mean = g.centered.iter().sum::<f64>() / n as f64;
        let var = g.centered.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() <= 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() <= 0.05, "var {var}");
    }

    #[test]
    fn same_key_same_stream() {
        let seed = Seed::new(99);
        let e = Ensemble::Gaussian { sigma: 2.0 };
        let a = sample_generator(&e, 32, &mut seed.rng(Stream::Generator, &[3, 4, 5])).unwrap();
        let b = sample_generator(&e, 32, &mut seed.rng(Stream::Generator, &[3, 4, 5])).unwrap();
        assert_eq!(a, b);
        let c = sample_generator(&e, 32, &mut seed.rng(Stream::Generator, &[3, 4, 6])).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn keys_depend_on_label_position() {
        let seed = Seed::new(1);
        assert_ne!(
            seed.key(Stream::Signal, &[1, 2]),
            seed.key(Stream::Signal, &[2, 1])
        );
        assert_ne!(seed.key(Stream::Signal, &[0]), seed.key(Stream::Signal, &[]));
        assert_ne!(seed.key(Stream::Signal, &[5]), seed.key(Stream::Noise, &[5]));
    }

    #[test]
    fn zero_length_generator_is_rejected() {
        let mut rng = Seed::new(0).rng(Stream::Generator, &[]);
        assert!(sample_generator(&Ensemble::Bernoulli01, 0, &mut rng).is_err());
    }

    #[test]
    fn selection_examples() {
        let mut rng = Seed::new(5).rng(Stream::Selection, &[]);
        assert_eq!(sample_selection(6, 6, &mut rng).unwrap(), vec![0, 1, 2, 3, 4, 5]);
        let a = sample_selection(10, 3, &mut Seed::new(5).rng(Stream::Selection, &[1])).unwrap();
        let b = sample_selection(10, 3, &mut Seed::new(5).rng(Stream::Selection, &[1])).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(sample_selection(3, 4, &mut rng).is_err());
    }

    #[test]
    fn selection_frequencies_are_uniform() {
        // each index of {0..19} lands in a 5-subset with probability 1/4
        let draws = 100_000;
        let mut counts = [0usize; 20];
        let mut rng = Seed::new(2024).rng(Stream::Selection, &[]);
        for _ in 0..draws {
            for i in sample_selection(20, 5, &mut rng).unwrap() {
                counts[i] += 1;
            }
        }
        let p = 0.25;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / draws as f64;
            assert!((freq - p).abs() <= 4.0 * se, "index {i}: {freq}");
        }
    }

    #[test]
    fn signal_examples() {
        let mut rng = Seed::new(3).rng(Stream::Signal, &[]);
        assert_eq!(sample_binary_signal(5, 0, &mut rng).unwrap(), BinarySignal::zeros(5));
        assert_eq!(sample_binary_signal(5, 5, &mut rng).unwrap(), BinarySignal::ones(5));
        let a = sample_binary_signal(8, 3, &mut Seed::new(3).rng(Stream::Signal, &[8])).unwrap();
        let b = sample_binary_signal(8, 3, &mut Seed::new(3).rng(Stream::Signal, &[8])).unwrap();
        assert_eq!(a.sparsity(), 3);
        assert_eq!(a.to_f64().iter().filter(|&&v| v == 1.0).count(), 3);
        assert_eq!(a, b);
        assert!(sample_binary_signal(3, 4, &mut rng).is_err());
    }

    #[test]
    fn noise_has_exact_norm() {
        let mut rng = Seed::new(8).rng(Stream::Noise, &[]);
        let v = sample_noise(50, 0.1, &mut rng).unwrap();
        assert!((crate::linalg::norm2(&v) - 0.1).abs() < 1e-15);
        assert_eq!(sample_noise(4, 0.0, &mut rng).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn reported_moments_match_laws() {
        assert_eq!(Ensemble::Rademacher { amplitude: 1.0 }.subgauss_norm(), 1.0);
        assert_eq!(Ensemble::Rademacher { amplitude: 1.0 }.sigma(), 1.0);
        assert_eq!(Ensemble::Bernoulli01.mean(), 0.5);
        assert_eq!(Ensemble::Bernoulli01.sigma(), 0.5);
        assert_eq!(Ensemble::Bernoulli01.subgauss_norm(), 0.5);

        // Gaussian: sup over p of p^{-1/2} (E|X|^p)^{1/p}, with
        // E|X|^p = σ^p 2^{p/2} Γ((p+1)/2) / sqrt(π), scanned on a grid.
        fn ln_gamma(x: f64) -> f64 {
            // Lanczos, g = 7
            const C: [f64; 9] = [
                0.999_999_999_999_809_9,
                676.520_368_121_885_1,
                -1_259.139_216_722_402_8,
                771.323_428_777_653_1,
                -176.615_029_162_140_6,
                12.507_343_278_686_905,
                -0.138_571_095_265_720_12,
                9.984_369_578_019_572e-6,
                1.505_632_735_149_311_6e-7,
            ];
            let x = x - 1.0;
            let mut a = C[0];
            let t = x + 7.5;
            for (i, c) in C.iter().enumerate().skip(1) {
                a += c / (x + i as f64);
            }
            0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
        }
        let sigma: f64 = 1.7;
        let mut best: f64 = 0.0;
        for k in 0..2000 {
            let p = 1.0 + k as f64 * 0.01;
            let ln_moment = p * sigma.ln() + 0.5 * p * 2f64.ln() + ln_gamma((p + 1.0) / 2.0)
                - 0.5 * PI.ln();
            best = best.max((ln_moment / p).exp() / p.sqrt());
        }
        let reported = Ensemble::Gaussian { sigma }.subgauss_norm();
        assert!((best - reported).abs() < 1e-9, "{best} vs {reported}");
    }

    #[test]
    fn streams_are_uncorrelated() {
        let n = 100_000;
        let e = Ensemble::Gaussian { sigma: 1.0 };
        let seed = Seed::new(77);
        let a = sample_generator(&e, n + 1, &mut seed.rng(Stream::Generator, &[1, 2, 3])).unwrap();
        let b = sample_generator(&e, n + 1, &mut seed.rng(Stream::Generator, &[1, 2, 4])).unwrap();
        let corr = |x: &[f64], y: &[f64]| {
            let mx = x.iter().sum::<f64>() / x.len() as f64;
            let my = y.iter().sum::<f64>() / y.len() as f64;
            let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
            let sxx: f64 = x.iter().map(|u| (u - mx).powi(2)).sum();
            let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
            sxy / (sxx * syy).sqrt()
        };
        let bound = 4.0 / (n as f64).sqrt();
        // lag 0 and lag 1 cross-correlation between the two streams
        assert!(corr(&a.centered[..n], &b.centered[..n]).abs() < bound);
        assert!(corr(&a.centered[1..], &b.centered[..n]).abs() < bound);
        assert!(corr(&a.centered[..n], &b.centered[1..]).abs() < bound);
    }

    #[test]
    fn ensemble_parsing() {
        assert_eq!(
            "gaussian:2".parse::<Ensemble>().unwrap(),
            Ensemble::Gaussian { sigma: 2.0 }
        );
        assert_eq!(
            "rademacher".parse::<Ensemble>().unwrap(),
            Ensemble::Rademacher { amplitude: 1.0 }
        );
        assert_eq!("bernoulli01".parse::<Ensemble>().unwrap(), Ensemble::Bernoulli01);
        assert!("cauchy".parse::<Ensemble>().is_err());
        assert!("gaussian:-1".parse::<Ensemble>().is_err());
        for e in [
            Ensemble::Gaussian { sigma: 0.5 },
            Ensemble::Rademacher { amplitude: 1.0 },
            Ensemble::Bernoulli01,
        ] {
            assert_eq!(e.to_string().parse::<Ensemble>().unwrap(), e);
        }
    }
}
