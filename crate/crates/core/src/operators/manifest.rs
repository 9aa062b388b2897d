//! Plain-text operator manifest.
//!
//! ```text
//! circulant|toeplitz N M mu sigma R seed
//! <generator values, whitespace separated>
//! <theta indices, whitespace separated>
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! `parse(write(op))` reproduces every generator value bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::{GeneratorSpec, MeasurementOperator, OperatorKind};
use crate::error::{Error, Result};

pub fn to_manifest(op: &MeasurementOperator) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{} {} {} {} {} {} {}",
        op.kind(),
        op.n(),
        op.m(),
        op.mu(),
        op.sigma(),
        op.subgauss_norm(),
        op.seed()
    )
    .unwrap();
    out.push_str(&join(op.generator().iter()));
    out.push('\n');
    out.push_str(&join(op.theta().as_slice().iter()));
    out.push('\n');
    out
}

fn join<T: std::fmt::Display>(items: impl Iterator<Item = T>) -> String {
    items.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(line: usize, name: &str, raw: Option<&str>) -> Result<T> {
    let raw = raw.ok_or_else(|| parse_err(line, format!("missing field `{name}`")))?;
    raw.parse()
        .map_err(|_| parse_err(line, format!("bad value `{raw}` for `{name}`")))
}

pub fn from_manifest(text: &str) -> Result<MeasurementOperator> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| parse_err(1, "empty manifest"))?;
    let mut parts = header.split_whitespace();
    let kind: OperatorKind = field(1, "kind", parts.next())?;
    let n: usize = field(1, "N", parts.next())?;
    let m: usize = field(1, "M", parts.next())?;
    let mu: f64 = field(1, "mu", parts.next())?;
    let sigma: f64 = field(1, "sigma", parts.next())?;
    let r: f64 = field(1, "R", parts.next())?;
    let seed: u64 = field(1, "seed", parts.next())?;
    if parts.next().is_some() {
        return Err(parse_err(1, "trailing fields in header"));
    }

    let generator: Vec<f64> = lines
        .next()
        .ok_or_else(|| parse_err(2, "missing generator line"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(2, format!("bad float `{t}`"))))
        .collect::<Result<_>>()?;
    let theta: Vec<usize> = match lines.next() {
        Some(l) => l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(3, format!("bad index `{t}`"))))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    if theta.len() != m {
        return Err(parse_err(
            3,
            format!("header declares M = {m} but {} indices follow", theta.len()),
        ));
    }

    let op = match kind {
        OperatorKind::Circulant => {
            if generator.len() != n {
                return Err(parse_err(
                    2,
                    format!("expected {n} generator values, got {}", generator.len()),
                ));
            }
            MeasurementOperator::circulant(generator, &theta, mu)?
        }
        OperatorKind::Toeplitz => MeasurementOperator::toeplitz_with_dim(n, generator, &theta, mu)?,
    };
    Ok(op.with_statistics(sigma, r).with_seed(seed))
}

pub fn write_manifest(op: &MeasurementOperator, path: &Path) -> Result<()> {
    std::fs::write(path, to_manifest(op)).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<MeasurementOperator> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_manifest(&text)
}

impl PartialEq for MeasurementOperator {
    fn eq(&self, other: &Self) -> bool {
        let same_spec = match (self.spec(), other.spec()) {
            (GeneratorSpec::Circulant(a), GeneratorSpec::Circulant(b)) => {
                a.theta == b.theta
                    && a.mu.to_bits() == b.mu.to_bits()
                    && bits_eq(&a.b, &b.b)
            }
            (GeneratorSpec::Toeplitz(a), GeneratorSpec::Toeplitz(b)) => {
                a.theta == b.theta
                    && a.mu.to_bits() == b.mu.to_bits()
                    && bits_eq(&a.c, &b.c)
            }
            _ => false,
        };
        same_spec
            && self.sigma().to_bits() == other.sigma().to_bits()
            && self.subgauss_norm().to_bits() == other.subgauss_norm().to_bits()
            && self.seed() == other.seed()
    }
}

fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let op = MeasurementOperator::circulant(vec![1.0, -2.5, 3.0], &[2, 0], 0.5)
            .unwrap()
            .with_statistics(1.0, 0.75)
            .with_seed(42);
        assert_eq!(
            to_manifest(&op),
            "circulant 3 2 0.5 1 0.75 42\n1 -2.5 3\n0 2\n"
        );
    }

    #[test]
    fn rejects_inconsistent_manifests() {
        assert!(from_manifest("").is_err());
        assert!(from_manifest("circulant 3 1 0 1 1 0\n1 2\n0\n").is_err());
        assert!(from_manifest("circulant 3 2 0 1 1 0\n1 2 3\n0\n").is_err());
        assert!(from_manifest("toeplitz 2 1 0 1 1 0\n1 2 3 4\n0\n").is_err());
        assert!(from_manifest("hankel 2 1 0 1 1 0\n1 2\n0\n").is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(
            gen in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..12),
            toeplitz in any::<bool>(),
            mu in 0.0f64..10.0,
            seed in any::<u64>(),
        ) {
            let op = if toeplitz && gen.len() % 2 == 1 {
                MeasurementOperator::toeplitz(gen.clone(), &[0], mu).unwrap()
            } else {
                let n = gen.len();
                let theta: Vec<usize> = (0..n).step_by(2).collect();
                MeasurementOperator::circulant(gen.clone(), &theta, mu).unwrap()
            }
            .with_statistics(0.5, 0.5)
            .with_seed(seed);
            let back = from_manifest(&to_manifest(&op)).unwrap();
            prop_assert_eq!(back, op);
        }
    }
}
