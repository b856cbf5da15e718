use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{arg_err, GmeaError, Result};
use crate::image::ImageBuffer;
use crate::objectives::ssim;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return arg_err("a bit string needs at least one bit");
        }
        Ok(Self { bits })
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Self> {
        Self::new((0..len).map(|_| rng.random()).collect())
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Bits at the given positions.
    pub fn select(&self, positions: &[usize]) -> Result<Self> {
        Self::new(positions.iter().map(|&i| self.bits[i]).collect())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = GmeaError;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => arg_err(format!("invalid bit `{other}`")),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bits)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Confusion matrix of extracted against embedded bits, with 1 as positive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn from_bits(extracted: &BitString, original: &BitString) -> Result<Self> {
        check_lengths(extracted, original)?;
        let mut c = Self::default();
        for (&e, &o) in extracted.bits.iter().zip(&original.bits) {
            match (e, o) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

fn check_lengths(a: &BitString, b: &BitString) -> Result<()> {
    if a.len() != b.len() {
        return arg_err(format!("bit strings of length {} and {}", a.len(), b.len()));
    }
    Ok(())
}

/// Bit accuracy rate.
pub fn bar(extracted: &BitString, original: &BitString) -> Result<f64> {
    check_lengths(extracted, original)?;
    let hits = extracted.bits.iter().zip(&original.bits).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / original.len() as f64)
}

/// Watermark uncertainty score, `1 - 2|bar - 0.5|`.
pub fn wus(bar_value: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&bar_value) {
        return arg_err(format!("bit accuracy {bar_value} outside [0, 1]"));
    }
    Ok(1.0 - 2.0 * (bar_value - 0.5).abs())
}

/// Matthews correlation; 0 when any marginal is empty.
pub fn mcc(c: &ConfusionCounts) -> f64 {
    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if denom == 0.0 {
        return 0.0;
    }
    (tp * tn - fp * fn_) / denom.sqrt()
}

/// Information destruction score, `1 - |mcc|`.
pub fn ids(c: &ConfusionCounts) -> f64 {
    1.0 - mcc(c).abs()
}

/// PSNR in dB over the [0, 1] range and the MSE. Identical images give
/// infinite PSNR.
pub fn psnr_mse<T: Real>(a: &ImageBuffer<T>, b: &ImageBuffer<T>) -> Result<(T, T)> {
    a.check_shape(b)?;
    let n = T::from_usize_lossy(a.pixels.len().max(1));
    let mse = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        / n;
    let psnr = if mse == T::zero() {
        T::infinity()
    } else {
        T::lit(10.0) * (T::one() / mse).log10()
    };
    Ok((psnr, mse))
}

/// Image-space fidelity of an attacked model against its original, averaged
/// over a set of views. PSNR is computed from the pooled MSE.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fidelity {
    pub ssim: f64,
    #[serde(serialize_with = "ser_db", deserialize_with = "de_db")]
    pub psnr: f64,
    pub mse: f64,
}

pub fn fidelity<T: Real>(original: &[ImageBuffer<T>], attacked: &[ImageBuffer<T>]) -> Result<Fidelity> {
    if original.len() != attacked.len() || original.is_empty() {
        return arg_err("fidelity needs matching, non-empty view sets");
    }
    let n = original.len() as f64;
    let mut s = 0.0;
    let mut m = 0.0;
    for (o, a) in original.iter().zip(attacked) {
        s += ssim(a, o)?.as_f64();
        m += psnr_mse(a, o)?.1.as_f64();
    }
    let mse = m / n;
    let psnr = if mse == 0.0 { f64::INFINITY } else { 10.0 * (1.0 / mse).log10() };
    Ok(Fidelity { ssim: s / n, psnr, mse })
}

/// Full evaluation record. Bit metrics are absent when no watermark was
/// supplied. WUS and IDS are stored in [0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WatermarkReport {
    pub bar: Option<f64>,
    pub wus: Option<f64>,
    pub ids: Option<f64>,
    pub ssim: f64,
    #[serde(serialize_with = "ser_db", deserialize_with = "de_db")]
    pub psnr: f64,
    pub mse: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub extracted: Option<BitString>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub embedded: Option<BitString>,
}

impl WatermarkReport {
    pub fn image_only(f: Fidelity) -> Self {
        Self {
            bar: None,
            wus: None,
            ids: None,
            ssim: f.ssim,
            psnr: f.psnr,
            mse: f.mse,
            extracted: None,
            embedded: None,
        }
    }

    pub fn with_bits(f: Fidelity, extracted: BitString, embedded: BitString) -> Result<Self> {
        let b = bar(&extracted, &embedded)?;
        let counts = ConfusionCounts::from_bits(&extracted, &embedded)?;
        Ok(Self {
            bar: Some(b),
            wus: Some(wus(b)?),
            ids: Some(ids(&counts)),
            extracted: Some(extracted),
            embedded: Some(embedded),
            ..Self::image_only(f)
        })
    }
}

fn ser_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn de_db<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Db {
        Num(f64),
        Text(String),
    }
    match Db::deserialize(d)? {
        Db::Num(v) => Ok(v),
        Db::Text(t) if t == "inf" => Ok(f64::INFINITY),
        Db::Text(t) => Err(serde::de::Error::custom(format!("invalid dB value `{t}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn bar_counts_matches() {
        let a = bits("1100");
        assert_eq!(bar(&a, &a).unwrap(), 1.0);
        assert_eq!(bar(&a.complement(), &a).unwrap(), 0.0);
        assert_eq!(bar(&bits("1010"), &a).unwrap(), 0.5);
        assert!(bar(&bits("1"), &a).is_err());
    }

    #[test]
    fn wus_endpoints_and_range() {
        assert_eq!(wus(0.5).unwrap(), 1.0);
        assert_eq!(wus(1.0).unwrap(), 0.0);
        assert_eq!(wus(0.0).unwrap(), 0.0);
        assert!(wus(1.2).is_err());
        assert!(wus(-0.1).is_err());
    }

    #[test]
    fn mcc_degenerate_and_balanced() {
        let zero = ConfusionCounts { tp: 5, tn: 0, fp: 3, fn_: 0 };
        assert_eq!(mcc(&zero), 0.0);
        assert_eq!(ids(&zero), 1.0);
        let even = ConfusionCounts { tp: 12, tn: 12, fp: 12, fn_: 12 };
        assert_eq!(ids(&even), 1.0);
        let perfect = ConfusionCounts { tp: 3, tn: 5, fp: 0, fn_: 0 };
        assert_eq!(ids(&perfect), 0.0);
    }

    #[test]
    fn psnr_closed_form() {
        let a = ImageBuffer::<f64>::filled(4, 4, 0.3);
        let b = ImageBuffer::<f64>::filled(4, 4, 0.4);
        let (p, m) = psnr_mse(&a, &b).unwrap();
        assert!((m - 0.01).abs() < 1e-12);
        assert!((p - 20.0).abs() < 1e-9);
        let (p, m) = psnr_mse(&a, &a).unwrap();
        assert_eq!(m, 0.0);
        assert!(p.is_infinite());
    }

    #[test]
    fn infinite_psnr_round_trips_through_json() {
        let r = WatermarkReport::image_only(Fidelity {
            ssim: 1.0,
            psnr: f64::INFINITY,
            mse: 0.0,
        });
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"psnr\":\"inf\""));
        let back: WatermarkReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
