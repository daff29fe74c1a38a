//! Value grammars for flags and raster tags.

use std::collections::BTreeMap;

use stensor::filterbank::ResponseMode;
use stensor::linalg::norm;
use stensor::synth::{Profile, WaveSpec};
use stensor::tessellation::{half_circle, icosa6};
use stensor::{DirectionSet, FrameCoefficients};

use crate::{CliError, CliResult};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn f64_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| usage(format!("{what}: '{t}' is not a finite number")))
        })
        .collect()
}

pub fn dims(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("dims: '{t}' is not a size")))
        })
        .collect()
}

pub fn coefficients(s: &str) -> CliResult<FrameCoefficients> {
    let v = f64_list(s, "coeff")?;
    if v.len() != 2 {
        return Err(usage("coeff takes exactly two values: alpha,beta"));
    }
    Ok(FrameCoefficients::new(v[0], v[1])?)
}

pub fn unit_vector(s: &str, what: &str) -> CliResult<Vec<f64>> {
    let v = f64_list(s, what)?;
    let n = norm(&v);
    if n == 0.0 {
        return Err(usage(format!("{what}: zero vector")));
    }
    Ok(v.into_iter().map(|c| c / n).collect())
}

/// `icosa6` or `half_circle:K`.
pub fn directions(s: &str) -> CliResult<DirectionSet> {
    if s == "icosa6" {
        return Ok(icosa6());
    }
    if let Some(k) = s.strip_prefix("half_circle:") {
        let k = k.parse().map_err(|_| usage(format!("bad direction count in '{s}'")))?;
        return Ok(half_circle(k)?);
    }
    Err(usage(format!("unknown direction set '{s}' (icosa6 or half_circle:K)")))
}

pub fn default_directions(ndim: usize) -> CliResult<&'static str> {
    match ndim {
        2 => Ok("half_circle:6"),
        3 => Ok("icosa6"),
        n => Err(usage(format!(
            "no default direction set for {n}-D input; pass --directions"
        ))),
    }
}

pub fn response_mode(s: Option<&str>) -> CliResult<ResponseMode> {
    Ok(s.map(str::parse).transpose()?.unwrap_or_default())
}

/// Semicolon-separated `key=value` fields, e.g. `angle=30;freq=0.785;profile=square`.
pub fn wave(s: &str, grid: &[usize]) -> CliResult<WaveSpec> {
    let mut fields = BTreeMap::new();
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("wave field '{part}' is not key=value")))?;
        if fields.insert(k.trim(), v.trim()).is_some() {
            return Err(usage(format!("wave field '{k}' given twice")));
        }
    }
    let mut spec = match (fields.remove("bins"), fields.remove("angle"), fields.remove("dir")) {
        (Some(b), None, None) => {
            if fields.contains_key("freq") {
                return Err(usage("wave: bins= fixes the frequency; drop freq="));
            }
            let bins = b
                .split(',')
                .map(|t| t.trim().parse::<i64>().map_err(|_| usage(format!("wave bins: '{t}'"))))
                .collect::<CliResult<Vec<_>>>()?;
            WaveSpec::on_grid(&bins, grid)?
        }
        (None, angle, dir) => {
            let direction = match (angle, dir) {
                (Some(a), None) => {
                    let a: f64 = a.parse().map_err(|_| usage(format!("wave angle: '{a}'")))?;
                    let (s, c) = a.to_radians().sin_cos();
                    vec![c, s]
                }
                (None, Some(d)) => unit_vector(d, "wave dir")?,
                _ => return Err(usage("wave needs exactly one of bins=, angle= or dir=")),
            };
            let freq = fields
                .remove("freq")
                .ok_or_else(|| usage("wave needs freq= with angle= or dir="))?;
            let freq = freq.parse().map_err(|_| usage(format!("wave freq: '{freq}'")))?;
            WaveSpec::cosine(direction, freq)
        }
        _ => return Err(usage("wave needs exactly one of bins=, angle= or dir=")),
    };
    if let Some(p) = fields.remove("profile") {
        spec.profile = p.parse::<Profile>()?;
    }
    for (key, slot) in [("amp", &mut spec.amplitude), ("phase", &mut spec.phase)] {
        if let Some(v) = fields.remove(key) {
            *slot = v.parse().map_err(|_| usage(format!("wave {key}: '{v}'")))?;
        }
    }
    if let Some(k) = fields.keys().next() {
        return Err(usage(format!("unknown wave field '{k}'")));
    }
    Ok(spec)
}

/// Tag of a response raster: `responses;dirs=...;mode=...`.
pub fn responses_tag(dirs: &str, mode: ResponseMode) -> String {
    format!("responses;dirs={dirs};mode={}", mode.as_str())
}

pub struct ResponsesTag {
    pub dirs: String,
    pub mode: ResponseMode,
}

pub fn parse_responses_tag(tag: &str) -> CliResult<Option<ResponsesTag>> {
    let mut parts = tag.split(';');
    if parts.next() != Some("responses") {
        return Ok(None);
    }
    let mut dirs = None;
    let mut mode = None;
    for p in parts {
        match p.split_once('=') {
            Some(("dirs", v)) => dirs = Some(v.to_string()),
            Some(("mode", v)) => mode = Some(v.parse()?),
            _ => return Err(CliError::Io(format!("malformed responses tag '{tag}'"))),
        }
    }
    match (dirs, mode) {
        (Some(dirs), Some(mode)) => Ok(Some(ResponsesTag { dirs, mode })),
        _ => Err(CliError::Io(format!("responses tag '{tag}' lacks dirs= or mode="))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wave_grammar() {
        let w = wave("angle=90;freq=0.5;profile=square;amp=2", &[16, 16]).unwrap();
        assert!(w.direction[0].abs() < 1e-15 && (w.direction[1] - 1.0).abs() < 1e-15);
        assert_eq!(w.profile, Profile::Square);
        assert_eq!(w.amplitude, 2.0);
        let w = wave("bins=4,0", &[64, 64]).unwrap();
        assert!((w.frequency - std::f64::consts::PI / 8.0).abs() < 1e-15);
        let w = wave("dir=0,3,4;freq=1", &[8, 8, 8]).unwrap();
        assert!((w.direction[2] - 0.8).abs() < 1e-15);
        for bad in [
            "angle=30",
            "freq=1",
            "angle=30;dir=1,0;freq=1",
            "bins=1,0;freq=1",
            "angle=3;freq=1;colour=red",
            "angle=x;freq=1",
        ] {
            assert!(wave(bad, &[16, 16]).is_err(), "{bad}");
        }
    }

    #[test]
    fn tags_round_trip() {
        let t = responses_tag("half_circle:6", ResponseMode::Magnitude);
        let p = parse_responses_tag(&t).unwrap().unwrap();
        assert_eq!(p.dirs, "half_circle:6");
        assert_eq!(p.mode, ResponseMode::Magnitude);
        assert!(parse_responses_tag("scalar").unwrap().is_none());
        assert!(parse_responses_tag("responses;dirs=icosa6").is_err());
    }

    #[test]
    fn direction_specs() {
        assert_eq!(directions("icosa6").unwrap().len(), 6);
        assert_eq!(directions("half_circle:4").unwrap().len(), 4);
        assert!(directions("half_circle:1").is_err());
        assert!(directions("cube").is_err());
        assert!(coefficients("1.25").is_err());
    }
}
