//! Value syntax for CLI arguments: angles as radians or multiples of pi
//! ("0.6666pi"), probabilities as decimals or fractions ("7/24").

use anyhow::{bail, Context, Result};

/// Parse an angle. A trailing `pi` multiplies by pi, avoiding decimal drift
/// against published values.
pub fn angle(text: &str) -> Result<f64> {
    let t = text.trim();
    if let Some(stripped) = t.strip_suffix("pi") {
        let factor: f64 = if stripped.is_empty() {
            1.0
        } else {
            stripped.trim().parse().with_context(|| format!("bad angle {t:?}"))?
        };
        Ok(factor * std::f64::consts::PI)
    } else {
        t.parse().with_context(|| format!("bad angle {t:?}"))
    }
}

/// Parse a probability given as a decimal or a fraction.
pub fn fraction(text: &str) -> Result<f64> {
    let t = text.trim();
    if let Some((num, den)) = t.split_once('/') {
        let n: f64 = num.trim().parse().with_context(|| format!("bad fraction {t:?}"))?;
        let d: f64 = den.trim().parse().with_context(|| format!("bad fraction {t:?}"))?;
        if d == 0.0 {
            bail!("zero denominator in {t:?}");
        }
        Ok(n / d)
    } else {
        t.parse().with_context(|| format!("bad probability {t:?}"))
    }
}

/// Comma-separated angles.
pub fn angle_list(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(angle).collect()
}

/// Comma-separated probabilities.
pub fn prior_list(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(fraction).collect()
}

/// Grid syntax `start:stop:count` with angle entries, e.g. `0.5pi:0.9pi:13`.
pub fn phi_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("grid must be start:stop:count, got {text:?}");
    }
    let start = angle(parts[0])?;
    let stop = angle(parts[1])?;
    let count: usize = parts[2].trim().parse().with_context(|| format!("bad count in {text:?}"))?;
    if count == 0 {
        bail!("grid count must be positive");
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect())
}
