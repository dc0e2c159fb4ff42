//! Branching-law profiles σ(x) and test functions φ(x).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Result};
use crate::Error;

/// Values below this are treated as zero when deciding where σ or φ live.
pub const NEGLIGIBLE: f64 = 1e-12;

/// Where a function may be nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Nowhere,
    Everywhere,
    Interval(f64, f64),
}

impl Support {
    pub fn union(self, other: Support) -> Support {
        match (self, other) {
            (Support::Everywhere, _) | (_, Support::Everywhere) => Support::Everywhere,
            (Support::Nowhere, s) | (s, Support::Nowhere) => s,
            (Support::Interval(a, b), Support::Interval(c, d)) => Support::Interval(a.min(c), b.max(d)),
        }
    }

    /// Distance from `x` to the support; zero inside, infinite if empty.
    pub fn distance(&self, x: f64) -> f64 {
        match *self {
            Support::Nowhere => f64::INFINITY,
            Support::Everywhere => 0.0,
            Support::Interval(a, b) => (a - x).max(x - b).max(0.0),
        }
    }
}

/// Shape of the site-dependent offspring parameter σ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SigmaShape {
    Constant { value: f64 },
    /// `value` on `|x - center| ≤ halfwidth`, zero elsewhere.
    IndicatorWindow { value: f64, center: f64, halfwidth: f64 },
    /// `amplitude · exp(-(x - center)² / (2 width²))`.
    GaussianBump { amplitude: f64, center: f64, width: f64 },
    /// Piecewise linear through `[x, σ]` points, zero outside.
    Table { points: Vec<(f64, f64)> },
}

/// Offspring law at site `x`: 0 children with probability σ(x), 1 with
/// probability 1 − 2σ(x), 2 with probability σ(x). Branching at rate γ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaProfile {
    pub gamma: f64,
    pub shape: SigmaShape,
}

fn check_sigma_value(name: &str, v: f64) -> Result<()> {
    ensure_finite(name, v)?;
    if !(0.0..=0.5).contains(&v) {
        return Err(Error::Config(format!("{name} must lie in [0, 1/2], got {v}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    ensure_finite(name, v)?;
    if v <= 0.0 {
        return Err(Error::Config(format!("{name} must be > 0, got {v}")));
    }
    Ok(())
}

fn check_table(points: &[(f64, f64)], field: &str) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::Config(format!("{field} needs at least two points")));
    }
    for &(x, v) in points {
        ensure_finite(field, x)?;
        ensure_finite(field, v)?;
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Config(format!("{field} abscissae must be increasing")));
    }
    Ok(())
}

fn table_value(points: &[(f64, f64)], x: f64) -> f64 {
    let first = points[0].0;
    let last = points[points.len() - 1].0;
    if x < first || x > last {
        return 0.0;
    }
    let j = points.partition_point(|p| p.0 <= x).clamp(1, points.len() - 1);
    let ((x0, y0), (x1, y1)) = (points[j - 1], points[j]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn table_integral(points: &[(f64, f64)]) -> f64 {
    points.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}

fn table_support(points: &[(f64, f64)]) -> Support {
    let nonzero = |p: &&(f64, f64)| p.1 > 0.0;
    let lo = points.iter().position(|p| nonzero(&p));
    let hi = points.iter().rposition(|p| nonzero(&p));
    match (lo, hi) {
        (Some(lo), Some(hi)) => {
            let a = points[lo.saturating_sub(1)].0;
            let b = points[(hi + 1).min(points.len() - 1)].0;
            Support::Interval(a, b)
        }
        _ => Support::Nowhere,
    }
}

/// Half-width beyond which `peak · exp(-r²/(2w²))` drops below [`NEGLIGIBLE`].
fn gaussian_reach(peak: f64, width: f64) -> f64 {
    if peak <= NEGLIGIBLE {
        return 0.0;
    }
    width * (2.0 * (peak / NEGLIGIBLE).ln()).sqrt()
}

impl SigmaProfile {
    /// Gaussian σ centred at 0 with amplitude 1/2 and width chosen so that
    /// `γ ∫ σ = k`.
    pub fn gaussian_with_k(gamma: f64, k: f64) -> Result<Self> {
        check_positive("gamma", gamma)?;
        check_positive("K", k)?;
        let amplitude = 0.5;
        let width = k / (gamma * amplitude * (2.0 * PI).sqrt());
        Ok(Self {
            gamma,
            shape: SigmaShape::GaussianBump { amplitude, center: 0.0, width },
        })
    }

    pub fn constant(gamma: f64, value: f64) -> Self {
        Self {
            gamma,
            shape: SigmaShape::Constant { value },
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("sigma.gamma", self.gamma)?;
        if self.gamma < 0.0 {
            return Err(Error::Config(format!("sigma.gamma must be >= 0, got {}", self.gamma)));
        }
        match &self.shape {
            SigmaShape::Constant { value } => check_sigma_value("sigma.value", *value),
            SigmaShape::IndicatorWindow { value, center, halfwidth } => {
                check_sigma_value("sigma.value", *value)?;
                ensure_finite("sigma.center", *center)?;
                check_positive("sigma.halfwidth", *halfwidth)
            }
            SigmaShape::GaussianBump { amplitude, center, width } => {
                check_sigma_value("sigma.amplitude", *amplitude)?;
                ensure_finite("sigma.center", *center)?;
                check_positive("sigma.width", *width)
            }
            SigmaShape::Table { points } => {
                check_table(points, "sigma.points")?;
                points.iter().try_for_each(|p| check_sigma_value("sigma.points", p.1))
            }
        }
    }

    pub fn sigma(&self, x: f64) -> f64 {
        match &self.shape {
            SigmaShape::Constant { value } => *value,
            SigmaShape::IndicatorWindow { value, center, halfwidth } => {
                if (x - center).abs() <= *halfwidth {
                    *value
                } else {
                    0.0
                }
            }
            SigmaShape::GaussianBump { amplitude, center, width } => {
                let z = (x - center) / width;
                amplitude * (-0.5 * z * z).exp()
            }
            SigmaShape::Table { points } => table_value(points, x),
        }
    }

    /// `∫ σ(x) dx`, or `None` when it diverges.
    pub fn sigma_integral(&self) -> Option<f64> {
        match &self.shape {
            SigmaShape::Constant { value } => (*value == 0.0).then_some(0.0),
            SigmaShape::IndicatorWindow { value, halfwidth, .. } => Some(2.0 * value * halfwidth),
            SigmaShape::GaussianBump { amplitude, width, .. } => Some(amplitude * width * (2.0 * PI).sqrt()),
            SigmaShape::Table { points } => Some(table_integral(points)),
        }
    }

    /// `K = γ ∫ σ`, or `None` when infinite.
    pub fn k(&self) -> Option<f64> {
        if self.gamma == 0.0 {
            return Some(0.0);
        }
        self.sigma_integral().map(|i| self.gamma * i)
    }

    /// Region where a branching event can change the population. Outside it
    /// every event has exactly one child.
    pub fn support(&self) -> Support {
        if self.gamma == 0.0 {
            return Support::Nowhere;
        }
        match &self.shape {
            SigmaShape::Constant { value } => {
                if *value == 0.0 {
                    Support::Nowhere
                } else {
                    Support::Everywhere
                }
            }
            SigmaShape::IndicatorWindow { value, center, halfwidth } => {
                if *value == 0.0 {
                    Support::Nowhere
                } else {
                    Support::Interval(center - halfwidth, center + halfwidth)
                }
            }
            SigmaShape::GaussianBump { amplitude, center, width } => {
                let r = gaussian_reach(*amplitude, *width);
                if r == 0.0 {
                    Support::Nowhere
                } else {
                    Support::Interval(center - r, center + r)
                }
            }
            SigmaShape::Table { points } => table_support(points),
        }
    }
}

/// Nonnegative test function φ; the limit only sees its mass θ = ∫φ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    /// `mass` times the normal density with the given centre and width.
    GaussianBump { mass: f64, center: f64, width: f64 },
    /// `(mass / 2a) (1 + cos(π (x - center) / a))` on `|x - center| ≤ a`.
    RaisedCosine { mass: f64, center: f64, halfwidth: f64 },
    /// Piecewise linear through `[x, φ]` points, zero outside.
    Table { points: Vec<(f64, f64)> },
}

impl TestFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            TestFunction::GaussianBump { mass, center, width } => {
                check_positive("phi.mass", *mass)?;
                ensure_finite("phi.center", *center)?;
                check_positive("phi.width", *width)
            }
            TestFunction::RaisedCosine { mass, center, halfwidth } => {
                check_positive("phi.mass", *mass)?;
                ensure_finite("phi.center", *center)?;
                check_positive("phi.halfwidth", *halfwidth)
            }
            TestFunction::Table { points } => {
                check_table(points, "phi.points")?;
                if points.iter().any(|p| p.1 < 0.0) {
                    return Err(Error::Config("phi.points values must be >= 0".into()));
                }
                if points[0].1 != 0.0 || points[points.len() - 1].1 != 0.0 {
                    return Err(Error::Config("phi.points must start and end at 0".into()));
                }
                if table_integral(points) <= 0.0 {
                    return Err(Error::Config("phi.points has zero mass".into()));
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            TestFunction::GaussianBump { mass, center, width } => {
                let z = (x - center) / width;
                mass * (-0.5 * z * z).exp() / (width * (2.0 * PI).sqrt())
            }
            TestFunction::RaisedCosine { mass, center, halfwidth } => {
                let u = (x - center) / halfwidth;
                if u.abs() > 1.0 {
                    0.0
                } else {
                    mass / (2.0 * halfwidth) * (1.0 + (PI * u).cos())
                }
            }
            TestFunction::Table { points } => table_value(points, x),
        }
    }

    /// θ = ∫φ, in closed form.
    pub fn mass(&self) -> f64 {
        match self {
            TestFunction::GaussianBump { mass, .. } | TestFunction::RaisedCosine { mass, .. } => *mass,
            TestFunction::Table { points } => table_integral(points),
        }
    }

    /// Interval outside which φ is zero or below [`NEGLIGIBLE`].
    pub fn support(&self) -> (f64, f64) {
        match self {
            TestFunction::GaussianBump { mass, center, width } => {
                let r = gaussian_reach(mass / (width * (2.0 * PI).sqrt()), *width);
                (center - r, center + r)
            }
            TestFunction::RaisedCosine { center, halfwidth, .. } => (center - halfwidth, center + halfwidth),
            TestFunction::Table { points } => (points[0].0, points[points.len() - 1].0),
        }
    }

    /// Largest `|x|` in the support.
    pub fn support_radius(&self) -> f64 {
        let (a, b) = self.support();
        a.abs().max(b.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::integrate;

    fn shapes() -> Vec<SigmaProfile> {
        vec![
            SigmaProfile { gamma: 1.5, shape: SigmaShape::IndicatorWindow { value: 0.3, center: 1.0, halfwidth: 2.0 } },
            SigmaProfile { gamma: 2.0, shape: SigmaShape::GaussianBump { amplitude: 0.4, center: -1.0, width: 0.7 } },
            SigmaProfile { gamma: 1.0, shape: SigmaShape::Table { points: vec![(-1.0, 0.0), (0.0, 0.5), (2.0, 0.1), (3.0, 0.0)] } },
        ]
    }

    #[test]
    fn sigma_integrals_match_quadrature() {
        for p in shapes() {
            p.validate().unwrap();
            let quad = integrate(|x| p.sigma(x), -12.0, 12.0, 1e-12);
            assert!((p.sigma_integral().unwrap() - quad).abs() < 1e-8, "{p:?}");
            assert!((p.k().unwrap() - p.gamma * quad).abs() < 1e-8);
        }
    }

    #[test]
    fn gaussian_with_k() {
        let p = SigmaProfile::gaussian_with_k(1.0, 1.0).unwrap();
        p.validate().unwrap();
        assert!((p.k().unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_profiles() {
        assert_eq!(SigmaProfile::constant(1.0, 0.5).sigma_integral(), None);
        assert_eq!(SigmaProfile::constant(1.0, 0.5).k(), None);
        assert_eq!(SigmaProfile::constant(0.0, 0.5).k(), Some(0.0));
        assert_eq!(SigmaProfile::constant(1.0, 0.0).k(), Some(0.0));
        assert_eq!(SigmaProfile::constant(1.0, 0.0).support(), Support::Nowhere);
        assert_eq!(SigmaProfile::constant(1.0, 0.5).support(), Support::Everywhere);
    }

    #[test]
    fn rejects_invalid_sigma() {
        assert!(SigmaProfile::constant(1.0, 0.6).validate().is_err());
        assert!(SigmaProfile::constant(-1.0, 0.1).validate().is_err());
        let bad_table = SigmaProfile { gamma: 1.0, shape: SigmaShape::Table { points: vec![(0.0, 0.1), (0.0, 0.2)] } };
        assert!(bad_table.validate().is_err());
        let negative = SigmaProfile { gamma: 1.0, shape: SigmaShape::GaussianBump { amplitude: -0.1, center: 0.0, width: 1.0 } };
        assert!(negative.validate().is_err());
    }

    #[test]
    fn test_function_masses() {
        let phis = [
            TestFunction::GaussianBump { mass: 2.0, center: 0.5, width: 0.8 },
            TestFunction::RaisedCosine { mass: 1.3, center: -0.2, halfwidth: 1.1 },
            TestFunction::Table { points: vec![(-1.0, 0.0), (0.0, 1.0), (0.5, 0.25), (2.0, 0.0)] },
        ];
        for phi in &phis {
            phi.validate().unwrap();
            let quad = integrate(|x| phi.value(x), -15.0, 15.0, 1e-13);
            assert!((phi.mass() - quad).abs() < 1e-10, "{phi:?}");
            let (a, b) = phi.support();
            for x in [a - 1e-9, b + 1e-9, a - 3.0, b + 3.0] {
                assert!(phi.value(x) < NEGLIGIBLE);
            }
        }
    }

    #[test]
    fn support_union_and_distance() {
        let s = Support::Interval(-1.0, 1.0).union(Support::Interval(3.0, 4.0));
        assert_eq!(s, Support::Interval(-1.0, 4.0));
        assert_eq!(s.distance(6.0), 2.0);
        assert_eq!(s.distance(0.0), 0.0);
        assert_eq!(Support::Nowhere.distance(0.0), f64::INFINITY);
        assert_eq!(Support::Nowhere.union(Support::Everywhere), Support::Everywhere);
    }

    #[test]
    fn serde_shape_tags() {
        let json = r#"{"gamma":1.0,"shape":{"kind":"indicator-window","value":0.25,"center":0.0,"halfwidth":2.0}}"#;
        let p: SigmaProfile = serde_json::from_str(json).unwrap();
        assert_eq!(p.k(), Some(1.0));
        let phi: TestFunction = serde_json::from_str(r#"{"kind":"raised-cosine","mass":1.0,"center":0.0,"halfwidth":1.0}"#).unwrap();
        assert_eq!(phi.mass(), 1.0);
    }
}
