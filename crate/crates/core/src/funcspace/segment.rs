use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// Closed-form density carried by one segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Density {
    /// `c * |x - center|^gamma`
    Power { c: f64, center: f64, gamma: f64 },
    /// `c * exp(rate * x)`
    Exp { c: f64, rate: f64 },
}

impl Density {
    pub fn power(c: f64, center: f64, gamma: f64) -> Self {
        Density::Power { c, center, gamma }
    }

    pub fn exp(c: f64, rate: f64) -> Self {
        Density::Exp { c, rate }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Density::Power { c, center, gamma } => {
                let d = (x - center).abs();
                if gamma == 0.0 {
                    c
                } else if d == 0.0 {
                    if gamma < 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                } else {
                    c * d.powf(gamma)
                }
            }
            Density::Exp { c, rate } => c * (rate * x).exp(),
        }
    }

    /// `density^theta`, again a density of the same form.
    pub fn pow(&self, theta: f64) -> Density {
        match *self {
            Density::Power { c, center, gamma } => Density::Power {
                c: c.powf(theta),
                center,
                gamma: gamma * theta,
            },
            Density::Exp { c, rate } => Density::Exp {
                c: c.powf(theta),
                rate: rate * theta,
            },
        }
    }

    /// `x -> density(lambda * x)`.
    pub fn dilate(&self, lambda: f64) -> Density {
        match *self {
            Density::Power { c, center, gamma } => Density::Power {
                c: c * lambda.abs().powf(gamma),
                center: center / lambda,
                gamma,
            },
            Density::Exp { c, rate } => Density::Exp {
                c,
                rate: rate * lambda,
            },
        }
    }

    /// Exact integral over `[a, b]`, `a <= b`. The caller guarantees integrability.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match *self {
            Density::Power { c, center, gamma } => {
                let g1 = gamma + 1.0;
                if a < center && center < b {
                    // one-sided antiderivatives on each side of the singularity
                    c * ((center - a).powf(g1) + (b - center).powf(g1)) / g1
                } else {
                    let (near, width) = if b <= center {
                        (center - b, b - a)
                    } else {
                        (a - center, b - a)
                    };
                    if near == 0.0 {
                        c * width.powf(g1) / g1
                    } else {
                        let log_ratio = (width / near).ln_1p();
                        if g1 == 0.0 {
                            c * log_ratio
                        } else {
                            // near^g1 * ((far/near)^g1 - 1) / g1 without cancellation
                            c * near.powf(g1) * (g1 * log_ratio).exp_m1() / g1
                        }
                    }
                }
            }
            Density::Exp { c, rate } => {
                if rate == 0.0 {
                    c * (b - a)
                } else {
                    let width = b - a;
                    if rate > 0.0 {
                        -(c / rate) * (rate * b).exp() * (-rate * width).exp_m1()
                    } else {
                        (c / rate) * (rate * a).exp() * (rate * width).exp_m1()
                    }
                }
            }
        }
    }

    /// Supremum of the density over `[a, b]`.
    pub fn sup_on(&self, a: f64, b: f64) -> f64 {
        match *self {
            Density::Power { center, gamma, .. } => {
                if gamma < 0.0 && a <= center && center <= b {
                    f64::INFINITY
                } else if gamma != 0.0 {
                    self.value(a).max(self.value(b))
                } else {
                    self.value(a)
                }
            }
            Density::Exp { .. } => self.value(a).max(self.value(b)),
        }
    }
}

/// A density restricted to `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    lo: f64,
    hi: f64,
    density: Density,
}

impl Segment {
    pub fn new(lo: f64, hi: f64, density: Density) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "segment bounds must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        match density {
            Density::Power { c, center, gamma } => {
                if !(c > 0.0 && c.is_finite() && center.is_finite() && gamma.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "power density needs c > 0 and finite parameters (c = {c}, a = {center}, gamma = {gamma})"
                    )));
                }
                if gamma <= -1.0 && lo <= center && center <= hi {
                    return Err(Error::InvalidParameter(format!(
                        "gamma = {gamma} <= -1 makes the singularity at {center} non-integrable"
                    )));
                }
            }
            Density::Exp { c, rate } => {
                if !(c > 0.0 && c.is_finite() && rate.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "exponential density needs c > 0 and a finite rate (c = {c}, s = {rate})"
                    )));
                }
            }
        }
        Ok(Segment { lo, hi, density })
    }

    pub fn power(lo: f64, hi: f64, c: f64, center: f64, gamma: f64) -> Result<Self> {
        Segment::new(lo, hi, Density::power(c, center, gamma))
    }

    pub fn exponential(lo: f64, hi: f64, c: f64, rate: f64) -> Result<Self> {
        Segment::new(lo, hi, Density::exp(c, rate))
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    fn singular_inside(&self, density: &Density) -> bool {
        match *density {
            Density::Power { center, gamma, .. } => {
                gamma <= -1.0 && self.lo <= center && center <= self.hi
            }
            Density::Exp { .. } => false,
        }
    }
}

/// Exact mass of `seg` over `[a, b]`, which must lie inside the segment.
pub fn segment_mass(seg: &Segment, a: f64, b: f64) -> Result<f64> {
    if !(a <= b) || a < seg.lo || b > seg.hi {
        return Err(Error::Domain(format!(
            "[{a}, {b}] is not contained in the segment [{}, {}]",
            seg.lo, seg.hi
        )));
    }
    Ok(seg.density.mass(a, b))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    /// Zero outside the declared segments.
    #[default]
    Zero,
    /// The last segment's density continues to `+inf`.
    ExtendLast,
}

/// Piecewise closed-form weight on the line.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentWeight1D {
    segments: Vec<Segment>,
    tail: Tail,
}

impl SegmentWeight1D {
    pub fn new(segments: Vec<Segment>, tail: Tail) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidParameter("a weight needs at least one segment".into()));
        }
        for (i, pair) in segments.windows(2).enumerate() {
            if pair[0].hi > pair[1].lo {
                return Err(Error::InvalidParameter(format!(
                    "segments {i} and {} overlap or are out of order",
                    i + 1
                )));
            }
        }
        if tail == Tail::ExtendLast {
            let last = segments.last().expect("non-empty");
            if let Density::Power { center, gamma, .. } = last.density {
                if gamma <= -1.0 && center >= last.lo {
                    return Err(Error::InvalidParameter(
                        "extended tail would carry a non-integrable singularity".into(),
                    ));
                }
            }
        }
        Ok(SegmentWeight1D { segments, tail })
    }

    /// A single-segment weight.
    pub fn single(segment: Segment) -> Self {
        SegmentWeight1D {
            segments: vec![segment],
            tail: Tail::Zero,
        }
    }

    /// The constant weight `c` on `[lo, hi]`.
    pub fn constant(lo: f64, hi: f64, c: f64) -> Result<Self> {
        Ok(Self::single(Segment::exponential(lo, hi, c, 0.0)?))
    }

    /// `|x - center|^gamma` on `[lo, hi]`.
    pub fn power_weight(lo: f64, hi: f64, center: f64, gamma: f64) -> Result<Self> {
        Ok(Self::single(Segment::power(lo, hi, 1.0, center, gamma)?))
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn support(&self) -> (f64, f64) {
        let lo = self.segments[0].lo;
        let hi = match self.tail {
            Tail::Zero => self.segments.last().expect("non-empty").hi,
            Tail::ExtendLast => f64::INFINITY,
        };
        (lo, hi)
    }

    fn effective_hi(&self, i: usize) -> f64 {
        if i + 1 == self.segments.len() && self.tail == Tail::ExtendLast {
            f64::INFINITY
        } else {
            self.segments[i].hi
        }
    }

    /// Segment owning `x` under the half-open convention `[lo, hi)`; the last
    /// segment also owns its right endpoint.
    fn locate(&self, x: f64) -> Option<usize> {
        let n = self.segments.len();
        let idx = self.segments.partition_point(|s| s.lo <= x);
        if idx == 0 {
            return None;
        }
        let i = idx - 1;
        let hi = self.effective_hi(i);
        if x < hi || (i + 1 == n && x == hi) {
            Some(i)
        } else {
            None
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.locate(x)
            .map(|i| self.segments[i].density.value(x))
            .unwrap_or(0.0)
    }

    /// Exact mass over `[a, b]`; zero when `b <= a`.
    pub(crate) fn mass_between(&self, a: f64, b: f64) -> f64 {
        if !(a < b) {
            return 0.0;
        }
        let mut acc = NeumaierSum::new();
        for (i, seg) in self.segments.iter().enumerate() {
            let lo = a.max(seg.lo);
            let hi = b.min(self.effective_hi(i));
            if lo < hi {
                acc.add(seg.density.mass(lo, hi));
            }
        }
        acc.value()
    }

    /// Whether `[a, b]` is covered by segments (so the weight has no zero gaps there).
    pub fn covers(&self, a: f64, b: f64) -> bool {
        let mut reach = a;
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.lo > reach {
                break;
            }
            reach = reach.max(self.effective_hi(i));
            if reach >= b {
                return true;
            }
        }
        reach >= b
    }

    /// Supremum of the weight over `[a, b]`.
    pub fn sup_on(&self, a: f64, b: f64) -> f64 {
        let mut best: f64 = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            let lo = a.max(seg.lo);
            let hi = b.min(self.effective_hi(i));
            if lo <= hi {
                best = best.max(seg.density.sup_on(lo, hi));
            }
        }
        best
    }

    /// Infimum of the weight over `[a, b]`; zero if the interval meets a gap.
    pub fn inf_on(&self, a: f64, b: f64) -> f64 {
        let mut covered = NeumaierSum::new();
        let mut best = f64::INFINITY;
        for (i, seg) in self.segments.iter().enumerate() {
            let lo = a.max(seg.lo);
            let hi = b.min(self.effective_hi(i));
            if lo <= hi {
                covered.add(hi - lo);
                let v = match seg.density {
                    Density::Power { center, gamma, .. } if gamma > 0.0 && lo <= center && center <= hi => 0.0,
                    d => d.value(lo).min(d.value(hi)),
                };
                best = best.min(v);
            }
        }
        if covered.value() < (b - a) * (1.0 - 1e-12) {
            0.0
        } else {
            best
        }
    }

    /// The weight raised to `theta`, rejecting non-integrable singularities.
    pub fn pow(&self, theta: f64) -> Result<SegmentWeight1D> {
        let mut out = Vec::with_capacity(self.segments.len());
        for (i, seg) in self.segments.iter().enumerate() {
            let density = seg.density.pow(theta);
            let mut probe = *seg;
            probe.hi = self.effective_hi(i).min(f64::MAX);
            if probe.singular_inside(&density) {
                let exponent = match density {
                    Density::Power { gamma, .. } => gamma,
                    Density::Exp { rate, .. } => rate,
                };
                return Err(Error::NonIntegrable { segment: i, exponent });
            }
            out.push(Segment { density, ..*seg });
        }
        Ok(SegmentWeight1D {
            segments: out,
            tail: self.tail,
        })
    }

    /// `x -> w(lambda * x)`.
    pub fn dilate(&self, lambda: f64) -> Result<SegmentWeight1D> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::SingularMatrix { det: lambda });
        }
        if self.tail == Tail::ExtendLast && lambda < 0.0 {
            return Err(Error::Unsupported(
                "reflecting a weight with an extended tail".into(),
            ));
        }
        let mut out: Vec<Segment> = self
            .segments
            .iter()
            .map(|seg| {
                let (a, b) = (seg.lo / lambda, seg.hi / lambda);
                Segment {
                    lo: a.min(b),
                    hi: a.max(b),
                    density: seg.density.dilate(lambda),
                }
            })
            .collect();
        if lambda < 0.0 {
            out.reverse();
        }
        Ok(SegmentWeight1D {
            segments: out,
            tail: self.tail,
        })
    }

    /// The density of `w dmu` against Lebesgue measure.
    pub fn with_measure(&self, measure: Measure) -> Result<SegmentWeight1D> {
        match measure {
            Measure::Lebesgue => Ok(self.clone()),
            Measure::ExpAbs => {
                let mut out = Vec::with_capacity(self.segments.len() + 1);
                for (i, seg) in self.segments.iter().enumerate() {
                    let (c, rate) = match seg.density {
                        Density::Exp { c, rate } => (c, rate),
                        Density::Power { .. } => {
                            return Err(Error::Unsupported(format!(
                                "segment {i}: power densities under the measure e^|x| dx"
                            )))
                        }
                    };
                    let hi = self.effective_hi(i);
                    if seg.lo < 0.0 {
                        out.push(Segment {
                            lo: seg.lo,
                            hi: hi.min(0.0),
                            density: Density::Exp { c, rate: rate - 1.0 },
                        });
                    }
                    if hi > 0.0 {
                        out.push(Segment {
                            lo: seg.lo.max(0.0),
                            hi: seg.hi.max(0.0),
                            density: Density::Exp { c, rate: rate + 1.0 },
                        });
                    }
                }
                out.retain(|s| s.lo < s.hi || s.hi == 0.0 && s.lo < 0.0);
                SegmentWeight1D::new(out, self.tail)
            }
        }
    }

    pub fn from_spec(spec: &WeightSpec) -> Result<Self> {
        if spec.dim != 1 {
            return Err(Error::Unsupported(format!(
                "analytic weights live on the line (dim = {})",
                spec.dim
            )));
        }
        let segments = spec
            .segments
            .iter()
            .map(|s| {
                let density = match s.form {
                    FormTag::Power => Density::power(
                        s.c,
                        s.a.unwrap_or(0.0),
                        s.gamma.ok_or_else(|| Error::Parse("power segment needs gamma".into()))?,
                    ),
                    FormTag::Exp => Density::exp(s.c, s.s.unwrap_or(0.0)),
                };
                Segment::new(s.lo, s.hi, density)
            })
            .collect::<Result<Vec<_>>>()?;
        SegmentWeight1D::new(segments, spec.tail)
    }

    pub fn to_spec(&self) -> WeightSpec {
        WeightSpec {
            dim: 1,
            segments: self
                .segments
                .iter()
                .map(|s| match s.density {
                    Density::Power { c, center, gamma } => SegmentSpec {
                        lo: s.lo,
                        hi: s.hi,
                        form: FormTag::Power,
                        c,
                        a: Some(center),
                        gamma: Some(gamma),
                        s: None,
                    },
                    Density::Exp { c, rate } => SegmentSpec {
                        lo: s.lo,
                        hi: s.hi,
                        form: FormTag::Exp,
                        c,
                        a: None,
                        gamma: None,
                        s: Some(rate),
                    },
                })
                .collect(),
            tail: self.tail,
        }
    }
}

/// Exact mass of `w` over `[a, b]`.
pub fn weight_mass(w: &SegmentWeight1D, a: f64, b: f64) -> Result<f64> {
    if !(a < b) || a.is_nan() || b.is_nan() {
        return Err(Error::Domain(format!("weight_mass needs a < b, got [{a}, {b}]")));
    }
    Ok(w.mass_between(a, b))
}

/// `x -> w(lambda x)` for a 1x1 matrix `(lambda)`.
pub fn compose_matrix(
    w: &SegmentWeight1D,
    a: &crate::funcspace::SquareMatrix,
) -> Result<SegmentWeight1D> {
    let lambda = a.as_scalar().ok_or_else(|| {
        Error::Unsupported("analytic composition is only available for 1x1 matrices".into())
    })?;
    w.dilate(lambda)
}

/// Reference measures on the line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    #[default]
    Lebesgue,
    /// `e^{|x|} dx`
    #[serde(alias = "exp")]
    ExpAbs,
}

impl Measure {
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        if !(a < b) {
            return 0.0;
        }
        match self {
            Measure::Lebesgue => b - a,
            Measure::ExpAbs => {
                let mut acc = NeumaierSum::new();
                if a < 0.0 {
                    acc.add(Density::exp(1.0, -1.0).mass(a, b.min(0.0)));
                }
                if b > 0.0 {
                    acc.add(Density::exp(1.0, 1.0).mass(a.max(0.0), b));
                }
                acc.value()
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            Measure::Lebesgue => 1.0,
            Measure::ExpAbs => x.abs().exp(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormTag {
    Power,
    Exp,
}

/// One segment of the weight JSON format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub lo: f64,
    pub hi: f64,
    pub form: FormTag,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
}

/// Weight JSON: `{"dim":1, "segments":[...], "tail":"zero"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub dim: usize,
    pub segments: Vec<SegmentSpec>,
    #[serde(default)]
    pub tail: Tail,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn inverse_square_root_on_quarter_interval() {
        let seg = Segment::power(0.0, 1.0, 1.0, 0.0, -0.5).unwrap();
        assert!(rel(segment_mass(&seg, 0.0, 0.25).unwrap(), 1.0) < 1e-15);
    }

    #[test]
    fn constant_density_mass_is_length() {
        let seg = Segment::exponential(-3.0, 7.0, 1.0, 0.0).unwrap();
        assert_eq!(segment_mass(&seg, -1.5, 2.25).unwrap(), 3.75);
    }

    #[test]
    fn interval_outside_segment_is_a_domain_error() {
        let seg = Segment::power(0.0, 1.0, 1.0, 0.0, 0.5).unwrap();
        assert!(matches!(segment_mass(&seg, -0.1, 0.5), Err(Error::Domain(_))));
        assert!(matches!(segment_mass(&seg, 0.6, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn non_integrable_gamma_rejected_at_construction() {
        assert!(Segment::power(-1.0, 1.0, 1.0, 0.0, -1.0).is_err());
        assert!(Segment::power(-1.0, 1.0, 1.0, 0.5, -1.5).is_err());
        // the same exponent is harmless away from the singular point
        let far = Segment::power(1.0, 2.0, 1.0, 0.0, -3.0).unwrap();
        let m = segment_mass(&far, 1.0, 2.0).unwrap();
        assert!(rel(m, 0.5 * (1.0 - 0.25)) < 1e-14);
    }

    #[test]
    fn mass_straddling_the_singularity() {
        let seg = Segment::power(-4.0, 4.0, 2.0, 1.0, -0.5).unwrap();
        // 2 * (2 sqrt(1) + 2 sqrt(3))
        let m = segment_mass(&seg, 0.0, 4.0).unwrap();
        assert!(rel(m, 4.0 * (1.0 + 3f64.sqrt())) < 1e-14);
    }

    #[test]
    fn logarithmic_exponent_away_from_center() {
        let seg = Segment::power(2.0, 5.0, 1.0, 0.0, -1.0).unwrap();
        assert!(rel(segment_mass(&seg, 2.0, 5.0).unwrap(), (2.5f64).ln()) < 1e-15);
    }

    #[test]
    fn exponential_masses_both_signs() {
        let up = Density::exp(3.0, 2.0);
        assert!(rel(up.mass(0.5, 1.5), 1.5 * ((3.0f64).exp() - 1f64.exp())) < 1e-14);
        let down = Density::exp(1.0, -1.0);
        assert!(rel(down.mass(-2.0, 0.0), (2f64).exp() - 1.0) < 1e-14);
    }

    #[test]
    fn tiny_interval_far_from_center_keeps_precision() {
        let d = Density::power(1.0, 0.0, 0.5);
        let a = 2f64.powi(20);
        let width = 2f64.powi(-20);
        let m = d.mass(a, a + width);
        // midpoint rule error is O(width^2 / a^1.5), far below rounding
        assert!(rel(m, width * (a + 0.5 * width).sqrt()) < 1e-14);
    }

    #[test]
    fn weight_mass_sums_segments_and_skips_gaps() {
        let w = SegmentWeight1D::new(
            vec![
                Segment::exponential(0.0, 1.0, 1.0, 0.0).unwrap(),
                Segment::exponential(2.0, 3.0, 2.0, 0.0).unwrap(),
            ],
            Tail::Zero,
        )
        .unwrap();
        assert_eq!(weight_mass(&w, -1.0, 5.0).unwrap(), 3.0);
        assert_eq!(weight_mass(&w, 0.5, 2.5).unwrap(), 1.5);
        assert!(weight_mass(&w, 1.0, 1.0).is_err());
    }

    #[test]
    fn extend_last_tail_continues_density() {
        let w = SegmentWeight1D::new(
            vec![Segment::exponential(0.0, 1.0, 1.0, 0.0).unwrap()],
            Tail::ExtendLast,
        )
        .unwrap();
        assert_eq!(weight_mass(&w, 0.0, 10.0).unwrap(), 10.0);
        assert_eq!(w.value(100.0), 1.0);
        assert_eq!(w.value(-1.0), 0.0);
    }

    #[test]
    fn coverage_of_intervals() {
        let w = SegmentWeight1D::new(
            vec![
                Segment::exponential(0.0, 1.0, 1.0, 0.0).unwrap(),
                Segment::exponential(1.0, 2.0, 1.0, 0.0).unwrap(),
                Segment::exponential(3.0, 4.0, 1.0, 0.0).unwrap(),
            ],
            Tail::Zero,
        )
        .unwrap();
        assert!(w.covers(0.0, 2.0));
        assert!(w.covers(0.5, 1.5));
        assert!(!w.covers(1.5, 3.5));
        assert!(!w.covers(-0.5, 0.5));
        assert!(w.covers(3.0, 4.0));
    }

    #[test]
    fn overlapping_segments_rejected() {
        let r = SegmentWeight1D::new(
            vec![
                Segment::exponential(0.0, 2.0, 1.0, 0.0).unwrap(),
                Segment::exponential(1.0, 3.0, 1.0, 0.0).unwrap(),
            ],
            Tail::Zero,
        );
        assert!(r.is_err());
    }

    #[test]
    fn pow_reports_the_witness_segment() {
        let w = SegmentWeight1D::new(
            vec![
                Segment::exponential(-2.0, -1.0, 1.0, 0.0).unwrap(),
                Segment::power(-1.0, 1.0, 1.0, 0.0, 0.5).unwrap(),
            ],
            Tail::Zero,
        )
        .unwrap();
        assert!(w.pow(-1.0).is_ok());
        match w.pow(-2.0) {
            Err(Error::NonIntegrable { segment, exponent }) => {
                assert_eq!(segment, 1);
                assert_eq!(exponent, -1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dilation_of_power_and_exponential() {
        let w = SegmentWeight1D::power_weight(-4.0, 4.0, 0.0, 0.5).unwrap();
        let wa = w.dilate(2.0).unwrap();
        for x in [-1.7, 0.3, 1.9] {
            assert!(rel(wa.value(x), 2f64.sqrt() * (x as f64).abs().sqrt()) < 1e-15);
        }
        assert_eq!(wa.support(), (-2.0, 2.0));

        let e = SegmentWeight1D::new(
            vec![Segment::exponential(0.0, 10.0, 1.0, 1.0).unwrap()],
            Tail::Zero,
        )
        .unwrap();
        let ea = e.dilate(0.5).unwrap();
        assert!(rel(ea.value(6.0), 3f64.exp()) < 1e-15);
        assert_eq!(ea.support(), (0.0, 20.0));
    }

    #[test]
    fn reflection_reverses_segment_order() {
        let w = SegmentWeight1D::new(
            vec![
                Segment::exponential(0.0, 1.0, 1.0, 0.0).unwrap(),
                Segment::exponential(1.0, 2.0, 5.0, 0.0).unwrap(),
            ],
            Tail::Zero,
        )
        .unwrap();
        let r = w.dilate(-1.0).unwrap();
        assert_eq!(r.value(-1.5), 5.0);
        assert_eq!(r.value(-0.5), 1.0);
        assert_eq!(r.segments()[0].lo(), -2.0);
    }

    #[test]
    fn zero_dilation_is_singular() {
        let w = SegmentWeight1D::constant(0.0, 1.0, 1.0).unwrap();
        assert!(matches!(w.dilate(0.0), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn exp_abs_measure_masses() {
        let h: f64 = 3.0;
        assert!(rel(Measure::ExpAbs.mass(0.0, h), h.exp() - 1.0) < 1e-15);
        assert!(rel(Measure::ExpAbs.mass(-h, h), 2.0 * (h.exp() - 1.0)) < 1e-15);
        let w = SegmentWeight1D::constant(-5.0, 5.0, 1.0).unwrap();
        let wm = w.with_measure(Measure::ExpAbs).unwrap();
        assert!(rel(wm.mass_between(-1.0, 2.0), Measure::ExpAbs.mass(-1.0, 2.0)) < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"dim":1,"segments":[{"lo":0,"hi":1,"form":"power","c":1,"a":0,"gamma":-0.5},
            {"lo":1,"hi":2,"form":"exp","c":2,"s":0.5}],"tail":"zero"}"#;
        let spec: WeightSpec = serde_json::from_str(text).unwrap();
        let w = SegmentWeight1D::from_spec(&spec).unwrap();
        assert!(rel(w.mass_between(0.0, 1.0), 2.0) < 1e-15);
        let again = SegmentWeight1D::from_spec(&w.to_spec()).unwrap();
        assert_eq!(w, again);
    }
}
