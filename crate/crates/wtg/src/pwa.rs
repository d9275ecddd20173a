//! Continuous piecewise-affine functions over closed rational intervals.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::{ExtValue, Inf, Rational};
use crate::error::PwaError;

/// Which side of the pointwise optimum to take. Also names the player who owns a location.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Opt {
    Min,
    Max,
}

impl Opt {
    /// `true` if `a` is strictly preferred to `b` by this player.
    pub fn prefers(self, a: &Rational, b: &Rational) -> bool {
        match self {
            Opt::Min => a < b,
            Opt::Max => a > b,
        }
    }

    pub fn prefers_ext(self, a: &ExtValue, b: &ExtValue) -> bool {
        match self {
            Opt::Min => a < b,
            Opt::Max => a > b,
        }
    }

    /// Value of an empty optimum: `+inf` for Min, `-inf` for Max.
    pub fn neutral(self) -> Inf {
        match self {
            Opt::Min => Inf::Pos,
            Opt::Max => Inf::Neg,
        }
    }

    /// The infinity that absorbs every other argument of this optimum.
    pub fn absorbing(self) -> Inf {
        self.neutral().flip()
    }

    pub fn pick(self, a: Rational, b: Rational) -> Rational {
        if self.prefers(&b, &a) {
            b
        } else {
            a
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Body {
    Inf(Inf),
    Points(Vec<(Rational, Rational)>),
}

/// A continuous piecewise-affine function on `[lo, hi]`, or a uniform infinity on that interval.
///
/// Breakpoints are always normalized: strictly increasing abscissae, first at `lo`, last at
/// `hi`, and no interior point collinear with its neighbours. Structural equality is therefore
/// extensional equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Pwa {
    lo: Rational,
    hi: Rational,
    body: Body,
}

/// Parameters of one delay-then-jump step, matching one outgoing edge.
#[derive(Clone, Debug)]
pub struct Elapse {
    pub rate: Rational,
    pub addend: Rational,
    pub window: (Rational, Rational),
    pub player: Opt,
    pub reset: bool,
    pub urgent: bool,
}

fn collinear(a: &(Rational, Rational), b: &(Rational, Rational), c: &(Rational, Rational)) -> bool {
    (&b.1 - &a.1) * (&c.0 - &b.0) == (&c.1 - &b.1) * (&b.0 - &a.0)
}

fn normalize(points: Vec<(Rational, Rational)>) -> Vec<(Rational, Rational)> {
    let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(points.len());
    for p in points {
        if let Some(last) = out.last() {
            if last.0 == p.0 {
                continue;
            }
        }
        while out.len() >= 2 && collinear(&out[out.len() - 2], &out[out.len() - 1], &p) {
            out.pop();
        }
        out.push(p);
    }
    out
}

fn lerp(p: &(Rational, Rational), r: &(Rational, Rational), x: &Rational) -> Rational {
    if x == &p.0 {
        return p.1.clone();
    }
    if x == &r.0 {
        return r.1.clone();
    }
    &p.1 + (&r.1 - &p.1) * (x - &p.0) / (&r.0 - &p.0)
}

fn domain_str(lo: &Rational, hi: &Rational) -> String {
    format!("{lo},{hi}")
}

impl Pwa {
    pub fn constant(lo: Rational, hi: Rational, c: Rational) -> Pwa {
        Pwa::affine(lo, hi, Rational::zero(), c)
    }

    /// `x -> slope * x + intercept` on `[lo, hi]`.
    pub fn affine(lo: Rational, hi: Rational, slope: Rational, intercept: Rational) -> Pwa {
        assert!(lo <= hi, "empty domain");
        let y = |x: &Rational| &slope * x + &intercept;
        let points = if lo == hi {
            vec![(lo.clone(), y(&lo))]
        } else {
            vec![(lo.clone(), y(&lo)), (hi.clone(), y(&hi))]
        };
        Pwa { lo, hi, body: Body::Points(points) }
    }

    pub fn uniform_inf(lo: Rational, hi: Rational, sign: Inf) -> Pwa {
        assert!(lo <= hi, "empty domain");
        Pwa { lo, hi, body: Body::Inf(sign) }
    }

    pub fn uniform(lo: Rational, hi: Rational, v: &ExtValue) -> Pwa {
        match v {
            ExtValue::Finite(c) => Pwa::constant(lo, hi, c.clone()),
            ExtValue::PosInf => Pwa::uniform_inf(lo, hi, Inf::Pos),
            ExtValue::NegInf => Pwa::uniform_inf(lo, hi, Inf::Neg),
        }
    }

    /// Builds a function from its breakpoints; the domain is spanned by the first and last.
    pub fn from_points(points: Vec<(Rational, Rational)>) -> Result<Pwa, PwaError> {
        if points.is_empty() {
            return Err(PwaError::Malformed("no breakpoints".into()));
        }
        for w in points.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(PwaError::Malformed(format!(
                    "abscissae not strictly increasing at {}",
                    w[1].0
                )));
            }
        }
        let lo = points[0].0.clone();
        let hi = points[points.len() - 1].0.clone();
        Ok(Pwa { lo, hi, body: Body::Points(normalize(points)) })
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn domain(&self) -> (&Rational, &Rational) {
        (&self.lo, &self.hi)
    }

    pub fn same_domain(&self, other: &Pwa) -> bool {
        self.lo == other.lo && self.hi == other.hi
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn inf_sign(&self) -> Option<Inf> {
        match self.body {
            Body::Inf(s) => Some(s),
            Body::Points(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.body, Body::Points(_))
    }

    pub fn points(&self) -> Option<&[(Rational, Rational)]> {
        match &self.body {
            Body::Points(p) => Some(p),
            Body::Inf(_) => None,
        }
    }

    /// Number of breakpoints (0 for a uniform infinity).
    pub fn size(&self) -> usize {
        self.points().map_or(0, |p| p.len())
    }

    fn check_domain(&self, x: &Rational) -> Result<(), PwaError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(PwaError::OutOfDomain(x.to_string(), self.lo.to_string(), self.hi.to_string()))
        }
    }

    pub fn eval(&self, x: &Rational) -> Result<ExtValue, PwaError> {
        self.check_domain(x)?;
        Ok(match &self.body {
            Body::Inf(s) => s.value(),
            Body::Points(p) => ExtValue::Finite(interp(p, x)),
        })
    }

    /// Restriction to `[a, b]`, a sub-interval of the domain.
    pub fn restrict(&self, a: &Rational, b: &Rational) -> Result<Pwa, PwaError> {
        self.check_domain(a)?;
        self.check_domain(b)?;
        if a > b {
            return Err(PwaError::Malformed(format!("empty restriction [{a},{b}]")));
        }
        let body = match &self.body {
            Body::Inf(s) => Body::Inf(*s),
            Body::Points(p) => {
                let mut out = vec![(a.clone(), interp(p, a))];
                out.extend(p.iter().filter(|(x, _)| a < x && x < b).cloned());
                if a < b {
                    out.push((b.clone(), interp(p, b)));
                }
                Body::Points(normalize(out))
            }
        };
        Ok(Pwa { lo: a.clone(), hi: b.clone(), body })
    }

    /// Adds `slope * x + c` to every finite value.
    pub fn add_affine(&self, slope: &Rational, c: &Rational) -> Pwa {
        let body = match &self.body {
            Body::Inf(s) => Body::Inf(*s),
            Body::Points(p) => Body::Points(normalize(
                p.iter().map(|(x, y)| (x.clone(), y + slope * x + c)).collect(),
            )),
        };
        Pwa { lo: self.lo.clone(), hi: self.hi.clone(), body }
    }

    pub fn add_const(&self, c: &Rational) -> Pwa {
        self.add_affine(&Rational::zero(), c)
    }

    /// Applies `f` to every breakpoint and renormalizes; abscissae must stay strictly increasing.
    pub fn map_points(
        &self,
        f: impl Fn(&Rational, &Rational) -> (Rational, Rational),
    ) -> Result<Pwa, PwaError> {
        match &self.body {
            Body::Inf(_) => Ok(self.clone()),
            Body::Points(p) => {
                let mapped: Vec<_> = p.iter().map(|(x, y)| f(x, y)).collect();
                let mut dedup: Vec<(Rational, Rational)> = Vec::with_capacity(mapped.len());
                for pt in mapped {
                    match dedup.last() {
                        Some(last) if last.0 == pt.0 => {
                            if last.1 != pt.1 {
                                return Err(PwaError::Malformed("discontinuity after map".into()));
                            }
                        }
                        Some(last) if last.0 > pt.0 => {
                            return Err(PwaError::Malformed("abscissae reordered by map".into()))
                        }
                        _ => dedup.push(pt),
                    }
                }
                Pwa::from_points(dedup)
            }
        }
    }

    /// Breakpoint abscissae (the two domain ends for a uniform infinity).
    pub fn breakpoints(&self) -> Vec<Rational> {
        match &self.body {
            Body::Points(p) => p.iter().map(|(x, _)| x.clone()).collect(),
            Body::Inf(_) if self.lo == self.hi => vec![self.lo.clone()],
            Body::Inf(_) => vec![self.lo.clone(), self.hi.clone()],
        }
    }

    pub fn max_slope(&self) -> Result<Rational, PwaError> {
        match &self.body {
            Body::Inf(_) => Err(PwaError::SlopeOfInfinity),
            Body::Points(p) => Ok(p
                .windows(2)
                .map(|w| ((&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0)).abs())
                .fold(Rational::zero(), Rational::max)),
        }
    }

    /// Extensional equality; errors when the domains differ.
    pub fn equal(&self, other: &Pwa) -> Result<bool, PwaError> {
        self.require_same_domain(other)?;
        Ok(self.body == other.body)
    }

    fn require_same_domain(&self, other: &Pwa) -> Result<(), PwaError> {
        if self.same_domain(other) {
            Ok(())
        } else {
            Err(PwaError::MismatchedDomains(
                domain_str(&self.lo, &self.hi),
                domain_str(&other.lo, &other.hi),
            ))
        }
    }

    /// Pointwise `self <= other + slack`.
    pub fn leq_within(&self, other: &Pwa, slack: &Rational) -> Result<bool, PwaError> {
        self.require_same_domain(other)?;
        Ok(match (&self.body, &other.body) {
            (Body::Inf(Inf::Neg), _) | (_, Body::Inf(Inf::Pos)) => true,
            (Body::Inf(Inf::Pos), _) | (_, Body::Inf(Inf::Neg)) => false,
            (Body::Points(a), Body::Points(b)) => {
                let xs = merge_xs(a, b);
                let ya = values_at(a, &xs);
                let yb = values_at(b, &xs);
                ya.iter().zip(&yb).all(|(u, v)| u <= &(v + slack))
            }
        })
    }

    pub fn leq(&self, other: &Pwa) -> Result<bool, PwaError> {
        self.leq_within(other, &Rational::zero())
    }

    /// Largest pointwise gap `|self - other|`; `None` when the infinities do not match.
    pub fn max_abs_diff(&self, other: &Pwa) -> Result<Option<Rational>, PwaError> {
        self.require_same_domain(other)?;
        Ok(match (&self.body, &other.body) {
            (Body::Inf(s), Body::Inf(t)) if s == t => Some(Rational::zero()),
            (Body::Points(a), Body::Points(b)) => {
                let xs = merge_xs(a, b);
                let ya = values_at(a, &xs);
                let yb = values_at(b, &xs);
                Some(
                    ya.iter()
                        .zip(&yb)
                        .map(|(u, v)| (u - v).abs())
                        .fold(Rational::zero(), Rational::max),
                )
            }
            _ => None,
        })
    }

    /// Pointwise minimum or maximum of functions sharing one domain.
    pub fn pointwise_opt(fs: &[Pwa], mode: Opt) -> Result<Pwa, PwaError> {
        let (first, rest) = fs.split_first().ok_or(PwaError::EmptyList)?;
        for f in rest {
            first.require_same_domain(f)?;
        }
        let mut acc = first.clone();
        for f in rest {
            acc = opt2(&acc, f, mode);
        }
        Ok(acc)
    }

    /// One application of the delay-then-jump optimum for a single edge.
    ///
    /// For each `ν` in `out_domain`, returns the optimum over admissible landing dates
    /// `s in [max(ν, a), b]` of `rate*(s-ν) + addend + self(s')` with `s' = 0` on reset.
    /// Urgent sources only admit `s = ν`.
    pub fn elapse_opt(&self, e: &Elapse, out_domain: (&Rational, &Rational)) -> Result<Pwa, PwaError> {
        let (a, b) = (&e.window.0, &e.window.1);
        let (lo, hi) = out_domain;
        let zero = Rational::zero();
        if a > b || lo > hi {
            return Err(PwaError::Malformed("empty window or domain".into()));
        }
        if e.reset {
            if !self.contains(&zero) {
                return Err(PwaError::GuardOutsideSuccessorDomain(a.to_string(), b.to_string()));
            }
        } else if !(self.contains(a) && self.contains(b)) {
            return Err(PwaError::GuardOutsideSuccessorDomain(a.to_string(), b.to_string()));
        }
        let neutral = Pwa::uniform_inf(lo.clone(), hi.clone(), e.player.neutral());
        if e.urgent {
            if hi < a || lo > b {
                return Ok(neutral);
            }
            if lo < a || hi > b {
                return Err(PwaError::PartiallyEnabled);
            }
        } else {
            if lo > b {
                return Ok(neutral);
            }
            if hi > b {
                return Err(PwaError::PartiallyEnabled);
            }
        }
        if let Some(s) = self.inf_sign() {
            return Ok(Pwa::uniform_inf(lo.clone(), hi.clone(), s));
        }
        if e.urgent {
            return Ok(if e.reset {
                let v = self.eval(&zero)?.as_finite().cloned().expect("finite body");
                Pwa::constant(lo.clone(), hi.clone(), v + &e.addend)
            } else {
                self.restrict(lo, hi)?.add_const(&e.addend)
            });
        }
        if e.reset {
            let c = self.eval(&zero)?.as_finite().cloned().expect("finite body") + &e.addend;
            // rate*(s-ν) is monotone in s, so the optimum sits at an end of the window.
            let go_late = match e.player {
                Opt::Min => e.rate.is_negative(),
                Opt::Max => e.rate.is_positive(),
            };
            if go_late {
                return Ok(Pwa::affine(lo.clone(), hi.clone(), -&e.rate, &e.rate * b + c));
            }
            return Ok(wait_until(lo, hi, a, &e.rate, &Pwa::constant(a.clone(), b.clone(), c)));
        }
        let h = self.restrict(a, b)?.add_affine(&e.rate, &zero);
        let m = suffix_opt(&h, e.player);
        // g(ν) = -rate*ν + m(max(ν, a)) + addend
        let wait = wait_until(lo, hi, a, &Rational::zero(), &m);
        Ok(wait.add_affine(&-&e.rate, &e.addend))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let domain = vec![self.lo.to_string(), self.hi.to_string()];
        match &self.body {
            Body::Inf(s) => serde_json::json!({
                "domain": domain,
                "inf": if *s == Inf::Pos { "+" } else { "-" },
            }),
            Body::Points(p) => serde_json::json!({
                "domain": domain,
                "points": p.iter().map(|(x, y)| vec![x.to_string(), y.to_string()]).collect::<Vec<_>>(),
            }),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Pwa, PwaError> {
        let raw: PwaJson =
            serde_json::from_value(v.clone()).map_err(|e| PwaError::Malformed(e.to_string()))?;
        let [lo, hi] = raw.domain;
        match (raw.points, raw.inf.as_deref()) {
            (None, Some("+")) => Ok(Pwa::uniform_inf(lo, hi, Inf::Pos)),
            (None, Some("-")) => Ok(Pwa::uniform_inf(lo, hi, Inf::Neg)),
            (Some(pts), None) => {
                let f = Pwa::from_points(pts.into_iter().map(|[x, y]| (x, y)).collect())?;
                if f.lo != lo || f.hi != hi {
                    return Err(PwaError::Malformed("breakpoints do not span the domain".into()));
                }
                Ok(f)
            }
            _ => Err(PwaError::Malformed("expected exactly one of `points` or `inf`".into())),
        }
    }

    /// CSV table with header `x,y`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y\n");
        match &self.body {
            Body::Inf(sign) => {
                let v = sign.value();
                for x in self.breakpoints() {
                    s.push_str(&format!("{x},{v}\n"));
                }
            }
            Body::Points(p) => {
                for (x, y) in p {
                    s.push_str(&format!("{x},{y}\n"));
                }
            }
        }
        s
    }
}

#[derive(Deserialize)]
struct PwaJson {
    domain: [Rational; 2],
    points: Option<Vec<[Rational; 2]>>,
    inf: Option<String>,
}

impl fmt::Debug for Pwa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Pwa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            Body::Inf(s) => write!(f, "[{},{}]:{}", self.lo, self.hi, s.value()),
            Body::Points(p) => {
                write!(f, "{{")?;
                for (i, (x, y)) in p.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "({x},{y})")?;
                }
                write!(f, "}}")
            }
        }
    }
}

fn interp(p: &[(Rational, Rational)], x: &Rational) -> Rational {
    if p.len() == 1 {
        return p[0].1.clone();
    }
    let i = p.partition_point(|(px, _)| px <= x);
    if i == 0 {
        return p[0].1.clone();
    }
    if i >= p.len() {
        return p[p.len() - 1].1.clone();
    }
    lerp(&p[i - 1], &p[i], x)
}

fn merge_xs(a: &[(Rational, Rational)], b: &[(Rational, Rational)]) -> Vec<Rational> {
    let mut xs: Vec<Rational> = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(p), Some(r)) if p.0 < r.0 => {
                i += 1;
                p.0.clone()
            }
            (Some(p), Some(r)) if p.0 > r.0 => {
                j += 1;
                r.0.clone()
            }
            (Some(p), Some(_)) => {
                i += 1;
                j += 1;
                p.0.clone()
            }
            (Some(p), None) => {
                i += 1;
                p.0.clone()
            }
            (None, Some(r)) => {
                j += 1;
                r.0.clone()
            }
            (None, None) => unreachable!(),
        };
        xs.push(next);
    }
    xs
}

/// Values at sorted abscissae, all inside the domain of `p`.
fn values_at(p: &[(Rational, Rational)], xs: &[Rational]) -> Vec<Rational> {
    let mut out = Vec::with_capacity(xs.len());
    let mut k = 0;
    for x in xs {
        while k + 1 < p.len() && &p[k + 1].0 < x {
            k += 1;
        }
        if k + 1 < p.len() {
            out.push(lerp(&p[k], &p[k + 1], x));
        } else {
            out.push(p[k].1.clone());
        }
    }
    out
}

fn opt2(f: &Pwa, g: &Pwa, mode: Opt) -> Pwa {
    let absorbing = mode.absorbing();
    let neutral = mode.neutral();
    match (&f.body, &g.body) {
        (Body::Inf(s), _) if *s == absorbing => f.clone(),
        (_, Body::Inf(s)) if *s == absorbing => g.clone(),
        (Body::Inf(s), _) if *s == neutral => g.clone(),
        (_, Body::Inf(s)) if *s == neutral => f.clone(),
        (Body::Points(a), Body::Points(b)) => {
            let xs = merge_xs(a, b);
            let ya = values_at(a, &xs);
            let yb = values_at(b, &xs);
            let mut out = Vec::with_capacity(xs.len() * 2);
            for k in 0..xs.len() {
                out.push((xs[k].clone(), mode.pick(ya[k].clone(), yb[k].clone())));
                if k + 1 < xs.len() {
                    let d0 = &ya[k] - &yb[k];
                    let d1 = &ya[k + 1] - &yb[k + 1];
                    if d0.signum() * d1.signum() < 0 {
                        let x = &xs[k] + (&xs[k + 1] - &xs[k]) * &d0 / (&d0 - &d1);
                        let y = lerp(&(xs[k].clone(), ya[k].clone()), &(xs[k + 1].clone(), ya[k + 1].clone()), &x);
                        out.push((x, y));
                    }
                }
            }
            Pwa { lo: f.lo.clone(), hi: f.hi.clone(), body: Body::Points(normalize(out)) }
        }
        _ => unreachable!("every infinity is absorbing or neutral"),
    }
}

/// `m(u) = opt_{s in [u, b]} h(s)` on the domain `[a, b]` of `h`.
fn suffix_opt(h: &Pwa, mode: Opt) -> Pwa {
    let p = h.points().expect("finite body");
    let n = p.len();
    let mut rev: Vec<(Rational, Rational)> = Vec::with_capacity(2 * n);
    let mut cur = p[n - 1].1.clone();
    rev.push(p[n - 1].clone());
    for k in (0..n - 1).rev() {
        let (x0, y0) = &p[k];
        let (x1, y1) = &p[k + 1];
        if mode.prefers(y0, &cur) {
            if y1 != &cur {
                // h crosses the running optimum inside the segment
                let x = x0 + (x1 - x0) * (&cur - y0) / (y1 - y0);
                rev.push((x, cur.clone()));
            }
            rev.push((x0.clone(), y0.clone()));
            cur = y0.clone();
        } else {
            rev.push((x0.clone(), cur.clone()));
        }
    }
    rev.reverse();
    Pwa { lo: h.lo.clone(), hi: h.hi.clone(), body: Body::Points(normalize(rev)) }
}

/// `ν -> slope_before*(a-ν) + m(max(ν, a))` on `[lo, hi]`, where `m` lives on `[a, b]`
/// and `hi <= b`.
fn wait_until(lo: &Rational, hi: &Rational, a: &Rational, slope_before: &Rational, m: &Pwa) -> Pwa {
    let m_pts = m.points().expect("finite body");
    let ma = interp(m_pts, a);
    let mut out = Vec::new();
    if lo < a {
        let end = if hi < a { hi } else { a };
        out.push((lo.clone(), slope_before * (a - lo) + &ma));
        out.push((end.clone(), slope_before * (a - end) + &ma));
    }
    if hi >= a {
        let start = if lo > a { lo } else { a };
        out.push((start.clone(), interp(m_pts, start)));
        out.extend(m_pts.iter().filter(|(x, _)| start < x && x < hi).cloned());
        out.push((hi.clone(), interp(m_pts, hi)));
    }
    Pwa { lo: lo.clone(), hi: hi.clone(), body: Body::Points(normalize(out)) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;

    fn pw(pts: &[(&str, &str)]) -> Pwa {
        Pwa::from_points(pts.iter().map(|(x, y)| (q(x), q(y))).collect()).unwrap()
    }

    #[test]
    fn eval_interpolates() {
        let f = pw(&[("0", "1"), ("1/2", "0"), ("1", "1")]);
        assert_eq!(f.eval(&q("3/4")).unwrap(), ExtValue::Finite(q("1/2")));
        assert!(f.eval(&q("2")).is_err());
        let inf = Pwa::uniform_inf(q("0"), q("1"), Inf::Pos);
        assert_eq!(inf.eval(&q("0")).unwrap(), ExtValue::PosInf);
    }

    #[test]
    fn min_of_crossing_lines() {
        let f = pw(&[("0", "0"), ("1", "1")]);
        let g = pw(&[("0", "1"), ("1", "0")]);
        let m = Pwa::pointwise_opt(&[f, g], Opt::Min).unwrap();
        assert_eq!(m, pw(&[("0", "0"), ("1/2", "1/2"), ("1", "0")]));
        let f = pw(&[("0", "-1"), ("1", "1")]);
        let g = pw(&[("0", "1"), ("1", "0")]);
        let m = Pwa::pointwise_opt(&[f, g], Opt::Max).unwrap();
        let mn = Pwa::pointwise_opt(&[m.clone()], Opt::Min).unwrap();
        assert_eq!(m, mn);
        assert_eq!(m, pw(&[("0", "1"), ("2/3", "1/3"), ("1", "1")]));
    }

    #[test]
    fn infinities_in_opt() {
        let f = pw(&[("0", "0"), ("1", "1")]);
        let ninf = Pwa::uniform_inf(q("0"), q("1"), Inf::Neg);
        assert_eq!(Pwa::pointwise_opt(&[f.clone(), ninf.clone()], Opt::Max).unwrap(), f);
        assert_eq!(Pwa::pointwise_opt(&[f, ninf.clone()], Opt::Min).unwrap(), ninf);
        assert!(Pwa::pointwise_opt(&[], Opt::Min).is_err());
    }

    #[test]
    fn equality_and_slope() {
        let f = pw(&[("0", "0"), ("1/2", "1/2"), ("1", "1")]);
        assert!(f.equal(&pw(&[("0", "0"), ("1", "1")])).unwrap());
        assert_eq!(pw(&[("0", "1"), ("1/2", "0"), ("1", "1")]).max_slope().unwrap(), q("2"));
        assert!(Pwa::uniform_inf(q("0"), q("1"), Inf::Pos).max_slope().is_err());
    }

    #[test]
    fn elapse_reset_edge() {
        // δ2 of the cyclic example: x = 1, reset, weight 1, rate -2, value V = 5 after reset.
        let f = Pwa::constant(q("0"), q("0"), q("5"));
        let e = Elapse {
            rate: q("-2"),
            addend: q("1"),
            window: (q("1"), q("1")),
            player: Opt::Min,
            reset: true,
            urgent: false,
        };
        let g = f.elapse_opt(&e, (&q("0"), &q("1"))).unwrap();
        assert_eq!(g, pw(&[("0", "4"), ("1", "6")]));
    }

    #[test]
    fn elapse_max_waits() {
        let f = pw(&[("0", "0"), ("1", "1")]);
        let e = Elapse {
            rate: q("0"),
            addend: q("0"),
            window: (q("0"), q("1")),
            player: Opt::Max,
            reset: false,
            urgent: false,
        };
        let g = f.elapse_opt(&e, (&q("0"), &q("1"))).unwrap();
        assert_eq!(g, Pwa::constant(q("0"), q("1"), q("1")));
    }

    #[test]
    fn elapse_partial_enable_is_rejected() {
        let f = Pwa::constant(q("0"), q("1"), q("0"));
        let e = Elapse {
            rate: q("1"),
            addend: q("0"),
            window: (q("0"), q("1/2")),
            player: Opt::Min,
            reset: false,
            urgent: false,
        };
        assert_eq!(f.elapse_opt(&e, (&q("0"), &q("1"))), Err(PwaError::PartiallyEnabled));
        assert!(f.elapse_opt(&e, (&q("0"), &q("1/2"))).is_ok());
    }

    #[test]
    fn json_roundtrip() {
        let f = pw(&[("0", "1/3"), ("1", "-2")]);
        assert_eq!(Pwa::from_json(&f.to_json()).unwrap(), f);
        let g = Pwa::uniform_inf(q("1"), q("2"), Inf::Neg);
        assert_eq!(Pwa::from_json(&g.to_json()).unwrap(), g);
        assert_eq!(f.to_csv(), "x,y\n0,1/3\n1,-2\n");
    }
}
