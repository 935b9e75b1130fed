//! Empirical spectral distributions and the stopping rules built on them.

use crate::error::{Error, Result};
use crate::extended::ExtReal;
use crate::mp_dist::MpLaw;

/// Relative gap below which two adjacent eigenvalues count as tied in the
/// CPV rule: `lambda_q - lambda_{q+1} <= TIE_TOL * lambda_1`.
pub const TIE_TOL: f64 = 1e-10;

/// Width at which the Levy-distance bisection stops.
pub const LEVY_TOL: f64 = 1e-9;

/// Eigenvalues of a positive semi-definite matrix, sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    /// Builds a spectrum from eigenvalues in any order.
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidParameter(
                "spectrum must have at least one eigenvalue".into(),
            ));
        }
        if let Some(bad) = eigenvalues.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eigenvalues must be finite and nonnegative, got {bad}"
            )));
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Ok(Spectrum { eigenvalues })
    }

    /// Descending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn p(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn largest(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn trace(&self) -> f64 {
        // ascending order keeps the sum insensitive to the large spike
        self.eigenvalues.iter().rev().sum()
    }

    pub fn mean(&self) -> f64 {
        self.trace() / self.p() as f64
    }

    pub fn min_positive(&self) -> Option<f64> {
        self.eigenvalues.iter().rev().copied().find(|v| *v > 0.0)
    }

    pub fn scaled(&self, k: f64) -> Result<Spectrum> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale must be positive, got {k}"
            )));
        }
        Spectrum::new(self.eigenvalues.iter().map(|v| v * k).collect())
    }

    fn require_positive(&self) -> Result<()> {
        if self.largest() > 0.0 {
            Ok(())
        } else {
            Err(Error::ZeroSpectrum)
        }
    }

    /// The ESD `F^M(x) = #{i : lambda_i <= x} / p`.
    pub fn esd(&self) -> StepDistribution {
        let groups = exact_groups(&self.eigenvalues);
        step_from_groups(&groups, self.p() as f64, |g| g.count as f64)
    }

    pub fn esd_eval(&self, x: f64) -> f64 {
        self.eigenvalues.iter().filter(|v| **v <= x).count() as f64 / self.p() as f64
    }

    /// Guttman-Kaiser retention: the fraction of eigenvalues strictly above
    /// the mean eigenvalue.
    pub fn gk_fraction(&self) -> f64 {
        let mean = self.mean();
        self.eigenvalues.iter().filter(|v| **v > mean).count() as f64 / self.p() as f64
    }

    /// `G^M(x) = sum_{lambda_i <= x} lambda_i / sum_i lambda_i`.
    pub fn g_step(&self) -> Result<StepDistribution> {
        self.require_positive()?;
        let groups = exact_groups(&self.eigenvalues);
        Ok(step_from_groups(&groups, self.trace(), |g| g.sum))
    }

    /// CPV retention `CP^M(t)` by direct enumeration: the largest `q < p`
    /// whose leading share is at most `t` and which does not split a tie,
    /// divided by `p`. `q = 0` is always admissible.
    pub fn cpv_fraction(&self, t: f64) -> Result<f64> {
        check_threshold(t)?;
        self.require_positive()?;
        let ev = &self.eigenvalues;
        let total = self.trace();
        let gap = TIE_TOL * self.largest();
        let mut best = 0;
        let mut head = 0.0;
        for q in 1..ev.len() {
            head += ev[q - 1];
            if head / total > t {
                break;
            }
            if ev[q - 1] - ev[q] > gap {
                best = q;
            }
        }
        Ok(best as f64 / self.p() as f64)
    }

    /// CPV retention through the threshold representation
    /// `CP^M(t) = 1 - F^M((G^M)^-(1 - t))`, with the ESD and `G^M` built on
    /// the same tie groups the direct rule uses.
    pub fn cpv_fraction_via_threshold(&self, t: f64) -> Result<f64> {
        check_threshold(t)?;
        self.require_positive()?;
        let groups = tolerant_groups(&self.eigenvalues, TIE_TOL * self.largest());
        let g = step_from_groups(&groups, self.trace(), |g| g.sum);
        // p F^M(x) as an exact count, so both routes divide the same integer by p.
        let below = match g.generalized_inverse(1.0 - t) {
            ExtReal::NegInf => 0,
            ExtReal::PosInf => self.p(),
            ExtReal::Finite(x) => groups.iter().filter(|g| g.at <= x).map(|g| g.count).sum(),
        };
        Ok((self.p() - below) as f64 / self.p() as f64)
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "threshold t must lie in (0, 1), got {t}"
        )))
    }
}

/// A run of eigenvalues sharing one jump location.
struct Group {
    at: f64,
    count: usize,
    sum: f64,
}

/// Groups of exactly equal values, ascending.
fn exact_groups(desc: &[f64]) -> Vec<Group> {
    tolerant_groups(desc, 0.0)
}

/// Groups chained by gaps `<= tol`, ascending; each sits at its smallest member.
fn tolerant_groups(desc: &[f64], tol: f64) -> Vec<Group> {
    let mut out: Vec<Group> = Vec::new();
    let mut prev: Option<f64> = None;
    for &v in desc.iter().rev() {
        match (prev, out.last_mut()) {
            (Some(pv), Some(g)) if v - pv <= tol => {
                g.count += 1;
                g.sum += v;
            }
            _ => out.push(Group {
                at: v,
                count: 1,
                sum: v,
            }),
        }
        prev = Some(v);
    }
    out
}

fn step_from_groups<W: Fn(&Group) -> f64>(
    groups: &[Group],
    total: f64,
    weight: W,
) -> StepDistribution {
    let mut jumps = Vec::with_capacity(groups.len());
    let mut values = Vec::with_capacity(groups.len());
    let mut acc = 0.0;
    for g in groups {
        acc += weight(g);
        jumps.push(g.at);
        values.push(acc / total);
    }
    StepDistribution { jumps, values }
}

/// A right-continuous, nondecreasing step function starting at 0, with
/// total mass `L <= 1` (`L < 1` for defective functions).
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    jumps: Vec<f64>,
    values: Vec<f64>,
}

impl StepDistribution {
    /// `jumps` strictly increasing; `values[k]` is the function value on
    /// `[jumps[k], jumps[k + 1])`.
    pub fn new(jumps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if jumps.len() != values.len() || jumps.is_empty() {
            return Err(Error::InvalidParameter(
                "step function needs matching, nonempty jump and value lists".into(),
            ));
        }
        if jumps.iter().any(|x| !x.is_finite()) || jumps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "jump points must be finite and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) || values.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::InvalidParameter(
                "values must be nondecreasing within [0, 1]".into(),
            ));
        }
        if *values.last().unwrap() <= 0.0 {
            return Err(Error::InvalidParameter(
                "total mass must be positive".into(),
            ));
        }
        Ok(StepDistribution { jumps, values })
    }

    /// Empirical distribution function of a sample.
    pub fn empirical(sample: &[f64]) -> Result<Self> {
        let spectrum_like: Vec<f64> = {
            let mut s = sample.to_vec();
            if s.iter().any(|v| !v.is_finite()) || s.is_empty() {
                return Err(Error::InvalidParameter(
                    "sample must be nonempty and finite".into(),
                ));
            }
            s.sort_by(|a, b| b.total_cmp(a));
            s
        };
        let groups = exact_groups(&spectrum_like);
        Ok(step_from_groups(&groups, sample.len() as f64, |g| {
            g.count as f64
        }))
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total_mass(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.jumps.partition_point(|j| *j <= x) {
            0 => 0.0,
            k => self.values[k - 1],
        }
    }

    pub fn left_limit(&self, x: f64) -> f64 {
        match self.jumps.partition_point(|j| *j < x) {
            0 => 0.0,
            k => self.values[k - 1],
        }
    }

    /// `inf { x : F(x) >= u }` with `inf {} = +inf`; levels `u <= 0` have no
    /// lower bound.
    pub fn generalized_inverse(&self, u: f64) -> ExtReal {
        if u <= 0.0 {
            return ExtReal::NegInf;
        }
        match self.values.iter().position(|v| *v >= u) {
            Some(k) => ExtReal::Finite(self.jumps[k]),
            None => ExtReal::PosInf,
        }
    }
}

/// Anything the Levy and Kolmogorov distances can compare.
pub trait DistributionFunction {
    fn eval(&self, x: f64) -> f64;
    fn left_limit(&self, x: f64) -> f64;
    /// Points where the function jumps. For a step function, all of them.
    fn jump_points(&self) -> Vec<f64>;
    /// Whether the function is constant between its jump points.
    fn is_step(&self) -> bool;
    fn total_mass(&self) -> f64;
    /// An interval outside of which the function is flat.
    fn support(&self) -> (f64, f64);
}

impl DistributionFunction for StepDistribution {
    fn eval(&self, x: f64) -> f64 {
        StepDistribution::eval(self, x)
    }
    fn left_limit(&self, x: f64) -> f64 {
        StepDistribution::left_limit(self, x)
    }
    fn jump_points(&self) -> Vec<f64> {
        self.jumps.clone()
    }
    fn is_step(&self) -> bool {
        true
    }
    fn total_mass(&self) -> f64 {
        StepDistribution::total_mass(self)
    }
    fn support(&self) -> (f64, f64) {
        (self.jumps[0], *self.jumps.last().unwrap())
    }
}

impl DistributionFunction for MpLaw {
    fn eval(&self, x: f64) -> f64 {
        self.cdf(x)
    }
    fn left_limit(&self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            self.cdf(x)
        }
    }
    fn jump_points(&self) -> Vec<f64> {
        if self.point_mass() > 0.0 {
            vec![0.0]
        } else {
            Vec::new()
        }
    }
    fn is_step(&self) -> bool {
        false
    }
    fn total_mass(&self) -> f64 {
        1.0
    }
    fn support(&self) -> (f64, f64) {
        (self.lower_edge().min(0.0), self.upper_edge())
    }
}

fn merged_points<F: DistributionFunction + ?Sized, G: DistributionFunction + ?Sized>(
    f: &F,
    g: &G,
) -> Vec<f64> {
    let mut pts = f.jump_points();
    pts.extend(g.jump_points());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Grid used when neither argument is a step function.
fn dense_grid<F: DistributionFunction + ?Sized, G: DistributionFunction + ?Sized>(
    f: &F,
    g: &G,
) -> Vec<f64> {
    const POINTS: usize = 200_001;
    let (fl, fh) = f.support();
    let (gl, gh) = g.support();
    let (lo, hi) = (fl.min(gl), fh.max(gh));
    let mut pts: Vec<f64> = (0..POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (POINTS - 1) as f64)
        .collect();
    pts.extend(merged_points(f, g));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Kolmogorov distance `sup_x |F(x) - G(x)|`.
///
/// When at least one argument is a step function the supremum is attained
/// at a jump point, from the right or from the left, so the result is
/// exact. Two continuous arguments fall back to a dense grid.
pub fn kolmogorov_distance<F, G>(f: &F, g: &G) -> f64
where
    F: DistributionFunction + ?Sized,
    G: DistributionFunction + ?Sized,
{
    let pts = if f.is_step() || g.is_step() {
        merged_points(f, g)
    } else {
        dense_grid(f, g)
    };
    let mut sup = (f.total_mass() - g.total_mass()).abs();
    for x in pts {
        sup = sup
            .max((f.eval(x) - g.eval(x)).abs())
            .max((f.left_limit(x) - g.left_limit(x)).abs());
    }
    sup
}

/// Whether `F(x - eps) - eps <= G(x) <= F(x + eps) + eps` for every `x`.
fn levy_feasible<F, G>(f: &F, g: &G, eps: f64, exact: bool, grid: &[f64]) -> bool
where
    F: DistributionFunction + ?Sized,
    G: DistributionFunction + ?Sized,
{
    const SLACK: f64 = 1e-14;
    if f.total_mass() - eps > g.total_mass() + SLACK
        || g.total_mass() > f.total_mass() + eps + SLACK
    {
        return false;
    }
    let lower_ok = |fx: f64, gx: f64| fx - eps <= gx + SLACK;
    let upper_ok = |gx: f64, fx: f64| gx <= fx + eps + SLACK;
    let check_at_g_point = |x: f64| {
        lower_ok(f.eval(x - eps), g.eval(x))
            && lower_ok(f.left_limit(x - eps), g.left_limit(x))
            && upper_ok(g.eval(x), f.eval(x + eps))
            && upper_ok(g.left_limit(x), f.left_limit(x + eps))
    };
    if !exact {
        return grid.iter().all(|&x| check_at_g_point(x));
    }
    // Between consecutive candidates one side is constant and the other
    // monotone, so both inequalities are tightest at the candidates.
    for j in g.jump_points() {
        if !check_at_g_point(j) {
            return false;
        }
    }
    for j in f.jump_points() {
        // x = j + eps for the lower bound, x = j - eps for the upper bound
        if !lower_ok(f.eval(j), g.eval(j + eps))
            || !lower_ok(f.left_limit(j), g.left_limit(j + eps))
        {
            return false;
        }
        if !upper_ok(g.eval(j - eps), f.eval(j))
            || !upper_ok(g.left_limit(j - eps), f.left_limit(j))
        {
            return false;
        }
    }
    true
}

/// Levy distance `inf { eps > 0 : F(x - eps) - eps <= G(x) <= F(x + eps) + eps }`,
/// found by bisection on `eps` down to [`LEVY_TOL`]. The search starts from
/// the Kolmogorov distance, which is always feasible, so the result never
/// exceeds it.
pub fn levy_distance<F, G>(f: &F, g: &G) -> f64
where
    F: DistributionFunction + ?Sized,
    G: DistributionFunction + ?Sized,
{
    let exact = f.is_step() || g.is_step();
    let grid = if exact { Vec::new() } else { dense_grid(f, g) };
    let mut hi = kolmogorov_distance(f, g);
    if hi == 0.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    while hi - lo > LEVY_TOL {
        let mid = 0.5 * (lo + hi);
        if levy_feasible(f, g, mid, exact, &grid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::new(v.to_vec()).unwrap()
    }

    fn unit_step(at: f64) -> StepDistribution {
        StepDistribution::new(vec![at], vec![1.0]).unwrap()
    }

    #[test]
    fn spectrum_validation() {
        assert!(Spectrum::new(vec![]).is_err());
        assert!(Spectrum::new(vec![1.0, -0.5]).is_err());
        assert!(Spectrum::new(vec![f64::NAN]).is_err());
        assert_eq!(spec(&[1.0, 3.0, 2.0]).eigenvalues(), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn esd_examples() {
        let s = spec(&[3.0, 2.0, 1.0]);
        assert!((s.esd_eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.esd_eval(3.0), 1.0);
        assert_eq!(spec(&[1.0, 1.0, 1.0]).esd_eval(0.5), 0.0);
        let esd = s.esd();
        for x in [0.0, 1.0, 1.5, 2.0, 2.9, 3.0, 4.0] {
            assert_eq!(esd.eval(x), s.esd_eval(x));
        }
    }

    #[test]
    fn gk_examples() {
        assert_eq!(spec(&[1.0; 7]).gk_fraction(), 0.0);
        assert_eq!(spec(&[2.0, 0.0]).gk_fraction(), 0.5);
    }

    #[test]
    fn g_step_examples() {
        assert_eq!(spec(&[3.0, 2.0, 1.0]).g_step().unwrap().eval(2.0), 0.5);
        assert_eq!(spec(&[0.7, 0.7]).g_step().unwrap().eval(0.7), 1.0);
        assert_eq!(spec(&[5.0, 0.0]).g_step().unwrap().eval(0.0), 0.0);
        assert!(matches!(
            spec(&[0.0, 0.0]).g_step(),
            Err(Error::ZeroSpectrum)
        ));
    }

    #[test]
    fn generalized_inverse_examples() {
        let g = spec(&[3.0, 2.0, 1.0]).g_step().unwrap();
        assert_eq!(g.generalized_inverse(0.5), ExtReal::Finite(2.0));
        assert_eq!(g.generalized_inverse(0.0), ExtReal::NegInf);
        let defective = StepDistribution::new(vec![0.0, 1.0], vec![0.2, 0.6]).unwrap();
        assert_eq!(defective.generalized_inverse(0.8), ExtReal::PosInf);
        assert_eq!(defective.generalized_inverse(0.6), ExtReal::Finite(1.0));
    }

    #[test]
    fn cpv_examples() {
        assert!((spec(&[3.0, 2.0, 1.0]).cpv_fraction(0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(spec(&[2.0, 2.0, 1.0, 1.0]).cpv_fraction(0.5).unwrap(), 0.0);
        assert_eq!(spec(&[1.0, 1.0, 1.0]).cpv_fraction(0.9).unwrap(), 0.0);
        for s in [
            spec(&[3.0, 2.0, 1.0]),
            spec(&[2.0, 2.0, 1.0, 1.0]),
            spec(&[1.0, 1.0, 1.0]),
        ] {
            for t in [0.5, 0.9] {
                assert_eq!(
                    s.cpv_fraction(t).unwrap(),
                    s.cpv_fraction_via_threshold(t).unwrap()
                );
            }
        }
    }

    #[test]
    fn cpv_errors() {
        assert!(spec(&[1.0]).cpv_fraction(0.0).is_err());
        assert!(spec(&[1.0]).cpv_fraction(1.0).is_err());
        assert!(matches!(
            spec(&[0.0, 0.0]).cpv_fraction(0.5),
            Err(Error::ZeroSpectrum)
        ));
    }

    #[test]
    fn near_ties_block_cpv() {
        // the gap is round-off sized relative to the top eigenvalue
        let s = spec(&[4.0, 1.0 + 1e-13, 1.0, 0.5]);
        assert_eq!(s.cpv_fraction(0.85).unwrap(), 0.25);
        assert_eq!(s.cpv_fraction_via_threshold(0.85).unwrap(), 0.25);
    }

    #[test]
    fn distances_of_identical_functions_vanish() {
        let f = spec(&[3.0, 1.0, 0.5]).esd();
        assert_eq!(kolmogorov_distance(&f, &f), 0.0);
        assert_eq!(levy_distance(&f, &f), 0.0);
        let law = MpLaw::new(0.5, 1.0).unwrap();
        assert_eq!(kolmogorov_distance(&law, &law), 0.0);
    }

    #[test]
    fn shifted_unit_steps() {
        let (f, g) = (unit_step(0.0), unit_step(0.5));
        assert_eq!(kolmogorov_distance(&f, &g), 1.0);
        let le = levy_distance(&f, &g);
        assert!((le - 0.5).abs() < 1e-8, "{le}");
        assert!((levy_distance(&g, &f) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn kolmogorov_step_vs_analytic_is_exact() {
        let law = MpLaw::new(0.5, 1.0).unwrap();
        let s = spec(&[2.5, 1.0, 0.2]);
        let k = kolmogorov_distance(&s.esd(), &law);
        // brute force on a fine grid can only approach the exact value from below
        let mut brute: f64 = 0.0;
        for i in 0..=300_000 {
            let x = -0.1 + 3.2 * i as f64 / 300_000.0;
            brute = brute.max((s.esd_eval(x) - law.cdf(x)).abs());
        }
        assert!(brute <= k + 1e-15 && k - brute < 1e-4, "{k} {brute}");
    }

    #[test]
    fn atom_of_mp_law_is_seen() {
        let law = MpLaw::new(2.0, 1.0).unwrap();
        let just_above = unit_step(1e-6);
        // just left of 1e-6 the step is 0 while the law already holds its atom
        assert!(kolmogorov_distance(&just_above, &law) >= 0.5);
    }

    #[test]
    fn levy_bounded_by_kolmogorov_for_analytic_pair() {
        let f = MpLaw::new(0.5, 1.0).unwrap();
        let g = MpLaw::new(0.5, 1.2).unwrap();
        let k = kolmogorov_distance(&f, &g);
        let l = levy_distance(&f, &g);
        assert!(l > 0.0 && l <= k, "{l} {k}");
    }
}
