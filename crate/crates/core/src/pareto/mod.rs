//! ε-approximation of the pure stationary Pareto front by region refinement.
//!
//! Regions use oriented coordinates: minimizing objectives are negated so that larger
//! is better in every dimension. Each region is searched with an optimizing MILP along
//! a direction vector; the optimum splits the region into an achievable part, an
//! unachievable part, ε-slack and new candidate regions.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::encode::{
    extract_strategy, prepare, EncodeError, EncodingArtifacts, EncodingChoice, Prepared, PsmaVerdict, Stage,
};
use crate::exact::{evaluate_query, pareto_filter};
use crate::linalg;
use crate::mdp::{Mdp, MdpError, Point, PureStationaryStrategy, Query, Relation};
use crate::milp::{lp_relax, solve, LinExpr, MilpError, MilpModel, Sense, SolverOptions};
use crate::rational::{from_f64, to_f64, ExtRational, Q};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParetoError {
    #[error("objective {0} can collect unbounded reward")]
    Unbounded(usize),
    #[error("no pure stationary strategy has finite values for all objectives")]
    NoFinitePoint,
    #[error("epsilon needs one positive entry per objective")]
    BadEpsilon,
    #[error("the solver value disagrees with the exact value of the extracted strategy")]
    VerificationFailed(PureStationaryStrategy),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

impl From<MilpError> for ParetoError {
    fn from(e: MilpError) -> Self {
        ParetoError::Encode(EncodeError::Milp(e))
    }
}

impl ParetoError {
    fn is_stop(&self) -> bool {
        matches!(self, ParetoError::Encode(EncodeError::Milp(MilpError::Stopped)))
    }
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The closed halfspace {y | normal·y ≤ offset}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Halfspace {
    pub normal: Vec<Q>,
    pub offset: Q,
}

impl Halfspace {
    pub fn eval(&self, y: &[Q]) -> Q {
        dot(&self.normal, y)
    }

    pub fn contains(&self, y: &[Q]) -> bool {
        self.eval(y) <= self.offset
    }

    fn axis(dim: usize, j: usize, sign: Q, offset: Q) -> Self {
        let mut normal = vec![Q::zero(); dim];
        normal[j] = sign;
        Halfspace { normal, offset }
    }
}

/// Clips a convex polygon (vertex cycle) by a halfspace.
fn clip(poly: &[Vec<Q>], h: &Halfspace) -> Vec<Vec<Q>> {
    let n = poly.len();
    let mut out: Vec<Vec<Q>> = Vec::new();
    for i in 0..n {
        let a = &poly[i];
        let b = &poly[(i + 1) % n];
        let fa = h.eval(a) - &h.offset;
        let fb = h.eval(b) - &h.offset;
        if !fa.is_positive() {
            out.push(a.clone());
        }
        if (fa.is_negative() && fb.is_positive()) || (fa.is_positive() && fb.is_negative()) {
            let t = &fa / (&fa - &fb);
            out.push(a.iter().zip(b).map(|(x, y)| x + &t * (y - x)).collect());
        }
    }
    out.dedup();
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

/// A candidate region: a box intersected with cuts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub lower: Vec<Q>,
    pub upper: Vec<Q>,
    pub cuts: Vec<Halfspace>,
    /// Counter-clockwise vertex cycle, kept for two objectives.
    pub vertices: Option<Vec<Vec<Q>>>,
    /// One anchor per axis; the search direction is orthogonal to their span.
    pub anchors: Vec<Vec<Q>>,
}

impl Region {
    /// The box ∏_j [lower_j, upper_j]; anchor k is the corner that is high on axis k only.
    pub fn new_box(lower: Vec<Q>, upper: Vec<Q>) -> Self {
        let l = lower.len();
        let vertices = (l == 2).then(|| {
            let mut v = vec![
                vec![lower[0].clone(), lower[1].clone()],
                vec![upper[0].clone(), lower[1].clone()],
                vec![upper[0].clone(), upper[1].clone()],
                vec![lower[0].clone(), upper[1].clone()],
            ];
            v.dedup();
            while v.len() > 1 && v.first() == v.last() {
                v.pop();
            }
            v
        });
        let anchors = (0..l)
            .map(|k| {
                let mut a = lower.clone();
                a[k] = upper[k].clone();
                a
            })
            .collect();
        Region { lower, upper, cuts: Vec::new(), vertices, anchors }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Box sides and cuts as halfspaces.
    pub fn halfspaces(&self) -> Vec<Halfspace> {
        let l = self.dim();
        let mut out = Vec::with_capacity(2 * l + self.cuts.len());
        for j in 0..l {
            out.push(Halfspace::axis(l, j, Q::one(), self.upper[j].clone()));
            out.push(Halfspace::axis(l, j, -Q::one(), -self.lower[j].clone()));
        }
        out.extend(self.cuts.iter().cloned());
        out
    }

    pub fn contains(&self, y: &[Q]) -> bool {
        self.halfspaces().iter().all(|h| h.contains(y))
    }

    fn clip_vertices(&mut self, h: &Halfspace) {
        if let Some(v) = &self.vertices {
            self.vertices = Some(clip(v, h));
        }
    }

    fn with_cut(&self, h: Halfspace) -> Region {
        let mut r = self.clone();
        r.clip_vertices(&h);
        r.cuts.push(h);
        r
    }

    fn with_lower(&self, j: usize, v: Q) -> Region {
        let mut r = self.clone();
        if v > r.lower[j] {
            r.clip_vertices(&Halfspace::axis(self.dim(), j, -Q::one(), -v.clone()));
            r.lower[j] = v;
        }
        r
    }

    fn with_upper(&self, j: usize, v: Q) -> Region {
        let mut r = self.clone();
        if v < r.upper[j] {
            r.clip_vertices(&Halfspace::axis(self.dim(), j, Q::one(), v.clone()));
            r.upper[j] = v;
        }
        r
    }

    /// Polygon area for two objectives.
    pub fn area(&self) -> Option<Q> {
        let v = self.vertices.as_ref()?;
        let n = v.len();
        let twice: Q = (0..n)
            .map(|i| {
                let (a, b) = (&v[i], &v[(i + 1) % n]);
                &a[0] * &b[1] - &b[0] * &a[1]
            })
            .sum();
        Some(twice.abs() / Q::from_integer(2.into()))
    }

    /// Exact for two objectives; otherwise decided by an LP relaxation.
    pub fn is_empty(&self) -> bool {
        if self.lower.iter().zip(&self.upper).any(|(lo, hi)| lo > hi) {
            return true;
        }
        if let Some(v) = &self.vertices {
            return v.is_empty();
        }
        if self.cuts.is_empty() {
            return false;
        }
        let mut model = MilpModel::new();
        let vars: Vec<usize> = (0..self.dim())
            .map(|j| model.add_continuous(alloc::format!("y{}", j), self.lower[j].clone(), self.upper[j].clone()))
            .collect();
        for (i, h) in self.cuts.iter().enumerate() {
            let e = LinExpr::from_terms(vars.iter().zip(&h.normal).map(|(&v, c)| (v, c.clone())));
            model.add_constraint(alloc::format!("cut{}", i), e, Sense::Le, h.offset.clone());
        }
        matches!(lp_relax(&model, &SolverOptions::default()), Ok(s) if !s.is_feasible())
    }

    /// Whether every point of the region lies below `f + eps`.
    pub fn covered_by(&self, f: &[Q], eps: &[Q]) -> bool {
        let below = |y: &[Q]| y.iter().zip(f.iter().zip(eps)).all(|(a, (b, e))| *a <= b + e);
        match &self.vertices {
            Some(v) => v.iter().all(|y| below(y)),
            None => below(&self.upper),
        }
    }
}

/// Points of `region` strictly above `above`, or the whole region when `above` is
/// `None`; certified to contain no achievable point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnachievableSet {
    pub region: Vec<Halfspace>,
    /// Strict lower bound {y | normal·y > offset}.
    pub above: Option<Halfspace>,
}

impl UnachievableSet {
    pub fn contains(&self, y: &[Q]) -> bool {
        self.region.iter().all(|h| h.contains(y)) && self.above.as_ref().map_or(true, |h| h.eval(y) > h.offset)
    }
}

fn normalize(w: Vec<Q>) -> Option<Vec<Q>> {
    let w: Vec<Q> = w.into_iter().map(|x| x.abs()).collect();
    let total: Q = w.iter().sum();
    (!total.is_zero()).then(|| w.into_iter().map(|x| x / &total).collect())
}

/// Non-negative direction with Σ|w_j| = 1, orthogonal to the span of the anchors when
/// they are in general position; uniform otherwise.
pub fn choose_direction(region: &Region) -> Vec<Q> {
    let l = region.dim();
    let a = &region.anchors;
    for k in 0..l {
        let mut rows: Vec<Vec<Q>> = (1..l).map(|i| (0..l).map(|c| &a[i][c] - &a[0][c]).collect()).collect();
        let mut e = vec![Q::zero(); l];
        e[k] = Q::one();
        rows.push(e);
        let mut b = vec![Q::zero(); l];
        b[l - 1] = Q::one();
        if let Some(w) = linalg::solve(&rows, &b).and_then(normalize) {
            return w;
        }
    }
    vec![Q::one() / Q::from_integer((l as i64).into()); l]
}

/// Parts of a region after an optimum `p` along `w` was found in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    /// region ∩ cl({p}).
    pub achievable: Region,
    /// {y ∈ region | w·y > w·p}, if non-empty.
    pub unachievable: Option<UnachievableSet>,
    /// Parts not within ε of cl({p}) and below w·y = w·p.
    pub candidates: Vec<Region>,
    /// Parts within ε of cl({p}) that need no further search.
    pub slack: Vec<Region>,
}

pub fn split_region(region: &Region, p: &[Q], w: &[Q], eps: &[Q]) -> Split {
    let l = region.dim();
    let mut achievable = region.clone();
    for j in 0..l {
        achievable = achievable.with_upper(j, p[j].clone());
    }
    let level = dot(w, p);
    let cut = Halfspace { normal: w.to_vec(), offset: level.clone() };
    let reaches_above = match &region.vertices {
        Some(v) => v.iter().any(|y| dot(w, y) > level),
        None => dot(w, &region.upper) > level,
    };
    let unachievable =
        reaches_above.then(|| UnachievableSet { region: region.halfspaces(), above: Some(cut.clone()) });
    let below = region.with_cut(cut);
    let reach: Vec<Q> = p.iter().zip(eps).map(|(a, e)| a + e).collect();
    let mut candidates = Vec::new();
    let mut slack = Vec::new();
    for j in 0..l {
        // Not ε-dominated by p, first through axis j.
        let mut c = below.with_lower(j, reach[j].clone());
        for (i, r) in reach.iter().enumerate().take(j) {
            c = c.with_upper(i, r.clone());
        }
        if l >= 2 {
            c.anchors[(j + 1) % l] = p.to_vec();
        }
        if !c.is_empty() && !c.covered_by(p, eps) {
            candidates.push(c);
        }
        // Above p, first through axis j, but within ε.
        let mut s = below.with_lower(j, p[j].clone());
        for (i, r) in reach.iter().enumerate() {
            s = s.with_upper(i, r.clone());
        }
        for (i, pi) in p.iter().enumerate().take(j) {
            s = s.with_upper(i, pi.clone());
        }
        if !s.is_empty() {
            slack.push(s);
        }
    }
    Split { achievable, unachievable, candidates, slack }
}

/// Approximation tolerance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Epsilon {
    /// eps_j = ε·δ_j with δ_j the spread of achievable values of objective j (ε when δ_j = 0).
    Relative(Q),
    /// eps_j given per objective.
    Absolute(Vec<Q>),
}

#[derive(Debug, Clone)]
pub struct ParetoOptions {
    pub epsilon: Epsilon,
    pub encoding: EncodingChoice,
    pub solver: SolverOptions,
    /// Bound on region solves; the result is incomplete when it is hit.
    pub max_iterations: Option<usize>,
}

impl Default for ParetoOptions {
    fn default() -> Self {
        ParetoOptions {
            epsilon: Epsilon::Relative(Q::new(1.into(), 100.into())),
            encoding: EncodingChoice::Auto,
            solver: SolverOptions::default(),
            max_iterations: None,
        }
    }
}

/// Lower and upper approximation of the pure stationary Pareto front.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParetoApprox {
    /// Non-dominated achievable points with witnesses, sorted by point.
    pub found: Vec<(Point, PureStationaryStrategy)>,
    pub unachievable: Vec<UnachievableSet>,
    /// Regions left unexplored; empty when complete.
    pub candidates: Vec<Region>,
    /// Tolerance per objective.
    pub epsilon: Vec<Q>,
    /// Maximizing flag per objective, defining the oriented coordinates.
    pub maximizing: Vec<bool>,
    pub complete: bool,
    pub milp_calls: usize,
}

fn orient(maximizing: &[bool], p: &Point) -> Option<Vec<Q>> {
    p.0.iter()
        .zip(maximizing)
        .map(|(v, &max)| v.finite().map(|x| if max { x.clone() } else { -x.clone() }))
        .collect()
}

impl ParetoApprox {
    /// Oriented coordinates of a finite point.
    pub fn orient(&self, p: &Point) -> Option<Vec<Q>> {
        orient(&self.maximizing, p)
    }

    pub fn is_certified_unachievable(&self, p: &Point) -> bool {
        self.orient(p).is_some_and(|y| self.unachievable.iter().any(|u| u.contains(&y)))
    }

    /// Whether `p` lies within ε of the closure of a found point.
    pub fn covers(&self, p: &Point) -> bool {
        let Some(y) = self.orient(p) else { return false };
        self.found.iter().any(|(f, _)| {
            let f = self.orient(f).expect("found points are finite");
            y.iter().zip(f.iter().zip(&self.epsilon)).all(|(a, (b, e))| *a <= b + e)
        })
    }
}

/// A point produced by an optimizing solve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Optimum {
    /// Exact values of `strategy`.
    pub point: Point,
    /// `point` in oriented coordinates.
    pub oriented: Vec<Q>,
    pub strategy: PureStationaryStrategy,
    /// Maximizer of w·y over the region ∩ cl({point}); its value is the region optimum.
    pub best: Vec<Q>,
}

/// Maximizer of w·y over `region` ∩ {y ≤ p}; exact for one or two objectives.
fn best_below(region: Option<&Region>, p: &[Q], w: &[Q]) -> Option<Vec<Q>> {
    let Some(r) = region else { return Some(p.to_vec()) };
    let mut c = r.clone();
    for (j, pj) in p.iter().enumerate() {
        c = c.with_upper(j, pj.clone());
    }
    if c.is_empty() {
        return None;
    }
    if let Some(v) = &c.vertices {
        return v.iter().max_by(|a, b| dot(w, a).cmp(&dot(w, b)).then_with(|| a.cmp(b))).cloned();
    }
    // The upper corner dominates the whole set when it satisfies the cuts.
    if c.cuts.iter().all(|h| h.contains(&c.upper)) {
        return Some(c.upper.clone());
    }
    let mut model = MilpModel::new();
    let vars: Vec<usize> = (0..c.dim())
        .map(|j| model.add_continuous(alloc::format!("y{}", j), c.lower[j].clone(), c.upper[j].clone()))
        .collect();
    for (i, h) in c.cuts.iter().enumerate() {
        let e = LinExpr::from_terms(vars.iter().zip(&h.normal).map(|(&v, k)| (v, k.clone())));
        model.add_constraint(alloc::format!("cut{}", i), e, Sense::Le, h.offset.clone());
    }
    model.set_objective(LinExpr::from_terms(vars.iter().zip(w).map(|(&v, k)| (v, k.clone()))));
    let sol = lp_relax(&model, &SolverOptions::default()).ok().filter(|s| s.is_feasible())?;
    Some((0..c.dim()).map(|j| from_f64(sol.values[j]).clamp(c.lower[j].clone(), c.upper[j].clone())).collect())
}

/// The encoded query, reused across optimizing solves.
pub struct ParetoInstance<'a> {
    m: &'a Mdp,
    q: &'a Query,
    prep: Prepared,
    art: EncodingArtifacts,
    maximizing: Vec<bool>,
}

impl<'a> ParetoInstance<'a> {
    /// Requires a finite reward bound for every maximizing objective.
    pub fn new(m: &'a Mdp, q: &'a Query, encoding: EncodingChoice) -> Result<Self, ParetoError> {
        let p = Point(
            q.objectives
                .iter()
                .map(|o| if o.is_max() { ExtRational::zero() } else { ExtRational::Infinite })
                .collect(),
        );
        match prepare(m, q, &p, encoding, true)? {
            Stage::Decided(PsmaVerdict::NotAchievable) => Err(ParetoError::NoFinitePoint),
            Stage::Decided(_) => unreachable!("every objective is kept"),
            Stage::Ready { inf, prep, .. } if !inf.is_empty() => Err(ParetoError::Unbounded(prep.keep[inf[0]])),
            Stage::Ready { prep, art, .. } => {
                Ok(ParetoInstance { m, q, prep, art, maximizing: q.objectives.iter().map(|o| o.is_max()).collect() })
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    /// Lower bound of oriented coordinate `j` implied by the encoding's variable bounds.
    fn oriented_floor(&self, j: usize) -> Q {
        let e = self.art.oriented_value(self.prep.m.initial(), j);
        let (x, c) = &e.terms[0];
        let (lo, hi) = self.art.model.variables[*x].bounds();
        if c.is_positive() {
            c * lo
        } else {
            c * hi
        }
    }

    pub fn maximizing(&self) -> &[bool] {
        &self.maximizing
    }

    /// Maximizes w·y over achievable points y inside `region` (everywhere when `None`).
    pub fn optimize_in_region(
        &self,
        region: Option<&Region>,
        w: &[Q],
        solver: &SolverOptions,
    ) -> Result<Option<Optimum>, ParetoError> {
        let init = self.prep.m.initial();
        let ys: Vec<LinExpr> = (0..self.dim()).map(|j| self.art.oriented_value(init, j)).collect();
        let combine = |coef: &[Q]| {
            let mut e = LinExpr::new();
            for (y, c) in ys.iter().zip(coef) {
                for (v, k) in &y.terms {
                    e.add(*v, k * c);
                }
            }
            e
        };
        let mut model = self.art.model.clone();
        if let Some(r) = region {
            for (i, h) in r.halfspaces().iter().enumerate() {
                model.add_constraint(alloc::format!("region_{}", i), combine(&h.normal), Sense::Le, h.offset.clone());
            }
        }
        model.set_objective(combine(w));
        let mut opts = solver.clone();
        let mut failed = None;
        for attempt in 0..2 {
            if attempt == 1 {
                opts = opts.tightened(100.0);
            }
            let sol = solve(&model, &opts)?;
            if !sol.is_feasible() {
                return Ok(None);
            }
            let sigma = match extract_strategy(&self.art, &sol) {
                Ok(s) => self.prep.lift(&s),
                Err(e) if attempt == 0 => {
                    log::warn!("{}; retrying with tighter tolerances", e);
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let point = evaluate_query(self.m, &sigma, self.q)?;
            if let Some(y) = orient(&self.maximizing, &point) {
                if let Some(best) = best_below(region, &y, w) {
                    let exact = to_f64(&dot(w, &best));
                    if (exact - sol.objective).abs() <= 1e-6 * (1.0 + sol.objective.abs()) {
                        return Ok(Some(Optimum { point, oriented: y, strategy: sigma, best }));
                    }
                    log::warn!("solver objective {} but exact value {}", sol.objective, exact);
                }
            }
            failed = Some(sigma);
        }
        Err(ParetoError::VerificationFailed(failed.expect("a strategy was extracted")))
    }
}

/// Smallest oriented value of objective `j` over pure stationary strategies, found by
/// optimizing the objective with the opposite relation; `None` if that is unbounded.
fn minimum_along(m: &Mdp, q: &Query, j: usize, opts: &ParetoOptions) -> Result<Option<Q>, ParetoError> {
    let o = &q.objectives[j];
    let flipped = o.clone().with_relation(if o.is_max() { Relation::AtMost } else { Relation::AtLeast });
    let qf = Query { objectives: vec![flipped] };
    let inst = match ParetoInstance::new(m, &qf, opts.encoding) {
        Ok(i) => i,
        Err(ParetoError::Unbounded(_)) | Err(ParetoError::NoFinitePoint) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(inst.optimize_in_region(None, &[Q::one()], &opts.solver)?.map(|best| -best.oriented[0].clone()))
}

/// ε-approximation of the pure stationary Pareto front.
///
/// Every found point is exactly achievable; every unachievable set is certified by an
/// optimal or infeasible MILP. On completion every achievable point lies within ε of
/// the closure of a found point. The search stops early, with `complete = false`, when
/// the solver stop callback fires or `max_iterations` is reached.
pub fn approximate_pareto(m: &Mdp, q: &Query, opts: &ParetoOptions) -> Result<ParetoApprox, ParetoError> {
    let l = q.dim();
    if let Epsilon::Absolute(e) = &opts.epsilon {
        if e.len() != l || e.iter().any(|x| !x.is_positive()) {
            return Err(ParetoError::BadEpsilon);
        }
    }
    if let Epsilon::Relative(e) = &opts.epsilon {
        if !e.is_positive() {
            return Err(ParetoError::BadEpsilon);
        }
    }
    let inst = ParetoInstance::new(m, q, opts.encoding)?;
    let mut out = ParetoApprox {
        found: Vec::new(),
        unachievable: Vec::new(),
        candidates: Vec::new(),
        epsilon: Vec::new(),
        maximizing: inst.maximizing().to_vec(),
        complete: false,
        milp_calls: 0,
    };
    let mut found: Vec<Optimum> = Vec::new();
    let finish = |mut out: ParetoApprox, found: Vec<Optimum>| {
        out.found = pareto_filter(q, found.into_iter().map(|o| (o.point, o.strategy)).collect());
        out
    };

    // Extreme values per axis bound the initial region and scale ε.
    let mut lower = Vec::with_capacity(l);
    let mut upper = Vec::with_capacity(l);
    for j in 0..l {
        let mut w = vec![Q::zero(); l];
        w[j] = Q::one();
        out.milp_calls += 1;
        match inst.optimize_in_region(None, &w, &opts.solver) {
            Ok(Some(o)) => {
                upper.push(o.oriented[j].clone());
                found.push(o);
            }
            Ok(None) => return Err(ParetoError::NoFinitePoint),
            Err(e) if e.is_stop() => return Ok(finish(out, found)),
            Err(e) => return Err(e),
        }
        out.milp_calls += 1;
        match minimum_along(m, q, j, opts) {
            Ok(Some(v)) => lower.push(v.min(upper[j].clone())),
            Ok(None) => lower.push(inst.oriented_floor(j).min(upper[j].clone())),
            Err(e) if e.is_stop() => return Ok(finish(out, found)),
            Err(e) => return Err(e),
        }
    }
    out.epsilon = match &opts.epsilon {
        Epsilon::Absolute(e) => e.clone(),
        Epsilon::Relative(e) => (0..l)
            .map(|j| {
                let d = &upper[j] - &lower[j];
                if d.is_zero() {
                    e.clone()
                } else {
                    e * d
                }
            })
            .collect(),
    };
    let eps = out.epsilon.clone();

    let mut work = vec![Region::new_box(lower, upper)];
    let mut iterations = 0usize;
    loop {
        if work.is_empty() {
            out.complete = true;
            break;
        }
        if opts.solver.stopped() || opts.max_iterations.is_some_and(|k| iterations >= k) {
            break;
        }
        // Largest area first for two objectives, most recent first otherwise.
        let idx = if l == 2 {
            let mut best = 0;
            for i in 1..work.len() {
                if work[i].area() > work[best].area() {
                    best = i;
                }
            }
            best
        } else {
            work.len() - 1
        };
        let region = work.remove(idx);
        if found.iter().any(|o| region.covered_by(&o.oriented, &eps)) {
            continue;
        }
        iterations += 1;
        let w = choose_direction(&region);
        out.milp_calls += 1;
        match inst.optimize_in_region(Some(&region), &w, &opts.solver) {
            Ok(None) => out.unachievable.push(UnachievableSet { region: region.halfspaces(), above: None }),
            Ok(Some(o)) => {
                let split = split_region(&region, &o.best, &w, &eps);
                out.unachievable.extend(split.unachievable);
                work.extend(split.candidates);
                found.push(o);
            }
            Err(e) if e.is_stop() => {
                work.push(region);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    out.candidates = work;
    Ok(finish(out, found))
}
