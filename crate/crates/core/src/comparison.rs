//! Comparison-polygon refutation: given a disc region bounded by geodesic
//! arcs and LP-derived upper bounds on its corner angles, refute the closure
//! of the comparison convex plane polygon with a separating direction.
//!
//! Every admissible convex polygon has turning at least L_j at corner j and
//! turnings summing to 2 pi, so after anchoring the first side at direction
//! 0, every (sub-)side of side i points inside the arc
//! [sum_{j<i} L_j, sum_{j<i} L_j + S] (units of pi), S = 2 - sum L. Sides
//! sharing an edge label have equal length, so a direction r with
//! sum_{i in g} max_{phi in C_i} cos(phi - rho) < 0 for every label group g
//! contradicts the vanishing of the boundary sum.

use std::f64::consts::PI;

use num::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gb_system::{sup_angle_form, AngleForm, GBError, GBSystem};
use crate::planar_map::{delete_edge, face_walk, trace_faces, BoundaryWalk, CurveDiagram};
use crate::ratlp::{solve_lp, Constraint, LpInstance, LpResult, Rat, Relation};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolygonSpec {
    /// (edge id, traversal direction) per side position.
    pub sides: Vec<(u32, bool)>,
    /// Angle upper bound U_j per corner, units of pi; corner j sits between
    /// sides j and j+1.
    pub uppers: Vec<Rat>,
    /// Turning lower bound L_j = max(0, 1 - U_j).
    pub lowers: Vec<Rat>,
    /// S = 2 - sum L_j. Negative means no polygon closes at all.
    pub slack: Rat,
    /// Side positions grouped by edge label; each group has size 1 or 2.
    pub groups: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionCone {
    /// Arc start, units of pi.
    pub lo: Rat,
    /// Arc width = S, units of pi.
    pub width: Rat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionCertificate {
    /// Separating direction, radians.
    pub rho: f64,
    /// Strictness margin; every group bound is certified <= -delta.
    pub delta: f64,
    /// Certified conservative bound per group, aligned with spec.groups.
    pub group_margins: Vec<f64>,
    /// True when the bound needed the joint turning-polytope evaluation.
    pub joint: bool,
}

#[derive(Debug, Clone)]
pub enum CertSearch {
    Found(DirectionCertificate),
    NotFound,
    /// sum L_j > 2: the angle budget alone forbids the polygon.
    ImmediateForbidden,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConeError {
    #[error("negative slack: the spec is already unrealizable")]
    NegativeSlack,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    pub grid: usize,
    pub delta: f64,
    pub joint_bound: bool,
    pub polytope_budget: usize,
    pub samples: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            grid: 4096,
            delta: 1e-6,
            joint_bound: false,
            polytope_budget: 1_000_000,
            samples: 10_000,
        }
    }
}

/// Builds the polygon spec of a boundary walk: per-corner angle suprema from
/// the Gauss-Bonnet system, turning lower bounds, and equal-length groups.
pub fn build_polygon_spec(walk: &BoundaryWalk, system: &GBSystem) -> Result<PolygonSpec, GBError> {
    let mut uppers = Vec::with_capacity(walk.corner_forms.len());
    for form in &walk.corner_forms {
        uppers.push(sup_angle_form(system, form)?);
    }
    let lowers: Vec<Rat> = uppers
        .iter()
        .map(|u| {
            let l = Rat::one() - u;
            if l.is_negative() { Rat::zero() } else { l }
        })
        .collect();
    let slack = Rat::from_integer(2.into()) - lowers.iter().cloned().sum::<Rat>();
    let groups = side_groups(&walk.sides);
    Ok(PolygonSpec { sides: walk.sides.clone(), uppers, lowers, slack, groups })
}

/// Side positions grouped by shared edge label; traversals of the same arc
/// have equal length.
pub fn side_groups(sides: &[(u32, bool)]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut seen: std::collections::BTreeMap<u32, usize> = std::collections::BTreeMap::new();
    for (i, (edge, _)) in sides.iter().enumerate() {
        match seen.get(edge) {
            Some(&g) => groups[g].push(i),
            None => {
                seen.insert(*edge, groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// The admissible direction arc of each side, anchored at side 0.
pub fn direction_cones(spec: &PolygonSpec) -> Result<Vec<DirectionCone>, ConeError> {
    if spec.slack.is_negative() {
        return Err(ConeError::NegativeSlack);
    }
    let mut acc = Rat::zero();
    let mut cones = Vec::with_capacity(spec.sides.len());
    for j in 0..spec.sides.len() {
        cones.push(DirectionCone { lo: acc.clone(), width: spec.slack.clone() });
        acc += &spec.lowers[j];
    }
    Ok(cones)
}

fn rat_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// max over phi in [lo, hi] of cos(phi - rho); plain f64, for search only.
fn max_cos(lo: f64, hi: f64, rho: f64) -> f64 {
    let w = hi - lo;
    if w >= 2.0 * PI {
        return 1.0;
    }
    let tau = 2.0 * PI;
    let mut d = (rho - lo) % tau;
    if d < 0.0 {
        d += tau;
    }
    if d <= w {
        1.0
    } else {
        let gap = (d - w).min(tau - d);
        gap.cos()
    }
}

fn conservative_bound(cones: &[(f64, f64)], group: &[usize], rho: f64) -> f64 {
    group.iter().map(|&i| max_cos(cones[i].0, cones[i].1, rho)).sum()
}

// ---- outward-rounded interval arithmetic ------------------------------

#[derive(Debug, Clone, Copy)]
struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    fn widen(self, ulps: u32) -> Self {
        let mut lo = self.lo;
        let mut hi = self.hi;
        for _ in 0..ulps {
            lo = lo.next_down();
            hi = hi.next_up();
        }
        Interval { lo, hi }
    }

    fn sub(self, o: Interval) -> Self {
        Interval { lo: (self.lo - o.hi).next_down(), hi: (self.hi - o.lo).next_up() }
    }
}

fn pi_interval() -> Interval {
    Interval { lo: PI.next_down(), hi: PI.next_up() }
}

fn rat_interval(r: &Rat) -> Interval {
    // num's to_f64 is within 1 ulp; pad generously.
    Interval::point(rat_f64(r)).widen(4)
}

fn mul_pos(a: Interval, b: Interval) -> Interval {
    // Both operands nonnegative here (angles in [0, 2pi], pi itself).
    Interval { lo: (a.lo * b.lo).next_down(), hi: (a.hi * b.hi).next_up() }
}

/// Rigorous upper bound on max over phi in [arc.lo, arc.hi] of cos(phi),
/// where arc is an interval enclosure of the true arc.
fn cos_max_upper(arc: Interval) -> f64 {
    let tau = 2.0 * PI;
    if arc.hi - arc.lo >= tau {
        return 1.0;
    }
    // Conservative containment test for a multiple of 2 pi in the arc; the
    // 1e-9 slop absorbs the inexactness of k * tau.
    let k_lo = (arc.lo / tau).floor() - 1.0;
    let k_hi = (arc.hi / tau).ceil() + 1.0;
    let mut k = k_lo;
    while k <= k_hi {
        let m = k * tau;
        if m >= arc.lo - 1e-9 && m <= arc.hi + 1e-9 {
            return 1.0;
        }
        k += 1.0;
    }
    // No interior peak: cos attains its max over the arc at an endpoint.
    // Pad for libm rounding.
    (arc.lo.cos().max(arc.hi.cos()) + 8.0 * f64::EPSILON).min(1.0)
}

/// Endpoint monotonicity pitfall: cos over [lo,hi] with no 2*pi*k inside can
/// still peak between the sampled endpoint enclosures when the enclosure is
/// wide. Enclosures here are a few ulps wide, far below the delta margins, so
/// endpoint evaluation plus padding is a sound upper bound.
fn group_margin_upper(spec: &PolygonSpec, group: &[usize], rho: f64) -> f64 {
    let cones = exact_cones(spec);
    let rho_iv = Interval::point(rho);
    let mut total = 0.0f64;
    for &i in group {
        let (lo, width) = &cones[i];
        let lo_iv = mul_pos(rat_interval(lo), pi_interval());
        let hi_iv = mul_pos(rat_interval(&(lo + width)), pi_interval());
        let arc = Interval { lo: lo_iv.lo, hi: hi_iv.hi }.sub(rho_iv).widen(2);
        total = (total + cos_max_upper(arc)).next_up();
    }
    total
}

fn exact_cones(spec: &PolygonSpec) -> Vec<(Rat, Rat)> {
    let mut acc = Rat::zero();
    let mut out = Vec::with_capacity(spec.sides.len());
    for j in 0..spec.sides.len() {
        out.push((acc.clone(), spec.slack.clone()));
        acc += &spec.lowers[j];
    }
    out
}

// ---- joint turning-polytope bound --------------------------------------

/// Upper bound on max over admissible turnings tau (tau >= L, sum tau = 2)
/// of sum_{i in g} cos(phi_i(tau) - rho), by dense simplex grid with a
/// Lipschitz-1 error term per coordinate.
fn joint_bound_upper(spec: &PolygonSpec, group: &[usize], rho: f64, budget: usize) -> f64 {
    let k = spec.sides.len();
    let slack = rat_f64(&spec.slack);
    let lowers: Vec<f64> = spec.lowers.iter().map(rat_f64).collect();
    if slack <= 0.0 {
        // Rigid polygon: single turning vector.
        let mut acc = 0.0;
        let mut best = 0.0;
        let mut phis = vec![0.0; k];
        for i in 1..k {
            acc += lowers[i - 1];
            phis[i] = acc;
        }
        for &i in group {
            best += (PI * phis[i] - rho).cos();
        }
        return best + 1e-9;
    }
    // Resolution: points with sum m_j = m over k cells.
    let mut m = 1usize;
    while count_compositions(m + 1, k) <= budget {
        m += 1;
        if m > 64 {
            break;
        }
    }
    let cell = slack / m as f64;
    // Worst-case drift of any phi_i from its nearest grid point is bounded by
    // the L1 distance between turning vectors, itself at most 2 cells.
    let lipschitz_err = group.len() as f64 * PI * 2.0 * cell;
    let mut best = f64::NEG_INFINITY;
    let mut counts = vec![0usize; k];
    enumerate_compositions(m, k, &mut counts, &mut |c| {
        let mut acc = 0.0;
        let mut val = 0.0;
        let mut phi = vec![0.0; k];
        for i in 1..k {
            acc += lowers[i - 1] + cell * c[i - 1] as f64;
            phi[i] = acc;
        }
        for &i in group {
            val += (PI * phi[i] - rho).cos();
        }
        if val > best {
            best = val;
        }
    });
    // Both the grid bound and the marginal-cone bound are valid upper bounds
    // on the same maximum, so their minimum is too; capping keeps a coarse
    // grid from reporting worse than the conservative estimate.
    (best + lipschitz_err + 1e-9).min(group_margin_upper(spec, group, rho))
}

fn count_compositions(m: usize, k: usize) -> usize {
    // C(m + k - 1, k - 1), saturating.
    let mut acc: usize = 1;
    for i in 0..k - 1 {
        acc = acc.saturating_mul(m + i) / (i + 1);
    }
    acc
}

fn enumerate_compositions(m: usize, k: usize, counts: &mut [usize], f: &mut dyn FnMut(&[usize])) {
    fn rec(m: usize, idx: usize, k: usize, counts: &mut [usize], f: &mut dyn FnMut(&[usize])) {
        if idx == k - 1 {
            counts[idx] = m;
            f(counts);
            return;
        }
        for v in 0..=m {
            counts[idx] = v;
            rec(m - v, idx + 1, k, counts, f);
        }
    }
    rec(m, 0, k, counts, f);
}

// ---- search and verification -------------------------------------------

/// Searches for a separating direction. Grid scan, local refinement around
/// the best candidate, then rigorous interval verification at margin delta.
pub fn find_halfplane_certificate(spec: &PolygonSpec, config: &SearchConfig) -> CertSearch {
    if spec.slack.is_negative() {
        return CertSearch::ImmediateForbidden;
    }
    let cones: Vec<(f64, f64)> = exact_cones(spec)
        .iter()
        .map(|(lo, w)| {
            let l = rat_f64(lo) * PI;
            (l, l + rat_f64(w) * PI)
        })
        .collect();
    let eval = |rho: f64| -> f64 {
        spec.groups
            .iter()
            .map(|g| conservative_bound(&cones, g, rho))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let n = config.grid.max(8);
    let mut best_rho = 0.0;
    let mut best_val = f64::INFINITY;
    for kk in 0..n {
        let rho = 2.0 * PI * kk as f64 / n as f64;
        let v = eval(rho);
        if v < best_val {
            best_val = v;
            best_rho = rho;
        }
    }
    // Local refinement.
    let mut span = 2.0 * PI / n as f64;
    for _ in 0..40 {
        let mut improved = false;
        for kk in 0..16 {
            let rho = best_rho - span + 2.0 * span * kk as f64 / 15.0;
            let v = eval(rho);
            if v < best_val {
                best_val = v;
                best_rho = rho;
                improved = true;
            }
        }
        span /= 2.0;
        if !improved && span < 1e-12 {
            break;
        }
    }
    if best_val <= -config.delta {
        let margins: Vec<f64> = spec
            .groups
            .iter()
            .map(|g| group_margin_upper(spec, g, best_rho))
            .collect();
        if margins.iter().all(|&m| m <= -config.delta) {
            return CertSearch::Found(DirectionCertificate {
                rho: best_rho,
                delta: config.delta,
                group_margins: margins,
                joint: false,
            });
        }
    }
    if config.joint_bound {
        // Tighter joint bound over the turning polytope, coarser rho grid.
        let coarse = (n / 8).max(64);
        for kk in 0..coarse {
            let rho = 2.0 * PI * kk as f64 / coarse as f64;
            let margins: Vec<f64> = spec
                .groups
                .iter()
                .map(|g| joint_bound_upper(spec, g, rho, config.polytope_budget))
                .collect();
            if margins.iter().all(|&m| m <= -config.delta) {
                return CertSearch::Found(DirectionCertificate {
                    rho,
                    delta: config.delta,
                    group_margins: margins,
                    joint: true,
                });
            }
        }
    }
    CertSearch::NotFound
}

/// Recomputes every group margin rigorously and cross-checks the certificate
/// against randomly sampled admissible turning assignments.
pub fn verify_certificate(spec: &PolygonSpec, cert: &DirectionCertificate, samples: usize) -> bool {
    if !(cert.delta > 0.0) {
        return false;
    }
    if spec.slack.is_negative() {
        return false;
    }
    for g in &spec.groups {
        let bound = if cert.joint {
            joint_bound_upper(spec, g, cert.rho, 1_000_000)
        } else {
            group_margin_upper(spec, g, cert.rho)
        };
        if !(bound <= -cert.delta) {
            return false;
        }
    }
    // Sampling sanity check: no admissible turning vector may give any group
    // a nonnegative boundary-sum direction score.
    let k = spec.sides.len();
    let slack = rat_f64(&spec.slack);
    let lowers: Vec<f64> = spec.lowers.iter().map(rat_f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    for _ in 0..samples {
        // Uniform point of the excess simplex via normalized exponentials.
        let mut e: Vec<f64> = (0..k).map(|_| -(rng.gen::<f64>().max(1e-300)).ln()).collect();
        let total: f64 = e.iter().sum();
        for v in e.iter_mut() {
            *v = *v / total * slack;
        }
        let mut phi = vec![0.0; k];
        let mut acc = 0.0;
        for i in 1..k {
            acc += lowers[i - 1] + e[i - 1];
            phi[i] = acc;
        }
        for g in &spec.groups {
            let s: f64 = g.iter().map(|&i| (PI * phi[i] - cert.rho).cos()).sum();
            if s >= 0.0 {
                return false;
            }
        }
    }
    true
}

// ---- coupled cover refutation -------------------------------------------
//
// The marginal cones above treat every corner angle at its independent
// supremum. Some patterns are only refutable when the shared crossing angles
// x couple the corners: fixing x gives each corner j the turning lower bound
// l_j(x) = max(0, 1 - theta_j(x)), a slack budget S(x) = 2 - sum l_j(x), and
// any convex comparison polygon (sides subdivided into length-minimizing
// pieces) a monotone slack prefix 0 <= c_1 <= ... <= c_{k-1} <= S(x) such
// that the directions of side i lie in [P_i(x) + c_i, P_i(x) + c_{i+1}],
// P_i(x) = sum_{j<i} l_j(x). A cover certificate subdivides the x-box and,
// per x-cell, one region's chain polytope into cells that are either
// infeasible (exact LP over the Gauss-Bonnet system) or admit a direction
// rho whose per-group cosine margins are rigorously negative. Different
// cells may use different regions and directions.

/// Adaptive cover of the x-box: midpoint splits, rational bounds implicit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum XNode {
    Split { dim: usize, lo: Box<XNode>, hi: Box<XNode> },
    /// The Gauss-Bonnet region misses this x-cell (exact LP).
    Infeasible,
    /// Every admissible polygon of this region fails over this x-cell;
    /// `region` indexes the fixed candidate enumeration order.
    Region { region: usize, tree: CNode },
}

/// Adaptive cover of one region's slack-chain polytope over an x-cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CNode {
    Split { dim: usize, lo: Box<CNode>, hi: Box<CNode> },
    /// No feasible (x, c) pair meets this cell (chain order or exact LP).
    Vacuous,
    /// Every group margin is at most -delta against this direction, radians.
    Rho { rho: f64 },
    /// Exact linear-form bound: each group's cosine sum stays below
    /// -lambda_g * gap(x) on the whole cell, verified by rational LP. The
    /// bound may vanish on the cell boundary but is strictly negative at
    /// every admissible interior point, which handles cells touching
    /// degenerate angle assignments where fixed-margin leaves cannot close.
    Slope(SlopeLeaf),
}

/// Rational linear form over the cell variables (x first, then the chain c),
/// coefficients serialized as `p/q` strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinFormStr {
    pub coeffs: Vec<String>,
    pub konst: String,
}

/// Per-side certificate data of a slope leaf. `shift` moves the side's
/// direction arc by whole turns (2 pi periodicity) before comparing it with
/// the half-turn window around rho + pi.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SlopeSide {
    /// Arc inside [rho + pi/2, rho + 3pi/2]; sigma is a pointwise lower
    /// bound on the arc ends' distance to the window boundary (units of pi),
    /// giving max cos <= -2 sigma by the sine chord inequality.
    Neg { shift: i64, sigma: LinFormStr },
    /// Arc within s of that window on either side, 0 <= s <= 1/2, giving
    /// max cos <= sin(pi s) <= (22/7) s.
    Pos { shift: i64, s: LinFormStr },
    /// Signed window clearance for a side of a two-element group:
    /// t >= max(-a, a-1, -b, b-1) and t <= 1/2, so max cos <= sin(pi t)
    /// whether the arc sits inside the window (t <= 0) or pokes past either
    /// edge (t > 0). The two clearances of a pair cancel via
    /// sin(pi t_i) + sin(pi t_j) <= 0 whenever t_i + t_j <= 0.
    Env { shift: i64, t: LinFormStr },
}

/// Gap form multiplying the required strict margin; each choice is strictly
/// positive at every admissible assignment (crossing angles lie in the open
/// interval (0, pi)) yet may vanish on the cell's closed boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum GapForm {
    One,
    /// x_i, by index into the system's variable order.
    Var(usize),
    /// 1 - x_i.
    CoVar(usize),
    /// Face curvature omega_f, by index into the system's face list; strictly
    /// positive at admissible assignments because every face bounds a region
    /// of positive area on a positively curved surface.
    Face(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeLeaf {
    /// Separating direction in units of pi, a rational linear form in
    /// (x, c).  A form tracking a side's arc endpoint keeps the bound tight
    /// across a whole cell of near-degenerate chains, where any constant
    /// direction would only work pointwise; refuting closure needs just one
    /// valid direction per assignment, so the choice may vary over the cell.
    pub rho: LinFormStr,
    pub sides: Vec<SlopeSide>,
    /// Nonnegative rational slope per group, as `p/q`; at least one must be
    /// positive.
    pub lambdas: Vec<String>,
    pub gap: GapForm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverCertificate {
    /// Margin every Rho leaf is verified against.
    pub delta: f64,
    pub tree: XNode,
}

type RatBox = Vec<(Rat, Rat)>;

fn form_range(form: &AngleForm, xbox: &RatBox, vars: &[u32]) -> (Rat, Rat) {
    let mut lo = form.const_coeff.clone();
    let mut hi = form.const_coeff.clone();
    for (v, coeff) in &form.var_coeffs {
        let idx = vars.binary_search(v).expect("variable of form not in system");
        let (blo, bhi) = &xbox[idx];
        if coeff.is_negative() {
            lo += coeff * bhi;
            hi += coeff * blo;
        } else {
            lo += coeff * blo;
            hi += coeff * bhi;
        }
    }
    (lo, hi)
}

/// Per-corner turning lower bound ranges and slack upper bound over an x-cell.
struct CellBounds {
    p_lo: Vec<Rat>,
    p_hi: Vec<Rat>,
    s_hi: Rat,
}

/// Box + nonnegative face curvature constraints over the x variables.
fn gb_cell_constraints(system: &GBSystem, xbox: &RatBox) -> Vec<Constraint> {
    let n = system.variables.len();
    let mut cons = Vec::new();
    for (i, (lo, hi)) in xbox.iter().enumerate() {
        let mut c = vec![Rat::zero(); n];
        c[i] = Rat::one();
        cons.push(Constraint { coeffs: c.clone(), rel: Relation::Ge, bound: lo.clone() });
        cons.push(Constraint { coeffs: c, rel: Relation::Le, bound: hi.clone() });
    }
    for face in &system.face_curvatures {
        let mut coeffs = vec![Rat::zero(); n];
        for (v, coeff) in &face.var_coeffs {
            let idx = system.variables.binary_search(v).unwrap();
            coeffs[idx] = coeff.clone();
        }
        cons.push(Constraint { coeffs, rel: Relation::Ge, bound: -face.const_coeff.clone() });
    }
    cons
}

/// Exact vertex enumeration of the feasible part of an x-cell (box ∩
/// nonnegative face curvatures). Every bounded nonempty polyhedron has a
/// vertex, so an empty result proves emptiness. Intended for the few
/// variables the cover search handles; falls back to brute force over all
/// n-subsets of tight constraints.
fn cell_vertices(system: &GBSystem, xbox: &RatBox) -> Vec<Vec<Rat>> {
    let n = system.variables.len();
    let cons = gb_cell_constraints(system, xbox);
    let m = cons.len();
    let mut verts: Vec<Vec<Rat>> = Vec::new();
    let mut choose = vec![0usize; n];
    // Iterate strictly increasing index tuples.
    fn rec(
        start: usize,
        slot: usize,
        m: usize,
        choose: &mut Vec<usize>,
        cons: &[Constraint],
        n: usize,
        verts: &mut Vec<Vec<Rat>>,
    ) {
        if slot == n {
            if let Some(x) = solve_square(choose, cons, n) {
                if cons.iter().all(|c| {
                    let lhs: Rat =
                        c.coeffs.iter().zip(&x).map(|(a, b)| a * b).sum();
                    match c.rel {
                        Relation::Ge => lhs >= c.bound,
                        Relation::Le => lhs <= c.bound,
                        Relation::Eq => lhs == c.bound,
                    }
                }) && !verts.contains(&x)
                {
                    verts.push(x);
                }
            }
            return;
        }
        for i in start..m {
            choose[slot] = i;
            rec(i + 1, slot + 1, m, choose, cons, n, verts);
        }
    }
    rec(0, 0, m, &mut choose, &cons, n, &mut verts);
    verts
}

/// Solves the square system of the chosen constraints as equalities.
fn solve_square(choose: &[usize], cons: &[Constraint], n: usize) -> Option<Vec<Rat>> {
    let mut a: Vec<Vec<Rat>> = choose.iter().map(|&i| cons[i].coeffs.clone()).collect();
    let mut b: Vec<Rat> = choose.iter().map(|&i| cons[i].bound.clone()).collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &p;
            for c2 in col..n {
                let sub = &f * &a[col][c2];
                a[r][c2] -= sub;
            }
            let sub = &f * &b[col];
            b[r] -= sub;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

fn form_at(form: &AngleForm, x: &[Rat], vars: &[u32]) -> Rat {
    let mut v = form.const_coeff.clone();
    for (var, coeff) in &form.var_coeffs {
        let idx = vars.binary_search(var).unwrap();
        v += coeff * &x[idx];
    }
    v
}

/// Range of a linear form over the feasible polytope given its vertices.
fn form_range_verts(form: &AngleForm, verts: &[Vec<Rat>], vars: &[u32]) -> (Rat, Rat) {
    let mut it = verts.iter().map(|v| form_at(form, v, vars));
    let first = it.next().expect("nonempty vertex set");
    it.fold((first.clone(), first), |(lo, hi), v| {
        (if v < lo { v.clone() } else { lo }, if v > hi { v } else { hi })
    })
}

/// Computes turning prefix and slack bounds valid for every feasible x in the
/// cell from the exact vertices of the cell's feasible polytope. Returns None
/// when the cell has no feasible x.
fn cell_bounds(forms: &[AngleForm], verts: &[Vec<Rat>], vars: &[u32]) -> Option<CellBounds> {
    if verts.is_empty() {
        return None;
    }
    let k = forms.len();
    let clamp = |r: Rat| if r.is_negative() { Rat::zero() } else { r };
    let mut l_lo = Vec::with_capacity(k);
    let mut l_hi = Vec::with_capacity(k);
    for form in forms {
        let (flo, fhi) = form_range_verts(form, verts, vars);
        l_lo.push(clamp(Rat::one() - fhi));
        l_hi.push(clamp(Rat::one() - flo));
    }
    let mut p_lo = vec![Rat::zero(); k];
    let mut p_hi = vec![Rat::zero(); k];
    for i in 1..k {
        p_lo[i] = &p_lo[i - 1] + &l_lo[i - 1];
        p_hi[i] = &p_hi[i - 1] + &l_hi[i - 1];
    }
    let s_hi = Rat::from_integer(2.into()) - l_lo.iter().cloned().sum::<Rat>();
    Some(CellBounds { p_lo, p_hi, s_hi })
}

/// Direction arc enclosure of each side over (x-cell, c-cell), units of pi.
fn cell_arcs(bounds: &CellBounds, cbox: &RatBox) -> Vec<(Rat, Rat)> {
    let k = bounds.p_lo.len();
    let mut arcs = Vec::with_capacity(k);
    for i in 0..k {
        let lo = &bounds.p_lo[i] + if i == 0 { Rat::zero() } else { cbox[i - 1].0.clone() };
        let hi = &bounds.p_hi[i]
            + if i == k - 1 { bounds.s_hi.clone() } else { cbox[i].1.clone() };
        arcs.push((lo, hi));
    }
    arcs
}

/// Rigorous upper bound on a group's cosine margin over explicit arcs.
fn arcs_margin_upper(arcs: &[(Rat, Rat)], group: &[usize], rho: f64) -> f64 {
    let rho_iv = Interval::point(rho);
    let mut total = 0.0f64;
    for &i in group {
        let (lo, hi) = &arcs[i];
        let lo_iv = mul_pos(rat_interval(lo), pi_interval());
        let hi_iv = mul_pos(rat_interval(hi), pi_interval());
        let arc = Interval { lo: lo_iv.lo, hi: hi_iv.hi }.sub(rho_iv).widen(2);
        total = (total + cos_max_upper(arc)).next_up();
    }
    total
}

fn arcs_margin_float(arcs: &[(f64, f64)], group: &[usize], rho: f64) -> f64 {
    group.iter().map(|&i| max_cos(arcs[i].0 * PI, arcs[i].1 * PI, rho)).sum()
}

/// Best separating direction over a float grid plus local refinement;
/// returns (rho, worst group margin).
fn best_rho(arcs: &[(f64, f64)], groups: &[Vec<usize>], grid: usize, hint: Option<f64>) -> (f64, f64) {
    let eval = |rho: f64| {
        groups
            .iter()
            .map(|g| arcs_margin_float(arcs, g, rho))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut best = (0.0f64, f64::INFINITY);
    if let Some(h) = hint {
        best = (h, eval(h));
    }
    for i in 0..grid {
        let rho = 2.0 * PI * i as f64 / grid as f64;
        let v = eval(rho);
        if v < best.1 {
            best = (rho, v);
        }
    }
    let mut span = 2.0 * PI / grid as f64;
    for _ in 0..24 {
        for i in 0..8 {
            let rho = best.0 - span + 2.0 * span * i as f64 / 7.0;
            let v = eval(rho);
            if v < best.1 {
                best = (rho, v);
            }
        }
        span /= 2.0;
    }
    best
}

/// Exact feasibility of the coupled cell: is there x in the x-cell with every
/// face curvature nonnegative and a monotone chain c in the c-cell within the
/// turning budget 2 - sum_j max(0, 1 - theta_j(x))?
fn cell_feasible(
    system: &GBSystem,
    forms: &[AngleForm],
    xbox: &RatBox,
    cbox: &RatBox,
) -> bool {
    let n = system.variables.len();
    let k = forms.len();
    let kc = cbox.len();
    // Variables: x_0..x_{n-1}, c_0..c_{kc-1}, l_0..l_{k-1}.
    let nv = n + kc + k;
    let mut cons: Vec<Constraint> = Vec::new();
    let row = |entries: Vec<(usize, Rat)>, rel: Relation, bound: Rat| {
        let mut coeffs = vec![Rat::zero(); nv];
        for (i, c) in entries {
            coeffs[i] = c;
        }
        Constraint { coeffs, rel, bound }
    };
    for (i, (lo, hi)) in xbox.iter().enumerate() {
        cons.push(row(vec![(i, Rat::one())], Relation::Ge, lo.clone()));
        cons.push(row(vec![(i, Rat::one())], Relation::Le, hi.clone()));
    }
    for (i, (lo, hi)) in cbox.iter().enumerate() {
        cons.push(row(vec![(n + i, Rat::one())], Relation::Ge, lo.clone()));
        cons.push(row(vec![(n + i, Rat::one())], Relation::Le, hi.clone()));
    }
    for i in 1..kc {
        cons.push(row(
            vec![(n + i, Rat::one()), (n + i - 1, -Rat::one())],
            Relation::Ge,
            Rat::zero(),
        ));
    }
    for face in &system.face_curvatures {
        let mut entries = Vec::new();
        for (v, coeff) in &face.var_coeffs {
            let idx = system.variables.binary_search(v).unwrap();
            entries.push((idx, coeff.clone()));
        }
        cons.push(row(entries, Relation::Ge, -face.const_coeff.clone()));
    }
    // l_j >= 0 and l_j >= 1 - theta_j(x).
    for (j, form) in forms.iter().enumerate() {
        cons.push(row(vec![(n + kc + j, Rat::one())], Relation::Ge, Rat::zero()));
        let mut entries = vec![(n + kc + j, Rat::one())];
        for (v, coeff) in &form.var_coeffs {
            let idx = system.variables.binary_search(v).unwrap();
            entries.push((idx, coeff.clone()));
        }
        cons.push(row(entries, Relation::Ge, Rat::one() - form.const_coeff.clone()));
    }
    // Budget: c_{kc-1} + sum_j l_j <= 2 (for monogons, kc = 0: sum l <= 2).
    {
        let mut entries: Vec<(usize, Rat)> = (0..k).map(|j| (n + kc + j, Rat::one())).collect();
        if kc > 0 {
            entries.push((n + kc - 1, Rat::one()));
        }
        cons.push(row(entries, Relation::Le, Rat::from_integer(2.into())));
    }
    let instance =
        LpInstance { num_vars: nv, objective: vec![Rat::zero(); nv], constraints: cons };
    !matches!(solve_lp(&instance), Ok(LpResult::Infeasible { .. }))
}

/// Quick sound emptiness test: some face curvature is negative everywhere on
/// the box. Inconclusive cells need `cell_vertices`.
fn xcell_quick_infeasible(system: &GBSystem, xbox: &RatBox) -> bool {
    system
        .face_curvatures
        .iter()
        .any(|face| form_range(face, xbox, &system.variables).1.is_negative())
}

fn xcell_infeasible(system: &GBSystem, xbox: &RatBox) -> bool {
    xcell_quick_infeasible(system, xbox) || cell_vertices(system, xbox).is_empty()
}

/// Rational centroid of the cell's feasible polytope, as floats.
fn verts_centroid(verts: &[Vec<Rat>]) -> Vec<f64> {
    let n = verts[0].len();
    let m = verts.len() as f64;
    (0..n)
        .map(|i| verts.iter().map(|v| rat_f64(&v[i])).sum::<f64>() / m)
        .collect()
}

fn midpoint(lo: &Rat, hi: &Rat) -> Rat {
    (lo + hi) / Rat::from_integer(2.into())
}

const X_DEPTH_MAX: usize = 40;
const C_DEPTH_MAX: usize = 48;

/// Cheap sound vacuity test: the chain order forces c_{i-1} <= c_i, and every
/// admissible chain ends below the cell's slack upper bound.
fn cbox_vacuous(cbox: &RatBox, s_hi: &Rat) -> bool {
    for i in 1..cbox.len() {
        if cbox[i - 1].0 > cbox[i].1 {
            return true;
        }
    }
    matches!(cbox.last(), Some((lo, _)) if lo > s_hi)
}

/// Dense rational linear form over the cell variables (x first, then c).
#[derive(Debug, Clone)]
struct DForm {
    coeffs: Vec<Rat>,
    konst: Rat,
}

impl DForm {
    fn constant(nv: usize, konst: Rat) -> Self {
        DForm { coeffs: vec![Rat::zero(); nv], konst }
    }

    fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn var(nv: usize, i: usize) -> Self {
        let mut f = DForm::constant(nv, Rat::zero());
        f.coeffs[i] = Rat::one();
        f
    }

    fn add(&self, o: &DForm) -> DForm {
        DForm {
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect(),
            konst: &self.konst + &o.konst,
        }
    }

    fn sub(&self, o: &DForm) -> DForm {
        DForm {
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect(),
            konst: &self.konst - &o.konst,
        }
    }

    fn neg(&self) -> DForm {
        DForm { coeffs: self.coeffs.iter().map(|a| -a).collect(), konst: -self.konst.clone() }
    }

    fn scale(&self, f: &Rat) -> DForm {
        DForm { coeffs: self.coeffs.iter().map(|a| a * f).collect(), konst: &self.konst * f }
    }

    fn add_const(&self, k: &Rat) -> DForm {
        DForm { coeffs: self.coeffs.clone(), konst: &self.konst + k }
    }

    fn eval_rat(&self, pt: &[Rat]) -> Rat {
        let mut v = self.konst.clone();
        for (c, x) in self.coeffs.iter().zip(pt) {
            v += c * x;
        }
        v
    }

    fn eval_f64(&self, pt: &[f64]) -> f64 {
        let mut v = rat_f64(&self.konst);
        for (c, x) in self.coeffs.iter().zip(pt) {
            v += rat_f64(c) * x;
        }
        v
    }

    /// Exact maximum over the bounding box (x-box followed by c-box).
    fn box_max(&self, bbox: &RatBox) -> Rat {
        let mut v = self.konst.clone();
        for (c, (lo, hi)) in self.coeffs.iter().zip(bbox) {
            v += c * if c.is_negative() { lo } else { hi };
        }
        v
    }

    fn to_str(&self) -> LinFormStr {
        LinFormStr {
            coeffs: self.coeffs.iter().map(|c| c.to_string()).collect(),
            konst: self.konst.to_string(),
        }
    }

    fn parse(s: &LinFormStr, nv: usize) -> Option<DForm> {
        if s.coeffs.len() != nv {
            return None;
        }
        let coeffs: Option<Vec<Rat>> = s.coeffs.iter().map(|c| c.parse().ok()).collect();
        Some(DForm { coeffs: coeffs?, konst: s.konst.parse().ok()? })
    }
}

/// Arc geometry of a region over a cell as exact linear forms: side i's
/// directions sweep [A_i, B_i] (units of pi) with A_i = P_i + c_{i-1} and
/// B_i = P_i + c_i (last side: P_{k-1} + S). Requires every corner's turning
/// branch (theta_j >= 1 or theta_j <= 1) to be constant over the cell's
/// feasible part; returns None otherwise so the caller splits further.
struct SlopeGeo {
    a_forms: Vec<DForm>,
    b_forms: Vec<DForm>,
    s_form: DForm,
}

fn dform_of_angleform(nv: usize, form: &AngleForm, variables: &[u32]) -> DForm {
    let mut f = DForm::constant(nv, form.const_coeff.clone());
    for (v, coeff) in &form.var_coeffs {
        let idx = variables.binary_search(v).unwrap();
        f.coeffs[idx] += coeff;
    }
    f
}

fn slope_geometry(
    system: &GBSystem,
    walk: &BoundaryWalk,
    verts: &[Vec<Rat>],
    kc: usize,
) -> Option<SlopeGeo> {
    if verts.is_empty() {
        return None;
    }
    let n = system.variables.len();
    let k = walk.corner_forms.len();
    let nv = n + kc;
    let one = Rat::one();
    let mut l_forms = Vec::with_capacity(k);
    for form in &walk.corner_forms {
        let (lo, hi) = form_range_verts(form, verts, &system.variables);
        if lo >= one {
            l_forms.push(DForm::constant(nv, Rat::zero()));
        } else if hi <= one {
            let mut f = DForm::constant(nv, &one - &form.const_coeff);
            for (v, coeff) in &form.var_coeffs {
                let idx = system.variables.binary_search(v).unwrap();
                f.coeffs[idx] -= coeff;
            }
            l_forms.push(f);
        } else {
            return None;
        }
    }
    let mut total = DForm::constant(nv, Rat::zero());
    for l in &l_forms {
        total = total.add(l);
    }
    let s_form = DForm::constant(nv, Rat::from_integer(2.into())).sub(&total);
    let mut p = DForm::constant(nv, Rat::zero());
    let mut a_forms = Vec::with_capacity(k);
    let mut b_forms = Vec::with_capacity(k);
    for i in 0..k {
        if i > 0 {
            p = p.add(&l_forms[i - 1]);
        }
        a_forms.push(if i == 0 { p.clone() } else { p.add(&DForm::var(nv, n + i - 1)) });
        b_forms.push(if i == k - 1 { p.add(&s_form) } else { p.add(&DForm::var(nv, n + i)) });
    }
    Some(SlopeGeo { a_forms, b_forms, s_form })
}

/// Constraint rows of the coupled cell polytope Q: x in its box with every
/// face curvature nonnegative, chain c in its box, monotone, and ending
/// within the turning budget S(x).
fn q_constraints(
    system: &GBSystem,
    xbox: &RatBox,
    cbox: &RatBox,
    s_form: &DForm,
) -> Vec<Constraint> {
    let n = xbox.len();
    let kc = cbox.len();
    let nv = n + kc;
    let mut cons = Vec::new();
    let mut bounds_row = |i: usize, lo: &Rat, hi: &Rat| {
        let mut c = vec![Rat::zero(); nv];
        c[i] = Rat::one();
        cons.push(Constraint { coeffs: c.clone(), rel: Relation::Ge, bound: lo.clone() });
        cons.push(Constraint { coeffs: c, rel: Relation::Le, bound: hi.clone() });
    };
    for (i, (lo, hi)) in xbox.iter().enumerate() {
        bounds_row(i, lo, hi);
    }
    for (i, (lo, hi)) in cbox.iter().enumerate() {
        bounds_row(n + i, lo, hi);
    }
    for face in &system.face_curvatures {
        let mut coeffs = vec![Rat::zero(); nv];
        for (v, coeff) in &face.var_coeffs {
            let idx = system.variables.binary_search(v).unwrap();
            coeffs[idx] = coeff.clone();
        }
        cons.push(Constraint { coeffs, rel: Relation::Ge, bound: -face.const_coeff.clone() });
    }
    for i in 1..kc {
        let mut coeffs = vec![Rat::zero(); nv];
        coeffs[n + i] = Rat::one();
        coeffs[n + i - 1] = -Rat::one();
        cons.push(Constraint { coeffs, rel: Relation::Ge, bound: Rat::zero() });
    }
    if kc > 0 {
        // S(x) - c_{kc-1} >= 0.
        let mut coeffs = s_form.coeffs.clone();
        coeffs[n + kc - 1] -= Rat::one();
        cons.push(Constraint { coeffs, rel: Relation::Ge, bound: -s_form.konst.clone() });
    }
    cons
}

/// Exact check that a linear form is nonpositive everywhere on Q; box bound
/// first, rational LP when the box is inconclusive. An infeasible Q passes
/// vacuously.
fn q_max_nonpos(cons: &[Constraint], nv: usize, bbox: &RatBox, f: &DForm) -> bool {
    if !f.box_max(bbox).is_positive() {
        return true;
    }
    let inst = LpInstance {
        num_vars: nv,
        objective: f.coeffs.clone(),
        constraints: cons.to_vec(),
    };
    match solve_lp(&inst) {
        Ok(LpResult::Optimal { optimum, .. }) => !(optimum + &f.konst).is_positive(),
        Ok(LpResult::Infeasible { .. }) => true,
        _ => false,
    }
}

/// Exact maximum of f over Q; None when Q is infeasible or f unbounded.
fn q_max_rat(cons: &[Constraint], nv: usize, f: &DForm) -> Option<Rat> {
    let inst = LpInstance {
        num_vars: nv,
        objective: f.coeffs.clone(),
        constraints: cons.to_vec(),
    };
    match solve_lp(&inst) {
        Ok(LpResult::Optimal { optimum, .. }) => Some(optimum + &f.konst),
        _ => None,
    }
}

fn q_min_rat(cons: &[Constraint], nv: usize, f: &DForm) -> Option<Rat> {
    q_max_rat(cons, nv, &f.neg()).map(|v| -v)
}

/// Verifies one slope leaf against the rebuilt cell geometry.
///
/// Soundness per side (directions in units of pi, all mod 2): writing
/// a = A + 2 shift - rho - 1/2 and b = rho + 3/2 - B - 2 shift, a Neg side
/// with a, b >= 0 has its arc inside [rho + 1/2, rho + 3/2] where
/// max cos(pi(theta - rho)) = max(-sin(pi a), -sin(pi b)) <= -2 sigma for any
/// sigma <= min(a, 1-a, b, 1-b), by sin(pi t) >= 2 min(t, 1-t) on [0, 1].
/// A Pos side with a, b >= -s and 0 <= s <= 1/2 has its arc inside the
/// window widened by s on both ends, so max cos <= sin(pi s) <= (22/7) s.
/// An Env side carries a signed clearance t >= max(-a, a-1, -b, b-1) with
/// t <= 1/2; its endpoint cosines equal sin(pi max(-a, a-1)) and
/// sin(pi max(-b, b-1)), so max cos <= sin(pi t) on [-1/2, 1/2] where sine
/// is increasing (an interior peak forces max(-a, -b) >= 1/2, giving
/// sin(pi t) = 1). A pair of Env sides cancels: t_i + t_j <= 0 implies
/// sin(pi t_i) + sin(pi t_j) <= 0 exactly; with a positive slope, both
/// t <= 0 and the chord bound sin(pi t) <= 2 t give
/// sum <= 2 (t_i + t_j) <= -lambda gap.
/// Group sums of these bounds at most -lambda_g * gap(x) on the whole closed
/// cell refute closure at every admissible interior point, where gap > 0.
#[allow(clippy::too_many_arguments)]
fn slope_verify(
    system: &GBSystem,
    walk: &BoundaryWalk,
    groups: &[Vec<usize>],
    xbox: &RatBox,
    verts: &[Vec<Rat>],
    cbox: &RatBox,
    leaf: &SlopeLeaf,
) -> bool {
    let k = walk.corner_forms.len();
    if leaf.sides.len() != k || leaf.lambdas.len() != groups.len() {
        return false;
    }
    let n = system.variables.len();
    let kc = cbox.len();
    let nv = n + kc;
    let Some(geo) = slope_geometry(system, walk, verts, kc) else {
        return false;
    };
    let Some(rho) = DForm::parse(&leaf.rho, nv) else {
        return false;
    };
    let gap = match leaf.gap {
        GapForm::One => DForm::constant(nv, Rat::one()),
        GapForm::Var(i) if i < n => DForm::var(nv, i),
        GapForm::CoVar(i) if i < n => {
            DForm::constant(nv, Rat::one()).sub(&DForm::var(nv, i))
        }
        GapForm::Face(f) if f < system.face_curvatures.len() => {
            dform_of_angleform(nv, &system.face_curvatures[f], &system.variables)
        }
        _ => return false,
    };
    let cons = q_constraints(system, xbox, cbox, &geo.s_form);
    let mut bbox = xbox.clone();
    bbox.extend(cbox.iter().cloned());
    let chk = |f: &DForm| q_max_nonpos(&cons, nv, &bbox, f);
    let half = Rat::new(1.into(), 2.into());
    let one = Rat::one();
    let dbg = std::env::var("COVER_DEBUG").is_ok();
    let mut contrib: Vec<DForm> = Vec::with_capacity(k);
    let mut env: Vec<Option<DForm>> = Vec::with_capacity(k);
    for (i, side) in leaf.sides.iter().enumerate() {
        let (shift, form_str) = match side {
            SlopeSide::Neg { shift, sigma } => (*shift, sigma),
            SlopeSide::Pos { shift, s } => (*shift, s),
            SlopeSide::Env { shift, t } => (*shift, t),
        };
        let Some(form) = DForm::parse(form_str, nv) else {
            return false;
        };
        let two_shift = Rat::from_integer((2 * shift).into());
        let a = geo.a_forms[i].add_const(&(&two_shift - &half)).sub(&rho);
        let b = rho
            .add_const(&(Rat::new(3.into(), 2.into()) - &two_shift))
            .sub(&geo.b_forms[i]);
        match side {
            SlopeSide::Neg { .. } => {
                let sigma = form;
                if !chk(&a.neg()) || !chk(&b.neg()) {
                    if dbg {
                        eprintln!("  sv fail: side {i} neg range (a>=0 or b>=0)");
                    }
                    return false;
                }
                if !chk(&sigma.sub(&a)) || !chk(&sigma.add(&a).add_const(&-one.clone())) {
                    if dbg {
                        eprintln!("  sv fail: side {i} sigma vs a");
                    }
                    return false;
                }
                if !chk(&sigma.sub(&b)) || !chk(&sigma.add(&b).add_const(&-one.clone())) {
                    if dbg {
                        eprintln!("  sv fail: side {i} sigma vs b");
                    }
                    return false;
                }
                env.push(None);
                contrib.push(sigma.scale(&Rat::from_integer((-2).into())));
            }
            SlopeSide::Pos { .. } => {
                let s = form;
                if !chk(&s.neg()) || !chk(&s.add_const(&-half.clone())) {
                    if dbg {
                        eprintln!("  sv fail: side {i} s range");
                    }
                    return false;
                }
                if !chk(&a.add(&s).neg()) || !chk(&b.add(&s).neg()) {
                    if dbg {
                        eprintln!("  sv fail: side {i} a+s or b+s");
                    }
                    return false;
                }
                env.push(None);
                contrib.push(s.scale(&Rat::new(22.into(), 7.into())));
            }
            SlopeSide::Env { .. } => {
                // t >= -a, t >= a-1, t >= -b, t >= b-1, t <= 1/2: then the
                // arc's endpoint cosines are exactly sin(pi max(-a, a-1)) and
                // sin(pi max(-b, b-1)), and an interior peak forces one
                // branch to 1/2, so max cos <= sin(pi t) throughout.
                let t = form;
                if !chk(&a.neg().sub(&t))
                    || !chk(&a.add_const(&-one.clone()).sub(&t))
                    || !chk(&b.neg().sub(&t))
                    || !chk(&b.add_const(&-one.clone()).sub(&t))
                    || !chk(&t.add_const(&-half.clone()))
                {
                    if dbg {
                        eprintln!("  sv fail: side {i} clearance t");
                    }
                    return false;
                }
                env.push(Some(t));
                contrib.push(DForm::constant(nv, Rat::zero()));
            }
        }
    }
    let mut any_pos = false;
    for (g, lam_s) in groups.iter().zip(&leaf.lambdas) {
        let Ok(lam) = lam_s.parse::<Rat>() else {
            return false;
        };
        if lam.is_negative() {
            return false;
        }
        if lam.is_positive() {
            any_pos = true;
        }
        let has_env = g.iter().any(|&i| env[i].is_some());
        let ok = if has_env {
            // Clearance sides come only in complete pairs.
            let [i, j] = g[..] else {
                return false;
            };
            let (Some(ti), Some(tj)) = (&env[i], &env[j]) else {
                return false;
            };
            let sum = ti.add(tj);
            if lam.is_zero() {
                // sin(pi t_i) + sin(pi t_j)
                //   = 2 sin(pi (t_i + t_j) / 2) cos(pi (t_i - t_j) / 2) <= 0
                // whenever t_i + t_j <= 0, since |t_i - t_j| <= 1.
                chk(&sum)
            } else {
                // Strict route needs both clearances nonpositive, where the
                // chord bound sin(pi t) <= 2 t applies:
                // 2 (t_i + t_j) + lambda gap <= 0.
                chk(ti)
                    && chk(tj)
                    && chk(&sum.scale(&Rat::from_integer(2.into())).add(&gap.scale(&lam)))
            }
        } else {
            let mut f = gap.scale(&lam);
            for &i in g {
                f = f.add(&contrib[i]);
            }
            chk(&f)
        };
        if !ok {
            if dbg {
                eprintln!("  sv fail: group {g:?} lambda {lam_s} bound");
            }
            return false;
        }
    }
    any_pos
}

struct CoverSearch<'a> {
    system: &'a GBSystem,
    regions: Vec<(usize, &'a BoundaryWalk, Vec<Vec<usize>>)>,
    delta: f64,
    grid: usize,
    nodes_left: usize,
    /// Remaining exact slope-leaf attempts for the current region cover;
    /// each attempt runs rational LPs, so the budget keeps misfires cheap.
    slope_attempts: usize,
    rng: ChaCha8Rng,
}

impl<'a> CoverSearch<'a> {
    fn spend(&mut self) -> bool {
        if self.nodes_left == 0 {
            if std::env::var("COVER_DEBUG").is_ok() {
                eprintln!("node budget exhausted");
            }
            return false;
        }
        self.nodes_left -= 1;
        true
    }

    fn sample_x(&mut self, xbox: &RatBox) -> Vec<f64> {
        xbox.iter()
            .map(|(lo, hi)| {
                let (l, h) = (rat_f64(lo), rat_f64(hi));
                l + self.rng.gen::<f64>() * (h - l)
            })
            .collect()
    }

    fn x_feasible_f64(&self, x: &[f64]) -> bool {
        self.system
            .face_curvatures
            .iter()
            .all(|f| form_eval_f64(f, x, &self.system.variables) >= 0.0)
    }

    /// Regions whose point refutation succeeds at `x`, best margin first.
    fn refuting_regions(&mut self, x: &[f64]) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for ri in 0..self.regions.len() {
            let walk = self.regions[ri].1;
            let l: Vec<f64> = walk
                .corner_forms
                .iter()
                .map(|f| (1.0 - form_eval_f64(f, x, &self.system.variables)).max(0.0))
                .collect();
            let slack = 2.0 - l.iter().sum::<f64>();
            if slack < 0.0 {
                out.push((ri, f64::NEG_INFINITY));
                continue;
            }
            let k = l.len();
            let p: Vec<f64> = std::iter::once(0.0)
                .chain(l.iter().scan(0.0, |acc, &v| {
                    *acc += v;
                    Some(*acc)
                }))
                .take(k)
                .collect();
            // A chain whose own best direction still leaves some group
            // positive admits a closed polygon (duality over the per-side
            // direction hulls), so no cell containing it can ever be sealed;
            // one such chain disqualifies the region at this x.
            let groups = &self.regions[ri].2;
            let mut worst = f64::NEG_INFINITY;
            let mut ok = true;
            for trial in 0..(4 * k + 32) {
                let c = chain_sample(k, slack, trial, &mut self.rng);
                let arcs = chain_arcs(&p, &c, slack);
                let (_, mm) = best_rho(&arcs, groups, 512, None);
                worst = worst.max(mm);
                // Tolerance: critical chains sit exactly at zero margin and
                // must not reject the region over rounding in best_rho.
                if mm > 1e-7 {
                    ok = false;
                    break;
                }
            }
            if ok {
                out.push((ri, worst));
            }
        }
        out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        out
    }

    fn x_rec(&mut self, xbox: &RatBox, depth: usize) -> Option<XNode> {
        if !self.spend() {
            return None;
        }
        if xcell_quick_infeasible(self.system, xbox) {
            return Some(XNode::Infeasible);
        }
        let verts = cell_vertices(self.system, xbox);
        if verts.is_empty() {
            return Some(XNode::Infeasible);
        }
        // A strictly feasible sample ranks the regions; fall back to the
        // centroid when the feasible part is a sliver sampling misses.
        let mut x = verts_centroid(&verts);
        if !self.x_feasible_f64(&x) {
            for _ in 0..24 {
                let cand = self.sample_x(xbox);
                if self.x_feasible_f64(&cand) {
                    x = cand;
                    break;
                }
            }
        }
        // Two rounds: a cheap pass catches the common case where some region
        // covers quickly, so a hard region ranked earlier cannot burn the
        // whole budget before the right one is tried.
        let screened = self.refuting_regions(&x);
        for budget in [2_000usize, 30_000] {
            for &(ri, _) in &screened {
                let budget_per_region = budget.min(self.nodes_left);
                let saved = self.nodes_left;
                self.nodes_left = budget_per_region;
                let attempt = self.c_cover(ri, xbox, &verts, &x);
                self.nodes_left = saved - (budget_per_region - self.nodes_left);
                if let Some(tree) = attempt {
                    let region = self.regions[ri].0;
                    return Some(XNode::Region { region, tree });
                }
            }
        }
        self.x_split(xbox, depth)
    }

    fn x_split(&mut self, xbox: &RatBox, depth: usize) -> Option<XNode> {
        if depth >= X_DEPTH_MAX {
            if std::env::var("COVER_DEBUG").is_ok() {
                let b: Vec<(f64, f64)> =
                    xbox.iter().map(|(l, h)| (rat_f64(l), rat_f64(h))).collect();
                eprintln!("x-depth cap at {b:?}");
                let center: Vec<f64> =
                    xbox.iter().map(|(lo, hi)| rat_f64(&midpoint(lo, hi))).collect();
                let omegas: Vec<f64> = self
                    .system
                    .face_curvatures
                    .iter()
                    .map(|f| form_eval_f64(f, &center, &self.system.variables))
                    .collect();
                eprintln!("  center {center:?} omegas {omegas:?} lp_infeasible {}",
                    xcell_infeasible(self.system, xbox));
            }
            return None;
        }
        let dim = (0..xbox.len())
            .max_by(|&a, &b| {
                let wa = &xbox[a].1 - &xbox[a].0;
                let wb = &xbox[b].1 - &xbox[b].0;
                wa.partial_cmp(&wb).unwrap()
            })
            .unwrap();
        if xbox[dim].0 == xbox[dim].1 {
            return None;
        }
        let mid = midpoint(&xbox[dim].0, &xbox[dim].1);
        let mut left = xbox.clone();
        left[dim].1 = mid.clone();
        let mut right = xbox.clone();
        right[dim].0 = mid;
        let lo = self.x_rec(&left, depth + 1)?;
        let hi = self.x_rec(&right, depth + 1)?;
        Some(XNode::Split { dim, lo: Box::new(lo), hi: Box::new(hi) })
    }

    fn c_cover(
        &mut self,
        ri: usize,
        xbox: &RatBox,
        verts: &[Vec<Rat>],
        xsample: &[f64],
    ) -> Option<CNode> {
        let (_, walk, _) = &self.regions[ri];
        let Some(bounds) = cell_bounds(&walk.corner_forms, verts, &self.system.variables)
        else {
            return Some(CNode::Vacuous);
        };
        if bounds.s_hi.is_negative() {
            // Slack is negative for every feasible x in the cell.
            return Some(CNode::Vacuous);
        }
        let k = walk.corner_forms.len();
        // Skip hopeless attempts: when the turning prefixes are still wild
        // over the cell, split x first instead of flailing in chain space.
        let spread = rat_f64(&bounds.p_hi[k - 1]) - rat_f64(&bounds.p_lo[k - 1]);
        if spread > 0.5 {
            return None;
        }
        let cbox: RatBox = vec![(Rat::zero(), bounds.s_hi.clone()); k.saturating_sub(1)];
        self.slope_attempts = 256;
        self.c_rec(ri, xbox, verts, xsample, &bounds, &cbox, 0, None)
    }

    #[allow(clippy::too_many_arguments)]
    fn c_rec(
        &mut self,
        ri: usize,
        xbox: &RatBox,
        verts: &[Vec<Rat>],
        xsample: &[f64],
        bounds: &CellBounds,
        cbox: &RatBox,
        depth: usize,
        hint: Option<f64>,
    ) -> Option<CNode> {
        if !self.spend() {
            return None;
        }
        if cbox_vacuous(cbox, &bounds.s_hi) {
            return Some(CNode::Vacuous);
        }
        let arcs = cell_arcs(bounds, cbox);
        let arcs_f: Vec<(f64, f64)> =
            arcs.iter().map(|(lo, hi)| (rat_f64(lo), rat_f64(hi))).collect();
        let (rho, margin) = {
            let groups = &self.regions[ri].2;
            best_rho(&arcs_f, groups, self.grid, hint)
        };
        if margin <= -self.delta
            && self.regions[ri]
                .2
                .iter()
                .all(|g| arcs_margin_upper(&arcs, g, rho) <= -self.delta)
        {
            return Some(CNode::Rho { rho });
        }
        // Interval margins stall near degenerate boundary assignments where
        // the true margin vanishes; an exact linear-form leaf can still
        // close such cells.
        // Only small cells are worth the exact-LP cost: large ones either
        // shrink to a rho leaf or genuinely need a split.
        let cwidth = cbox
            .iter()
            .map(|(l, h)| rat_f64(h) - rat_f64(l))
            .fold(0.0f64, f64::max);
        let _ = cwidth;
        if (margin <= 0.25 || depth == 0) && self.slope_attempts > 0 {
            if let Some(leaf) = self.try_slope(ri, xbox, verts, cbox, &arcs_f, rho / PI) {
                return Some(CNode::Slope(leaf));
            }
            // Only failures burn budget; productive leaves are the point.
            self.slope_attempts -= 1;
        }
        if cbox.is_empty() {
            return None;
        }
        // Exact pruning is expensive; a cheap witness at the sampled x skips
        // it for cells that clearly contain admissible chains.
        if depth >= 4
            && !chain_cell_feasible_f64(
                &self.regions[ri].1.corner_forms,
                xsample,
                &self.system.variables,
                cbox,
            )
            && !cell_feasible(self.system, &self.regions[ri].1.corner_forms, xbox, cbox)
        {
            return Some(CNode::Vacuous);
        }
        if depth >= C_DEPTH_MAX {
            if std::env::var("COVER_DEBUG").is_ok() {
                let b: Vec<(f64, f64)> =
                    cbox.iter().map(|(l, h)| (rat_f64(l), rat_f64(h))).collect();
                eprintln!("c-depth cap region {} margin {margin:.6} cbox {b:?}", self.regions[ri].0);
                eprintln!("  s_hi {:.4} arcs {:?}", rat_f64(&bounds.s_hi), arcs_f
                    .iter().map(|(l, h)| (format!("{l:.3}"), format!("{h:.3}"))).collect::<Vec<_>>());
                eprintln!("  groups {:?}", self.regions[ri].2);
            }
            return None;
        }
        let dim = (0..cbox.len())
            .max_by(|&a, &b| {
                let wa = &cbox[a].1 - &cbox[a].0;
                let wb = &cbox[b].1 - &cbox[b].0;
                wa.partial_cmp(&wb).unwrap()
            })
            .unwrap();
        if cbox[dim].1 == cbox[dim].0 {
            return None;
        }
        let mid = midpoint(&cbox[dim].0, &cbox[dim].1);
        let mut left = cbox.clone();
        left[dim].1 = mid.clone();
        let mut right = cbox.clone();
        right[dim].0 = mid;
        let lo = self.c_rec(ri, xbox, verts, xsample, bounds, &left, depth + 1, Some(rho))?;
        let hi = self.c_rec(ri, xbox, verts, xsample, bounds, &right, depth + 1, Some(rho))?;
        Some(CNode::Split { dim, lo: Box::new(lo), hi: Box::new(hi) })
    }

    /// Builds and exactly verifies a slope leaf for this cell, trying a few
    /// separating directions: the float optimum rounded to small
    /// denominators plus directions pinned to arc endpoints at cell
    /// vertices, which give the exact alignment degenerate cells need.
    fn try_slope(
        &mut self,
        ri: usize,
        xbox: &RatBox,
        verts: &[Vec<Rat>],
        cbox: &RatBox,
        cell_arcs_f: &[(f64, f64)],
        rho_hint: f64,
    ) -> Option<SlopeLeaf> {
        let system = self.system;
        let walk = self.regions[ri].1;
        let groups = self.regions[ri].2.clone();
        let k = walk.corner_forms.len();
        let kc = cbox.len();
        let n = system.variables.len();
        let nv = n + kc;
        let geo = slope_geometry(system, walk, verts, kc)?;
        // Float sample points (x then c) of the coupled cell.
        let mut pts: Vec<Vec<f64>> = Vec::new();
        let mut xs: Vec<Vec<f64>> = vec![verts_centroid(verts)];
        let cen = xs[0].clone();
        for v in verts.iter().take(10) {
            let vf: Vec<f64> = v.iter().map(rat_f64).collect();
            xs.push(vf.iter().zip(&cen).map(|(a, b)| 0.75 * a + 0.25 * b).collect());
            xs.push(vf);
        }
        let clo: Vec<f64> = cbox.iter().map(|(l, _)| rat_f64(l)).collect();
        let chi: Vec<f64> = cbox.iter().map(|(_, h)| rat_f64(h)).collect();
        for x in &xs {
            let mut base = x.clone();
            base.resize(nv, 0.0);
            let s = geo.s_form.eval_f64(&base);
            if s < -1e-12 {
                continue;
            }
            let mut cands: Vec<Vec<f64>> = vec![clo.clone(), chi.clone()];
            for _ in 0..8 {
                cands.push(
                    (0..kc)
                        .map(|i| clo[i] + self.rng.gen::<f64>() * (chi[i] - clo[i]))
                        .collect(),
                );
            }
            for c in cands {
                if let Some(c) = monotone_clamp(&c, &clo, &chi, s) {
                    let mut pt = x.clone();
                    pt.extend(c);
                    pts.push(pt);
                }
            }
        }
        let dbg = std::env::var("COVER_DEBUG").is_ok();
        if pts.is_empty() {
            if dbg {
                eprintln!("slope r{}: no sample points", self.regions[ri].0);
            }
            return None;
        }
        // Candidate separating directions, units of pi.  The screen uses
        // the cell-wide interval arcs: the exact follow-up bounds hold over
        // the whole cell, so a direction that only looks good at sampled
        // chains is a dead end.
        let worst_margin = |rho_pi: f64| -> f64 {
            groups
                .iter()
                .map(|g| arcs_margin_float(cell_arcs_f, g, rho_pi * PI))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let mut rho_star = rho_hint.rem_euclid(2.0);
        let mut best = worst_margin(rho_star);
        for i in 0..256 {
            let r = 2.0 * i as f64 / 256.0;
            let m = worst_margin(r);
            if m < best {
                best = m;
                rho_star = r;
            }
        }
        let half = Rat::new(1.into(), 2.into());
        let one = Rat::one();
        let mut cands: Vec<DForm> = Vec::new();
        // Constants near the float optimum, rounded to small denominators.
        for d in [2i64, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 128] {
            let r = Rat::new(((rho_star * d as f64).round() as i64).into(), d.into());
            cands.push(DForm::constant(nv, r));
        }
        // Alignment forms tracking one side's arc endpoint across the cell:
        // near-degenerate chains pin the critical direction half a turn from
        // an endpoint, and that endpoint moves linearly with (x, c).
        for i in 0..k {
            for f in [&geo.a_forms[i], &geo.b_forms[i]] {
                cands.push(f.add_const(&-half.clone()));
                cands.push(f.add_const(&half));
                cands.push(f.add_const(&(&half - &Rat::from_integer(2.into()))));
                // Offset so the direction equals the float optimum at the
                // first sample: the tracked side's clearance is then frozen
                // at its sampled value over the whole cell while the sampled
                // chains keep the optimum's margins.
                let off = rho_star - f.eval_f64(&pts[0]);
                cands.push(f.add_const(&rat_floor_grid(off, 64)));
            }
        }
        // Rank by the worst sampled chain margin under each candidate; the
        // exact checks are the authority, this only orders the attempts.
        let sample_margin = |rf: &DForm| -> f64 {
            pts.iter()
                .map(|pt| {
                    let rho_pt = rf.eval_f64(pt);
                    let arcs: Vec<(f64, f64)> = (0..k)
                        .map(|i| {
                            (geo.a_forms[i].eval_f64(pt), geo.b_forms[i].eval_f64(pt))
                        })
                        .collect();
                    groups
                        .iter()
                        .map(|g| arcs_margin_float(&arcs, g, rho_pt * PI))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let mut scored: Vec<(f64, DForm)> =
            cands.into_iter().map(|c| (sample_margin(&c), c)).collect();
        scored.retain(|(m, _)| *m <= 1e-7);
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // Interleave constant and endpoint-tracking candidates: the sampled
        // chains cannot see a window edge crossed only elsewhere in the cell,
        // and when that happens only a tracking direction can succeed, so it
        // must get a turn before the exact-try budget runs out.
        let (consts, forms): (Vec<_>, Vec<_>) =
            scored.into_iter().partition(|(_, f)| f.is_constant());
        let mut cands = Vec::with_capacity(consts.len() + forms.len());
        let (mut ic, mut jf) = (consts.into_iter(), forms.into_iter());
        loop {
            match (ic.next(), jf.next()) {
                (None, None) => break,
                (a, b) => {
                    cands.extend(a);
                    cands.extend(b);
                }
            }
        }
        cands.truncate(24);
        if dbg {
            let cb: Vec<(f64, f64)> =
                cbox.iter().map(|(l, h)| (rat_f64(l), rat_f64(h))).collect();
            eprintln!(
                "slope r{}: float best margin {best:.6} at rho {rho_star:.4}, {} cands, cbox {cb:.4?}",
                self.regions[ri].0,
                cands.len()
            );
        }
        let mut bbox = xbox.clone();
        bbox.extend(cbox.iter().cloned());
        // Float-screened exact construction: sampled chains reject hopeless
        // comparisons for free, and only the survivors pay for a box bound or
        // an exact feasibility check, so the assembled leaf almost always
        // passes slope_verify.
        let cons = q_constraints(system, xbox, cbox, &geo.s_form);
        let pts_max =
            |f: &DForm| pts.iter().map(|p| f.eval_f64(p)).fold(f64::NEG_INFINITY, f64::max);
        let pts_min =
            |f: &DForm| pts.iter().map(|p| f.eval_f64(p)).fold(f64::INFINITY, f64::min);
        let fnonpos =
            |f: &DForm| pts_max(f) <= 1e-9 && q_max_nonpos(&cons, nv, &bbox, f);
        let box_min = |f: &DForm| -f.neg().box_max(&bbox);
        // Pair-group membership: those sides take the signed-clearance route.
        let mut in_pair = vec![false; k];
        for g in &groups {
            if g.len() == 2 {
                for &i in g {
                    in_pair[i] = true;
                }
            }
        }
        let mut exact_tries = 4usize;
        let mut n_sbig = 0usize;
        let mut n_nogap = 0usize;
        let mut n_dead = 0usize;
        let mut n_vfail = 0usize;
        'cand: for (_, rho) in cands {
            if exact_tries == 0 {
                if dbg {
                    eprintln!("slope r{}: exact tries exhausted", self.regions[ri].0);
                }
                return None;
            }
            let rho_f = rho.eval_f64(&pts[0]);
            let mut sides: Vec<SlopeSide> = Vec::with_capacity(k);
            // Per side either a contribution bound (singletons) or the signed
            // clearance form t (pair sides), marked by `envs`.
            let mut contribs: Vec<DForm> = Vec::with_capacity(k);
            let mut envs: Vec<Option<DForm>> = Vec::with_capacity(k);
            for i in 0..k {
                let mid = 0.5
                    * (geo.a_forms[i].eval_f64(&pts[0]) + geo.b_forms[i].eval_f64(&pts[0]));
                let m = ((rho_f + 1.0 - mid) / 2.0).round() as i64;
                let two_shift = Rat::from_integer((2 * m).into());
                let a = geo.a_forms[i]
                    .add_const(&(&two_shift - &half))
                    .sub(&rho);
                let b = rho
                    .add_const(&(Rat::new(3.into(), 2.into()) - &two_shift))
                    .sub(&geo.b_forms[i]);
                let one_minus = |f: &DForm| DForm::constant(nv, Rat::one()).sub(f);
                if in_pair[i] {
                    // Signed clearance: t >= max(-a, a-1, -b, b-1), t <= 1/2;
                    // then max cos over the arc <= sin(pi t), with no case
                    // split on which window edge the arc approaches.
                    let branches =
                        [a.neg(), a.add_const(&-one.clone()), b.neg(), b.add_const(&-one.clone())];
                    let env_max = |p: &[f64]| {
                        branches.iter().map(|f| f.eval_f64(p)).fold(f64::NEG_INFINITY, f64::max)
                    };
                    let mut t = None;
                    for f in &branches {
                        if pts.iter().all(|p| f.eval_f64(p) >= env_max(p) - 1e-9)
                            && branches.iter().all(|g| fnonpos(&g.sub(f)))
                        {
                            t = Some(f.clone());
                            break;
                        }
                    }
                    let t = t.unwrap_or_else(|| {
                        // Box-sound constant upper bound on the envelope.
                        let hi =
                            branches.iter().map(|f| f.box_max(&bbox)).max().unwrap();
                        DForm::constant(nv, hi)
                    });
                    if !fnonpos(&t.add_const(&-half.clone())) {
                        n_sbig += 1;
                        continue 'cand;
                    }
                    envs.push(Some(t.clone()));
                    contribs.push(DForm::constant(nv, Rat::zero()));
                    sides.push(SlopeSide::Env { shift: m, t: t.to_str() });
                } else {
                    let amin = pts_min(&a);
                    let bmin = pts_min(&b);
                    if amin >= -1e-12 && bmin >= -1e-12 && fnonpos(&a.neg()) && fnonpos(&b.neg()) {
                        // Negative side: a lower bound on min(a, 1-a, b, 1-b),
                        // preferring a dominated form so the bound keeps
                        // scaling where the minimum vanishes.
                        let four = [a.clone(), one_minus(&a), b.clone(), one_minus(&b)];
                        let min4 = |p: &[f64]| {
                            four.iter().map(|f| f.eval_f64(p)).fold(f64::INFINITY, f64::min)
                        };
                        let mut sigma = None;
                        for f in &four {
                            if pts.iter().all(|p| f.eval_f64(p) <= min4(p) + 1e-9)
                                && four.iter().all(|g| fnonpos(&f.sub(g)))
                            {
                                sigma = Some(f.clone());
                                break;
                            }
                        }
                        let sigma = sigma.unwrap_or_else(|| {
                            // Box-sound constant lower bound, clamped at zero.
                            let lo = four.iter().map(box_min).min().unwrap();
                            DForm::constant(
                                nv,
                                if lo.is_positive() { lo } else { Rat::zero() },
                            )
                        });
                        contribs.push(sigma.scale(&Rat::from_integer((-2).into())));
                        envs.push(None);
                        sides.push(SlopeSide::Neg { shift: m, sigma: sigma.to_str() });
                    } else {
                        // Positive side: s >= max(0, -a, -b), small.
                        let neg_a = a.neg();
                        let neg_b = b.neg();
                        let mut s_form = None;
                        for (f, other) in [(&neg_a, &neg_b), (&neg_b, &neg_a)] {
                            if fnonpos(&f.neg()) && fnonpos(&other.sub(f)) {
                                s_form = Some(f.clone());
                                break;
                            }
                        }
                        let s_form = s_form.unwrap_or_else(|| {
                            // Box-sound constant upper bound, clamped at zero.
                            let hi = neg_a.box_max(&bbox).max(neg_b.box_max(&bbox));
                            DForm::constant(
                                nv,
                                if hi.is_positive() { hi } else { Rat::zero() },
                            )
                        });
                        if !fnonpos(&s_form.add_const(&-half.clone())) {
                            n_sbig += 1;
                            continue 'cand;
                        }
                        contribs.push(s_form.scale(&Rat::new(22.into(), 7.into())));
                        envs.push(None);
                        sides.push(SlopeSide::Pos { shift: m, s: s_form.to_str() });
                    }
                }
            }
            if dbg && std::env::var("SLOPE_DUMP").is_ok() {
                eprintln!("  rho cand {:?}:", rho.to_str());
                for i in 0..k {
                    let alo = pts.iter().map(|p| geo.a_forms[i].eval_f64(p)).fold(f64::INFINITY, f64::min);
                    let ahi = pts.iter().map(|p| geo.a_forms[i].eval_f64(p)).fold(f64::NEG_INFINITY, f64::max);
                    let blo = pts.iter().map(|p| geo.b_forms[i].eval_f64(p)).fold(f64::INFINITY, f64::min);
                    let bhi = pts.iter().map(|p| geo.b_forms[i].eval_f64(p)).fold(f64::NEG_INFINITY, f64::max);
                    let clo = pts.iter().map(|p| contribs[i].eval_f64(p)).fold(f64::INFINITY, f64::min);
                    let chi = pts.iter().map(|p| contribs[i].eval_f64(p)).fold(f64::NEG_INFINITY, f64::max);
                    eprintln!(
                        "    side {i} {:?} A[{alo:.4},{ahi:.4}] B[{blo:.4},{bhi:.4}] contrib[{clo:.4},{chi:.4}]",
                        sides[i]
                    );
                }
            }
            // Per-group screen forms.  Pair groups use the signed-clearance
            // comparison t_i + t_j <= 0 (sine is increasing and odd on
            // [-1/2, 1/2], so the two cosine bounds cancel with no constant-
            // factor loss); they may carry a slope only when both clearances
            // stay nonpositive, where the chord bound sin(pi t) <= 2 t holds.
            let gforms: Vec<(DForm, bool)> = groups
                .iter()
                .map(|g| {
                    if let [i, j] = g[..] {
                        if let (Some(ti), Some(tj)) = (&envs[i], &envs[j]) {
                            let lam_ok =
                                pts_max(ti) <= 1e-9 && pts_max(tj) <= 1e-9;
                            return (ti.add(tj), lam_ok);
                        }
                    }
                    let mut sum = DForm::constant(nv, Rat::zero());
                    for &i in g {
                        sum = sum.add(&contribs[i]);
                    }
                    (sum, true)
                })
                .collect();
            // Gap form and slopes: find, per gap candidate, the largest
            // uniform slope each group's bound supports on the samples.
            let tau: Vec<Vec<f64>> = gforms
                .iter()
                .map(|(f, _)| pts.iter().map(|p| f.eval_f64(p)).collect())
                .collect();
            if dbg && std::env::var("SLOPE_DUMP").is_ok() {
                for (gi, tg) in tau.iter().enumerate() {
                    let lo = tg.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = tg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    eprintln!("    group {:?} tau [{lo:.5},{hi:.5}]", groups[gi]);
                }
            }
            // A nonnegative slope times a nonnegative gap only tightens the
            // requirement, so every group must already pass at zero slope;
            // one failing group kills this direction for every gap choice.
            if let Some(bad) = tau
                .iter()
                .position(|tg| tg.iter().any(|t| *t > 1e-9))
            {
                if dbg && std::env::var("SLOPE_DUMP").is_ok() {
                    let hi = tau[bad].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    eprintln!(
                        "    tau screen fail group {:?} max {hi:.4} (pair={})",
                        groups[bad], !gforms[bad].1
                    );
                }
                n_nogap += 1;
                continue;
            }
            let mut dead = false;
            for (g, (sum, _)) in groups.iter().zip(&gforms) {
                if !fnonpos(sum) {
                    if dbg && std::env::var("SLOPE_DUMP").is_ok() {
                        eprintln!(
                            "    float fail rho={:?} group {g:?} boxmax={:?}",
                            rho.to_str(),
                            rat_f64(&sum.box_max(&bbox))
                        );
                    }
                    dead = true;
                    break;
                }
            }
            if dead {
                n_dead += 1;
                continue;
            }
            // All groups hold at zero slope; now one of them must carry a
            // positive slope against some gap form to make the refutation
            // strict at admissible interior points.
            let mut gap_cands = vec![GapForm::One];
            for i in 0..n {
                gap_cands.push(GapForm::Var(i));
                gap_cands.push(GapForm::CoVar(i));
            }
            for f in 0..system.face_curvatures.len() {
                gap_cands.push(GapForm::Face(f));
            }
            let quarter = Rat::new(1.into(), 4.into());
            for gap in gap_cands {
                let gap_form = match gap {
                    GapForm::One => DForm::constant(nv, Rat::one()),
                    GapForm::Var(i) => DForm::var(nv, i),
                    GapForm::CoVar(i) => {
                        DForm::constant(nv, Rat::one()).sub(&DForm::var(nv, i))
                    }
                    GapForm::Face(f) => {
                        dform_of_angleform(nv, &system.face_curvatures[f], &system.variables)
                    }
                };
                for (gi, (sum, lam_ok)) in gforms.iter().enumerate() {
                    if !lam_ok {
                        continue;
                    }
                    // Pair groups bound their cosine sum by 2(t_i + t_j), so
                    // the gap constraint is 2 sum + lambda gap <= 0.
                    let fac = if groups[gi].len() == 2 { 2.0 } else { 1.0 };
                    let bound = if fac == 2.0 {
                        sum.scale(&Rat::from_integer(2.into()))
                    } else {
                        sum.clone()
                    };
                    let mut lam_max = f64::INFINITY;
                    for (p, t) in pts.iter().zip(&tau[gi]) {
                        let gv = gap_form.eval_f64(p);
                        if gv > 1e-12 {
                            lam_max = lam_max.min(-fac * t / gv);
                        } else if *t > 1e-9 {
                            lam_max = f64::NEG_INFINITY;
                        }
                    }
                    if lam_max <= 1e-6 {
                        continue;
                    }
                    let mut l = rat_floor_grid((lam_max * 0.5).min(16.0), 256);
                    for _ in 0..3 {
                        if !l.is_positive() {
                            break;
                        }
                        if fnonpos(&bound.add(&gap_form.scale(&l))) {
                            if let [i, j] = groups[gi][..] {
                                // Both clearances must stay nonpositive for
                                // the chord bound behind the pair slope.
                                let (Some(ti), Some(tj)) = (&envs[i], &envs[j])
                                else {
                                    break;
                                };
                                if !fnonpos(ti) || !fnonpos(tj) {
                                    break;
                                }
                            }
                            let mut lams = vec![Rat::zero(); groups.len()];
                            lams[gi] = l;
                            let leaf = SlopeLeaf {
                                rho: rho.to_str(),
                                sides: sides.clone(),
                                lambdas: lams.iter().map(|v| v.to_string()).collect(),
                                gap: gap.clone(),
                            };
                            exact_tries -= 1;
                            if slope_verify(
                                system, walk, &groups, xbox, verts, cbox, &leaf,
                            ) {
                                return Some(leaf);
                            }
                            n_vfail += 1;
                            if dbg {
                                eprintln!(
                                    "slope r{}: exact verify failed rho={:?} gap={:?}",
                                    self.regions[ri].0, leaf.rho, leaf.gap
                                );
                            }
                            if exact_tries == 0 {
                                return None;
                            }
                            break;
                        }
                        l *= &quarter;
                    }
                }
            }
            n_nogap += 1;
        }
        if dbg {
            eprintln!(
                "slope r{}: no leaf (sbig {n_sbig}, nogap {n_nogap}, dead {n_dead}, vfail {n_vfail})",
                self.regions[ri].0
            );
        }
        None
    }
}

/// Clamps a float chain into the c-box, monotone and within the budget s;
/// None when the box admits no such chain near the input.
fn monotone_clamp(c: &[f64], lo: &[f64], hi: &[f64], s: f64) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(c.len());
    let mut prev = 0.0f64;
    for i in 0..c.len() {
        let v = c[i].clamp(lo[i], hi[i]).max(prev).min(s.max(0.0));
        if v < lo[i] - 1e-9 || v > hi[i] + 1e-9 {
            return None;
        }
        prev = v;
        out.push(v);
    }
    Some(out)
}

fn rat_floor_grid(v: f64, den: i64) -> Rat {
    Rat::new(((v * den as f64).floor() as i64).into(), den.into())
}

fn rat_ceil_grid(v: f64, den: i64) -> Rat {
    Rat::new(((v * den as f64).ceil() as i64).into(), den.into())
}

/// Float witness for the coupled cell: does the sampled x admit a monotone
/// chain inside the c-cell within its turning budget? A yes skips the exact
/// emptiness LP; a miss is inconclusive.
fn chain_cell_feasible_f64(
    forms: &[AngleForm],
    x: &[f64],
    vars: &[u32],
    cbox: &RatBox,
) -> bool {
    let l: Vec<f64> =
        forms.iter().map(|f| (1.0 - form_eval_f64(f, x, vars)).max(0.0)).collect();
    let s = 2.0 - l.iter().sum::<f64>();
    if s < 0.0 {
        return false;
    }
    let mut prev = 0.0f64;
    for (lo, hi) in cbox {
        let lo = rat_f64(lo).max(prev);
        if lo > rat_f64(hi) {
            return false;
        }
        prev = lo;
    }
    prev <= s
}

/// Deterministic step chains for the first `k` trials, then random monotone
/// chains; `trial < k` puts the whole slack after side `trial`.
fn chain_sample(k: usize, slack: f64, trial: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    // Step chains at several heights catch the near-closure assignments that
    // uniform random chains miss; a chain admitting a closed polygon keeps
    // its minimax margin positive for every direction, which is what lets
    // the screen reject a region the cell cannot use.
    let levels = 4usize;
    if trial < k * levels {
        let step = trial % k;
        let level = slack * (trial / k + 1) as f64 / levels as f64;
        (1..k).map(|i| if i > step { level } else { 0.0 }).collect()
    } else {
        let mut v: Vec<f64> =
            (0..k.saturating_sub(1)).map(|_| rng.gen::<f64>() * slack).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }
}

fn chain_arcs(p: &[f64], c: &[f64], slack: f64) -> Vec<(f64, f64)> {
    let k = p.len();
    (0..k)
        .map(|i| {
            let lo = p[i] + if i == 0 { 0.0 } else { c[i - 1] };
            let hi = p[i] + if i == k - 1 { slack } else { c[i] };
            (lo, hi)
        })
        .collect()
}

fn form_eval_f64(form: &AngleForm, x: &[f64], vars: &[u32]) -> f64 {
    let mut v = rat_f64(&form.const_coeff);
    for (var, coeff) in &form.var_coeffs {
        let idx = vars.binary_search(var).unwrap();
        v += rat_f64(coeff) * x[idx];
    }
    v
}

/// Fast witness screen: if some sampled feasible x admits, for every region,
/// a sampled chain no direction refutes, a cover cannot exist.
fn witness_screen(
    system: &GBSystem,
    regions: &[(usize, &BoundaryWalk, Vec<Vec<usize>>)],
    delta: f64,
    rng: &mut ChaCha8Rng,
) -> bool {
    let n = system.variables.len();
    let mut found = 0usize;
    'outer: for _ in 0..4000 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        if !system
            .face_curvatures
            .iter()
            .all(|f| form_eval_f64(f, &x, &system.variables) > 1e-9)
        {
            continue;
        }
        found += 1;
        let mut covered = false;
        for (_, walk, groups) in regions {
            let l: Vec<f64> = walk
                .corner_forms
                .iter()
                .map(|f| (1.0 - form_eval_f64(f, &x, &system.variables)).max(0.0))
                .collect();
            let slack = 2.0 - l.iter().sum::<f64>();
            if slack < 0.0 {
                covered = true;
                break;
            }
            let k = l.len();
            let p: Vec<f64> = std::iter::once(0.0)
                .chain(l.iter().scan(0.0, |acc, &v| {
                    *acc += v;
                    Some(*acc)
                }))
                .take(k)
                .collect();
            let mut all_chains_refuted = true;
            for trial in 0..(k + 40) {
                let c = chain_sample(k, slack, trial, rng);
                let arcs = chain_arcs(&p, &c, slack);
                let (_, margin) = best_rho(&arcs, groups, 128, None);
                if margin > -delta {
                    all_chains_refuted = false;
                    break;
                }
            }
            if all_chains_refuted {
                covered = true;
                break;
            }
        }
        if !covered {
            return false;
        }
        if found >= 24 {
            break 'outer;
        }
    }
    true
}

/// Diagnostic: per region, the worst best-rho margin over many sampled
/// chains at a fixed x (float model, no enclosures).
pub fn debug_point_margins(diagram: &CurveDiagram, system: &GBSystem, x: &[f64]) -> Vec<(usize, f64)> {
    let walks = candidate_walks(diagram);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out = Vec::new();
    for (i, (_, walk)) in walks.iter().enumerate() {
        if walk.sides.is_empty() {
            continue;
        }
        let groups = side_groups(&walk.sides);
        let l: Vec<f64> = walk
            .corner_forms
            .iter()
            .map(|f| (1.0 - form_eval_f64(f, x, &system.variables)).max(0.0))
            .collect();
        let slack = 2.0 - l.iter().sum::<f64>();
        if slack < 0.0 {
            out.push((i, f64::NEG_INFINITY));
            continue;
        }
        let k = l.len();
        let p: Vec<f64> = std::iter::once(0.0)
            .chain(l.iter().scan(0.0, |acc, &v| {
                *acc += v;
                Some(*acc)
            }))
            .take(k)
            .collect();
        let mut worst = f64::NEG_INFINITY;
        for trial in 0..(k + 2000) {
            let c = chain_sample(k, slack, trial, &mut rng);
            let arcs = chain_arcs(&p, &c, slack);
            let (_, margin) = best_rho(&arcs, &groups, 512, None);
            worst = worst.max(margin);
        }
        out.push((i, worst));
    }
    out
}

/// Searches for a coupled cover certificate. Returns the tree together with
/// the region index of its first refuting leaf.
pub fn find_cover_certificate(
    diagram: &CurveDiagram,
    system: &GBSystem,
    config: &SearchConfig,
) -> Option<(usize, CoverCertificate)> {
    let walks = candidate_walks(diagram);
    let regions: Vec<(usize, &BoundaryWalk, Vec<Vec<usize>>)> = walks
        .iter()
        .enumerate()
        .filter(|(_, (_, w))| !w.sides.is_empty())
        .map(|(i, (_, w))| (i, w, side_groups(&w.sides)))
        .collect();
    if regions.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    if !witness_screen(system, &regions, config.delta, &mut rng) {
        return None;
    }
    let mut search = CoverSearch {
        system,
        regions,
        delta: config.delta,
        grid: (config.grid / 64).max(64),
        nodes_left: config.polytope_budget,
        slope_attempts: 0,
        rng: ChaCha8Rng::seed_from_u64(0x5eed_beef),
    };
    let xroot: RatBox = vec![(Rat::zero(), Rat::one()); system.variables.len()];
    let tree = search.x_rec(&xroot, 0)?;
    let rep = first_region(&tree)?;
    Some((rep, CoverCertificate { delta: config.delta, tree }))
}

/// TEMPORARY debug hook: run the cover search on one x-box.
pub fn debug_cover_box(
    diagram: &CurveDiagram,
    system: &GBSystem,
    config: &SearchConfig,
    xbox: &[(Rat, Rat)],
) -> Option<XNode> {
    let walks = candidate_walks(diagram);
    let regions: Vec<(usize, &BoundaryWalk, Vec<Vec<usize>>)> = walks
        .iter()
        .enumerate()
        .filter(|(_, (_, w))| !w.sides.is_empty())
        .map(|(i, (_, w))| (i, w, side_groups(&w.sides)))
        .collect();
    let mut search = CoverSearch {
        system,
        regions,
        delta: config.delta,
        grid: (config.grid / 64).max(64),
        nodes_left: config.polytope_budget,
        slope_attempts: 0,
        rng: ChaCha8Rng::seed_from_u64(0x5eed_beef),
    };
    search.x_rec(&xbox.to_vec(), 0)
}

fn first_region(node: &XNode) -> Option<usize> {
    match node {
        XNode::Split { lo, hi, .. } => first_region(lo).or_else(|| first_region(hi)),
        XNode::Infeasible => None,
        XNode::Region { region, .. } => Some(*region),
    }
}

/// Re-verifies a cover certificate against the rebuilt diagram: every Rho
/// leaf's margins rigorously, every infeasible or vacuous leaf by exact LP,
/// then cross-checks sampled feasible configurations against the tree.
pub fn verify_cover_certificate(
    diagram: &CurveDiagram,
    system: &GBSystem,
    cert: &CoverCertificate,
    samples: usize,
) -> bool {
    if !(cert.delta > 0.0) {
        return false;
    }
    let walks = candidate_walks(diagram);
    let xroot: RatBox = vec![(Rat::zero(), Rat::one()); system.variables.len()];
    if !verify_x_node(system, &walks, &cert.tree, &xroot, cert.delta) {
        return false;
    }
    // Sampled cross-check: a feasible x must never land in an Infeasible
    // leaf, and sampled chains in Rho leaves must score negative.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    let n = system.variables.len();
    let mut checked = 0usize;
    for _ in 0..samples.saturating_mul(4) {
        if checked >= samples {
            break;
        }
        let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        if !system
            .face_curvatures
            .iter()
            .all(|f| form_eval_f64(f, &x, &system.variables) > 1e-6)
        {
            continue;
        }
        checked += 1;
        if !sample_check(system, &walks, &cert.tree, &xroot, &x, &mut rng) {
            return false;
        }
    }
    true
}

fn verify_x_node(
    system: &GBSystem,
    walks: &[(RegionRef, BoundaryWalk)],
    node: &XNode,
    xbox: &RatBox,
    delta: f64,
) -> bool {
    match node {
        XNode::Split { dim, lo, hi } => {
            if *dim >= xbox.len() {
                return false;
            }
            let mid = midpoint(&xbox[*dim].0, &xbox[*dim].1);
            let mut left = xbox.clone();
            left[*dim].1 = mid.clone();
            let mut right = xbox.clone();
            right[*dim].0 = mid;
            verify_x_node(system, walks, lo, &left, delta)
                && verify_x_node(system, walks, hi, &right, delta)
        }
        XNode::Infeasible => xcell_infeasible(system, xbox),
        XNode::Region { region, tree } => {
            let Some((_, walk)) = walks.get(*region) else {
                return false;
            };
            if walk.sides.is_empty() {
                return false;
            }
            let verts = cell_vertices(system, xbox);
            let Some(bounds) = cell_bounds(&walk.corner_forms, &verts, &system.variables)
            else {
                return matches!(tree, CNode::Vacuous);
            };
            if bounds.s_hi.is_negative() {
                return matches!(tree, CNode::Vacuous);
            }
            let k = walk.corner_forms.len();
            let cbox: RatBox = vec![(Rat::zero(), bounds.s_hi.clone()); k.saturating_sub(1)];
            verify_c_node(
                system,
                walk,
                &side_groups(&walk.sides),
                tree,
                xbox,
                &verts,
                &bounds,
                &cbox,
                delta,
            )
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn verify_c_node(
    system: &GBSystem,
    walk: &BoundaryWalk,
    groups: &[Vec<usize>],
    node: &CNode,
    xbox: &RatBox,
    verts: &[Vec<Rat>],
    bounds: &CellBounds,
    cbox: &RatBox,
    delta: f64,
) -> bool {
    match node {
        CNode::Split { dim, lo, hi } => {
            if *dim >= cbox.len() || cbox[*dim].0 == cbox[*dim].1 {
                return false;
            }
            let mid = midpoint(&cbox[*dim].0, &cbox[*dim].1);
            let mut left = cbox.clone();
            left[*dim].1 = mid.clone();
            let mut right = cbox.clone();
            right[*dim].0 = mid;
            verify_c_node(system, walk, groups, lo, xbox, verts, bounds, &left, delta)
                && verify_c_node(system, walk, groups, hi, xbox, verts, bounds, &right, delta)
        }
        CNode::Vacuous => {
            cbox_vacuous(cbox, &bounds.s_hi)
                || !cell_feasible(system, &walk.corner_forms, xbox, cbox)
        }
        CNode::Rho { rho } => {
            let arcs = cell_arcs(bounds, cbox);
            groups.iter().all(|g| arcs_margin_upper(&arcs, g, *rho) <= -delta)
        }
        CNode::Slope(leaf) => slope_verify(system, walk, groups, xbox, verts, cbox, leaf),
    }
}

fn sample_check(
    system: &GBSystem,
    walks: &[(RegionRef, BoundaryWalk)],
    tree: &XNode,
    xroot: &RatBox,
    x: &[f64],
    rng: &mut ChaCha8Rng,
) -> bool {
    // Descend to the x-leaf containing x.
    let mut node = tree;
    let mut xbox = xroot.clone();
    loop {
        match node {
            XNode::Split { dim, lo, hi } => {
                let mid = midpoint(&xbox[*dim].0, &xbox[*dim].1);
                if x[*dim] < rat_f64(&mid) {
                    xbox[*dim].1 = mid;
                    node = lo;
                } else {
                    xbox[*dim].0 = mid;
                    node = hi;
                }
            }
            XNode::Infeasible => {
                // x is strictly feasible; a proven-empty cell contradicts it.
                return false;
            }
            XNode::Region { region, tree } => {
                let walk = &walks[*region].1;
                let l: Vec<f64> = walk
                    .corner_forms
                    .iter()
                    .map(|f| (1.0 - form_eval_f64(f, x, &system.variables)).max(0.0))
                    .collect();
                let slack = 2.0 - l.iter().sum::<f64>();
                if slack < 1e-9 {
                    return true;
                }
                let k = l.len();
                let p: Vec<f64> = std::iter::once(0.0)
                    .chain(l.iter().scan(0.0, |acc, &v| {
                        *acc += v;
                        Some(*acc)
                    }))
                    .take(k)
                    .collect();
                let mut c: Vec<f64> =
                    (0..k.saturating_sub(1)).map(|_| rng.gen::<f64>() * slack).collect();
                c.sort_by(|a, b| a.partial_cmp(b).unwrap());
                // Descend the c-tree.
                let verts = cell_vertices(system, &xbox);
                let Some(bounds) =
                    cell_bounds(&walk.corner_forms, &verts, &system.variables)
                else {
                    // x sits on the cell's feasibility boundary; tolerate.
                    return true;
                };
                if bounds.s_hi.is_negative() {
                    return true;
                }
                let mut cnode = tree;
                let mut cbox: RatBox =
                    vec![(Rat::zero(), bounds.s_hi.clone()); k.saturating_sub(1)];
                loop {
                    match cnode {
                        CNode::Split { dim, lo, hi } => {
                            let mid = midpoint(&cbox[*dim].0, &cbox[*dim].1);
                            if c[*dim] < rat_f64(&mid) {
                                cbox[*dim].1 = mid;
                                cnode = lo;
                            } else {
                                cbox[*dim].0 = mid;
                                cnode = hi;
                            }
                        }
                        CNode::Vacuous => {
                            // The sampled chain is admissible for this x, so a
                            // vacuous cell containing it (with clearance) is
                            // unsound. Tolerate boundary noise.
                            let clearly_inside = c
                                .windows(2)
                                .all(|w| w[1] - w[0] > 1e-7)
                                && c.first().map_or(true, |&v| v > 1e-7)
                                && c.last().map_or(true, |&v| slack - v > 1e-7);
                            return !clearly_inside;
                        }
                        CNode::Rho { rho } => {
                            let arcs: Vec<(f64, f64)> = (0..k)
                                .map(|i| {
                                    let lo = p[i] + if i == 0 { 0.0 } else { c[i - 1] };
                                    let hi = p[i] + if i == k - 1 { slack } else { c[i] };
                                    (lo, hi)
                                })
                                .collect();
                            return side_groups(&walk.sides)
                                .iter()
                                .all(|g| arcs_margin_float(&arcs, g, *rho) < 0.0);
                        }
                        CNode::Slope(leaf) => {
                            // Slope margins may vanish toward the boundary;
                            // require only non-positivity up to float noise.
                            let nv = x.len() + c.len();
                            let Some(rho_form) = DForm::parse(&leaf.rho, nv) else {
                                return false;
                            };
                            let mut pt = x.to_vec();
                            pt.extend(c.iter().cloned());
                            let rho = rho_form.eval_f64(&pt) * PI;
                            let arcs: Vec<(f64, f64)> = (0..k)
                                .map(|i| {
                                    let lo = p[i] + if i == 0 { 0.0 } else { c[i - 1] };
                                    let hi = p[i] + if i == k - 1 { slack } else { c[i] };
                                    (lo, hi)
                                })
                                .collect();
                            return side_groups(&walk.sides)
                                .iter()
                                .all(|g| arcs_margin_float(&arcs, g, rho) <= 1e-7);
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionRef {
    Face(usize),
    /// Edge id and index among the changed walks of that deletion.
    DeletedEdge(u32, usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CertKind {
    NegativeSlack,
    Direction(DirectionCertificate),
    /// Coupled x/chain cover: no single direction works for the whole region,
    /// but a finite cell decomposition refutes every admissible polygon.
    Cover(CoverCertificate),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonCertificate {
    pub region: RegionRef,
    pub spec: PolygonSpec,
    pub kind: CertKind,
}

#[derive(Debug, Clone)]
pub enum ComparisonOutcome {
    Forbidden(ComparisonCertificate),
    Pass,
}

/// All candidate regions in the fixed enumeration order: intact faces by id,
/// then merged regions of single-edge deletions by edge id.
pub fn candidate_walks(diagram: &CurveDiagram) -> Vec<(RegionRef, BoundaryWalk)> {
    let mut out = Vec::new();
    for face in trace_faces(diagram) {
        let id = face.id;
        out.push((RegionRef::Face(id), face_walk(diagram, &face)));
    }
    for edge in 0..diagram.num_edges() as u32 {
        for (i, walk) in delete_edge(diagram, edge).into_iter().enumerate() {
            out.push((RegionRef::DeletedEdge(edge, i), walk));
        }
    }
    out
}

/// Tries to refute every candidate region; the first verified certificate in
/// enumeration order wins.
pub fn comparison_verdict(
    diagram: &CurveDiagram,
    system: &GBSystem,
    config: &SearchConfig,
) -> Result<ComparisonOutcome, GBError> {
    for (region, walk) in candidate_walks(diagram) {
        if walk.sides.is_empty() {
            continue;
        }
        let spec = build_polygon_spec(&walk, system)?;
        if spec.slack.is_negative() {
            return Ok(ComparisonOutcome::Forbidden(ComparisonCertificate {
                region,
                spec,
                kind: CertKind::NegativeSlack,
            }));
        }
        match find_halfplane_certificate(&spec, config) {
            CertSearch::Found(cert) => {
                if verify_certificate(&spec, &cert, config.samples) {
                    return Ok(ComparisonOutcome::Forbidden(ComparisonCertificate {
                        region,
                        spec,
                        kind: CertKind::Direction(cert),
                    }));
                }
            }
            CertSearch::ImmediateForbidden => {
                return Ok(ComparisonOutcome::Forbidden(ComparisonCertificate {
                    region,
                    spec,
                    kind: CertKind::NegativeSlack,
                }));
            }
            CertSearch::NotFound => {}
        }
    }
    // Marginal cones failed everywhere; try the coupled cover refutation.
    if let Some((rep, cover)) = find_cover_certificate(diagram, system, config) {
        if verify_cover_certificate(diagram, system, &cover, config.samples.min(256)) {
            let walks = candidate_walks(diagram);
            let (region, walk) = &walks[rep];
            let spec = build_polygon_spec(walk, system)?;
            return Ok(ComparisonOutcome::Forbidden(ComparisonCertificate {
                region: region.clone(),
                spec,
                kind: CertKind::Cover(cover),
            }));
        }
    }
    Ok(ComparisonOutcome::Pass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss_code::enumerate_words;
    use crate::gb_system::{build_gb_system, gb_feasibility};
    use crate::planar_map::face_vector;
    use crate::ratlp::rat;

    fn spec_with(lowers: Vec<Rat>, groups: Vec<Vec<usize>>) -> PolygonSpec {
        let k = lowers.len();
        let slack = Rat::from_integer(2.into()) - lowers.iter().cloned().sum::<Rat>();
        PolygonSpec {
            sides: (0..k as u32).map(|e| (e, true)).collect(),
            uppers: lowers.iter().map(|l| Rat::one() - l).collect(),
            lowers,
            slack,
            groups,
        }
    }

    #[test]
    fn regular_triangle_is_not_refutable() {
        // Three rigid directions 0, 2pi/3, 4pi/3 sum to zero.
        let spec = spec_with(
            vec![rat(2, 3), rat(2, 3), rat(2, 3)],
            vec![vec![0], vec![1], vec![2]],
        );
        assert_eq!(spec.slack, rat(0, 1));
        let cones = direction_cones(&spec).unwrap();
        assert_eq!(cones[1].lo, rat(2, 3));
        assert_eq!(cones[2].lo, rat(4, 3));
        assert!(matches!(
            find_halfplane_certificate(&spec, &SearchConfig::default()),
            CertSearch::NotFound
        ));
    }

    #[test]
    fn all_free_spec_is_not_refutable() {
        let spec = spec_with(
            vec![rat(0, 1), rat(0, 1), rat(0, 1)],
            vec![vec![0], vec![1], vec![2]],
        );
        assert_eq!(spec.slack, rat(2, 1));
        assert!(matches!(
            find_halfplane_certificate(&spec, &SearchConfig::default()),
            CertSearch::NotFound
        ));
    }

    #[test]
    fn negative_slack_immediately_forbidden() {
        let spec = spec_with(
            vec![rat(3, 4), rat(3, 4), rat(3, 4)],
            vec![vec![0], vec![1], vec![2]],
        );
        assert!(spec.slack.is_negative());
        assert!(matches!(
            find_halfplane_certificate(&spec, &SearchConfig::default()),
            CertSearch::ImmediateForbidden
        ));
        assert_eq!(direction_cones(&spec), Err(ConeError::NegativeSlack));
    }

    #[test]
    fn narrow_monogon_cone_is_refutable() {
        // One side whose cone is a narrow arc: any r opposing it separates.
        let spec = spec_with(vec![rat(9, 5)], vec![vec![0]]);
        assert_eq!(spec.slack, rat(1, 5));
        match find_halfplane_certificate(&spec, &SearchConfig::default()) {
            CertSearch::Found(cert) => {
                assert!(verify_certificate(&spec, &cert, 1000));
                // Tampering with rho into the cone breaks it.
                let mut bad = cert.clone();
                bad.rho = 0.1;
                assert!(!verify_certificate(&spec, &bad, 10));
                let mut zero_delta = cert;
                zero_delta.delta = 0.0;
                assert!(!verify_certificate(&spec, &zero_delta, 10));
            }
            other => panic!("expected certificate, got {other:?}"),
        }
    }

    fn diagram_with_vector(target: &[usize]) -> CurveDiagram {
        for code in enumerate_words(3, 8).unwrap() {
            for d in crate::planar_map::all_realizations(&code, 8).unwrap() {
                if face_vector(&d) == target {
                    return d;
                }
            }
        }
        panic!("not found");
    }

    #[test]
    fn configuration6_forbidden_by_comparison() {
        let d = diagram_with_vector(&[1, 1, 1, 4, 5]);
        let sys = build_gb_system(&d);
        assert!(gb_feasibility(&sys).unwrap().t_star.is_positive());
        match comparison_verdict(&d, &sys, &SearchConfig::default()).unwrap() {
            ComparisonOutcome::Forbidden(cert) => {
                assert!(matches!(cert.region, RegionRef::DeletedEdge(..)));
                match &cert.kind {
                    CertKind::Cover(cover) => {
                        assert!(verify_cover_certificate(&d, &sys, cover, 256));
                    }
                    other => panic!("expected a cover certificate, got {other:?}"),
                }
            }
            ComparisonOutcome::Pass => panic!("configuration 6 must be forbidden"),
        }
    }

    #[test]
    fn small_patterns_pass() {
        for n in 0..=2usize {
            for code in enumerate_words(n, 8).unwrap() {
                for d in crate::planar_map::all_realizations(&code, 8).unwrap() {
                    let sys = build_gb_system(&d);
                    if gb_feasibility(&sys).unwrap().t_star.is_positive() {
                        assert!(matches!(
                            comparison_verdict(&d, &sys, &SearchConfig::default()).unwrap(),
                            ComparisonOutcome::Pass
                        ), "false positive on {:?}", code);
                    }
                }
            }
        }
    }

    #[test]
    fn anchoring_invariance() {
        // Rotating the side list rotates every cone and rho together, so the
        // found/not-found outcome is unchanged.
        let d = diagram_with_vector(&[1, 1, 1, 4, 5]);
        let sys = build_gb_system(&d);
        for (_, walk) in candidate_walks(&d) {
            if walk.sides.len() < 3 {
                continue;
            }
            let spec = build_polygon_spec(&walk, &sys).unwrap();
            let base_found = matches!(
                find_halfplane_certificate(&spec, &SearchConfig::default()),
                CertSearch::Found(_)
            );
            let mut rotated_walk = walk.clone();
            rotated_walk.sides.rotate_left(1);
            rotated_walk.corner_forms.rotate_left(1);
            let rspec = build_polygon_spec(&rotated_walk, &sys).unwrap();
            let rot_found = matches!(
                find_halfplane_certificate(&rspec, &SearchConfig::default()),
                CertSearch::Found(_)
            );
            assert_eq!(base_found, rot_found);
        }
    }

    #[test]
    fn conservative_dominates_joint() {
        let d = diagram_with_vector(&[1, 1, 1, 4, 5]);
        let sys = build_gb_system(&d);
        for (_, walk) in candidate_walks(&d).into_iter().take(6) {
            if walk.sides.is_empty() {
                continue;
            }
            let spec = build_polygon_spec(&walk, &sys).unwrap();
            if spec.slack.is_negative() {
                continue;
            }
            for rho in [0.3f64, 1.7, 3.9, 5.5] {
                for g in &spec.groups {
                    let joint = joint_bound_upper(&spec, g, rho, 100_000);
                    let conservative = group_margin_upper(&spec, g, rho);
                    // The joint bound never exceeds the conservative one by
                    // more than its own rounding slack.
                    assert!(joint <= conservative + 1e-6, "{joint} vs {conservative}");
                }
            }
        }
    }
}
