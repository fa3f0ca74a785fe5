//! The exact Gauss-Bonnet angle system of a curve diagram.
//!
//! Everything here works in units of pi with exact rationals. One variable
//! x_v = alpha_v / pi per crossing, constrained to (0, 1); one curvature form
//! per face, omega_f / pi = 2 - c_f + sum of interior angles, required to be
//! strictly positive. Strictness is decided by maximizing the common slack t;
//! t* <= 0 means no strictly positive curvature assignment exists and a
//! Farkas combination of the constraints certifies it.

use std::collections::BTreeMap;
use std::ops::{Add, Sub};

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planar_map::{trace_faces, CurveDiagram, Face};
use crate::ratlp::{self, Constraint, LpInstance, LpResult, Rat, Relation};

/// An exact linear form c0 + sum c_v * x_v, in units of pi.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AngleForm {
    pub const_coeff: Rat,
    pub var_coeffs: BTreeMap<u32, Rat>,
}

impl AngleForm {
    pub fn zero() -> Self {
        AngleForm { const_coeff: Rat::zero(), var_coeffs: BTreeMap::new() }
    }

    pub fn constant(c: Rat) -> Self {
        AngleForm { const_coeff: c, var_coeffs: BTreeMap::new() }
    }

    pub fn constant_one() -> Self {
        Self::constant(Rat::one())
    }

    pub fn variable(v: u32) -> Self {
        let mut var_coeffs = BTreeMap::new();
        var_coeffs.insert(v, Rat::one());
        AngleForm { const_coeff: Rat::zero(), var_coeffs }
    }

    pub fn coeff(&self, v: u32) -> Rat {
        self.var_coeffs.get(&v).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.var_coeffs.values().all(Rat::is_zero)
    }

    pub fn is_constant_one(&self) -> bool {
        self.is_constant() && self.const_coeff.is_one()
    }

    /// True for the form of one angular sector: x_v or 1 - x_v.
    pub fn is_single_sector(&self) -> bool {
        let nonzero: Vec<_> = self.var_coeffs.values().filter(|c| !c.is_zero()).collect();
        if nonzero.len() != 1 {
            return false;
        }
        (self.const_coeff.is_zero() && nonzero[0].is_one())
            || (self.const_coeff.is_one() && *nonzero[0] == -Rat::one())
    }

    fn prune(mut self) -> Self {
        self.var_coeffs.retain(|_, c| !c.is_zero());
        self
    }

    pub fn evaluate(&self, assignment: &BTreeMap<u32, Rat>) -> Rat {
        let mut acc = self.const_coeff.clone();
        for (v, c) in &self.var_coeffs {
            acc += c * &assignment[v];
        }
        acc
    }

    pub fn scale(&self, by: &Rat) -> Self {
        AngleForm {
            const_coeff: &self.const_coeff * by,
            var_coeffs: self.var_coeffs.iter().map(|(v, c)| (*v, c * by)).collect(),
        }
        .prune()
    }
}

impl Add for AngleForm {
    type Output = AngleForm;
    fn add(mut self, rhs: AngleForm) -> AngleForm {
        self.const_coeff += rhs.const_coeff;
        for (v, c) in rhs.var_coeffs {
            *self.var_coeffs.entry(v).or_insert_with(Rat::zero) += c;
        }
        self.prune()
    }
}

impl Sub for AngleForm {
    type Output = AngleForm;
    fn sub(mut self, rhs: AngleForm) -> AngleForm {
        self.const_coeff -= rhs.const_coeff;
        for (v, c) in rhs.var_coeffs {
            *self.var_coeffs.entry(v).or_insert_with(Rat::zero) -= c;
        }
        self.prune()
    }
}

/// The strict feasibility instance: omega_f > 0 per face, 0 < x_v < 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GBSystem {
    /// Vertex ids 1..=n, the LP variable order.
    pub variables: Vec<u32>,
    pub faces: Vec<Face>,
    /// omega_f / pi per face, aligned with `faces`.
    pub face_curvatures: Vec<AngleForm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FarkasCertificate {
    /// Multiplier per face constraint omega_f > 0.
    pub face_multipliers: Vec<Rat>,
    /// Multiplier per x_v > 0, aligned with `variables`.
    pub lower_multipliers: Vec<Rat>,
    /// Multiplier per x_v < 1, aligned with `variables`.
    pub upper_multipliers: Vec<Rat>,
}

#[derive(Debug, Clone)]
pub struct GBVerdict {
    /// Maximum common slack, in units of pi. Forbidden iff <= 0.
    pub t_star: Rat,
    /// Strictly feasible point when t_star > 0.
    pub witness: Option<BTreeMap<u32, Rat>>,
    /// Infeasibility certificate for the strict system when t_star <= 0.
    pub farkas: Option<FarkasCertificate>,
}

impl GBVerdict {
    pub fn forbidden(&self) -> bool {
        !self.t_star.is_positive()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GBError {
    #[error("the closed relaxation of the system is empty")]
    InfeasibleSystem,
    #[error("lp failure: {0}")]
    Lp(#[from] ratlp::LpError),
}

/// Builds the Gauss-Bonnet system from the diagram's faces.
pub fn build_gb_system(diagram: &CurveDiagram) -> GBSystem {
    let faces = trace_faces(diagram);
    let variables: Vec<u32> = (1..=diagram.crossings() as u32).collect();
    let face_curvatures = faces
        .iter()
        .map(|f| {
            f.corners
                .iter()
                .fold(AngleForm::constant(Rat::from_integer((2 - f.size() as i64).into())), |acc, c| {
                    acc + c.angle_form()
                })
        })
        .collect();
    GBSystem { variables, faces, face_curvatures }
}

/// Symbolic total-curvature check: the face curvatures must sum to exactly 4,
/// all variable coefficients cancelling.
pub fn check_total_curvature(system: &GBSystem) -> bool {
    let total = system
        .face_curvatures
        .iter()
        .fold(AngleForm::zero(), |acc, f| acc + f.clone());
    total == AngleForm::constant(Rat::from_integer(4.into()))
}

fn slack_lp(system: &GBSystem) -> LpInstance {
    // Variables [t, x_1..x_n]; maximize t.
    let n = system.variables.len();
    let mut objective = vec![Rat::zero(); n + 1];
    objective[0] = Rat::one();
    let mut constraints = Vec::new();
    for form in &system.face_curvatures {
        // sum c_v x_v - t >= -const
        let mut coeffs = vec![Rat::zero(); n + 1];
        coeffs[0] = -Rat::one();
        for (i, v) in system.variables.iter().enumerate() {
            coeffs[i + 1] = form.coeff(*v);
        }
        constraints.push(Constraint { coeffs, rel: Relation::Ge, bound: -form.const_coeff.clone() });
    }
    for i in 0..n {
        // x_v - t >= 0
        let mut coeffs = vec![Rat::zero(); n + 1];
        coeffs[0] = -Rat::one();
        coeffs[i + 1] = Rat::one();
        constraints.push(Constraint { coeffs, rel: Relation::Ge, bound: Rat::zero() });
        // x_v + t <= 1
        let mut coeffs = vec![Rat::zero(); n + 1];
        coeffs[0] = Rat::one();
        coeffs[i + 1] = Rat::one();
        constraints.push(Constraint { coeffs, rel: Relation::Le, bound: Rat::one() });
    }
    LpInstance { num_vars: n + 1, objective, constraints }
}

/// Maximizes the common slack of the strict system. Always bounded
/// (t <= 1/2 via any box pair; t <= 2 for the crossing-free system).
pub fn gb_feasibility(system: &GBSystem) -> Result<GBVerdict, GBError> {
    let n = system.variables.len();
    if n == 0 {
        // No variables: faces have constant curvature 2 each.
        return Ok(GBVerdict {
            t_star: Rat::from_integer(2.into()),
            witness: Some(BTreeMap::new()),
            farkas: None,
        });
    }
    let instance = slack_lp(system);
    let result = ratlp::solve_lp(&instance)?;
    debug_assert!(ratlp::check_solution(&instance, &result));
    match result {
        LpResult::Optimal { optimum, primal, dual } => {
            if optimum.is_positive() {
                let witness = system
                    .variables
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (*v, primal[i + 1].clone()))
                    .collect();
                Ok(GBVerdict { t_star: optimum, witness: Some(witness), farkas: None })
            } else {
                // The optimal duals of the max-slack LP combine the strict
                // constraints into sum lambda_i * B_i = t* <= 0.
                let nf = system.face_curvatures.len();
                let face_multipliers = dual[..nf].to_vec();
                let mut lower = Vec::with_capacity(n);
                let mut upper = Vec::with_capacity(n);
                for i in 0..n {
                    lower.push(dual[nf + 2 * i].clone());
                    upper.push(dual[nf + 2 * i + 1].clone());
                }
                let cert = FarkasCertificate {
                    face_multipliers,
                    lower_multipliers: lower,
                    upper_multipliers: upper,
                };
                debug_assert!(verify_farkas(system, &cert));
                Ok(GBVerdict { t_star: optimum, witness: None, farkas: Some(cert) })
            }
        }
        // The LP is bounded and has a nonempty relaxation (t very negative),
        // so neither branch is reachable for well-formed systems.
        LpResult::Infeasible { .. } | LpResult::Unbounded => unreachable!("slack LP is always optimal"),
    }
}

/// Verifies a Farkas certificate against the strict system: nonnegative, not
/// all zero, variable coefficients cancel, constant combination <= 0.
pub fn verify_farkas(system: &GBSystem, cert: &FarkasCertificate) -> bool {
    if cert.face_multipliers.len() != system.face_curvatures.len()
        || cert.lower_multipliers.len() != system.variables.len()
        || cert.upper_multipliers.len() != system.variables.len()
    {
        return false;
    }
    let all = cert
        .face_multipliers
        .iter()
        .chain(&cert.lower_multipliers)
        .chain(&cert.upper_multipliers);
    let mut any_positive = false;
    for m in all {
        if m.is_negative() {
            return false;
        }
        if m.is_positive() {
            any_positive = true;
        }
    }
    if !any_positive {
        return false;
    }
    let mut combo = AngleForm::zero();
    for (m, form) in cert.face_multipliers.iter().zip(&system.face_curvatures) {
        combo = combo + form.scale(m);
    }
    for (m, v) in cert.lower_multipliers.iter().zip(&system.variables) {
        combo = combo + AngleForm::variable(*v).scale(m);
    }
    for (m, v) in cert.upper_multipliers.iter().zip(&system.variables) {
        combo = combo + (AngleForm::constant_one() - AngleForm::variable(*v)).scale(m);
    }
    combo.is_constant() && !combo.const_coeff.is_positive()
}

/// Supremum bound on a form over the closure of the feasible region
/// (omega_f >= 0, 0 <= x_v <= 1). `None` would mean unbounded, which the box
/// constraints rule out; kept in the signature for honesty.
pub fn sup_angle_form(system: &GBSystem, form: &AngleForm) -> Result<Rat, GBError> {
    let n = system.variables.len();
    if n == 0 || form.is_constant() {
        return Ok(form.const_coeff.clone());
    }
    let mut objective = vec![Rat::zero(); n];
    for (i, v) in system.variables.iter().enumerate() {
        objective[i] = form.coeff(*v);
    }
    let mut constraints = Vec::new();
    for face_form in &system.face_curvatures {
        let coeffs = system.variables.iter().map(|v| face_form.coeff(*v)).collect();
        constraints.push(Constraint {
            coeffs,
            rel: Relation::Ge,
            bound: -face_form.const_coeff.clone(),
        });
    }
    for i in 0..n {
        let mut coeffs = vec![Rat::zero(); n];
        coeffs[i] = Rat::one();
        constraints.push(Constraint { coeffs: coeffs.clone(), rel: Relation::Ge, bound: Rat::zero() });
        constraints.push(Constraint { coeffs, rel: Relation::Le, bound: Rat::one() });
    }
    let instance = LpInstance { num_vars: n, objective, constraints };
    let result = ratlp::solve_lp(&instance)?;
    debug_assert!(ratlp::check_solution(&instance, &result));
    match result {
        LpResult::Optimal { optimum, .. } => Ok(&optimum + &form.const_coeff),
        LpResult::Infeasible { .. } => Err(GBError::InfeasibleSystem),
        LpResult::Unbounded => unreachable!("box constraints bound every form"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss_code::{enumerate_words, parse_code};
    use crate::planar_map::realize_on_sphere;
    use crate::ratlp::rat;

    fn system_for(text: &str) -> GBSystem {
        let code = parse_code(text).unwrap();
        let d = realize_on_sphere(&code, 8).unwrap().unwrap();
        build_gb_system(&d)
    }

    #[test]
    fn figure_eight_forms() {
        let sys = system_for("1 1");
        let mut forms: Vec<(usize, AngleForm)> = sys
            .faces
            .iter()
            .zip(&sys.face_curvatures)
            .map(|(f, w)| (f.size(), w.clone()))
            .collect();
        forms.sort_by_key(|(s, _)| *s);
        // Two monogons 1 + x, one bigon 2 - 2x.
        let x = AngleForm::variable(1);
        assert_eq!(forms[0].1, AngleForm::constant_one() + x.clone());
        assert_eq!(forms[1].1, AngleForm::constant_one() + x.clone());
        assert_eq!(
            forms[2].1,
            AngleForm::constant(rat(2, 1)) - x.scale(&rat(2, 1))
        );
        assert!(check_total_curvature(&sys));
    }

    #[test]
    fn crossing_free_system() {
        let sys = system_for("");
        assert!(sys.variables.is_empty());
        assert_eq!(sys.face_curvatures.len(), 2);
        for f in &sys.face_curvatures {
            assert_eq!(*f, AngleForm::constant(rat(2, 1)));
        }
        assert!(check_total_curvature(&sys));
        let verdict = gb_feasibility(&sys).unwrap();
        assert!(!verdict.forbidden());
    }

    #[test]
    fn total_curvature_fault_injection() {
        let mut sys = system_for("1 1");
        // Flip one corner's type: substitute x -> 1 - x in a single face form.
        let old = sys.face_curvatures[0].clone();
        let x = AngleForm::variable(1);
        let flipped = old.clone() - x.scale(&sys.face_curvatures[0].coeff(1)).scale(&rat(2, 1))
            + AngleForm::constant(sys.face_curvatures[0].coeff(1));
        sys.face_curvatures[0] = flipped;
        assert!(!check_total_curvature(&sys));
    }

    #[test]
    fn figure_eight_slack() {
        let sys = system_for("1 1");
        let v = gb_feasibility(&sys).unwrap();
        assert_eq!(v.t_star, rat(1, 2));
        let w = v.witness.unwrap();
        assert_eq!(w[&1], rat(1, 2));
    }

    #[test]
    fn sup_figure_eight() {
        let sys = system_for("1 1");
        assert_eq!(sup_angle_form(&sys, &AngleForm::variable(1)).unwrap(), rat(1, 1));
    }

    fn find_by_face_vector(target: &[usize]) -> GBSystem {
        for code in enumerate_words(3, 8).unwrap() {
            for d in crate::planar_map::all_realizations(&code, 8).unwrap() {
                if crate::planar_map::face_vector(&d) == target {
                    return build_gb_system(&d);
                }
            }
        }
        panic!("face vector {target:?} not found at n=3");
    }

    #[test]
    fn configuration5_forbidden_at_zero() {
        let sys = find_by_face_vector(&[1, 1, 1, 3, 6]);
        assert!(check_total_curvature(&sys));
        let v = gb_feasibility(&sys).unwrap();
        assert_eq!(v.t_star, rat(0, 1));
        assert!(v.forbidden());
        let cert = v.farkas.unwrap();
        assert!(verify_farkas(&sys, &cert));
        // Tampered certificates fail.
        let mut bad = cert.clone();
        bad.face_multipliers[0] = -bad.face_multipliers[0].clone();
        assert!(!verify_farkas(&sys, &bad));
        let zero = FarkasCertificate {
            face_multipliers: vec![rat(0, 1); cert.face_multipliers.len()],
            lower_multipliers: vec![rat(0, 1); cert.lower_multipliers.len()],
            upper_multipliers: vec![rat(0, 1); cert.upper_multipliers.len()],
        };
        assert!(!verify_farkas(&sys, &zero));
        // Over the closure, the triangle's interior-angle sum peaks at 1.
        let triangle = sys.faces.iter().position(|f| f.size() == 3).unwrap();
        let angle_sum = sys.faces[triangle]
            .corners
            .iter()
            .fold(AngleForm::zero(), |acc, c| acc + c.angle_form());
        assert_eq!(sup_angle_form(&sys, &angle_sum).unwrap(), rat(1, 1));
    }

    #[test]
    fn configuration6_gb_feasible_and_angle_bound() {
        let sys = find_by_face_vector(&[1, 1, 1, 4, 5]);
        let v = gb_feasibility(&sys).unwrap();
        assert!(v.t_star.is_positive(), "GB alone must not forbid this class");
        // The distinguished crossing meets the quadrangle twice; the angle the
        // argument bounds is the pentagon's interior angle there.
        let quad = sys.faces.iter().find(|f| f.size() == 4).unwrap();
        let mut counts = std::collections::BTreeMap::new();
        for c in &quad.corners {
            *counts.entry(c.vertex).or_insert(0usize) += 1;
        }
        let (&vert, _) = counts.iter().find(|(_, &c)| c == 2).unwrap();
        let pent = sys.faces.iter().find(|f| f.size() == 5).unwrap();
        let corner = pent.corners.iter().find(|c| c.vertex == vert).unwrap();
        assert_eq!(sup_angle_form(&sys, &corner.angle_form()).unwrap(), rat(1, 3));
    }

    #[test]
    fn total_curvature_census() {
        for n in 0..=4 {
            for code in enumerate_words(n, 8).unwrap() {
                for d in crate::planar_map::all_realizations(&code, 8).unwrap() {
                    assert!(check_total_curvature(&build_gb_system(&d)));
                }
            }
        }
    }

    #[test]
    fn mirror_and_convention_invariance() {
        // Substituting x -> 1 - x at any vertex leaves the verdict unchanged.
        for code in enumerate_words(3, 8).unwrap() {
            for d in crate::planar_map::all_realizations(&code, 8).unwrap() {
                let sys = build_gb_system(&d);
                let base = gb_feasibility(&sys).unwrap();
                for v in sys.variables.clone() {
                    let swapped = GBSystem {
                        variables: sys.variables.clone(),
                        faces: sys.faces.clone(),
                        face_curvatures: sys
                            .face_curvatures
                            .iter()
                            .map(|f| substitute_complement(f, v))
                            .collect(),
                    };
                    let sv = gb_feasibility(&swapped).unwrap();
                    assert_eq!(sv.t_star, base.t_star);
                }
            }
        }
    }

    fn substitute_complement(form: &AngleForm, v: u32) -> AngleForm {
        let c = form.coeff(v);
        form.clone() - AngleForm::variable(v).scale(&c).scale(&rat(2, 1))
            + AngleForm::constant(c)
    }

    #[test]
    fn grid_oracle_agreement() {
        // Dense grid scan at step 1/64 over (0,1)^n agrees with the LP slack
        // verdict for every realizable class at n <= 3.
        for n in 1..=3usize {
            for code in enumerate_words(n, 8).unwrap() {
                for d in crate::planar_map::all_realizations(&code, 8).unwrap() {
                    let sys = build_gb_system(&d);
                    let verdict = gb_feasibility(&sys).unwrap();
                    let grid_feasible = grid_scan(&sys, 64);
                    if grid_feasible {
                        assert!(verdict.t_star.is_positive());
                    }
                    if verdict.t_star >= rat(1, 32) {
                        assert!(grid_feasible);
                    }
                }
            }
        }
    }

    fn grid_scan(sys: &GBSystem, steps: i64) -> bool {
        let n = sys.variables.len();
        let mut idx = vec![1i64; n];
        loop {
            let assignment: BTreeMap<u32, Rat> = sys
                .variables
                .iter()
                .zip(&idx)
                .map(|(v, i)| (*v, rat(*i, steps)))
                .collect();
            if sys
                .face_curvatures
                .iter()
                .all(|f| f.evaluate(&assignment).is_positive())
            {
                return true;
            }
            let mut k = 0;
            loop {
                if k == n {
                    return false;
                }
                idx[k] += 1;
                if idx[k] < steps {
                    break;
                }
                idx[k] = 1;
                k += 1;
            }
        }
    }
}
