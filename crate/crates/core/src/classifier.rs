//! Pipeline orchestration: classify single codes, run the census, serialize
//! machine-checkable reports, and re-verify serialized certificates.
//!
//! Reports keep Gauss-Bonnet data exact (rationals as "p/q" strings, never
//! floats) and comparison certificates numeric with explicit margins.

use std::collections::BTreeSet;
use std::str::FromStr;
use std::time::Instant;

use num::{BigRational, Signed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comparison::{
    self, verify_certificate, CertKind, ComparisonOutcome, CoverCertificate,
    DirectionCertificate, RegionRef, SearchConfig,
};
use crate::gauss_code::{self, canonical_code, enumerate_words, GaussCode};
use crate::gb_system::{build_gb_system, gb_feasibility, verify_farkas, FarkasCertificate, GBSystem};
use crate::planar_map::{
    all_realizations, diagram_canonical_key, diagram_from_chirality, face_vector,
    realize_on_sphere, CurveDiagram, MapError,
};
use crate::ratlp::Rat;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub max_crossings: usize,
    pub grid: usize,
    pub margin: f64,
    pub joint_bound: bool,
    pub polytope_budget: usize,
    pub samples: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            max_crossings: gauss_code::DEFAULT_MAX_CROSSINGS,
            grid: 4096,
            margin: 1e-6,
            joint_bound: false,
            polytope_budget: 1_000_000,
            samples: 10_000,
        }
    }
}

impl Config {
    pub fn search(&self) -> SearchConfig {
        SearchConfig {
            grid: self.grid,
            delta: self.margin,
            joint_bound: self.joint_bound,
            polytope_budget: self.polytope_budget,
            samples: self.samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "NOT_REALIZABLE_AS_CURVE")]
    NotRealizableAsCurve,
    #[serde(rename = "FORBIDDEN_GB")]
    ForbiddenGb,
    #[serde(rename = "FORBIDDEN_COMPARISON")]
    ForbiddenComparison,
    #[serde(rename = "PASSES")]
    Passes,
}

fn rat_str(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn parse_rat(s: &str) -> Result<Rat, ClassifyError> {
    let (n, d) = s
        .split_once('/')
        .ok_or_else(|| ClassifyError::MalformedPayload(format!("bad rational {s:?}")))?;
    let n = num::BigInt::from_str(n)
        .map_err(|_| ClassifyError::MalformedPayload(format!("bad rational {s:?}")))?;
    let d = num::BigInt::from_str(d)
        .map_err(|_| ClassifyError::MalformedPayload(format!("bad rational {s:?}")))?;
    if d == num::BigInt::from(0) {
        return Err(ClassifyError::MalformedPayload(format!("bad rational {s:?}")));
    }
    Ok(BigRational::new(n, d))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum CertificatePayload {
    #[serde(rename = "farkas")]
    Farkas {
        /// t* of the slack LP, exact, units of pi.
        t_star: String,
        face_multipliers: Vec<String>,
        lower_multipliers: Vec<String>,
        upper_multipliers: Vec<String>,
    },
    #[serde(rename = "direction")]
    Direction {
        region: RegionRef,
        sides: Vec<(u32, bool)>,
        uppers: Vec<String>,
        lowers: Vec<String>,
        slack: String,
        groups: Vec<Vec<usize>>,
        /// None encodes the negative-slack (angle budget) case.
        certificate: Option<DirectionCertificate>,
    },
    #[serde(rename = "cover")]
    Cover {
        /// Representative refuting region (first leaf of the cover tree).
        region: RegionRef,
        cover: CoverCertificate,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub input_code: String,
    pub canonical_code: String,
    pub realizable: bool,
    /// Chirality bits of the classified embedding; one code can carry several
    /// inequivalent embeddings, so reports pin the diagram down exactly.
    pub chirality: Vec<bool>,
    pub face_vector: Vec<usize>,
    pub verdict: Verdict,
    pub certificate: Option<CertificatePayload>,
    pub annotations: Vec<String>,
    pub tool_version: String,
    pub config: Config,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CensusRow {
    pub n: usize,
    pub canonical_code: String,
    pub chirality: Vec<bool>,
    pub face_vector: Vec<usize>,
    pub verdict: Verdict,
    pub millis: u128,
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Code(#[from] gauss_code::CodeError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("gauss-bonnet failure: {0}")]
    Gb(#[from] crate::gb_system::GBError),
    #[error("malformed certificate payload: {0}")]
    MalformedPayload(String),
    #[error("internal verification failed before emission: {0}")]
    EmissionCheck(String),
}

fn annotations_for(n: usize, verdict: Verdict, face_vector: &[usize]) -> Vec<String> {
    let mut notes = Vec::new();
    match verdict {
        Verdict::Passes => {
            if n <= 2 {
                notes.push("realizability known: every pattern with fewer than 3 crossings occurs".into());
            } else if n == 3 {
                notes.push("realizability known: mirror-symmetric constructions exist for the four passing three-crossing classes".into());
            } else {
                notes.push("realizability undecided".into());
            }
        }
        Verdict::ForbiddenGb => {
            if face_vector == [1, 1, 1, 3, 6] {
                notes.push("three monogons against the total curvature budget".into());
            }
        }
        Verdict::ForbiddenComparison => {
            if face_vector == [1, 1, 1, 4, 5] {
                notes.push("comparison polygon of an edge-deleted region fails to close".into());
            }
        }
        Verdict::NotRealizableAsCurve => {}
    }
    notes
}

fn farkas_payload(t_star: &Rat, cert: &FarkasCertificate) -> CertificatePayload {
    CertificatePayload::Farkas {
        t_star: rat_str(t_star),
        face_multipliers: cert.face_multipliers.iter().map(rat_str).collect(),
        lower_multipliers: cert.lower_multipliers.iter().map(rat_str).collect(),
        upper_multipliers: cert.upper_multipliers.iter().map(rat_str).collect(),
    }
}

/// Runs realize -> trace -> Gauss-Bonnet -> comparison on one code. The
/// diagram classified is the first embedding `realize_on_sphere` finds;
/// certificates are verified before they are emitted.
pub fn classify(code: &GaussCode, config: &Config) -> Result<ClassificationReport, ClassifyError> {
    let canonical = canonical_code(code);
    match realize_on_sphere(&canonical.code, config.max_crossings)? {
        Some(diagram) => {
            let mut report = classify_diagram(&diagram, config)?;
            report.input_code = code.render_text();
            Ok(report)
        }
        None => Ok(ClassificationReport {
            input_code: code.render_text(),
            canonical_code: canonical.code.render_text(),
            realizable: false,
            chirality: Vec::new(),
            face_vector: Vec::new(),
            verdict: Verdict::NotRealizableAsCurve,
            certificate: None,
            annotations: annotations_for(
                canonical.code.crossings(),
                Verdict::NotRealizableAsCurve,
                &[],
            ),
            tool_version: TOOL_VERSION.to_string(),
            config: config.clone(),
        }),
    }
}

/// Classifies one concrete embedding: trace -> Gauss-Bonnet -> comparison.
pub fn classify_diagram(
    diagram: &CurveDiagram,
    config: &Config,
) -> Result<ClassificationReport, ClassifyError> {
    let n = diagram.crossings();
    let base = |verdict, face_vector, certificate| ClassificationReport {
        input_code: diagram.code.render_text(),
        canonical_code: diagram.code.render_text(),
        realizable: true,
        chirality: diagram.chirality.clone(),
        face_vector,
        verdict,
        certificate,
        annotations: Vec::new(),
        tool_version: TOOL_VERSION.to_string(),
        config: config.clone(),
    };
    let fv = face_vector(diagram);
    let system = build_gb_system(diagram);
    let gb = gb_feasibility(&system)?;
    if gb.forbidden() {
        let cert = gb.farkas.as_ref().ok_or_else(|| {
            ClassifyError::EmissionCheck("forbidden GB verdict without certificate".into())
        })?;
        if !verify_farkas(&system, cert) {
            return Err(ClassifyError::EmissionCheck("farkas certificate rejected".into()));
        }
        let mut report =
            base(Verdict::ForbiddenGb, fv.clone(), Some(farkas_payload(&gb.t_star, cert)));
        report.annotations = annotations_for(n, Verdict::ForbiddenGb, &fv);
        return Ok(report);
    }
    match comparison::comparison_verdict(diagram, &system, &config.search())? {
        ComparisonOutcome::Forbidden(cert) => {
            let payload = match &cert.kind {
                CertKind::Cover(cover) => {
                    if !comparison::verify_cover_certificate(
                        diagram,
                        &system,
                        cover,
                        config.samples.min(256),
                    ) {
                        return Err(ClassifyError::EmissionCheck(
                            "cover certificate rejected".into(),
                        ));
                    }
                    CertificatePayload::Cover {
                        region: cert.region.clone(),
                        cover: cover.clone(),
                    }
                }
                kind => {
                    let direction = match kind {
                        CertKind::Direction(dc) => {
                            if !verify_certificate(&cert.spec, dc, config.samples) {
                                return Err(ClassifyError::EmissionCheck(
                                    "direction certificate rejected".into(),
                                ));
                            }
                            Some(dc.clone())
                        }
                        _ => {
                            if !cert.spec.slack.is_negative() {
                                return Err(ClassifyError::EmissionCheck(
                                    "negative-slack certificate with nonnegative slack".into(),
                                ));
                            }
                            None
                        }
                    };
                    CertificatePayload::Direction {
                        region: cert.region.clone(),
                        sides: cert.spec.sides.clone(),
                        uppers: cert.spec.uppers.iter().map(rat_str).collect(),
                        lowers: cert.spec.lowers.iter().map(rat_str).collect(),
                        slack: rat_str(&cert.spec.slack),
                        groups: cert.spec.groups.clone(),
                        certificate: direction,
                    }
                }
            };
            let mut report = base(Verdict::ForbiddenComparison, fv.clone(), Some(payload));
            report.annotations = annotations_for(n, Verdict::ForbiddenComparison, &fv);
            Ok(report)
        }
        ComparisonOutcome::Pass => {
            let mut report = base(Verdict::Passes, fv.clone(), None);
            report.annotations = annotations_for(n, Verdict::Passes, &fv);
            Ok(report)
        }
    }
}

/// Census rows for every crossing count up to `n_max`: enumerate, filter
/// realizable, dedup by canonical diagram key, classify. Deterministic order:
/// by n, then by canonical code.
pub fn census(n_max: usize, config: &Config, mirror_distinct: bool) -> Result<Vec<CensusRow>, ClassifyError> {
    let mut rows = Vec::new();
    for n in 0..=n_max {
        rows.extend(census_at(n, config, mirror_distinct)?);
    }
    Ok(rows)
}

/// Census rows for exactly `n` crossings.
pub fn census_at(
    n: usize,
    config: &Config,
    mirror_distinct: bool,
) -> Result<Vec<CensusRow>, ClassifyError> {
    Ok(census_at_detailed(n, config, mirror_distinct)?
        .into_iter()
        .map(|(row, _)| row)
        .collect())
}

/// Like `census_at`, keeping each class's full report alongside its row.
pub fn census_at_detailed(
    n: usize,
    config: &Config,
    mirror_distinct: bool,
) -> Result<Vec<(CensusRow, ClassificationReport)>, ClassifyError> {
    let mut seen_keys = BTreeSet::new();
    let mut rows = Vec::new();
    for code in enumerate_words(n, config.max_crossings)? {
        for diagram in all_realizations(&code, config.max_crossings)? {
            let key = if mirror_distinct {
                crate::planar_map::diagram_canonical_key_oriented(&diagram)
            } else {
                diagram_canonical_key(&diagram)
            };
            if !seen_keys.insert(key) {
                continue;
            }
            let start = Instant::now();
            let report = classify_diagram(&diagram, config)?;
            let row = CensusRow {
                n,
                canonical_code: report.canonical_code.clone(),
                chirality: report.chirality.clone(),
                face_vector: report.face_vector.clone(),
                verdict: report.verdict,
                millis: start.elapsed().as_millis(),
            };
            rows.push((row, report));
        }
    }
    Ok(rows)
}

fn rebuild(report: &ClassificationReport) -> Result<(CurveDiagram, GBSystem), ClassifyError> {
    let code = gauss_code::parse_code(&report.canonical_code)?;
    let diagram = diagram_from_chirality(&code, &report.chirality)
        .ok_or_else(|| ClassifyError::MalformedPayload("chirality does not embed".into()))?;
    let system = build_gb_system(&diagram);
    Ok((diagram, system))
}

/// Re-verifies a serialized report: certificates are recomputed against the
/// rebuilt diagram; PASSES reports must not carry a certificate.
pub fn verify_report(report: &ClassificationReport) -> Result<bool, ClassifyError> {
    match report.verdict {
        Verdict::Passes => Ok(report.certificate.is_none()),
        Verdict::NotRealizableAsCurve => {
            if report.certificate.is_some() {
                return Ok(false);
            }
            let code = gauss_code::parse_code(&report.canonical_code)?;
            Ok(realize_on_sphere(&code, report.config.max_crossings)?.is_none())
        }
        Verdict::ForbiddenGb => {
            let Some(CertificatePayload::Farkas {
                t_star,
                face_multipliers,
                lower_multipliers,
                upper_multipliers,
            }) = &report.certificate
            else {
                return Ok(false);
            };
            let (_, system) = rebuild(report)?;
            let cert = FarkasCertificate {
                face_multipliers: face_multipliers
                    .iter()
                    .map(|s| parse_rat(s))
                    .collect::<Result<_, _>>()?,
                lower_multipliers: lower_multipliers
                    .iter()
                    .map(|s| parse_rat(s))
                    .collect::<Result<_, _>>()?,
                upper_multipliers: upper_multipliers
                    .iter()
                    .map(|s| parse_rat(s))
                    .collect::<Result<_, _>>()?,
            };
            let t = parse_rat(t_star)?;
            if t.is_positive() {
                return Ok(false);
            }
            Ok(verify_farkas(&system, &cert))
        }
        Verdict::ForbiddenComparison => {
            if let Some(CertificatePayload::Cover { region, cover }) = &report.certificate {
                let (diagram, system) = rebuild(report)?;
                let walks = comparison::candidate_walks(&diagram);
                if !walks.iter().any(|(r, _)| r == region) {
                    return Ok(false);
                }
                return Ok(comparison::verify_cover_certificate(
                    &diagram,
                    &system,
                    cover,
                    report.config.samples.min(256),
                ));
            }
            let Some(CertificatePayload::Direction {
                region,
                sides,
                lowers,
                slack,
                certificate,
                ..
            }) = &report.certificate
            else {
                return Ok(false);
            };
            let (diagram, system) = rebuild(report)?;
            // Rebuild the region's spec from scratch; the payload must match.
            let walk = comparison::candidate_walks(&diagram)
                .into_iter()
                .find(|(r, _)| r == region)
                .map(|(_, w)| w)
                .ok_or_else(|| ClassifyError::MalformedPayload("region not found".into()))?;
            let spec = comparison::build_polygon_spec(&walk, &system)?;
            if spec.sides != *sides {
                return Ok(false);
            }
            let payload_lowers: Vec<Rat> =
                lowers.iter().map(|s| parse_rat(s)).collect::<Result<_, _>>()?;
            if spec.lowers != payload_lowers || spec.slack != parse_rat(slack)? {
                return Ok(false);
            }
            match certificate {
                Some(dc) => Ok(verify_certificate(&spec, dc, report.config.samples)),
                None => Ok(spec.slack.is_negative()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss_code::parse_code;

    fn quick_config() -> Config {
        Config { samples: 1000, ..Config::default() }
    }

    #[test]
    fn figure_eight_passes() {
        let report = classify(&parse_code("1 1").unwrap(), &quick_config()).unwrap();
        assert_eq!(report.verdict, Verdict::Passes);
        assert!(report.certificate.is_none());
        assert!(verify_report(&report).unwrap());
    }

    #[test]
    fn classify_is_canonical_invariant() {
        let cfg = quick_config();
        let a = classify(&parse_code("1 2 1 2").unwrap(), &cfg).unwrap();
        let b = classify(&parse_code("2 1 2 1").unwrap(), &cfg).unwrap();
        assert_eq!(a.canonical_code, b.canonical_code);
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(a.face_vector, b.face_vector);
    }

    #[test]
    fn census_n3_distribution() {
        let rows = census_at(3, &quick_config(), false).unwrap();
        assert_eq!(rows.len(), 6);
        let count = |v: Verdict| rows.iter().filter(|r| r.verdict == v).count();
        assert_eq!(count(Verdict::ForbiddenGb), 1);
        assert_eq!(count(Verdict::ForbiddenComparison), 1);
        assert_eq!(count(Verdict::Passes), 4);
        let gb = rows.iter().find(|r| r.verdict == Verdict::ForbiddenGb).unwrap();
        assert_eq!(gb.face_vector, vec![1, 1, 1, 3, 6]);
        let cmp = rows.iter().find(|r| r.verdict == Verdict::ForbiddenComparison).unwrap();
        assert_eq!(cmp.face_vector, vec![1, 1, 1, 4, 5]);
    }

    #[test]
    fn census_small_counts() {
        let cfg = quick_config();
        assert_eq!(census_at(1, &cfg, false).unwrap().len(), 1);
        assert_eq!(census_at(2, &cfg, false).unwrap().len(), 2);
        for row in census_at(2, &cfg, false).unwrap() {
            assert_eq!(row.verdict, Verdict::Passes);
        }
    }

    #[test]
    fn forbidden_reports_round_trip() {
        let cfg = quick_config();
        for (row, report) in census_at_detailed(3, &cfg, false).unwrap() {
            if row.verdict == Verdict::Passes {
                continue;
            }
            let json = serde_json::to_string(&report).unwrap();
            let parsed: ClassificationReport = serde_json::from_str(&json).unwrap();
            assert!(verify_report(&parsed).unwrap());
        }
    }

    #[test]
    fn tampered_reports_fail() {
        let cfg = quick_config();
        let detailed = census_at_detailed(3, &cfg, false).unwrap();
        let mut report = detailed
            .iter()
            .find(|(r, _)| r.verdict == Verdict::ForbiddenGb)
            .unwrap()
            .1
            .clone();
        if let Some(CertificatePayload::Farkas { face_multipliers, .. }) = &mut report.certificate {
            face_multipliers[0] = "1000000007/1".into();
        }
        assert!(!verify_report(&report).unwrap());
        // A PASSES report with a spurious certificate fails.
        let mut passes = classify(&parse_code("1 1").unwrap(), &cfg).unwrap();
        passes.certificate = report.certificate.clone();
        assert!(!verify_report(&passes).unwrap());
    }
}
