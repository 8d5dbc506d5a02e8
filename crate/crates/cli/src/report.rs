//! JSON report shapes. Field order is fixed so output is byte-stable.

use geofield::bridges::{Certificate, Equivalence, IdentityCheck, TheoremCertificate};
use geofield::lagrangian::{RegularityMethod, RegularityReport};
use geofield::symexpr::EqualityVerdict;
use geofield::theory::{Alphabet, EquationSet, FieldTheory, SectionReport};
use serde::Serialize;

#[derive(Serialize)]
pub struct ModelSummary {
    pub formalism: String,
    pub k: usize,
    pub n: usize,
    pub generator: String,
}

impl ModelSummary {
    pub fn of(sys: &FieldTheory) -> Self {
        ModelSummary {
            formalism: sys.variant().name().to_string(),
            k: sys.k(),
            n: sys.n(),
            generator: sys.generator().to_string(),
        }
    }
}

#[derive(Serialize)]
pub struct EquationJson {
    pub label: String,
    pub residual: String,
    pub rendered: String,
}

#[derive(Serialize)]
pub struct SystemJson {
    pub name: String,
    pub alphabet: &'static str,
    pub unknowns: Vec<String>,
    pub equations: Vec<EquationJson>,
}

impl SystemJson {
    pub fn of(eqs: &EquationSet) -> Self {
        let rendered: Vec<String> = eqs
            .render()
            .lines()
            .map(|l| l.split_once(": ").map_or(l, |(_, r)| r).to_string())
            .collect();
        SystemJson {
            name: eqs.name.clone(),
            alphabet: match eqs.alphabet {
                Alphabet::Jet => "jet",
                Alphabet::Components => "components",
            },
            unknowns: eqs.unknowns.clone(),
            equations: eqs
                .equations
                .iter()
                .zip(rendered)
                .map(|(e, r)| EquationJson {
                    label: e.label.clone(),
                    residual: e.residual.to_string(),
                    rendered: r,
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct EquationsReport {
    pub model: ModelSummary,
    pub systems: Vec<SystemJson>,
}

#[derive(Serialize)]
pub struct MapEntry {
    pub coordinate: String,
    pub value: String,
}

#[derive(Serialize)]
pub struct LegendreReport {
    pub model: ModelSummary,
    pub velocities: Vec<String>,
    pub hessian: Vec<Vec<String>>,
    pub determinant: Option<String>,
    pub method: &'static str,
    pub regular: bool,
    pub min_abs_det: f64,
    pub energy: String,
    pub legendre: Vec<MapEntry>,
    pub hamiltonian: Option<String>,
}

impl LegendreReport {
    pub fn new(
        sys: &FieldTheory,
        r: &RegularityReport,
        energy: String,
        legendre: Vec<MapEntry>,
        hamiltonian: Option<String>,
    ) -> Self {
        LegendreReport {
            model: ModelSummary::of(sys),
            velocities: r.velocities.clone(),
            hessian: r.hessian.iter().map(|row| row.iter().map(|e| e.to_string()).collect()).collect(),
            determinant: r.determinant.as_ref().map(|d| d.to_string()),
            method: match r.method {
                RegularityMethod::Symbolic => "symbolic",
                RegularityMethod::Sampled => "sampled",
            },
            regular: r.regular,
            min_abs_det: r.min_abs_det,
            energy,
            legendre,
            hamiltonian,
        }
    }
}

#[derive(Serialize)]
pub struct RowJson {
    pub label: String,
    pub residual: String,
    pub verdict: &'static str,
}

pub fn equality_str(v: EqualityVerdict) -> &'static str {
    match v {
        EqualityVerdict::Equal => "equal",
        EqualityVerdict::ProbablyEqual => "probably-equal",
        EqualityVerdict::NotEqual => "not-equal",
    }
}

#[derive(Serialize)]
pub struct SectionJson {
    pub name: String,
    pub equations: String,
    pub verdict: &'static str,
    pub rows: Vec<RowJson>,
    pub assumptions: Vec<String>,
}

impl SectionJson {
    pub fn of(name: &str, r: &SectionReport) -> Self {
        SectionJson {
            name: name.to_string(),
            equations: r.equations.clone(),
            verdict: r.verdict.as_str(),
            rows: r
                .rows
                .iter()
                .map(|row| RowJson {
                    label: row.label.clone(),
                    residual: row.residual.to_string(),
                    verdict: equality_str(row.verdict),
                })
                .collect(),
            assumptions: r.assumptions.clone(),
        }
    }

    pub fn error(name: &str, message: String) -> Self {
        SectionJson {
            name: name.to_string(),
            equations: String::new(),
            verdict: "fail",
            rows: vec![],
            assumptions: vec![message],
        }
    }
}

#[derive(Serialize)]
pub struct WitnessJson {
    pub system: String,
    pub label: String,
    pub residual: String,
    pub deviation: f64,
}

#[derive(Serialize)]
pub struct TheoremJson {
    pub theorem: String,
    pub lhs: String,
    pub rhs: String,
    pub verdict: &'static str,
    pub method: &'static str,
    pub samples: usize,
    pub witness: Option<WitnessJson>,
}

impl TheoremJson {
    pub fn of(theorem: &str, c: &Certificate) -> Self {
        let (verdict, witness) = match &c.verdict {
            Equivalence::Equivalent => ("equivalent", None),
            Equivalence::NotEquivalent(w) => (
                "not-equivalent",
                Some(WitnessJson {
                    system: w.system.clone(),
                    label: w.label.clone(),
                    residual: w.residual.to_string(),
                    deviation: w.deviation,
                }),
            ),
        };
        TheoremJson {
            theorem: theorem.to_string(),
            lhs: c.lhs.clone(),
            rhs: c.rhs.clone(),
            verdict,
            method: c.method,
            samples: c.samples,
            witness,
        }
    }

    pub fn from_suite(t: &TheoremCertificate) -> Self {
        Self::of(t.theorem, &t.certificate)
    }
}

#[derive(Serialize)]
pub struct IdentityJson {
    pub identity: String,
    pub holds: bool,
}

impl IdentityJson {
    pub fn of(c: &IdentityCheck) -> Self {
        IdentityJson {
            identity: c.identity.to_string(),
            holds: c.holds,
        }
    }
}

#[derive(Serialize)]
pub struct VerifyReport {
    pub model: ModelSummary,
    pub seed: String,
    pub sections: Vec<SectionJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorems: Option<Vec<TheoremJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identities: Option<Vec<IdentityJson>>,
    pub verdict: &'static str,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.sections.iter().all(|s| s.verdict == "pass")
            && self.theorems.iter().flatten().all(|t| t.verdict == "equivalent")
            && self.identities.iter().flatten().all(|i| i.holds)
    }
}
