use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ClauseSite, EventRepresentation, Gap, Transitivity};

/// Shape of a relative clause slot in a template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RcShape {
    pub gap: Gap,
    pub transitivity: Transitivity,
}

impl RcShape {
    /// Object-gapped relatives need an object to gap.
    pub fn is_legal(self) -> bool {
        !(self.gap == Gap::Object && self.transitivity == Transitivity::Intransitive)
    }

    /// All legal shapes in canonical order.
    pub fn all() -> Vec<RcShape> {
        let mut out = Vec::new();
        for &gap in Gap::ALL {
            for &transitivity in Transitivity::ALL {
                let shape = RcShape { gap, transitivity };
                if shape.is_legal() {
                    out.push(shape);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RcSite {
    None,
    OnAgent,
    OnPatient,
    OnBoth,
}

/// Skeleton of an event: main-clause transitivity plus relative-clause sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StructuralTemplate {
    pub main: Transitivity,
    pub agent_rc: Option<RcShape>,
    pub patient_rc: Option<RcShape>,
}

impl StructuralTemplate {
    pub fn simple(main: Transitivity) -> Self {
        StructuralTemplate { main, agent_rc: None, patient_rc: None }
    }

    pub fn rc_site(&self) -> RcSite {
        match (self.agent_rc, self.patient_rc) {
            (None, None) => RcSite::None,
            (Some(_), None) => RcSite::OnAgent,
            (None, Some(_)) => RcSite::OnPatient,
            (Some(_), Some(_)) => RcSite::OnBoth,
        }
    }

    pub fn relative_count(&self) -> usize {
        self.agent_rc.is_some() as usize + self.patient_rc.is_some() as usize
    }

    /// Shape of the clause at `site`, when the template has one there.
    pub fn shape_at(&self, site: ClauseSite) -> Option<(Transitivity, Option<Gap>)> {
        match site {
            ClauseSite::Main => Some((self.main, None)),
            ClauseSite::AgentRelative => self.agent_rc.map(|s| (s.transitivity, Some(s.gap))),
            ClauseSite::PatientRelative => self.patient_rc.map(|s| (s.transitivity, Some(s.gap))),
        }
    }

    pub fn is_legal(&self) -> bool {
        let shapes_ok = self.agent_rc.is_none_or(RcShape::is_legal) && self.patient_rc.is_none_or(RcShape::is_legal);
        let patient_ok = self.patient_rc.is_none() || self.main == Transitivity::Transitive;
        shapes_ok && patient_ok
    }

    /// The template an event instantiates.
    pub fn of_event(event: &EventRepresentation) -> Self {
        let shape = |site| {
            event.relative(site).map(|rc| RcShape { gap: rc.gap, transitivity: rc.frame.transitivity })
        };
        StructuralTemplate {
            main: event.main.transitivity,
            agent_rc: shape(ClauseSite::AgentRelative),
            patient_rc: shape(ClauseSite::PatientRelative),
        }
    }
}

impl fmt::Display for StructuralTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-main", self.main)?;
        for (name, rc) in [("agent", self.agent_rc), ("patient", self.patient_rc)] {
            if let Some(s) = rc {
                write!(f, "/rc-on-{name}:{}-gap:{}", s.gap, s.transitivity)?;
            }
        }
        Ok(())
    }
}

/// Which templates to admit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateLimits {
    pub min_relative_clauses: usize,
    pub max_relative_clauses: usize,
    pub allow_agent_site: bool,
    pub allow_patient_site: bool,
}

impl Default for TemplateLimits {
    fn default() -> Self {
        TemplateLimits { min_relative_clauses: 0, max_relative_clauses: 1, allow_agent_site: true, allow_patient_site: true }
    }
}

impl TemplateLimits {
    pub fn no_relatives() -> Self {
        TemplateLimits { max_relative_clauses: 0, ..Self::default() }
    }

    pub fn exactly_one_relative() -> Self {
        TemplateLimits { min_relative_clauses: 1, max_relative_clauses: 1, ..Self::default() }
    }

    pub fn admits(&self, t: &StructuralTemplate) -> bool {
        let n = t.relative_count();
        n >= self.min_relative_clauses
            && n <= self.max_relative_clauses
            && (self.allow_agent_site || t.agent_rc.is_none())
            && (self.allow_patient_site || t.patient_rc.is_none())
    }
}

/// Every legal template admitted by `limits`, duplicate-free, in canonical order.
pub fn enumerate_templates(limits: &TemplateLimits) -> Vec<StructuralTemplate> {
    let mut options: Vec<Option<RcShape>> = vec![None];
    options.extend(RcShape::all().into_iter().map(Some));
    let mut out = Vec::new();
    for &main in [Transitivity::Intransitive, Transitivity::Transitive].iter() {
        for &agent_rc in &options {
            for &patient_rc in &options {
                let t = StructuralTemplate { main, agent_rc, patient_rc };
                if t.is_legal() && limits.admits(&t) {
                    out.push(t);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_relative_limits_yield_base_templates() {
        let t = enumerate_templates(&TemplateLimits::no_relatives());
        assert_eq!(
            t,
            vec![StructuralTemplate::simple(Transitivity::Intransitive), StructuralTemplate::simple(Transitivity::Transitive)]
        );
    }

    #[test]
    fn relaxed_limits_admit_two_relatives() {
        let limits = TemplateLimits { max_relative_clauses: 2, ..TemplateLimits::default() };
        let t = enumerate_templates(&limits);
        assert!(t.iter().any(|t| t.rc_site() == RcSite::OnBoth));
        assert!(enumerate_templates(&TemplateLimits::default()).iter().all(|t| t.rc_site() != RcSite::OnBoth));
    }

    #[test]
    fn output_is_duplicate_free_and_stable() {
        let a = enumerate_templates(&TemplateLimits::default());
        let b = enumerate_templates(&TemplateLimits::default());
        assert_eq!(a, b);
        let set: std::collections::HashSet<_> = a.iter().collect();
        assert_eq!(set.len(), a.len());
    }
}
