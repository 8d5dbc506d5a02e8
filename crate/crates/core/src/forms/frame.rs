use std::fmt;
use std::sync::Arc;

/// What a coordinate means in the bundle the frame charts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    /// Base coordinate `tᴬ` (1-based copy index).
    Base(usize),
    /// Configuration coordinate `qⁱ`.
    Config(usize),
    /// Momentum `pᴬᵢ`.
    Momentum { copy: usize, index: usize },
    /// Velocity `vᴬᵢ`, serialized with the same index order as momenta.
    Velocity { copy: usize, index: usize },
    /// Affine multimomentum coordinate `p`.
    Affine,
}

/// The bundles that occur, each modelled by one global adapted chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BundleKind {
    /// `(T¹ₖ)*Q`, coordinates `(q, p)`.
    KCovelocities,
    /// `ℝᵏ × (T¹ₖ)*Q ≅ J¹π*`, coordinates `(t, q, p)`.
    ExtKCovelocities,
    /// `T¹ₖQ`, coordinates `(q, v)`.
    KVelocities,
    /// `ℝᵏ × T¹ₖQ ≅ J¹π`, coordinates `(t, q, v)`.
    ExtKVelocities,
    /// `𝓜π ≅ ℝᵏ × ℝ × (T¹ₖ)*Q`, coordinates `(t, q, p, p)`.
    Multimomentum,
}

impl BundleKind {
    pub fn label(self) -> &'static str {
        match self {
            BundleKind::KCovelocities => "(T1k)*Q",
            BundleKind::ExtKCovelocities => "R^k x (T1k)*Q",
            BundleKind::KVelocities => "T1kQ",
            BundleKind::ExtKVelocities => "R^k x T1kQ",
            BundleKind::Multimomentum => "M(pi) = R^k x R x (T1k)*Q",
        }
    }

    pub fn has_base(self) -> bool {
        !matches!(self, BundleKind::KCovelocities | BundleKind::KVelocities)
    }

    pub fn has_momenta(self) -> bool {
        matches!(
            self,
            BundleKind::KCovelocities | BundleKind::ExtKCovelocities | BundleKind::Multimomentum
        )
    }

    pub fn has_velocities(self) -> bool {
        matches!(self, BundleKind::KVelocities | BundleKind::ExtKVelocities)
    }

    pub fn has_affine(self) -> bool {
        matches!(self, BundleKind::Multimomentum)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Coordinate {
    pub name: String,
    pub role: Role,
}

/// Ordered coordinates of one chart. The order is `q`, then the fibre
/// coordinates copy-major, then the affine `p`, then `t`; basis monomials of
/// forms are sorted by this order when rendered.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoordinateFrame {
    kind: BundleKind,
    k: usize,
    n: usize,
    coords: Vec<Coordinate>,
}

pub type Frame = Arc<CoordinateFrame>;

pub fn base_name(a: usize) -> String {
    format!("t{a}")
}

pub fn config_name(i: usize) -> String {
    format!("q{i}")
}

pub fn momentum_name(a: usize, i: usize) -> String {
    format!("p{a}_{i}")
}

pub fn velocity_name(a: usize, i: usize) -> String {
    format!("v{a}_{i}")
}

pub const AFFINE_NAME: &str = "p";

impl CoordinateFrame {
    pub fn new(kind: BundleKind, k: usize, n: usize) -> Frame {
        assert!(k >= 1 && n >= 1, "frames need k, n >= 1");
        let mut coords = Vec::new();
        for i in 1..=n {
            coords.push(Coordinate { name: config_name(i), role: Role::Config(i) });
        }
        for a in 1..=k {
            for i in 1..=n {
                if kind.has_momenta() {
                    coords.push(Coordinate {
                        name: momentum_name(a, i),
                        role: Role::Momentum { copy: a, index: i },
                    });
                } else {
                    coords.push(Coordinate {
                        name: velocity_name(a, i),
                        role: Role::Velocity { copy: a, index: i },
                    });
                }
            }
        }
        if kind.has_affine() {
            coords.push(Coordinate { name: AFFINE_NAME.into(), role: Role::Affine });
        }
        if kind.has_base() {
            for a in 1..=k {
                coords.push(Coordinate { name: base_name(a), role: Role::Base(a) });
            }
        }
        Arc::new(CoordinateFrame { kind, k, n, coords })
    }

    pub fn kind(&self) -> BundleKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Coordinate] {
        &self.coords
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.coords.iter().map(|c| c.name.as_str())
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.coords[idx].name
    }

    pub fn role(&self, idx: usize) -> Role {
        self.coords[idx].role
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    pub fn index_of_role(&self, role: Role) -> Option<usize> {
        self.coords.iter().position(|c| c.role == role)
    }

    pub fn base(&self, a: usize) -> Option<usize> {
        self.index_of_role(Role::Base(a))
    }

    pub fn config(&self, i: usize) -> Option<usize> {
        self.index_of_role(Role::Config(i))
    }

    pub fn momentum(&self, a: usize, i: usize) -> Option<usize> {
        self.index_of_role(Role::Momentum { copy: a, index: i })
    }

    pub fn velocity(&self, a: usize, i: usize) -> Option<usize> {
        self.index_of_role(Role::Velocity { copy: a, index: i })
    }

    pub fn affine(&self) -> Option<usize> {
        self.index_of_role(Role::Affine)
    }

    /// Indices of all non-base coordinates, in frame order.
    pub fn fibre_indices(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| !matches!(self.coords[i].role, Role::Base(_)))
            .collect()
    }

    pub fn describe(&self) -> String {
        format!("{} (k={}, n={})", self.kind.label(), self.k, self.n)
    }
}

impl fmt::Display for CoordinateFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: [", self.describe())?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", c.name)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_counts_match_bundle() {
        let (k, n) = (3, 2);
        assert_eq!(CoordinateFrame::new(BundleKind::KCovelocities, k, n).dim(), n + k * n);
        assert_eq!(CoordinateFrame::new(BundleKind::ExtKCovelocities, k, n).dim(), k * (n + 1) + n);
        assert_eq!(CoordinateFrame::new(BundleKind::KVelocities, k, n).dim(), n + k * n);
        assert_eq!(CoordinateFrame::new(BundleKind::ExtKVelocities, k, n).dim(), k + n + k * n);
        assert_eq!(CoordinateFrame::new(BundleKind::Multimomentum, k, n).dim(), k + 1 + n + k * n);
    }

    #[test]
    fn names_are_unique_and_ordered() {
        let f = CoordinateFrame::new(BundleKind::Multimomentum, 2, 1);
        let names: Vec<&str> = f.names().collect();
        assert_eq!(names, ["q1", "p1_1", "p2_1", "p", "t1", "t2"]);
        let mut dedup = names.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), names.len());
    }
}
