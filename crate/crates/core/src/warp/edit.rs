use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::cage::{AffineMap, CageError, CagePair, CageTarget, Handle, HexCage, TransformParams};

/// What the vacated canonical region shows in discrete mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fill {
    /// Zero density: move or delete.
    Empty,
    /// Unchanged field: copy.
    Original,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustmentMode {
    /// Only the inner cage content moves.
    Discrete { fill: Fill },
    /// The shell is blended so the field stays continuous.
    Continuous,
}

impl AdjustmentMode {
    pub const DISCRETE_EMPTY: AdjustmentMode = AdjustmentMode::Discrete { fill: Fill::Empty };
    pub const DISCRETE_COPY: AdjustmentMode = AdjustmentMode::Discrete { fill: Fill::Original };

    pub fn is_continuous(&self) -> bool {
        matches!(self, AdjustmentMode::Continuous)
    }
}

impl FromStr for AdjustmentMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "discrete-empty" => Ok(Self::DISCRETE_EMPTY),
            "discrete-copy" => Ok(Self::DISCRETE_COPY),
            "continuous" => Ok(Self::Continuous),
            other => Err(format!(
                "unknown mode {other:?} (expected discrete-empty, discrete-copy or continuous)"
            )),
        }
    }
}

impl fmt::Display for AdjustmentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdjustmentMode::Discrete { fill: Fill::Empty } => "discrete-empty",
            AdjustmentMode::Discrete { fill: Fill::Original } => "discrete-copy",
            AdjustmentMode::Continuous => "continuous",
        })
    }
}

/// One user manipulation of a cage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Manipulation {
    Transform {
        #[serde(default)]
        target: CageTarget,
        #[serde(flatten)]
        params: TransformParams,
    },
    Deform {
        #[serde(default)]
        target: CageTarget,
        handle: Handle,
        delta: Vector3<f64>,
    },
}

impl Manipulation {
    pub fn target(&self) -> CageTarget {
        match self {
            Manipulation::Transform { target, .. } | Manipulation::Deform { target, .. } => *target,
        }
    }

    pub fn apply_to(&self, cage: &HexCage) -> Result<HexCage, CageError> {
        match self {
            Manipulation::Transform { params, .. } => cage.transform(params),
            Manipulation::Deform { handle, delta, .. } => cage.deform(*handle, delta),
        }
    }

    pub fn translate(t: Vector3<f64>) -> Self {
        Manipulation::Transform {
            target: CageTarget::Inner,
            params: TransformParams::translation(t),
        }
    }

    pub fn transform(params: TransformParams) -> Self {
        Manipulation::Transform {
            target: CageTarget::Inner,
            params,
        }
    }

    pub fn drag(handle: Handle, delta: Vector3<f64>) -> Self {
        Manipulation::Deform {
            target: CageTarget::Inner,
            handle,
            delta,
        }
    }
}

/// How points in the deformed inner cage map back to canonical space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerMapping {
    Identity,
    /// Composite of whole-cage transforms; exact inverse available.
    Affine(AffineMap),
    /// Some corner or edge drag happened: invert the deformed cage's
    /// trilinear map and re-evaluate on the canonical cage.
    Trilinear,
}

/// One edit: a cage pair, an adjustment mode and the manipulation log that
/// turned the canonical inner cage into the deformed one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EditRecord", into = "EditRecord")]
pub struct EditSpec {
    initial_outer: HexCage,
    cages: CagePair,
    mode: AdjustmentMode,
    provenance: Vec<Manipulation>,
    mapping: InnerMapping,
}

/// Serialized form: the starting cages and the log. Current cages are
/// recomputed by replay, so a saved edit can never disagree with its log.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct EditRecord {
    outer: HexCage,
    inner: HexCage,
    mode: AdjustmentMode,
    #[serde(default)]
    provenance: Vec<Manipulation>,
}

impl TryFrom<EditRecord> for EditSpec {
    type Error = CageError;
    fn try_from(r: EditRecord) -> Result<Self, CageError> {
        EditSpec::replay(r.outer, r.inner, r.mode, &r.provenance)
    }
}

impl From<EditSpec> for EditRecord {
    fn from(e: EditSpec) -> Self {
        EditRecord {
            outer: e.initial_outer,
            inner: e.cages.inner_canonical,
            mode: e.mode,
            provenance: e.provenance,
        }
    }
}

impl EditSpec {
    /// Fresh edit with the inner cage not yet manipulated.
    pub fn new(outer: HexCage, inner: HexCage, mode: AdjustmentMode) -> Result<Self, CageError> {
        let cages = CagePair::new(outer.clone(), inner)?;
        Ok(Self {
            initial_outer: outer,
            cages,
            mode,
            provenance: Vec::new(),
            mapping: InnerMapping::Identity,
        })
    }

    /// Rebuilds an edit by applying `log` in order.
    pub fn replay(
        outer: HexCage,
        inner: HexCage,
        mode: AdjustmentMode,
        log: &[Manipulation],
    ) -> Result<Self, CageError> {
        log.iter()
            .try_fold(Self::new(outer, inner, mode)?, |edit, m| edit.apply(m))
    }

    /// Convenience: a single whole-cage transform of the inner cage.
    pub fn with_transform(
        outer: HexCage,
        inner: HexCage,
        mode: AdjustmentMode,
        params: TransformParams,
    ) -> Result<Self, CageError> {
        Self::new(outer, inner, mode)?.apply(&Manipulation::transform(params))
    }

    /// New edit with `m` appended; fails without side effects when the result
    /// is degenerate or leaves the outer cage.
    pub fn apply(&self, m: &Manipulation) -> Result<Self, CageError> {
        let mut cages = self.cages.clone();
        match m.target() {
            CageTarget::Inner => cages.inner_deformed = m.apply_to(&cages.inner_deformed)?,
            CageTarget::Outer => cages.outer = m.apply_to(&cages.outer)?,
        }
        cages.validate()?;

        let mapping = if m.target() == CageTarget::Outer {
            self.mapping
        } else {
            match (self.mapping, m) {
                (InnerMapping::Trilinear, _) | (_, Manipulation::Deform { .. }) => InnerMapping::Trilinear,
                (prev, Manipulation::Transform { params, .. }) => {
                    let prev = match prev {
                        InnerMapping::Affine(a) => a,
                        _ => AffineMap::identity(),
                    };
                    let step = AffineMap::about_center(params, &self.cages.inner_deformed.center());
                    InnerMapping::Affine(prev.then(&step))
                }
            }
        };
        let mapping = if cages.is_identity() {
            InnerMapping::Identity
        } else {
            mapping
        };

        let mut provenance = self.provenance.clone();
        provenance.push(*m);
        Ok(Self {
            initial_outer: self.initial_outer.clone(),
            cages,
            mode: self.mode,
            provenance,
            mapping,
        })
    }

    /// Same cages and log under another adjustment mode.
    pub fn with_mode(&self, mode: AdjustmentMode) -> Self {
        Self { mode, ..self.clone() }
    }

    /// Drops manipulations past `len`, replaying the rest.
    pub fn truncated(&self, len: usize) -> Result<Self, CageError> {
        let keep = &self.provenance[..len.min(self.provenance.len())];
        Self::replay(
            self.initial_outer.clone(),
            self.cages.inner_canonical.clone(),
            self.mode,
            keep,
        )
    }

    pub fn cages(&self) -> &CagePair {
        &self.cages
    }

    pub fn mode(&self) -> AdjustmentMode {
        self.mode
    }

    pub fn provenance(&self) -> &[Manipulation] {
        &self.provenance
    }

    pub fn mapping(&self) -> &InnerMapping {
        &self.mapping
    }

    pub fn initial_outer(&self) -> &HexCage {
        &self.initial_outer
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.mapping, InnerMapping::Identity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;
    use std::f64::consts::PI;

    fn base() -> EditSpec {
        let outer = HexCage::axis_aligned(Point3::new(-2.0, -2.0, -2.0), Point3::new(2.0, 2.0, 2.0)).unwrap();
        let inner = HexCage::axis_aligned(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)).unwrap();
        EditSpec::new(outer, inner, AdjustmentMode::DISCRETE_EMPTY).unwrap()
    }

    #[test]
    fn successive_translations_add() {
        let t1 = Vector3::new(0.3, 0.0, -0.1);
        let t2 = Vector3::new(-0.1, 0.4, 0.2);
        let two = base()
            .apply(&Manipulation::translate(t1))
            .unwrap()
            .apply(&Manipulation::translate(t2))
            .unwrap();
        let one = base().apply(&Manipulation::translate(t1 + t2)).unwrap();
        for i in 0..8 {
            let d = two.cages().inner_deformed.vertex(i) - one.cages().inner_deformed.vertex(i);
            assert!(d.norm() < 1e-15);
        }
        assert!(matches!(two.mapping(), InnerMapping::Affine(_)));
    }

    #[test]
    fn full_turn_restores_vertices() {
        let e = base()
            .apply(&Manipulation::transform(TransformParams::rotation(Vector3::new(
                0.0,
                2.0 * PI,
                0.0,
            ))))
            .unwrap();
        for i in 0..8 {
            let d = e.cages().inner_deformed.vertex(i) - e.cages().inner_canonical.vertex(i);
            assert!(d.norm() < 1e-10);
        }
    }

    #[test]
    fn scaling_out_of_outer_is_rejected() {
        let err = base()
            .apply(&Manipulation::transform(TransformParams::scale(Vector3::repeat(5.0))))
            .unwrap_err();
        assert!(matches!(
            err,
            CageError::Containment {
                cage: "inner_deformed",
                ..
            }
        ));
    }

    #[test]
    fn drag_switches_to_trilinear_and_back_to_identity() {
        let dragged = base()
            .apply(&Manipulation::drag(Handle::Corner(7), Vector3::new(0.25, 0.125, 0.0)))
            .unwrap();
        assert_eq!(*dragged.mapping(), InnerMapping::Trilinear);
        let undone = dragged
            .apply(&Manipulation::drag(Handle::Corner(7), Vector3::new(-0.25, -0.125, 0.0)))
            .unwrap();
        assert!(undone.is_identity());
    }

    #[test]
    fn serde_replays_log() {
        let e = base()
            .apply(&Manipulation::translate(Vector3::new(0.5, 0.0, 0.0)))
            .unwrap()
            .apply(&Manipulation::drag(Handle::Edge(2), Vector3::new(0.0, 0.1, 0.0)))
            .unwrap();
        let json = serde_json::to_string(&e).unwrap();
        let back: EditSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [
            AdjustmentMode::DISCRETE_EMPTY,
            AdjustmentMode::DISCRETE_COPY,
            AdjustmentMode::Continuous,
        ] {
            assert_eq!(m.to_string().parse::<AdjustmentMode>().unwrap(), m);
        }
        assert!("smooth".parse::<AdjustmentMode>().is_err());
    }
}
