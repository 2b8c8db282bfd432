//! Text voxel list to grid field converter.
//!
//! ```text
//! # comments and blank lines are ignored
//! dims 2 2 2
//! bbox 0 0 0 1 1 1
//! 1 0 1 4.0 1 0 0    # i j k density [r g b]
//! ```
//!
//! Nodes not listed are empty (zero density, black).

use cagewarp_core::field::GridField;
use cagewarp_core::geometry::Aabb;
use cagewarp_core::Point3;

use crate::error::CliError;

fn numbers<T: std::str::FromStr>(line_no: usize, words: &[&str]) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    words
        .iter()
        .map(|w| {
            w.parse::<T>()
                .map_err(|e| CliError::Parse(format!("line {line_no}: bad number {w:?}: {e}")))
        })
        .collect()
}

pub fn parse_voxel_text(text: &str) -> Result<GridField, CliError> {
    let mut dims: Option<[usize; 3]> = None;
    let mut bbox: Option<Aabb> = None;
    let mut densities = Vec::new();
    let mut colors = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        match words[0] {
            "dims" => {
                let v: Vec<usize> = numbers(line_no, &words[1..])?;
                let [nx, ny, nz] = v[..] else {
                    return Err(CliError::Parse(format!("line {line_no}: dims needs 3 integers")));
                };
                let count = nx
                    .checked_mul(ny)
                    .and_then(|n| n.checked_mul(nz))
                    .ok_or_else(|| CliError::Validation("dims overflow".into()))?;
                dims = Some([nx, ny, nz]);
                densities = vec![0f32; count];
                colors = vec![[0f32; 3]; count];
            }
            "bbox" => {
                let v: Vec<f64> = numbers(line_no, &words[1..])?;
                if v.len() != 6 {
                    return Err(CliError::Parse(format!("line {line_no}: bbox needs 6 numbers")));
                }
                bbox = Some(Aabb::new(Point3::new(v[0], v[1], v[2]), Point3::new(v[3], v[4], v[5])));
            }
            _ => {
                let Some([nx, ny, nz]) = dims else {
                    return Err(CliError::Parse(format!("line {line_no}: voxel before dims")));
                };
                if words.len() != 4 && words.len() != 7 {
                    return Err(CliError::Parse(format!(
                        "line {line_no}: expected `i j k density [r g b]`"
                    )));
                }
                let ijk: Vec<usize> = numbers(line_no, &words[..3])?;
                let vals: Vec<f32> = numbers(line_no, &words[3..])?;
                if ijk[0] >= nx || ijk[1] >= ny || ijk[2] >= nz {
                    return Err(CliError::Validation(format!(
                        "line {line_no}: node {ijk:?} outside dims {:?}",
                        [nx, ny, nz]
                    )));
                }
                let i = ijk[0] + nx * (ijk[1] + ny * ijk[2]);
                densities[i] = vals[0];
                if vals.len() == 4 {
                    colors[i] = [vals[1], vals[2], vals[3]];
                }
            }
        }
    }
    let dims = dims.ok_or_else(|| CliError::Parse("missing dims line".into()))?;
    let bbox = bbox.ok_or_else(|| CliError::Parse("missing bbox line".into()))?;
    Ok(GridField::new(bbox, dims, densities, colors)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cagewarp_core::field::RadianceField;
    use cagewarp_core::Vector3;

    #[test]
    fn parses_minimal_grid() {
        let text = "# test\ndims 2 2 2\nbbox 0 0 0 1 1 1\n1 1 1 2.5 0 1 0\n0 0 0 1.0\n";
        let g = parse_voxel_text(text).unwrap();
        assert_eq!(g.dims(), [2, 2, 2]);
        let s = g.query(&Point3::new(1.0, 1.0, 1.0), &Vector3::z());
        assert_eq!(s.density, 2.5);
        assert_eq!(s.color, Vector3::new(0.0, 1.0, 0.0));
        assert_eq!(g.query(&Point3::origin(), &Vector3::z()).density, 1.0);
    }

    #[test]
    fn reports_errors() {
        assert!(matches!(
            parse_voxel_text("bbox 0 0 0 1 1 1\n"),
            Err(CliError::Parse(_))
        ));
        assert!(matches!(
            parse_voxel_text("dims 2 2 2\nbbox 0 0 0 1 1 1\n2 0 0 1\n"),
            Err(CliError::Validation(_))
        ));
        assert!(matches!(
            parse_voxel_text("dims 2 2 2\nbbox 0 0 0 1 1 1\n0 0 0 -1\n"),
            Err(CliError::Validation(_))
        ));
        assert!(matches!(
            parse_voxel_text("dims 2 2 2\nbbox 0 0 0 1 1 1\n0 0 x 1\n"),
            Err(CliError::Parse(_))
        ));
    }
}
