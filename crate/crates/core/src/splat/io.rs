use std::io::{BufRead, Write};

use nalgebra::Vector3;

use super::{GaussianPrimitive, WorldScene, FEATURE_CHANNELS};
use crate::error::{Error, Result};

const MAGIC: &str = "splatscene";
pub const SCENE_FORMAT_VERSION: u32 = 1;
/// mean×3, quaternion (w, x, y, z)×4, scale×3, opacity, color×3, feature×9.
pub const FIELDS_PER_PRIMITIVE: usize = 23;

/// Text scene file: `splatscene <version> <count>` then one line of 23
/// numbers per primitive, each printed with 17 significant digits.
pub fn write_scene<W: Write>(mut out: W, scene: &WorldScene) -> Result<()> {
    writeln!(out, "{MAGIC} {SCENE_FORMAT_VERSION} {}", scene.len())?;
    let mut line = String::new();
    for g in scene.iter() {
        line.clear();
        let q = g.orientation.quaternion();
        let fields = g
            .mean
            .iter()
            .copied()
            .chain([q.w, q.i, q.j, q.k])
            .chain(g.scale.iter().copied())
            .chain([g.opacity])
            .chain(g.color)
            .chain(g.feature);
        for (i, v) in fields.enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{v:.16e}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_scene<R: BufRead>(input: R) -> Result<WorldScene> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty scene file".into(),
    })??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || Error::Parse {
        line: 1,
        message: format!("expected `{MAGIC} {SCENE_FORMAT_VERSION} <count>`, got `{header}`"),
    };
    if parts.len() != 3 || parts[0] != MAGIC || parts[1] != SCENE_FORMAT_VERSION.to_string() {
        return Err(bad_header());
    }
    let count: usize = parts[2].parse().map_err(|_| bad_header())?;

    let mut primitives = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        if values.len() != FIELDS_PER_PRIMITIVE {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {FIELDS_PER_PRIMITIVE} fields, got {}", values.len()),
            });
        }
        let mut feature = [0.0; FEATURE_CHANNELS];
        feature.copy_from_slice(&values[14..23]);
        let g = GaussianPrimitive {
            mean: Vector3::new(values[0], values[1], values[2]),
            orientation: GaussianPrimitive::from_raw_quaternion([values[3], values[4], values[5], values[6]]),
            scale: Vector3::new(values[7], values[8], values[9]),
            opacity: values[10],
            color: [values[11], values[12], values[13]],
            feature,
        };
        g.validate().map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        primitives.push(g);
    }
    if primitives.len() != count {
        return Err(Error::Parse {
            line: 1,
            message: format!("header declares {count} primitives, found {}", primitives.len()),
        });
    }
    Ok(WorldScene::from_primitives(primitives))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::UnitQuaternion;
    use proptest::prelude::*;

    fn primitive_strategy() -> impl Strategy<Value = GaussianPrimitive> {
        (
            prop::array::uniform3(-1e3f64..1e3),
            prop::array::uniform3(-3.0f64..3.0),
            prop::array::uniform3(1e-4f64..10.0),
            0.0f64..=1.0,
            prop::array::uniform3(0.0f64..=1.0),
            prop::array::uniform9(-1e6f64..1e6),
        )
            .prop_map(|(m, e, s, o, c, f)| GaussianPrimitive {
                mean: Vector3::from(m),
                orientation: UnitQuaternion::from_euler_angles(e[0], e[1], e[2]),
                scale: Vector3::from(s),
                opacity: o,
                color: c,
                feature: f,
            })
    }

    proptest! {
        #[test]
        fn scene_round_trip_is_bitwise(prims in prop::collection::vec(primitive_strategy(), 0..20)) {
            let scene = WorldScene::from_primitives(prims);
            let mut buf = Vec::new();
            write_scene(&mut buf, &scene).unwrap();
            let back = read_scene(&buf[..]).unwrap();
            prop_assert_eq!(back, scene);
        }
    }

    #[test]
    fn rejects_wrong_field_count() {
        let text = "splatscene 1 1\n1 2 3\n";
        assert!(matches!(read_scene(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn rejects_count_mismatch() {
        let text = "splatscene 1 2\n";
        assert!(read_scene(text.as_bytes()).is_err());
    }
}
