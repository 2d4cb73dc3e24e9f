use std::io::{BufRead, Write};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{Intrinsics, RigidPose};
use crate::error::{Error, Result};

/// One camera of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraFrame {
    pub index: usize,
    pub pose: RigidPose,
    pub intrinsics: Option<Intrinsics>,
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    frame: usize,
    rotation: [f64; 9],
    translation: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intrinsics: Option<Intrinsics>,
}

/// Writes one JSON object per line (rotation row-major).
pub fn write_trajectory<W: Write>(mut out: W, frames: &[CameraFrame]) -> Result<()> {
    for f in frames {
        let r = f.pose.rotation();
        let mut rotation = [0.0; 9];
        for row in 0..3 {
            for col in 0..3 {
                rotation[row * 3 + col] = r[(row, col)];
            }
        }
        let t = f.pose.translation();
        let record = FrameRecord {
            frame: f.index,
            rotation,
            translation: [t.x, t.y, t.z],
            intrinsics: f.intrinsics,
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trajectory<R: BufRead>(input: R) -> Result<Vec<CameraFrame>> {
    let mut frames = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: i + 1, message };
        let rec: FrameRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let rotation = Matrix3::from_row_slice(&rec.rotation);
        let pose = RigidPose::new(rotation, Vector3::from(rec.translation)).map_err(|e| parse_err(e.to_string()))?;
        if let Some(k) = &rec.intrinsics {
            k.validate().map_err(|e| parse_err(e.to_string()))?;
        }
        frames.push(CameraFrame {
            index: rec.frame,
            pose,
            intrinsics: rec.intrinsics,
        });
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rotation_exp;

    #[test]
    fn round_trip_is_exact() {
        let frames: Vec<_> = (0..4)
            .map(|i| CameraFrame {
                index: i,
                pose: RigidPose::new(
                    rotation_exp(&Vector3::new(0.1 * i as f64, -0.3, 0.7)),
                    Vector3::new(1.0 / 3.0, i as f64, -2.5),
                )
                .unwrap(),
                intrinsics: (i % 2 == 0).then(|| Intrinsics::from_fov(32, 32, 60.0).unwrap()),
            })
            .collect();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &frames).unwrap();
        let back = read_trajectory(&buf[..]).unwrap();
        assert_eq!(back, frames);
    }

    #[test]
    fn reports_line_of_bad_record() {
        let text = "{\"frame\":0,\"rotation\":[1,0,0,0,1,0,0,0,1],\"translation\":[0,0,0]}\n{\"frame\":1}\n";
        match read_trajectory(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
