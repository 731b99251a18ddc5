use std::fmt::Write as _;
use std::path::Path;

use super::FormatError;
use crate::frame::ParticleFrame;

fn data_array(out: &mut String, name: &str, ty: &str, components: usize, values: impl Iterator<Item = String>) {
    let comps = if components > 1 {
        format!(" NumberOfComponents=\"{components}\"")
    } else {
        String::new()
    };
    let _ = write!(out, "        <DataArray type=\"{ty}\" Name=\"{name}\"{comps} format=\"ascii\">\n          ");
    let body: Vec<String> = values.collect();
    out.push_str(&body.join(" "));
    out.push_str("\n        </DataArray>\n");
}

/// ASCII XML PolyData: points (z = 0 for planar frames), a `displacement`
/// scalar and a `velocity` vector per point, one vertex cell per point.
pub fn vtp_string(frame: &ParticleFrame) -> String {
    let n = frame.len();
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\"?>\n");
    s.push_str("<VTKFile type=\"PolyData\" version=\"0.1\" byte_order=\"LittleEndian\">\n");
    s.push_str("  <PolyData>\n");
    let _ = writeln!(
        s,
        "    <Piece NumberOfPoints=\"{n}\" NumberOfVerts=\"{n}\" NumberOfLines=\"0\" NumberOfStrips=\"0\" NumberOfPolys=\"0\">"
    );
    s.push_str("      <PointData Scalars=\"displacement\" Vectors=\"velocity\">\n");
    data_array(&mut s, "displacement", "Float64", 1, frame.displacement.iter().map(|v| v.to_string()));
    data_array(
        &mut s,
        "velocity",
        "Float64",
        3,
        (0..n).flat_map(|i| {
            let v = frame.velocity(i);
            [v[0], v[1], v.get(2).copied().unwrap_or(0.0)].map(|x| x.to_string())
        }),
    );
    s.push_str("      </PointData>\n      <Points>\n");
    data_array(&mut s, "Points", "Float64", 3, (0..n).flat_map(|i| frame.position3(i).map(|x| x.to_string())));
    s.push_str("      </Points>\n      <Verts>\n");
    data_array(&mut s, "connectivity", "Int64", 1, (0..n).map(|i| i.to_string()));
    data_array(&mut s, "offsets", "Int64", 1, (1..=n).map(|i| i.to_string()));
    s.push_str("      </Verts>\n    </Piece>\n  </PolyData>\n</VTKFile>\n");
    s
}

pub fn export_vtp(frame: &ParticleFrame, path: &Path) -> Result<(), FormatError> {
    frame.validate().map_err(|e| FormatError::Malformed(e.to_string()))?;
    std::fs::write(path, vtp_string(frame))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point() {
        let f = ParticleFrame::at_rest(0, 0.0, 3, vec![0.0, 0.0, 0.0]).unwrap();
        let s = vtp_string(&f);
        assert!(s.contains("NumberOfPoints=\"1\""));
        assert!(s.contains("Name=\"displacement\" format=\"ascii\">\n          0\n"));
    }
}
